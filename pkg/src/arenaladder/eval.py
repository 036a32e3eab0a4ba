"""Evaluation suite: Elo ratings, exploitability reports, and the CPU ladder.

Four ways to measure a policy, all built on the same match engine:

* round-robin tournaments scored with incremental Elo updates,
* exploitability of a frozen target, either from the exact best-response
  oracle or from a Q-learning exploiter trained until convergence,
* inverse-win-rate curriculum scheduling over the scripted CPU ladder,
* the single-player full-game training loop that emits win-rate curves.

Elo ratings are plain floats (the 10^(d/400) expectancy is irrational, so
there is nothing exact to preserve); pair updates conserve the rating sum
bit-for-bit by construction.  Exploitability reports keep the engine's
exact rational probabilities wherever they come from the exact oracle.
"""

from __future__ import annotations

import math
import os
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable

import numpy as np

from .engine import EngineConfig
from .errors import UsageError
from .exact import exact_best_response
from .league import pfsp_weights
from .learn import LearnConfig, QLearner, evaluate_policy, rl_best_response
from .match import play_match
from .nash import MetaStrategy
from .payoff import Population, _named
from .policy import MixturePolicy, Policy, PolicyId, ScriptedCPU, TabularPolicy
from .rngutil import derive_seed, make_rng

F0 = Fraction(0)
F1 = Fraction(1)

OUTCOMES = ("a_wins", "b_wins", "draw")
_SCORE = {"a_wins": 1.0, "b_wins": 0.0, "draw": 0.5}

# an RL exploiter counts as converged once its best evaluated win rate has
# failed to improve by at least _PLATEAU over _PLATEAU_WINDOWS windows
_PLATEAU = 0.01
_PLATEAU_WINDOWS = 3
_BRANCH_EXPLOIT = 5


# ---------------------------------------------------------------------------
# Elo


def elo_expected(elo_a: float, elo_b: float) -> float:
    """Win expectancy of the first player: 1 / (1 + 10^((Elo_B - Elo_A)/400))."""
    return 1.0 / (1.0 + 10.0 ** ((elo_b - elo_a) / 400.0))


def elo_update(
    elo_a: float, elo_b: float, outcome: str, k: float = 32.0
) -> tuple[float, float]:
    """One incremental rating update; a draw scores 0.5 for each player.

    The second player moves by the exact negation of the first player's
    delta, so the pair's rating sum is conserved bit-for-bit.
    """
    if k <= 0:
        raise UsageError(f"the Elo update constant must be positive, got {k}")
    if outcome not in OUTCOMES:
        raise UsageError(f"outcome must be one of {OUTCOMES}, got {outcome!r}")
    delta = k * (_SCORE[outcome] - elo_expected(elo_a, elo_b))
    return elo_a + delta, elo_b - delta


@dataclass(frozen=True)
class RatingUpdate:
    """One rated match: who played, how it ended, ratings before and after."""

    a: PolicyId
    b: PolicyId
    outcome: str
    pre: tuple[float, float]
    post: tuple[float, float]


@dataclass
class RatingTable:
    """An incremental Elo ledger over PolicyIds.

    Entrants start at `initial` on their first recorded match; `history`
    keeps every update in the order it was applied (rating evolution is
    order-dependent by design).
    """

    k: float = 32.0
    initial: float = 1000.0
    ratings: dict[PolicyId, float] = field(default_factory=dict)
    counts: dict[PolicyId, int] = field(default_factory=dict)
    history: list[RatingUpdate] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise UsageError(f"the Elo update constant must be positive, got {self.k}")

    def rating(self, ident: PolicyId) -> float:
        try:
            return self.ratings[ident]
        except KeyError:
            raise UsageError(f"{ident} has never been rated") from None

    def record(self, a: PolicyId, b: PolicyId, outcome: str) -> RatingUpdate:
        """Apply one match result and append it to the history."""
        if a == b:
            raise UsageError("a rated match needs two distinct entrants")
        pre = (
            self.ratings.setdefault(a, self.initial),
            self.ratings.setdefault(b, self.initial),
        )
        post = elo_update(pre[0], pre[1], outcome, self.k)
        self.ratings[a], self.ratings[b] = post
        self.counts[a] = self.counts.get(a, 0) + 1
        self.counts[b] = self.counts.get(b, 0) + 1
        update = RatingUpdate(a, b, outcome, pre, post)
        self.history.append(update)
        return update

    def standings(self) -> tuple[tuple[PolicyId, float, int], ...]:
        """(PolicyId, Elo, matches) sorted best first; names break ties."""
        return tuple(
            (ident, elo, self.counts.get(ident, 0))
            for ident, elo in sorted(
                self.ratings.items(), key=lambda kv: (-kv[1], kv[0].name)
            )
        )


def run_tournament(
    pop: Population,
    rounds: int,
    k: float,
    config: EngineConfig,
    rng: np.random.Generator,
    *,
    initial_rating: float = 1000.0,
    workers: int | None = None,
) -> RatingTable:
    """Seeded round-robin: `rounds` matches per ordered pair, Elo per match.

    The schedule (pairings and seeds) is fixed up front, so matches can be
    simulated concurrently; rating updates are then applied sequentially in
    schedule order.
    """
    entrants = _named(pop, "any")
    if len(entrants) < 2:
        raise UsageError("a tournament needs at least two entrants")
    if rounds < 1:
        raise UsageError(f"rounds must be at least 1, got {rounds}")
    config.validate()
    n = len(entrants)
    root = int(rng.integers(2**62))
    schedule = [
        (i, j, derive_seed(root, r, i, j))
        for r in range(rounds)
        for i in range(n)
        for j in range(n)
        if i != j
    ]

    def run(entry: tuple[int, int, int]) -> str:
        i, j, seed = entry
        out = play_match(config, entrants[i][1], entrants[j][1], seed)
        return {"left": "a_wins", "right": "b_wins", "draw": "draw"}[out.winner]

    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(schedule) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, schedule))
    else:
        outcomes = [run(entry) for entry in schedule]

    table = RatingTable(k=float(k), initial=float(initial_rating))
    for (i, j, _), outcome in zip(schedule, outcomes):
        table.record(entrants[i][0], entrants[j][0], outcome)
    return table


# ---------------------------------------------------------------------------
# exploitability


@dataclass(frozen=True)
class ExploitReport:
    """How badly a frozen target loses to its best response.

    `exploit_winrate` is the responder's win rate (draws count half);
    `exploit_gap` is the responder's expected sparse reward in [-1, 1].
    The two describe the same distribution on different scales: for an
    exact report winrate = 1/2 + gap/2.
    """

    target: PolicyId
    side: str
    exploit_winrate: Fraction
    exploit_gap: Fraction
    method: str
    matches: int
    stderr: Fraction

    def __post_init__(self) -> None:
        if self.side not in ("left", "right"):
            raise UsageError(f"side must be left or right, got {self.side!r}")
        if self.method not in ("exact", "rl"):
            raise UsageError(f"method must be exact or rl, got {self.method!r}")
        for name in ("exploit_winrate", "exploit_gap", "stderr"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if not 0 <= self.exploit_winrate <= 1:
            raise UsageError(f"exploit_winrate {self.exploit_winrate} outside [0, 1]")
        if not -1 <= self.exploit_gap <= 1:
            raise UsageError(f"exploit_gap {self.exploit_gap} outside [-1, 1]")
        if self.matches < 0 or self.stderr < 0:
            raise UsageError("matches and stderr cannot be negative")
        if self.method == "exact" and self.stderr != 0:
            raise UsageError("an exact report has no sampling error")


BROracle = Callable[[EngineConfig, Policy, str, int], object]


def exploitability(
    target: Policy | tuple[PolicyId, Policy],
    side: str,
    method: str,
    lc: LearnConfig,
    config: EngineConfig,
    *,
    matches: int = 1000,
    windows: int = 6,
    max_entries: int | None = None,
    br: BROracle | None = None,
) -> ExploitReport:
    """Measure how exploitable `target` is when it plays `side`.

    method="exact" asks the best-response oracle (default backward
    induction; `br` overrides it, e.g. to embed a matrix game) and reports
    the oracle's exact probabilities.  method="rl" trains a Q-learning
    exploiter in budget windows until its best evaluated win rate stops
    improving (or the budget runs out) and reports the best window's
    measurement over `matches` games with its standard error.
    """
    if side not in ("left", "right"):
        raise UsageError(f"side must be left or right, got {side!r}")
    if method not in ("exact", "rl"):
        raise UsageError(f"method must be exact or rl, got {method!r}")
    if (
        isinstance(target, tuple)
        and len(target) == 2
        and isinstance(target[0], PolicyId)
    ):
        ident, policy = target
    else:
        ident, policy = PolicyId("target", side=side), target
    responder = "right" if side == "left" else "left"

    if method == "exact":
        if br is None:
            def br(cfg, opponent, responder_side, seed):
                if max_entries is None:
                    return exact_best_response(cfg, opponent, responder_side)
                return exact_best_response(
                    cfg, opponent, responder_side, max_entries=max_entries
                )

        found = br(config, policy, responder, 0)
        try:
            rate = Fraction(found.win_prob) + Fraction(found.draw_prob) / 2
            gap = Fraction(found.value)
        except AttributeError:
            raise UsageError(
                "the exact oracle must report value, win_prob and draw_prob"
            ) from None
        return ExploitReport(ident, side, rate, gap, "exact", 0, F0)

    if matches < 1:
        raise UsageError("the rl method needs at least one evaluation match")
    if windows < 1:
        raise UsageError(f"windows must be at least 1, got {windows}")
    config.validate()
    learner = QLearner(config, responder, lc)
    window_steps = max(1, -(-lc.budget_steps // windows))
    seeds = make_rng(lc.seed, _BRANCH_EXPLOIT)
    best_rate: Fraction | None = None
    best_gap = F0
    stale = 0
    for w in range(windows):
        budget = min(window_steps, max(0, lc.budget_steps - learner.steps_used))
        if w > 0 and budget == 0:
            break
        train_seed = int(seeds.integers(2**62))
        eval_seed = int(seeds.integers(2**62))
        if budget > 0:
            rl_best_response(
                config,
                policy,
                responder,
                replace(lc, budget_steps=budget, seed=train_seed),
                eval_matches=0,
                learner=learner,
            )
        win, draw, value = evaluate_policy(
            config, learner.greedy_policy(), policy, responder, matches, eval_seed
        )
        rate = win + draw / 2
        if best_rate is None:
            best_rate, best_gap = rate, value
        else:
            stale = stale + 1 if rate - best_rate < _PLATEAU else 0
            if rate > best_rate:
                best_rate, best_gap = rate, value
        if stale >= _PLATEAU_WINDOWS:
            break
    p = float(best_rate)
    stderr = Fraction(math.sqrt(max(0.0, p * (1.0 - p)) / matches))
    return ExploitReport(ident, side, best_rate, best_gap, "rl", matches, stderr)


# ---------------------------------------------------------------------------
# the CPU-ladder curriculum


@dataclass(frozen=True)
class CurriculumState:
    """One epoch of the ladder: measured win rates and the schedule they set."""

    levels: tuple[int, ...]
    win_rates: tuple[Fraction, ...]
    schedule: MetaStrategy

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(
            self, "win_rates", tuple(Fraction(p) for p in self.win_rates)
        )
        if not self.levels:
            raise UsageError("a curriculum needs at least one level")
        if len(self.win_rates) != len(self.levels) or len(self.schedule) != len(
            self.levels
        ):
            raise UsageError("levels, win_rates and schedule must line up")
        if any(p < 0 or p > 1 for p in self.win_rates):
            raise UsageError("win rates must lie in [0, 1]")


def curriculum_weights(win_rates: Sequence[Fraction | float]) -> MetaStrategy:
    """Opponent schedule proportional to 1 - win rate (hard levels first).

    A learner that beats every level gets the uniform fallback.
    """
    rates = [Fraction(p) for p in win_rates]
    if not rates:
        raise UsageError("curriculum_weights needs at least one level")
    if any(p < 0 or p > 1 for p in rates):
        raise UsageError("win rates must lie in [0, 1]")
    return MetaStrategy(pfsp_weights(rates, weighting=lambda p: 1 - p))


def full_game_train(
    levels: Sequence[int],
    lc: LearnConfig,
    epochs: int,
    eval_matches: int,
    config: EngineConfig,
    rng: np.random.Generator,
    *,
    side: str = "left",
) -> tuple[TabularPolicy, tuple[tuple[Fraction, ...], ...], tuple[MetaStrategy, ...]]:
    """Train one learner up the CPU ladder with inverse-win-rate scheduling.

    Each epoch measures the greedy policy against every level (`eval_matches`
    games each), recomputes the schedule from those win rates, then trains
    for `lc.budget_steps` against opponents sampled from the schedule.
    Returns the final greedy policy, the per-epoch win-rate curves, and the
    per-epoch schedules (curves are measured at the top of each epoch, so
    entry e shows the policy *before* epoch e's training).
    """
    levels = tuple(levels)
    if not levels:
        raise UsageError("the ladder needs at least one CPU level")
    if epochs < 0:
        raise UsageError(f"epochs cannot be negative, got {epochs}")
    if eval_matches < 1:
        raise UsageError("eval_matches must be at least 1")
    if side not in ("left", "right"):
        raise UsageError(f"side must be left or right, got {side!r}")
    config.validate()
    cpus = [ScriptedCPU(level) for level in levels]
    learner = QLearner(config, side, lc)
    curves: list[tuple[Fraction, ...]] = []
    schedules: list[MetaStrategy] = []
    for _ in range(epochs):
        greedy = learner.greedy_policy()
        rates = []
        for cpu in cpus:
            win, draw, _ = evaluate_policy(
                config, greedy, cpu, side, eval_matches, int(rng.integers(2**62))
            )
            rates.append(win + draw / 2)
        state = CurriculumState(levels, tuple(rates), curriculum_weights(rates))
        curves.append(state.win_rates)
        schedules.append(state.schedule)
        rl_best_response(
            config,
            MixturePolicy(cpus, state.schedule),
            side,
            replace(lc, seed=int(rng.integers(2**62))),
            eval_matches=0,
            learner=learner,
        )
    return learner.greedy_policy(), tuple(curves), tuple(schedules)
