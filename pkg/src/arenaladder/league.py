"""League training: role-specialized opponent selection over a roster.

Each side fields one main agent (MA), one main exploiter (ME), and two
league exploiters (LE0, LE1).  Every cycle each role trains for a fixed
step budget against a mixture chosen by `league_step`:

- MA mixes self-play against the opposite main agent with prioritized
  fictitious self-play (PFSP) over the opposite side's checkpoint history
  and its exploiter checkpoints;
- ME plays the opposite main agent head-on, widening to that agent's recent
  checkpoints only while it is losing badly;
- LE plays PFSP over the entire opposite checkpoint history.

PFSP weights an opponent the learner beats with probability p by (1 - p)^2,
so training concentrates on the opponents that still win.  All percentages,
thresholds, and the weighting itself live in `LeagueConfig`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .engine import EngineConfig
from .errors import ConfigError, UsageError
from .learn import LearnConfig, QLearner, rl_best_response
from .payoff import PayoffMatrix, estimate_payoff
from .policy import MixturePolicy, Policy, PolicyId, TabularPolicy

F0 = Fraction(0)
F1 = Fraction(1)

ROLES = ("MA", "ME", "LE0", "LE1")
SIDES = ("left", "right")


def pfsp_priority(p: Fraction) -> Fraction:
    """Default PFSP weighting: quadratic focus on opponents that still win."""
    return (1 - p) ** 2


def pfsp_weights(
    win_rates: Sequence[Fraction | float],
    weighting: Callable[[Fraction], Fraction] = pfsp_priority,
) -> tuple[Fraction, ...]:
    """Normalized opponent weights from the learner's win rates.

    All-zero priorities (the learner beats everyone outright) fall back to
    the uniform distribution so training never silently stops.
    """
    if not win_rates:
        raise UsageError("PFSP needs at least one candidate opponent")
    raw = [Fraction(weighting(Fraction(p))) for p in win_rates]
    if any(w < 0 for w in raw):
        raise UsageError("PFSP weighting must be non-negative")
    total = sum(raw)
    if total == 0:
        return (Fraction(1, len(raw)),) * len(raw)
    return tuple(w / total for w in raw)


@dataclass(frozen=True)
class LeagueConfig:
    """Opponent-selection knobs; defaults follow the classic league recipe."""

    self_play: Fraction = Fraction(35, 100)
    history: Fraction = Fraction(50, 100)
    exploiters: Fraction = Fraction(15, 100)
    reset_threshold: Fraction = Fraction(7, 10)
    struggle_threshold: Fraction = Fraction(1, 5)
    recent: int = 3
    weighting: Callable[[Fraction], Fraction] = pfsp_priority

    def __post_init__(self) -> None:
        shares = (self.self_play, self.history, self.exploiters)
        if any(not 0 <= Fraction(s) <= 1 for s in shares):
            raise ConfigError("mixture shares must lie in [0, 1]")
        if sum(Fraction(s) for s in shares) != 1:
            raise ConfigError("self_play + history + exploiters must sum to 1")
        for name in ("reset_threshold", "struggle_threshold"):
            if not 0 <= Fraction(getattr(self, name)) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.recent < 1:
            raise ConfigError("recent must be at least 1")


@dataclass
class LeagueMember:
    """One live agent plus its frozen history.

    `total_steps` counts every training step the seat has ever consumed; it
    keeps checkpoint numbering increasing even when a reset swaps in a fresh
    learner whose own step counter starts over.
    """

    role: str
    side: str
    policy: Policy
    learner: QLearner | None = None
    checkpoints: list[tuple[PolicyId, Policy]] = field(default_factory=list)
    total_steps: int = 0

    def latest_checkpoint(self) -> "tuple[PolicyId, Policy] | None":
        return self.checkpoints[-1] if self.checkpoints else None


@dataclass
class LeagueRoster:
    """Fixed cast per side: one MA, one ME, two LEs, with their checkpoints."""

    members: dict[tuple[str, str], LeagueMember]

    def __post_init__(self) -> None:
        expected = {(side, role) for side in SIDES for role in ROLES}
        if set(self.members) != expected:
            raise UsageError(
                "roster must hold exactly MA/ME/LE0/LE1 for each of left and right"
            )
        for (side, role), member in self.members.items():
            if (member.side, member.role) != (side, role):
                raise UsageError(f"member under key {(side, role)} disagrees with its tag")
            steps = [ident.checkpoint for ident, _ in member.checkpoints]
            if any(b <= a for a, b in zip(steps, steps[1:])):
                raise UsageError("checkpoints must be strictly increasing in step count")

    @classmethod
    def fresh(cls, initial: Policy) -> "LeagueRoster":
        members = {
            (side, role): LeagueMember(role=role, side=side, policy=initial)
            for side in SIDES
            for role in ROLES
        }
        return cls(members)

    def member(self, side: str, role: str) -> LeagueMember:
        got = self.members.get((side, role))
        if got is None:
            raise UsageError(f"no {role!r} on the {side!r} side of this roster")
        return got

    def snapshot(self, side: str, role: str, policy: Policy) -> PolicyId:
        member = self.member(side, role)
        steps = member.total_steps
        ident = PolicyId(f"{role}_{side}_{steps}", side=side, checkpoint=steps)
        last = member.latest_checkpoint()
        if last is not None and steps <= last[0].checkpoint:
            raise UsageError(
                f"checkpoint at {steps} steps does not advance past {last[0].checkpoint}"
            )
        member.checkpoints.append((ident, policy))
        return ident

    def history(self, side: str, roles: Sequence[str] = ROLES) -> list[tuple[PolicyId, Policy]]:
        pool: list[tuple[PolicyId, Policy]] = []
        for role in roles:
            pool.extend(self.member(side, role).checkpoints)
        return pool


def _other(side: str) -> str:
    return "right" if side == "left" else "left"


def _live_id(member: LeagueMember) -> PolicyId:
    return PolicyId(
        f"{member.role}_{member.side}_live", side=member.side, checkpoint=member.total_steps
    )


def _win_rate(p: PayoffMatrix, learner_id: PolicyId, opponent_id: PolicyId, learner_side: str):
    if learner_side == "left":
        return p.entry(learner_id, opponent_id)
    return 1 - p.entry(opponent_id, learner_id)


def league_step(
    roster: LeagueRoster,
    learner_role: tuple[str, str],
    p: PayoffMatrix,
    rng: np.random.Generator,
    league_config: LeagueConfig = LeagueConfig(),
) -> MixturePolicy:
    """The opponent mixture for one role's next training cycle.

    `learner_role` is a (side, role) pair.  Win rates are read from `p` with
    the learner's newest checkpoint standing in for its live weights, so
    every candidate's entry must already be estimated.  Empty candidate
    buckets are dropped and the remaining shares renormalized; a role with
    no candidates at all (the opening cycle) falls back to the opposite
    main agent.  The choice is deterministic — the returned mixture itself
    draws one opponent per episode.
    """
    side, role = learner_role
    learner = roster.member(side, role)
    opp = _other(side)
    opp_ma = roster.member(opp, "MA")
    live = (_live_id(opp_ma), opp_ma.policy)
    cfg = league_config
    proxy = learner.latest_checkpoint()

    def rates(pool: Sequence[tuple[PolicyId, Policy]]) -> list[Fraction]:
        if proxy is None:
            # no information about the learner yet: weight candidates evenly
            return [Fraction(1, 2)] * len(pool)
        return [_win_rate(p, proxy[0], ident, side) for ident, _ in pool]

    def pfsp_bucket(pool):
        return pool, pfsp_weights(rates(pool), cfg.weighting)

    buckets: list[tuple[Fraction, list, tuple[Fraction, ...]]] = []
    if role == "MA":
        history = roster.history(opp)
        exploiters = roster.history(opp, roles=("ME", "LE0", "LE1"))
        buckets.append((Fraction(cfg.self_play), [live], (F1,)))
        if history:
            buckets.append((Fraction(cfg.history), *pfsp_bucket(history)))
        if exploiters:
            buckets.append((Fraction(cfg.exploiters), *pfsp_bucket(exploiters)))
    elif role == "ME":
        struggling = False
        me_proxy, ma_proxy = proxy, opp_ma.latest_checkpoint()
        if me_proxy is not None and ma_proxy is not None:
            struggling = (
                _win_rate(p, me_proxy[0], ma_proxy[0], side) < cfg.struggle_threshold
            )
        if struggling:
            widened = [live] + opp_ma.checkpoints[-cfg.recent :]
            share = Fraction(1, len(widened))
            buckets.append((F1, widened, (share,) * len(widened)))
        else:
            buckets.append((F1, [live], (F1,)))
    else:  # league exploiters
        pool = roster.history(opp)
        if pool:
            buckets.append((F1, *pfsp_bucket(pool)))
        else:
            buckets.append((F1, [live], (F1,)))

    outer_total = sum(share for share, _, _ in buckets)
    components: list[Policy] = []
    ids: list[PolicyId] = []
    weights: list[Fraction] = []
    for share, pool, inner in buckets:
        for (ident, policy), w in zip(pool, inner):
            components.append(policy)
            ids.append(ident)
            weights.append(share / outer_total * w)
    return MixturePolicy(components, weights, ids=ids)


@dataclass(frozen=True)
class LeagueResult:
    """A finished league run: final roster, payoff over all checkpoints, and
    the (cycle, side) coordinates of every main-exploiter reset."""

    roster: LeagueRoster
    payoff: PayoffMatrix
    resets: tuple[tuple[int, str], ...]


def run_league(
    T_cycles: int,
    br_budget: int,
    config: EngineConfig,
    rng: np.random.Generator,
    *,
    league_config: LeagueConfig = LeagueConfig(),
    lc: LearnConfig = LearnConfig(),
    initial: Policy | None = None,
    matches_per_pair: int = 32,
    workers: int | None = None,
) -> LeagueResult:
    """Train the full league for `T_cycles` cycles of `br_budget` steps each.

    Cycle order is MA, ME, LE0, LE1 with left before right inside each role.
    After all eight updates the cycle snapshots are appended to the payoff
    matrix (new pairs only) and each ME that beat its target main agent at
    `reset_threshold` or better is reset to the initial policy.
    """
    if T_cycles < 1:
        raise UsageError("the league needs at least one cycle")
    if br_budget < 1:
        raise UsageError("br_budget must be at least 1 step per role and cycle")
    config.validate()
    if initial is None:
        initial = TabularPolicy.uniform(config)
    roster = LeagueRoster.fresh(initial)
    payoff = PayoffMatrix.empty((), ())
    resets: list[tuple[int, str]] = []
    for cycle in range(1, T_cycles + 1):
        for role in ROLES:
            for side in SIDES:
                member = roster.member(side, role)
                mixture = league_step(roster, (side, role), payoff, rng, league_config)
                if member.learner is None:
                    member.learner = QLearner(config, side, lc)
                seed = int(rng.integers(2**62))
                outcome = rl_best_response(
                    config,
                    mixture,
                    side,
                    replace(lc, budget_steps=br_budget, seed=seed),
                    eval_matches=0,
                    learner=member.learner,
                )
                member.policy = outcome.policy
                member.total_steps += br_budget
        # snapshots wait for the whole cycle so the PFSP pools never hold a
        # checkpoint the payoff matrix has not measured yet
        for role in ROLES:
            for side in SIDES:
                roster.snapshot(side, role, roster.member(side, role).policy)
        payoff = estimate_payoff(
            roster.history("left"),
            roster.history("right"),
            matches_per_pair,
            config,
            rng,
            prior=payoff,
            workers=workers,
        )
        for side in SIDES:
            me = roster.member(side, "ME").latest_checkpoint()
            ma = roster.member(_other(side), "MA").latest_checkpoint()
            rate = _win_rate(payoff, me[0], ma[0], side)
            if rate >= league_config.reset_threshold:
                member = roster.member(side, "ME")
                member.policy = initial
                member.learner = None
                resets.append((cycle, side))
    return LeagueResult(roster=roster, payoff=payoff, resets=tuple(resets))
