"""Budgeted tabular learners: a Q-learning best response to a frozen opponent
and simultaneous independent learning for both sides.

The learners are deliberately plain: one value table over observation keys,
gamma 1 on the finite horizon, epsilon-greedy behavior, step-size times
step-ratio as the effective learning rate (the two-timescale baselines set the
ratio below 1 on one side).  Everything is reproducible from the seeds; episode
updates are applied strictly in episode order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .engine import EngineConfig, action_set, observe, reset, step
from .errors import ConfigError
from .exact import BRResult
from .match import play_match
from .policy import Policy, TabularPolicy
from .rngutil import make_rng

# rng stream branches, so the same seed never reuses draws across purposes
_BRANCH_TRAIN = 3
_BRANCH_EVAL = 4

REWARD_MODES = ("dense", "sparse")


@dataclass(frozen=True)
class LearnConfig:
    """Hyperparameters for the tabular learners."""

    budget_steps: int = 20_000
    step_size: float = 0.5
    exploration: float = 0.2
    step_ratio: float = 1.0
    seed: int = 0
    reward: str = "dense"

    def __post_init__(self) -> None:
        if self.budget_steps < 0:
            raise ConfigError(f"budget_steps must be >= 0, got {self.budget_steps}")
        if not 0 < self.step_size <= 1:
            raise ConfigError(f"step_size must be in (0, 1], got {self.step_size}")
        if not 0 <= self.exploration <= 1:
            raise ConfigError(f"exploration must be in [0, 1], got {self.exploration}")
        if self.step_ratio <= 0:
            raise ConfigError(f"step_ratio must be > 0, got {self.step_ratio}")
        if self.reward not in REWARD_MODES:
            raise ConfigError(f"reward must be one of {REWARD_MODES}, got {self.reward!r}")

    @property
    def effective_step(self) -> float:
        return self.step_size * self.step_ratio


class QLearner:
    """One side's Q table over observation keys.

    Values start at zero, updates are Q += a * (r + max Q' - Q) with gamma 1
    and no bootstrap past terminal states.  Greedy ties break toward the
    lowest action index so extracted policies are reproducible.
    """

    def __init__(self, config: EngineConfig, side: str, lc: LearnConfig):
        self.config = config
        self.side = side
        self.lc = lc
        self.actions = action_set(config)
        self.q: dict[str, np.ndarray] = {}
        self.steps_used = 0

    def row(self, obs_key: str) -> np.ndarray:
        got = self.q.get(obs_key)
        if got is None:
            got = np.zeros(len(self.actions))
            self.q[obs_key] = got
        return got

    def choose(self, obs_key: str, rng: np.random.Generator) -> int:
        if rng.random() < self.lc.exploration:
            return int(rng.integers(len(self.actions)))
        row = self.q.get(obs_key)
        if row is None:
            return 0
        return int(np.argmax(row))

    def update(self, obs_key: str, action: int, reward: float,
               next_key: str | None) -> float:
        """Apply one transition; returns |change| for diagnostics."""
        row = self.row(obs_key)
        target = reward
        if next_key is not None:
            nxt = self.q.get(next_key)
            if nxt is not None:
                target += float(np.max(nxt))
        delta = self.lc.effective_step * (target - row[action])
        row[action] += delta
        self.steps_used += 1
        return abs(delta)

    def greedy_policy(self) -> TabularPolicy:
        table = {}
        for key, row in self.q.items():
            vec = [Fraction(0)] * len(self.actions)
            vec[int(np.argmax(row))] = Fraction(1)
            table[key] = vec
        return TabularPolicy(self.actions, table)


def _step_reward(lc: LearnConfig, result, side_idx: int) -> float:
    if lc.reward == "sparse":
        return float(result.sparse[side_idx])
    return float(result.dense[side_idx])


def evaluate_policy(
    config: EngineConfig,
    policy: Policy,
    opponent: Policy,
    side: str,
    matches: int,
    seed: int,
) -> tuple[Fraction, Fraction, Fraction]:
    """(win_prob, draw_prob, value) estimated over `matches` games."""
    wins = draws = losses = 0
    seeds = make_rng(seed, _BRANCH_EVAL).integers(2**62, size=max(1, matches))
    for i in range(matches):
        match_seed = int(seeds[i])
        if side == "left":
            out = play_match(config, policy, opponent, match_seed)
        else:
            out = play_match(config, opponent, policy, match_seed)
        if out.winner == "draw":
            draws += 1
        elif out.winner == side:
            wins += 1
        else:
            losses += 1
    n = max(1, matches)
    return Fraction(wins, n), Fraction(draws, n), Fraction(wins - losses, n)


DiagnosticSink = Callable[[str], None]


def rl_best_response(
    config: EngineConfig,
    opponent: Policy,
    responder_side: str,
    lc: LearnConfig,
    *,
    eval_matches: int = 1000,
    diagnostics: DiagnosticSink | None = None,
    learner: QLearner | None = None,
) -> BRResult:
    """Q-learning against the frozen `opponent` for `lc.budget_steps` steps.

    Returns the greedy policy with win probability and value estimated over
    `eval_matches` games.  A zero budget skips training and evaluates the
    uniform policy.  Passing an existing `learner` continues training its
    table for `lc.budget_steps` further steps (the learner keeps its own
    exploration and step-size settings; `lc` supplies budget and seed).
    """
    config.validate()
    opp_side = "right" if responder_side == "left" else "left"
    side_idx = 0 if responder_side == "left" else 1
    if learner is None:
        learner = QLearner(config, responder_side, lc)
    deadline = learner.steps_used + lc.budget_steps
    rng = make_rng(lc.seed, _BRANCH_TRAIN)
    opp_rng = make_rng(lc.seed, _BRANCH_TRAIN, 1)
    episode = 0
    while learner.steps_used < deadline:
        state = reset(config)
        opp_sess = opponent.session(config, opp_side)
        episode_return = 0.0
        episode_change = 0.0
        while not state.terminal and learner.steps_used < deadline:
            obs_key = observe(config, state, responder_side).key()
            a_idx = learner.choose(obs_key, rng)
            own = learner.actions[a_idx]
            theirs = opp_sess.act(state, opp_rng)
            if responder_side == "left":
                result = step(config, state, own, theirs)
            else:
                result = step(config, state, theirs, own)
            opp_sess.notify(state, theirs, result.state)
            reward = _step_reward(lc, result, side_idx)
            nxt = result.state
            next_key = None if nxt.terminal else observe(config, nxt, responder_side).key()
            episode_change += learner.update(obs_key, a_idx, reward, next_key)
            episode_return += reward
            state = nxt
        episode += 1
        if diagnostics is not None:
            diagnostics(f"{episode} {episode_return:.6f} {episode_change:.6f}")
    policy = learner.greedy_policy()
    win, draw, value = evaluate_policy(
        config, policy, opponent, responder_side, eval_matches, lc.seed
    )
    return BRResult(policy=policy, value=value, win_prob=win, draw_prob=draw,
                    states=len(learner.q))


@dataclass(frozen=True)
class LearnOutcome:
    """Both learned policies plus per-episode L1 table-change diagnostics."""

    left: TabularPolicy
    right: TabularPolicy
    change_left: tuple[float, ...]
    change_right: tuple[float, ...]

    def __iter__(self):
        # allows `left, right = independent_learn(...)` as the simple form
        return iter((self.left, self.right))


def independent_learn(
    config: EngineConfig,
    lc_left: LearnConfig,
    lc_right: LearnConfig,
    *,
    diagnostics: DiagnosticSink | None = None,
) -> LearnOutcome:
    """Both sides learn simultaneously from shared self-play episodes.

    Each side runs its own Q table, rng stream, and budget; an episode step
    counts against both sides while both are still learning.  With equal
    configs the procedure is exactly symmetric, so mirrored seeds produce
    identical (side-relative) tables.
    """
    config.validate()
    learners = {
        "left": QLearner(config, "left", lc_left),
        "right": QLearner(config, "right", lc_right),
    }
    rngs = {
        "left": make_rng(lc_left.seed, _BRANCH_TRAIN),
        "right": make_rng(lc_right.seed, _BRANCH_TRAIN),
    }
    budgets = {"left": lc_left.budget_steps, "right": lc_right.budget_steps}
    changes: dict[str, list[float]] = {"left": [], "right": []}

    def done() -> bool:
        return all(learners[s].steps_used >= budgets[s] for s in ("left", "right"))

    episode = 0
    while not done():
        state = reset(config)
        episode_change = {"left": 0.0, "right": 0.0}
        while not state.terminal and not done():
            keys = {s: observe(config, state, s).key() for s in ("left", "right")}
            picks = {s: learners[s].choose(keys[s], rngs[s]) for s in ("left", "right")}
            result = step(
                config,
                state,
                learners["left"].actions[picks["left"]],
                learners["right"].actions[picks["right"]],
            )
            nxt = result.state
            for idx, s in enumerate(("left", "right")):
                if learners[s].steps_used >= budgets[s]:
                    continue
                reward = _step_reward(learners[s].lc, result, idx)
                next_key = None if nxt.terminal else observe(config, nxt, s).key()
                episode_change[s] += learners[s].update(
                    keys[s], picks[s], reward, next_key
                )
            state = nxt
        episode += 1
        for s in ("left", "right"):
            changes[s].append(episode_change[s])
        if diagnostics is not None:
            diagnostics(
                f"{episode} {episode_change['left']:.6f} {episode_change['right']:.6f}"
            )
    return LearnOutcome(
        left=learners["left"].greedy_policy(),
        right=learners["right"].greedy_policy(),
        change_left=tuple(changes["left"]),
        change_right=tuple(changes["right"]),
    )
