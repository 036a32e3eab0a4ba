"""Plays complete matches between two policies and reports the outcome."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from collections.abc import Sequence

from .engine import EngineConfig, GameState, action_by_name, reset, state_digest, step
from .errors import UsageError
from .policy import Policy
from .rngutil import make_rng


@dataclass(frozen=True)
class MatchOutcome:
    winner: str  # "left" | "right" | "draw"
    length: int
    hp_left: int
    hp_right: int
    dense_left: Fraction
    dense_right: Fraction
    final_digest: str
    actions: tuple[tuple[str, str], ...] = ()


def outcome_score(winner: str, side: str) -> Fraction:
    """Match score for one side with draws worth half."""
    if winner == "draw":
        return Fraction(1, 2)
    return Fraction(1) if winner == side else Fraction(0)


def play_match(
    config: EngineConfig,
    policy_left: Policy,
    policy_right: Policy,
    seed: int,
    record: bool = False,
) -> MatchOutcome:
    """One full episode; fully reproducible from (config, policies, seed)."""
    rng_left = make_rng(seed, 0)
    rng_right = make_rng(seed, 1)
    sess_left = policy_left.session(config, "left")
    sess_right = policy_right.session(config, "right")
    state = reset(config)
    dense_l = Fraction(0)
    dense_r = Fraction(0)
    log: list[tuple[str, str]] = []
    length = 0
    while not state.terminal:
        a_l = sess_left.act(state, rng_left)
        a_r = sess_right.act(state, rng_right)
        result = step(config, state, a_l, a_r)
        sess_left.notify(state, a_l, result.state)
        sess_right.notify(state, a_r, result.state)
        dense_l += result.dense[0]
        dense_r += result.dense[1]
        if record:
            log.append((a_l.name, a_r.name))
        state = result.state
        length += 1
    return MatchOutcome(
        winner=state.winner or "draw",
        length=length,
        hp_left=state.left.hp,
        hp_right=state.right.hp,
        dense_left=dense_l,
        dense_right=dense_r,
        final_digest=state_digest(state),
        actions=tuple(log),
    )


def replay_match(
    config: EngineConfig, actions: Sequence[tuple[str, str]]
) -> MatchOutcome:
    """Re-simulate a recorded action sequence; bit-exact given the same config.

    The sequence must cover the whole match: stopping short of the terminal
    state or running past it are both errors, so a successful replay always
    reproduces the original final digest.
    """
    state = reset(config)
    dense_l = Fraction(0)
    dense_r = Fraction(0)
    length = 0
    for name_l, name_r in actions:
        if state.terminal:
            raise UsageError(f"replay continues past the end of the match (step {length})")
        result = step(
            config, state, action_by_name(config, name_l), action_by_name(config, name_r)
        )
        dense_l += result.dense[0]
        dense_r += result.dense[1]
        state = result.state
        length += 1
    if not state.terminal:
        raise UsageError(f"replay ends before the match does (step {length})")
    return MatchOutcome(
        winner=state.winner or "draw",
        length=length,
        hp_left=state.left.hp,
        hp_right=state.right.hp,
        dense_left=dense_l,
        dense_right=dense_r,
        final_digest=state_digest(state),
        actions=tuple(tuple(pair) for pair in actions),
    )
