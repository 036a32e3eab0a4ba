"""Engine invariants checked over randomized action sequences."""

from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from arenaladder.engine import (
    EngineConfig,
    action_set,
    enumerate_observations,
    mirror_state,
    observe,
    reset,
    state_digest,
    step,
)
from arenaladder.presets import tiny_config

_PROP_CFG = EngineConfig(arena_width=9, max_hp=12, horizon=12)
_ACTS = action_set(_PROP_CFG)

action_pairs = st.lists(
    st.tuples(st.integers(0, len(_ACTS) - 1), st.integers(0, len(_ACTS) - 1)),
    min_size=1,
    max_size=14,
)


def _playout(config, pairs):
    s = reset(config)
    acts = action_set(config)
    trace = [s]
    rewards = []
    for ia, ib in pairs:
        if s.terminal:
            break
        r = step(config, s, acts[ia], acts[ib])
        trace.append(r.state)
        rewards.append(r)
        s = r.state
    return trace, rewards


@settings(max_examples=60, deadline=None)
@given(action_pairs)
def test_core_state_invariants(pairs):
    cfg = _PROP_CFG
    trace, rewards = _playout(cfg, pairs)
    prev = trace[0]
    for s in trace[1:]:
        for f in (s.left, s.right):
            assert 0 <= f.pos < cfg.arena_width
            assert 0 <= f.hp <= cfg.max_hp
            if f.phase == "neutral":
                assert f.phase_frames == 0
            assert len(f.buffer) <= 4
        assert s.left.pos < s.right.pos
        assert s.left.hp <= prev.left.hp and s.right.hp <= prev.right.hp
        assert s.terminal == (s.timer == 0 or s.left.hp == 0 or s.right.hp == 0)
        prev = s


@settings(max_examples=60, deadline=None)
@given(action_pairs)
def test_sparse_rewards_are_zero_sum_and_terminal_only(pairs):
    _, rewards = _playout(_PROP_CFG, pairs)
    for r in rewards:
        assert r.sparse[0] + r.sparse[1] == 0
        if not r.state.terminal:
            assert r.sparse == (Fraction(0), Fraction(0))


@settings(max_examples=60, deadline=None)
@given(action_pairs)
def test_dense_is_zero_sum_when_lambda_one_and_no_bonus(pairs):
    cfg = EngineConfig(arena_width=9, max_hp=12, horizon=12,
                       reward_lambda=Fraction(1), bonus_scale=Fraction(0))
    _, rewards = _playout(cfg, pairs)
    for r in rewards:
        assert r.dense[0] + r.dense[1] == 0


@settings(max_examples=60, deadline=None)
@given(action_pairs)
def test_replay_reproduces_identical_digests(pairs):
    t1, _ = _playout(_PROP_CFG, pairs)
    t2, _ = _playout(_PROP_CFG, pairs)
    assert [state_digest(s) for s in t1] == [state_digest(s) for s in t2]


@settings(max_examples=60, deadline=None)
@given(action_pairs)
def test_mirror_symmetry_pathwise(pairs):
    """Mirroring the state and swapping the two inputs mirrors the successor
    and swaps both reward channels."""
    cfg = _PROP_CFG
    acts = _ACTS
    s = reset(cfg)
    m = mirror_state(cfg, s)
    assert m == s  # the start is symmetric
    for ia, ib in pairs:
        if s.terminal:
            break
        r = step(cfg, s, acts[ia], acts[ib])
        rm = step(cfg, m, acts[ib], acts[ia])
        assert rm.state == mirror_state(cfg, r.state)
        assert rm.sparse == (r.sparse[1], r.sparse[0])
        assert rm.dense == (r.dense[1], r.dense[0])
        s, m = r.state, rm.state


@settings(max_examples=40, deadline=None)
@given(action_pairs)
def test_winner_has_higher_cumulative_dense_reward(pairs):
    # With bonus_scale >= lambda the sparse winner always leads on shaped reward.
    cfg = EngineConfig(arena_width=9, max_hp=12, horizon=12,
                       reward_lambda=Fraction(3), bonus_scale=Fraction(3))
    _, rewards = _playout(cfg, pairs)
    if not rewards or not rewards[-1].state.terminal:
        return
    winner = rewards[-1].state.winner
    if winner == "draw":
        return
    total_l = sum(r.dense[0] for r in rewards)
    total_r = sum(r.dense[1] for r in rewards)
    if winner == "left":
        assert total_l > total_r
    else:
        assert total_r > total_l


@settings(max_examples=30, deadline=None)
@given(action_pairs)
def test_observation_keys_parse_both_viewpoints(pairs):
    cfg = _PROP_CFG
    trace, _ = _playout(cfg, pairs)
    for s in trace:
        for side in ("left", "right"):
            ob = observe(cfg, s, side)
            assert len(ob.data) == 8
            assert ob.key().count("|") == 7


def test_enumerate_observations_matches_dfs_oracle():
    """Independent depth-first enumeration agrees with the breadth-first one;
    the count for the frozen tiny config is pinned."""
    cfg = tiny_config(horizon=2)
    acts = action_set(cfg)
    seen = set()
    keys = set()

    def go(s):
        if s in seen:
            return
        seen.add(s)
        if s.terminal:
            return
        keys.add(observe(cfg, s, "left").key())
        keys.add(observe(cfg, s, "right").key())
        for al in acts:
            for ar in acts:
                go(step(cfg, s, al, ar).state)

    go(reset(cfg))
    listed = enumerate_observations(cfg)
    assert [o.key() for o in listed] == sorted(keys)
    assert len(listed) == 102


def test_enumerate_observations_capacity_guard():
    from arenaladder.errors import CapacityError
    with pytest.raises(CapacityError):
        enumerate_observations(tiny_config(horizon=3), max_states=50)
