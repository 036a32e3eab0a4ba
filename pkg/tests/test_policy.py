from __future__ import annotations

from fractions import Fraction

import pytest

from arenaladder.engine import EngineConfig, Projectile, action_set, observe, reset
from arenaladder.errors import ConfigError, UsageError
from arenaladder.match import outcome_score, play_match
from arenaladder.policy import (
    CPU_LEVELS,
    MixturePolicy,
    PolicyId,
    ScriptedCPU,
    TabularPolicy,
    cpu_policy,
    mixture_draw,
    sample_action,
)
from arenaladder.rngutil import make_rng

from conftest import duel_state, fighter

F = Fraction


# ---------------------------------------------------------------------------
# PolicyId

def test_policy_id_fields_and_key():
    pid = PolicyId("br:3", side="left", checkpoint=3)
    assert pid.key() == "br:3"
    assert pid.side == "left"


def test_policy_id_rejects_bad_side():
    with pytest.raises(UsageError):
        PolicyId("x", side="top")


# ---------------------------------------------------------------------------
# TabularPolicy

def test_uniform_policy_gives_each_action_one_fifteenth(cfg):
    # cfg has specials off: 8 motions + 6 attacks + noop = 15 actions.
    pol = TabularPolicy.uniform(cfg)
    vec = pol.dist_for("anything")
    assert len(vec) == 15
    assert all(p == F(1, 15) for p in vec)


def test_tabular_unseen_key_falls_back_to_uniform(cfg):
    acts = action_set(cfg)
    pol = TabularPolicy(acts, {"seen": [F(1)] + [F(0)] * 14})
    assert pol.dist_for("seen")[0] == 1
    assert pol.dist_for("not seen") == tuple([F(1, 15)] * 15)


def test_tabular_rejects_wrong_length_vector(cfg):
    acts = action_set(cfg)
    with pytest.raises(UsageError):
        TabularPolicy(acts, {"k": [F(1, 2), F(1, 2)]})


def test_tabular_rejects_negative_probability(cfg):
    acts = action_set(cfg)
    vec = [F(0)] * 15
    vec[0], vec[1] = F(3, 2), F(-1, 2)
    with pytest.raises(UsageError):
        TabularPolicy(acts, {"k": vec})


def test_tabular_rejects_vector_sum_off_by_more_than_tolerance(cfg):
    acts = action_set(cfg)
    vec = [0.0] * 15
    vec[0] = 0.9999
    with pytest.raises(UsageError):
        TabularPolicy(acts, {"k": vec})


def test_tabular_renormalizes_near_one_float_vectors_exactly(cfg):
    # A float vector inside tolerance is accepted and dist_for returns a
    # true probability vector (rational, summing to exactly 1).
    acts = action_set(cfg)
    raw = [1 / 15] * 15  # float sum is 0.99999999999999988...
    pol = TabularPolicy(acts, {"k": raw})
    vec = pol.dist_for("k")
    assert sum(vec) == 1
    assert all(isinstance(p, F) for p in vec)


def test_from_action_map_is_deterministic(cfg):
    acts = action_set(cfg)
    pol = TabularPolicy.from_action_map(acts, {"k": 5})
    state = reset(cfg)
    obs = observe(cfg, state, "left")
    # only the mapped key is a point mass; everything else is uniform
    for s in range(10):
        rng = make_rng(s)
        assert pol.act(obs, rng).index in range(15)
    class Key:  # observation stand-in with the mapped key
        def key(self):
            return "k"
    for s in range(10):
        assert pol.act(Key(), make_rng(s)) is acts[5]


def test_constant_policy_plays_one_action_everywhere(cfg):
    acts = action_set(cfg)
    pol = TabularPolicy.constant(acts, 2)
    state = reset(cfg)
    for s in range(5):
        assert pol.act_in_state(cfg, state, "left", make_rng(s)) is acts[2]
        assert pol.act_in_state(cfg, state, "right", make_rng(s)) is acts[2]


def test_tabular_sampling_matches_distribution(cfg):
    acts = action_set(cfg)
    vec = [F(0)] * 15
    vec[0], vec[3], vec[9] = F(1, 2), F(1, 4), F(1, 4)
    pol = TabularPolicy(acts, {"k": vec})
    class Key:
        def key(self):
            return "k"
    rng = make_rng(42)
    counts = {0: 0, 3: 0, 9: 0}
    n = 4000
    for _ in range(n):
        counts[pol.act(Key(), rng).index] += 1
    assert abs(counts[0] / n - 0.5) < 0.03
    assert abs(counts[3] / n - 0.25) < 0.03
    assert abs(counts[9] / n - 0.25) < 0.03


def test_tabular_same_seed_replays_same_actions(cfg):
    pol = TabularPolicy.uniform(cfg)
    state = reset(cfg)
    obs = observe(cfg, state, "left")
    first = [pol.act(obs, make_rng(7, i)) for i in range(20)]
    second = [pol.act(obs, make_rng(7, i)) for i in range(20)]
    assert first == second


def test_sample_action_orders_by_action_index(cfg):
    acts = action_set(cfg)
    dist = {acts[9]: F(1, 2), acts[1]: F(1, 2)}
    # r < 0.5 must select the lower-indexed action regardless of dict order
    class FakeRng:
        def random(self):
            return 0.1
    assert sample_action(dist, FakeRng()) is acts[1]
    class FakeRng2:
        def random(self):
            return 0.9
    assert sample_action(dist, FakeRng2()) is acts[9]


# ---------------------------------------------------------------------------
# ScriptedCPU

def test_cpu_levels_run_one_through_eight():
    assert CPU_LEVELS == (1, 2, 3, 4, 5, 6, 7, 8)
    with pytest.raises(ConfigError):
        ScriptedCPU(0)
    with pytest.raises(ConfigError):
        ScriptedCPU(9)


def test_cpu_level_one_parameters():
    cpu = cpu_policy(1)
    assert cpu.reaction_prob == F(1, 5)
    assert cpu.aggression == F(37, 100)
    assert cpu.special_prob == F(1, 20)
    assert cpu.block_prob == F(1, 10)


def test_cpu_level_eight_parameters():
    cpu = cpu_policy(8)
    assert cpu.reaction_prob == F(9, 10)
    assert cpu.aggression == F(43, 50)
    assert cpu.special_prob == F(2, 5)
    assert cpu.block_prob == F(4, 5)


def test_cpu_parameters_increase_with_level():
    cpus = [cpu_policy(k) for k in CPU_LEVELS]
    for lo, hi in zip(cpus, cpus[1:]):
        assert lo.reaction_prob < hi.reaction_prob
        assert lo.aggression < hi.aggression
        assert lo.special_prob < hi.special_prob
        assert lo.block_prob < hi.block_prob


def _dist_by_name(cpu, config, state, side):
    return {a.name: p for a, p in cpu.action_distribution(config, state, side).items()}


def test_cpu_distribution_sums_to_one_exactly(cfg, cfg_specials):
    cpu = cpu_policy(4)
    states = [
        duel_state(cfg, fighter(2, 50, "right"), fighter(6, 50, "left")),
        duel_state(cfg, fighter(3, 50, "right"), fighter(4, 50, "left")),
        duel_state(cfg, fighter(3, 9, "right"),
                   fighter(4, 50, "left", phase="active", pending="hard_kick")),
        duel_state(cfg_specials, fighter(3, 50, "right"), fighter(4, 50, "left"),
                   projectiles=(Projectile(pos=5, direction=1, owner=0, damage=6),)),
    ]
    for state, config in zip(states, (cfg, cfg, cfg, cfg_specials)):
        for side in ("left", "right"):
            dist = cpu.action_distribution(config, state, side)
            assert sum(dist.values()) == 1
            assert all(p > 0 for p in dist.values())


def test_cpu_blocks_startup_with_reaction_times_block_probability(cfg):
    # Against an opponent winding up, the extra mass on `defense` beyond the
    # shared roaming share is exactly reaction * block.  `jump` only ever
    # receives the roaming share, so it isolates that baseline.
    cpu = cpu_policy(3)
    state = duel_state(cfg, fighter(3, 50, "right"),
                       fighter(4, 50, "left", phase="startup", frames=1,
                               pending="medium_punch"))
    dist = _dist_by_name(cpu, cfg, state, "left")
    assert dist["defense"] - dist["jump"] == cpu.reaction_prob * cpu.block_prob


def test_cpu_punishes_recovery_with_strongest_in_range_attack(cfg):
    # Opponent stuck in recovery at distance 1: with probability `reaction`
    # the CPU commits to the strongest landing attack (hard_punch), otherwise
    # it behaves as in neutral.
    cpu = cpu_policy(3)
    state = duel_state(cfg, fighter(3, 50, "right"),
                       fighter(4, 50, "left", phase="recovery", frames=2))
    dist = _dist_by_name(cpu, cfg, state, "left")
    r, a = cpu.reaction_prob, cpu.aggression
    assert dist["hard_punch"] == r + (1 - r) * a
    assert dist["jump"] == (1 - r) * (1 - a) / 8
    assert dist["defense"] == dist["jump"]  # no block mass in this branch


def test_cpu_whiff_range_recovery_is_not_punished(cfg):
    # Out of reach, the recovery branch has nothing to punish and the CPU
    # plays its neutral game: advance with probability `aggression` plus roam.
    cpu = cpu_policy(3)
    state = duel_state(cfg, fighter(1, 50, "right"),
                       fighter(7, 50, "left", phase="recovery", frames=1))
    dist = _dist_by_name(cpu, cfg, state, "left")
    a = cpu.aggression
    assert dist["forward"] == a + (1 - a) / 8
    assert dist["back_flip"] == (1 - a) / 8
    assert set(dist) == {
        "defense", "forward", "jump", "crouch", "back_flip", "front_flip",
        "offensive_crouch", "defensive_crouch",
    }


def test_cpu_far_neutral_advances(cfg):
    cpu = cpu_policy(5)
    state = duel_state(cfg, fighter(1, 50, "right"), fighter(7, 50, "left"))
    dist = _dist_by_name(cpu, cfg, state, "left")
    a = cpu.aggression
    assert dist["forward"] == a + (1 - a) / 8
    assert "hard_punch" not in dist


def test_cpu_throws_projectile_when_none_live(cfg_specials):
    cpu = cpu_policy(4)
    state = duel_state(cfg_specials, fighter(3, 50, "right"), fighter(4, 50, "left"))
    dist = _dist_by_name(cpu, cfg_specials, state, "left")
    a, s = cpu.aggression, cpu.special_prob
    assert dist["projectile"] == a * s
    assert dist["hard_punch"] == a * (1 - s)


def test_cpu_with_live_projectile_picks_reach_special(cfg_specials):
    cpu = cpu_policy(4)
    mine = Projectile(pos=6, direction=1, owner=0, damage=6)
    a, s = cpu.aggression, cpu.special_prob
    # adjacent: rising_strike (reach 1) is the fallback special
    state = duel_state(cfg_specials, fighter(3, 50, "right"), fighter(4, 50, "left"),
                       projectiles=(mine,))
    dist = _dist_by_name(cpu, cfg_specials, state, "left")
    assert dist["rising_strike"] == a * s
    assert "projectile" not in dist
    # distance 2: rising_strike whiffs, spin_kick (reach 3) connects
    state = duel_state(cfg_specials, fighter(3, 50, "right"), fighter(5, 50, "left"),
                       projectiles=(mine,))
    dist = _dist_by_name(cpu, cfg_specials, state, "left")
    assert dist["spin_kick"] == a * s
    assert dist["hard_punch"] == a * (1 - s)  # reach-2 normal still lands


def test_cpu_opponent_projectile_does_not_block_own_projectile(cfg_specials):
    cpu = cpu_policy(4)
    theirs = Projectile(pos=6, direction=-1, owner=1, damage=6)
    state = duel_state(cfg_specials, fighter(3, 50, "right"), fighter(9, 50, "left"),
                       projectiles=(theirs,))
    dist = _dist_by_name(cpu, cfg_specials, state, "left")
    # nothing else reaches at distance 6, so all attack mass is the fireball
    assert dist["projectile"] == cpu.aggression
    assert "hard_punch" not in dist


def test_cpu_sampling_agrees_with_exact_distribution(cfg):
    cpu = cpu_policy(4)
    state = duel_state(cfg, fighter(3, 50, "right"),
                       fighter(4, 50, "left", phase="startup", frames=1,
                               pending="hard_punch"))
    exact = cpu.action_distribution(cfg, state, "left")
    sess = cpu.session(cfg, "left")
    rng = make_rng(99)
    n = 4000
    counts: dict[str, int] = {}
    for _ in range(n):
        name = sess.act(state, rng).name
        counts[name] = counts.get(name, 0) + 1
    tv = sum(abs(counts.get(a.name, 0) / n - float(p)) for a, p in exact.items()) / 2
    assert tv < 0.03


def test_cpu_higher_level_wins_head_to_head():
    config = EngineConfig()
    hi, lo = cpu_policy(8), cpu_policy(1)
    total = F(0)
    for seed in range(15):
        total += outcome_score(play_match(config, hi, lo, seed).winner, "left")
        total += outcome_score(play_match(config, lo, hi, seed + 1000).winner, "right")
    assert total / 30 > F(7, 10)


# ---------------------------------------------------------------------------
# MixturePolicy

def test_mixture_validation(cfg):
    acts = action_set(cfg)
    one = TabularPolicy.uniform(cfg)
    with pytest.raises(UsageError):
        MixturePolicy([], [])
    with pytest.raises(UsageError):
        MixturePolicy([one], [F(1, 2), F(1, 2)])
    with pytest.raises(UsageError):
        MixturePolicy([one, one], [F(3, 2), F(-1, 2)])
    with pytest.raises(UsageError):
        MixturePolicy([one, one], [F(0), F(0)])
    with pytest.raises(UsageError):
        MixturePolicy([one, one], [0.6, 0.3])


def test_mixture_weights_are_exact(cfg):
    one = TabularPolicy.uniform(cfg)
    m = MixturePolicy([one, one, one], [0.5, 0.25, 0.25])
    assert m.weights == (F(1, 2), F(1, 4), F(1, 4))
    assert sum(m.weights) == 1


def test_mixture_draw_frequencies(cfg):
    one = TabularPolicy.uniform(cfg)
    m = MixturePolicy([one, one], [F(3, 4), F(1, 4)])
    rng = make_rng(7)
    n = 2000
    hits = sum(1 for _ in range(n) if mixture_draw(m, rng) == 0)
    assert abs(hits / n - 0.75) < 0.04


def test_mixture_marginal_distribution_is_weighted_sum(cfg):
    acts = action_set(cfg)
    m = MixturePolicy(
        [TabularPolicy.constant(acts, 0), TabularPolicy.constant(acts, 2)],
        [F(3, 4), F(1, 4)],
    )
    state = reset(cfg)
    dist = {a.name: p for a, p in m.action_distribution(cfg, state, "left").items()}
    assert dist == {acts[0].name: F(3, 4), acts[2].name: F(1, 4)}


def test_mixture_component_is_drawn_once_per_episode(cfg):
    acts = action_set(cfg)
    m = MixturePolicy(
        [TabularPolicy.constant(acts, 0), TabularPolicy.constant(acts, 2)],
        [F(1, 2), F(1, 2)],
        ids=(PolicyId("still"), PolicyId("walker")),
    )
    seen = set()
    for seed in range(12):
        out = play_match(cfg, m, TabularPolicy.constant(acts, 0), seed, record=True)
        left_names = {a for a, _ in out.actions}
        assert len(left_names) == 1  # never switches mid-episode
        seen |= left_names
    assert seen == {acts[0].name, acts[2].name}  # both components appear


# ---------------------------------------------------------------------------
# match playback

def test_play_match_is_reproducible(cfg_specials):
    a = play_match(cfg_specials, cpu_policy(3), cpu_policy(5), 11, record=True)
    b = play_match(cfg_specials, cpu_policy(3), cpu_policy(5), 11, record=True)
    assert a == b
    assert a.final_digest == b.final_digest


def test_play_match_seed_changes_trace(cfg_specials):
    base = play_match(cfg_specials, cpu_policy(3), cpu_policy(5), 11, record=True)
    others = [
        play_match(cfg_specials, cpu_policy(3), cpu_policy(5), s, record=True)
        for s in (12, 13, 14)
    ]
    assert any(o.actions != base.actions for o in others)


def test_play_match_reports_terminal_hp_and_winner(cfg):
    acts = action_set(cfg)
    still = TabularPolicy.constant(acts, 0)
    out = play_match(cfg, still, still, 0)
    # two motionless fighters never touch: timeout draw at full health
    assert out.winner == "draw"
    assert out.length == cfg.horizon
    assert out.hp_left == out.hp_right == cfg.max_hp
    assert out.dense_left == out.dense_right == 0


def test_outcome_score_counts_draws_as_half():
    assert outcome_score("left", "left") == 1
    assert outcome_score("left", "right") == 0
    assert outcome_score("draw", "left") == F(1, 2)
    assert outcome_score("draw", "right") == F(1, 2)
