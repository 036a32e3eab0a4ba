"""Policy types: tabular lookup policies, the scripted CPU opponent, and
per-episode mixtures.

Policies are immutable.  To play, a caller opens a per-episode session
(`Policy.session`); sessions hold any episode-local state (the mixture's drawn
component, a belief tracker, ...) so the policy objects themselves can be
shared freely across matches and processes.

Every policy here can also report its exact per-state action distribution as
rationals, which is what the exact best-response machinery consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .engine import (
    MOTIONS,
    EngineConfig,
    GameState,
    Observation,
    TransAction,
    action_set,
    observe,
)
from .errors import ConfigError, UsageError

PROB_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PolicyId:
    """Stable identity of one policy: a display name plus side and checkpoint."""

    name: str
    side: str = "any"  # "left" | "right" | "any"
    checkpoint: int = 0

    def __post_init__(self) -> None:
        if self.side not in ("left", "right", "any"):
            raise UsageError(f"side must be left/right/any, got {self.side!r}")

    def key(self) -> str:
        return self.name


class PolicySession:
    """Episode-local view of a policy.  Stateless policies share one code path."""

    def __init__(self, policy: "Policy", config: EngineConfig, side: str):
        self.policy = policy
        self.config = config
        self.side = side

    def act(self, state: GameState, rng: np.random.Generator) -> TransAction:
        return self.policy.act_in_state(self.config, state, self.side, rng)

    def notify(self, prev: GameState, own_action: TransAction, new: GameState) -> None:
        """Called after every step with the transition the session just lived."""


class Policy:
    """Base interface; concrete policies override distribution and sampling."""

    def session(self, config: EngineConfig, side: str) -> PolicySession:
        return PolicySession(self, config, side)

    def action_distribution(
        self, config: EngineConfig, state: GameState, side: str
    ) -> dict[TransAction, Fraction]:
        raise NotImplementedError

    def act_in_state(
        self, config: EngineConfig, state: GameState, side: str, rng: np.random.Generator
    ) -> TransAction:
        dist = self.action_distribution(config, state, side)
        return sample_action(dist, rng)


def sample_action(dist: Mapping[TransAction, Fraction], rng: np.random.Generator) -> TransAction:
    """Sample from an action distribution with one uniform draw."""
    r = rng.random()
    acc = 0.0
    items = sorted(dist.items(), key=lambda kv: kv[0].index)
    for action, p in items:
        acc += float(p)
        if r < acc:
            return action
    return items[-1][0]


# ---------------------------------------------------------------------------
# tabular policies

class TabularPolicy(Policy):
    """Maps observation keys to probability vectors over the legal action set.

    Unseen observations fall back to the uniform distribution.  Stored vectors
    must sum to 1 within 1e-9; `dist_for` re-normalizes exactly in rationals
    so downstream exact computations see true probability vectors.
    """

    def __init__(
        self,
        actions: Sequence[TransAction],
        table: Mapping[str, Sequence[Fraction | float]] | None = None,
        default: Sequence[Fraction | float] | None = None,
    ):
        self.actions = tuple(actions)
        if not self.actions:
            raise UsageError("TabularPolicy needs a non-empty action set")
        self.table: dict[str, tuple[Fraction, ...]] = {}
        for key, vec in (table or {}).items():
            self.table[key] = self._check_vector(key, vec)
        if default is not None:
            self._uniform = self._check_vector("<default>", default)
        else:
            self._uniform = tuple([Fraction(1, len(self.actions))] * len(self.actions))

    def _check_vector(self, key: str, vec: Sequence[Fraction | float]) -> tuple[Fraction, ...]:
        if len(vec) != len(self.actions):
            raise UsageError(
                f"vector for {key!r} has {len(vec)} entries, need {len(self.actions)}"
            )
        exact = tuple(p if isinstance(p, Fraction) else Fraction(p) for p in vec)
        if any(p < 0 for p in exact):
            raise UsageError(f"vector for {key!r} has a negative probability")
        if abs(float(sum(exact)) - 1.0) > PROB_TOLERANCE:
            raise UsageError(f"vector for {key!r} sums to {float(sum(exact))}, not 1")
        return exact

    def dist_for(self, obs_key: str) -> tuple[Fraction, ...]:
        vec = self.table.get(obs_key, self._uniform)
        total = sum(vec)
        if total != 1:
            vec = tuple(p / total for p in vec)
        return vec

    def act(self, obs: Observation, rng: np.random.Generator) -> TransAction:
        vec = self.dist_for(obs.key())
        r = rng.random()
        acc = 0.0
        for action, p in zip(self.actions, vec):
            acc += float(p)
            if r < acc:
                return action
        return self.actions[-1]

    def action_distribution(
        self, config: EngineConfig, state: GameState, side: str
    ) -> dict[TransAction, Fraction]:
        vec = self.dist_for(observe(config, state, side).key())
        return {a: p for a, p in zip(self.actions, vec) if p > 0}

    def act_in_state(
        self, config: EngineConfig, state: GameState, side: str, rng: np.random.Generator
    ) -> TransAction:
        return self.act(observe(config, state, side), rng)

    @classmethod
    def uniform(cls, config: EngineConfig) -> "TabularPolicy":
        return cls(action_set(config))

    @classmethod
    def from_action_map(
        cls, actions: Sequence[TransAction], choices: Mapping[str, int]
    ) -> "TabularPolicy":
        """Deterministic policy from observation key -> action index."""
        table = {}
        for key, idx in choices.items():
            vec = [Fraction(0)] * len(actions)
            vec[idx] = Fraction(1)
            table[key] = vec
        return cls(actions, table)

    @classmethod
    def constant(cls, actions: Sequence[TransAction], index: int) -> "TabularPolicy":
        """Policy that plays ``actions[index]`` in every state."""
        vec = [Fraction(0)] * len(actions)
        vec[index] = Fraction(1)
        return cls(actions, default=vec)


def act(policy: TabularPolicy, obs: Observation, rng: np.random.Generator) -> TransAction:
    """Sample an action for one observation; a reseeded rng replays the same choices."""
    return policy.act(obs, rng)


# ---------------------------------------------------------------------------
# scripted CPU opponent

CPU_LEVELS = tuple(range(1, 9))


@dataclass(frozen=True)
class ScriptedCPU(Policy):
    """Rule-based opponent with difficulty-scaled reaction, aggression,
    special usage and blocking.  Its action distribution at any state is an
    exact rational, so it can serve as a best-response target."""

    level: int

    def __post_init__(self) -> None:
        if self.level not in CPU_LEVELS:
            raise ConfigError(f"CPU level must be in 1..8, got {self.level}")

    @property
    def reaction_prob(self) -> Fraction:
        return Fraction(1, 10) + Fraction(self.level, 10)

    @property
    def aggression(self) -> Fraction:
        return Fraction(3, 10) + Fraction(7 * self.level, 100)

    @property
    def special_prob(self) -> Fraction:
        return Fraction(self.level, 20)

    @property
    def block_prob(self) -> Fraction:
        return Fraction(self.level, 10)

    def action_distribution(
        self, config: EngineConfig, state: GameState, side: str
    ) -> dict[TransAction, Fraction]:
        # states repeat massively during training/evaluation on small arenas,
        # so completed distributions are memoized on the config object
        cache = config.__dict__.get("_cpu_dists")
        if cache is None:
            object.__setattr__(config, "_cpu_dists", cache := {})
        cache_key = (self.level, side, state)
        hit = cache.get(cache_key)
        if hit is not None:
            return dict(hit)
        acts = action_set(config)
        by_name = {a.name: a for a in acts}
        me, opp = (state.left, state.right) if side == "left" else (state.right, state.left)
        my_owner = 0 if side == "left" else 1
        dist: dict[TransAction, Fraction] = {}

        def add(action: TransAction, p: Fraction) -> None:
            if p > 0:
                dist[action] = dist.get(action, Fraction(0)) + p

        gap = abs(me.pos - opp.pos)
        in_range = [
            name
            for name in by_name
            if name in config.damage_table and config.damage_table[name].reach >= gap
        ]
        strongest = max(in_range, key=lambda n: (config.damage_table[n].damage, n), default=None)
        special_choice: TransAction | None = None
        if config.hard_coded_specials:
            for sp in config.specials:
                if sp.kind == "projectile":
                    if not any(p.owner == my_owner for p in state.projectiles):
                        special_choice = by_name[sp.name]
                        break
                elif sp.reach >= gap:
                    special_choice = by_name[sp.name]
                    break

        def aggressive(mass: Fraction) -> None:
            attack_mass = mass * self.aggression
            if strongest is not None or special_choice is not None:
                if special_choice is not None and strongest is not None:
                    add(special_choice, attack_mass * self.special_prob)
                    add(by_name[strongest], attack_mass * (1 - self.special_prob))
                elif special_choice is not None:
                    add(special_choice, attack_mass)
                else:
                    add(by_name[strongest], attack_mass)
            else:
                add(by_name["forward"], attack_mass)
            roam = mass * (1 - self.aggression)
            for m in MOTIONS:
                add(by_name[m], roam / len(MOTIONS))

        react = self.reaction_prob
        if opp.phase in ("startup", "active"):
            add(by_name["defense"], react * self.block_prob)
            aggressive(react * (1 - self.block_prob))
        elif opp.phase == "recovery" and strongest is not None:
            add(by_name[strongest], react)
        else:
            aggressive(react)
        aggressive(1 - react)

        assert sum(dist.values()) == 1
        if len(cache) < 500_000:
            cache[cache_key] = dict(dist)
        return dist


def cpu_policy(level: int) -> ScriptedCPU:
    """The scripted opponent for one difficulty level (1..8)."""
    return ScriptedCPU(level)


# ---------------------------------------------------------------------------
# mixtures

class MixturePolicy(Policy):
    """A population with weights; each episode plays one component drawn at start."""

    def __init__(
        self,
        components: Sequence[Policy],
        weights: Sequence[Fraction | float],
        ids: Sequence[PolicyId] | None = None,
    ):
        if not components:
            raise UsageError("MixturePolicy needs at least one component")
        weights = getattr(weights, "weights", weights)  # accept a MetaStrategy
        if len(components) != len(weights):
            raise UsageError("components and weights must have equal length")
        self.components = tuple(components)
        exact = [w if isinstance(w, Fraction) else Fraction(w) for w in weights]
        if any(w < 0 for w in exact):
            raise UsageError("mixture weights must be non-negative")
        total = sum(exact)
        if total == 0:
            raise UsageError("mixture weights must not all be zero")
        if abs(float(total) - 1.0) > 1e-12:
            raise UsageError(f"mixture weights sum to {float(total)}, not 1")
        self.weights = tuple(w / total for w in exact)
        self.ids = tuple(ids) if ids is not None else None

    def session(self, config: EngineConfig, side: str) -> PolicySession:
        return _MixtureSession(self, config, side)

    def action_distribution(
        self, config: EngineConfig, state: GameState, side: str
    ) -> dict[TransAction, Fraction]:
        # Marginal over components; note this forgets the per-episode identity
        # correlation, so it is for display, not for exact response computations.
        out: dict[TransAction, Fraction] = {}
        for w, comp in zip(self.weights, self.components):
            for a, p in comp.action_distribution(config, state, side).items():
                out[a] = out.get(a, Fraction(0)) + w * p
        return out


class _MixtureSession(PolicySession):
    def __init__(self, policy: MixturePolicy, config: EngineConfig, side: str):
        super().__init__(policy, config, side)
        self._inner: PolicySession | None = None

    def start(self, rng: np.random.Generator) -> None:
        idx = mixture_draw(self.policy, rng)
        self._inner = self.policy.components[idx].session(self.config, self.side)

    def act(self, state: GameState, rng: np.random.Generator) -> TransAction:
        if self._inner is None:
            self.start(rng)
        assert self._inner is not None
        return self._inner.act(state, rng)

    def notify(self, prev: GameState, own_action: TransAction, new: GameState) -> None:
        if self._inner is not None:
            self._inner.notify(prev, own_action, new)


def mixture_draw(m: MixturePolicy, rng: np.random.Generator) -> int:
    """Draw a component index; done once per episode by the mixture session."""
    r = rng.random()
    acc = 0.0
    for i, w in enumerate(m.weights):
        acc += float(w)
        if r < acc:
            return i
    return len(m.weights) - 1
