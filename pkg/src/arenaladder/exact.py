"""Exact solving against fixed opponents.

Two entry points:

* `exact_best_response` — backward induction over the joint dynamics against
  a frozen opponent, all probabilities as rationals.  Against a mixture the
  per-episode component is hidden, so the induction runs over (state, belief)
  pairs where the belief is the exact posterior over components given the
  transitions seen so far; the returned policy tracks the same belief online.
* `exact_value` — the exact win/draw/loss distribution of one policy against
  another by a forward probability pass, an independent code path that the
  best-response results can be checked against.

Both require observations to be faithful on the visited configs (one key per
reachable state, see `observation_collisions`); the solvers raise
`AliasingError` if two states sharing a key would need different actions.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

from .engine import (
    EngineConfig,
    GameState,
    TransAction,
    action_set,
    observe,
    reset,
    step,
)
from .errors import AliasingError, CapacityError, UsageError
from .policy import MixturePolicy, Policy, PolicySession, TabularPolicy

F0 = Fraction(0)
F1 = Fraction(1)

MAX_ENTRIES = 2_000_000

# a belief is a normalized, canonically ordered tuple of
# ((component_index, component_internal_state), weight) pairs
Belief = tuple[tuple[tuple[int, Hashable], Fraction], ...]


def _other(side: str) -> str:
    return "right" if side == "left" else "left"


def _canonical(masses: Mapping[tuple[int, Hashable], Fraction]) -> Belief:
    total = sum(masses.values())
    items = sorted(
        ((k, w) for k, w in masses.items() if w > 0),
        key=lambda kw: (kw[0][0], repr(kw[0][1])),
    )
    return tuple((k, w / total) for k, w in items)


def _belief_token(belief: Belief) -> str:
    return hashlib.sha1(repr(belief).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# opponent models: per-state distributions plus deterministic internal state

class _Model:
    def start(self) -> Hashable:
        return None

    def dist(self, state: GameState, internal: Hashable):
        raise NotImplementedError

    def advance(
        self, prev: GameState, own_action: TransAction, new: GameState, internal: Hashable
    ) -> Hashable:
        return internal


class _StatelessModel(_Model):
    """Any policy whose action distribution depends only on the state."""

    def __init__(self, config: EngineConfig, policy: Policy, side: str):
        self.config = config
        self.policy = policy
        self.side = side
        self._cache: dict[GameState, tuple] = {}

    def dist(self, state, internal):
        got = self._cache.get(state)
        if got is None:
            d = self.policy.action_distribution(self.config, state, self.side)
            got = tuple(sorted(d.items(), key=lambda kv: kv[0].index))
            self._cache[state] = got
        return got


class _BeliefModel(_Model):
    """A previously computed mixture response used as an opponent: its action
    is a table lookup on (observation, its own belief), and its internal state
    is that belief, advanced by its own filtering rule."""

    def __init__(self, config: EngineConfig, policy: "BeliefResponsePolicy", side: str):
        self.config = config
        self.policy = policy
        self.side = side
        self._uniform = tuple(
            (a, Fraction(1, len(policy.actions))) for a in policy.actions
        )

    def start(self):
        return self.policy.initial_belief

    def dist(self, state, internal):
        key = observe(self.config, state, self.side).key()
        action = self.policy.lookup(key, internal)
        if action is None:
            return self._uniform
        return ((action, F1),)

    def advance(self, prev, own_action, new, internal):
        return self.policy.filter(prev, own_action, new, internal)


def _flatten(config: EngineConfig, policy: Policy, side: str, weight: Fraction = F1):
    """Expand nested mixtures into a flat list of (weight, model)."""
    if isinstance(policy, MixturePolicy):
        out = []
        for w, comp in zip(policy.weights, policy.components):
            out.extend(_flatten(config, comp, side, weight * w))
        return out
    if isinstance(policy, BeliefResponsePolicy):
        return [(weight, _BeliefModel(config, policy, side))]
    return [(weight, _StatelessModel(config, policy, side))]


# ---------------------------------------------------------------------------
# results

@dataclass(frozen=True)
class BRResult:
    """A best response: the policy plus its exact value against the target."""

    policy: TabularPolicy
    value: Fraction
    win_prob: Fraction
    draw_prob: Fraction = F0
    states: int = 0

    def __post_init__(self) -> None:
        if not -1 <= self.value <= 1:
            raise UsageError(f"value {self.value} outside [-1, 1]")
        if not 0 <= self.win_prob <= 1:
            raise UsageError(f"win_prob {self.win_prob} outside [0, 1]")
        if not 0 <= self.draw_prob <= 1:
            raise UsageError(f"draw_prob {self.draw_prob} outside [0, 1]")

    @property
    def winrate(self) -> Fraction:
        """Win rate with draws worth half, i.e. (value + 1) / 2."""
        return self.win_prob + self.draw_prob / 2


@dataclass(frozen=True)
class ExactEval:
    """Exact outcome distribution of left vs right from the initial state."""

    win_left: Fraction
    draw: Fraction
    win_right: Fraction

    @property
    def value_left(self) -> Fraction:
        return self.win_left - self.win_right

    @property
    def value_right(self) -> Fraction:
        return self.win_right - self.win_left

    @property
    def winrate_left(self) -> Fraction:
        return self.win_left + self.draw / 2

    @property
    def winrate_right(self) -> Fraction:
        return self.win_right + self.draw / 2


# ---------------------------------------------------------------------------
# the belief-tracking response policy

class BeliefResponsePolicy(TabularPolicy):
    """Best response to a mixture.  The action depends on the observation and
    on the exact posterior over opponent components; sessions maintain that
    posterior online from the transitions they witness.

    The inherited string table (observation key joined with a belief token)
    exists so checkpoints can be written; live play goes through `session`,
    which resolves decisions exactly.  Off-path lookups fall back to uniform.
    """

    def __init__(
        self,
        actions: Sequence[TransAction],
        config: EngineConfig,
        side: str,
        decision: Mapping[tuple[str, Belief], TransAction],
        initial_belief: Belief,
        models: Sequence[_Model],
    ):
        table = {}
        for (obs_key, belief), action in decision.items():
            vec = [F0] * len(actions)
            vec[action.index] = F1
            table[f"{obs_key}&{_belief_token(belief)}"] = vec
        super().__init__(actions, table)
        self._config = config
        self._side = side
        self._decision = dict(decision)
        self.initial_belief = initial_belief
        self._models = tuple(models)

    def lookup(self, obs_key: str, belief: Belief) -> TransAction | None:
        return self._decision.get((obs_key, belief))

    def filter(
        self, prev: GameState, own_action: TransAction, new: GameState, belief: Belief
    ) -> Belief:
        """Posterior over components after seeing prev --(own action)--> new."""
        masses: dict[tuple[int, Hashable], Fraction] = {}
        for (i, internal), w in belief:
            for b, p in self._models[i].dist(prev, internal):
                if self._side == "left":
                    ns = step(self._config, prev, own_action, b).state
                else:
                    ns = step(self._config, prev, b, own_action).state
                if ns == new:
                    nxt = self._models[i].advance(prev, b, new, internal)
                    key = (i, nxt)
                    masses[key] = masses.get(key, F0) + w * p
        if not masses:
            # the opponent is off the modeled support; start over from the prior
            return self.initial_belief
        return _canonical(masses)

    def session(self, config: EngineConfig, side: str) -> PolicySession:
        return _BeliefResponseSession(self, config, side)

    def action_distribution(self, config, state, side):
        raise UsageError(
            "a mixture response is belief-dependent; play it through a session "
            "or solve against it via its model form"
        )


class _BeliefResponseSession(PolicySession):
    def __init__(self, policy: BeliefResponsePolicy, config: EngineConfig, side: str):
        super().__init__(policy, config, side)
        self.belief: Belief = policy.initial_belief

    def act(self, state: GameState, rng) -> TransAction:
        obs = observe(self.config, state, self.side)
        action = self.policy.lookup(obs.key(), self.belief)
        if action is None:
            return TabularPolicy.act(self.policy, obs, rng)
        return action

    def notify(self, prev: GameState, own_action: TransAction, new: GameState) -> None:
        self.belief = self.policy.filter(prev, own_action, new, self.belief)


# ---------------------------------------------------------------------------
# backward induction

def project_to_observations(
    config: EngineConfig, side: str, chosen: Mapping[GameState, TransAction]
) -> dict[str, TransAction]:
    """Collapse a per-state action choice to per-observation; two states that
    share a key must agree, otherwise the choice is not observation-measurable."""
    out: dict[str, TransAction] = {}
    for state, action in chosen.items():
        key = observe(config, state, side).key()
        prev = out.get(key)
        if prev is not None and prev.index != action.index:
            raise AliasingError(
                f"observation {key!r} needs both {prev.name} and {action.name}; "
                "the config's observation space cannot express this response"
            )
        out[key] = action
    return out


def exact_best_response(
    config: EngineConfig,
    opponent: Policy,
    responder_side: str,
    *,
    max_entries: int = MAX_ENTRIES,
) -> BRResult:
    """The exact optimal response to `opponent` from the initial state.

    Runs backward induction on the joint dynamics (against the exact posterior
    over mixture components where applicable); the returned policy attains
    `value` (expected sparse reward, in [-1, 1]) and wins with `win_prob`.
    """
    if responder_side not in ("left", "right"):
        raise UsageError(f"responder_side must be left or right, got {responder_side!r}")
    config.validate()
    opp_side = _other(responder_side)
    flat = _flatten(config, opponent, opp_side)
    models = [m for _, m in flat]
    acts = action_set(config)
    start = reset(config)
    root = _canonical({(i, m.start()): w for i, (w, m) in enumerate(flat)})

    memo: dict[tuple[GameState, Belief], tuple[Fraction, Fraction, int]] = {}
    trans: dict[tuple[GameState, int, int], GameState] = {}

    def next_state(state: GameState, a: TransAction, b: TransAction) -> GameState:
        key = (state, a.index, b.index)
        got = trans.get(key)
        if got is None:
            if responder_side == "left":
                got = step(config, state, a, b).state
            else:
                got = step(config, state, b, a).state
            trans[key] = got
        return got

    def terminal_wd(state: GameState) -> tuple[Fraction, Fraction]:
        if state.winner == responder_side:
            return F1, F0
        if state.winner == "draw" or state.winner is None:
            return F0, F1
        return F0, F0

    def solve(state: GameState, belief: Belief) -> tuple[Fraction, Fraction]:
        if state.terminal:
            return terminal_wd(state)
        key = (state, belief)
        got = memo.get(key)
        if got is not None:
            return got[0], got[1]
        if len(memo) >= max_entries:
            raise CapacityError(
                f"best-response table would exceed {max_entries} entries",
                measured=len(memo) + 1,
            )
        per_b: dict[TransAction, list[tuple[int, Hashable, Fraction]]] = {}
        for (i, internal), w in belief:
            for b, p in models[i].dist(state, internal):
                per_b.setdefault(b, []).append((i, internal, w * p))
        best: tuple[Fraction, int, Fraction, Fraction] | None = None
        for a in acts:
            branches: dict[GameState, dict[tuple[int, Hashable], Fraction]] = {}
            for b, contribs in per_b.items():
                ns = next_state(state, a, b)
                masses = branches.setdefault(ns, {})
                for i, internal, m in contribs:
                    nxt = (i, models[i].advance(state, b, ns, internal))
                    masses[nxt] = masses.get(nxt, F0) + m
            win = F0
            draw = F0
            for ns, masses in branches.items():
                p = sum(masses.values())
                w_, d_ = solve(ns, _canonical(masses))
                win += p * w_
                draw += p * d_
            score = 2 * win + draw
            if best is None or score > best[0]:
                best = (score, a.index, win, draw)
        assert best is not None
        memo[key] = (best[2], best[3], best[1])
        return best[2], best[3]

    win, draw = solve(start, root)

    single_stateless = len(models) == 1 and isinstance(models[0], _StatelessModel)
    if single_stateless:
        chosen = {state: acts[entry[2]] for (state, _), entry in memo.items()}
        by_obs = project_to_observations(config, responder_side, chosen)
        table = {}
        for obs_key, action in by_obs.items():
            vec = [F0] * len(acts)
            vec[action.index] = F1
            table[obs_key] = vec
        policy: TabularPolicy = TabularPolicy(acts, table)
    else:
        decision: dict[tuple[str, Belief], TransAction] = {}
        for (state, belief), entry in memo.items():
            obs_key = observe(config, state, responder_side).key()
            action = acts[entry[2]]
            prev = decision.get((obs_key, belief))
            if prev is not None and prev.index != action.index:
                raise AliasingError(
                    f"observation {obs_key!r} with one belief needs two actions; "
                    "the config's observation space cannot express this response"
                )
            decision[(obs_key, belief)] = action
        policy = BeliefResponsePolicy(
            acts, config, responder_side, decision, root, models
        )
    return BRResult(
        policy=policy,
        value=2 * win + draw - 1,
        win_prob=win,
        draw_prob=draw,
        states=len(memo),
    )


# ---------------------------------------------------------------------------
# forward evaluation

def _forward(
    config: EngineConfig, model_left: _Model, model_right: _Model, max_entries: int
) -> tuple[Fraction, Fraction, Fraction]:
    front: dict[tuple[GameState, Hashable, Hashable], Fraction] = {
        (reset(config), model_left.start(), model_right.start()): F1
    }
    win = draw = loss = F0
    for _ in range(config.horizon + 2):
        if not front:
            break
        nxt: dict[tuple[GameState, Hashable, Hashable], Fraction] = {}
        for (state, il, ir), p in front.items():
            if state.terminal:
                if state.winner == "left":
                    win += p
                elif state.winner == "right":
                    loss += p
                else:
                    draw += p
                continue
            for a, pa in model_left.dist(state, il):
                for b, pb in model_right.dist(state, ir):
                    ns = step(config, state, a, b).state
                    key = (
                        ns,
                        model_left.advance(state, a, ns, il),
                        model_right.advance(state, b, ns, ir),
                    )
                    nxt[key] = nxt.get(key, F0) + p * pa * pb
            if len(nxt) > max_entries:
                raise CapacityError(
                    f"evaluation frontier would exceed {max_entries} entries",
                    measured=len(nxt),
                )
        front = nxt
    assert not front, "episode outlived the horizon"
    assert win + draw + loss == 1
    return win, draw, loss


def exact_value(
    config: EngineConfig,
    policy_left: Policy,
    policy_right: Policy,
    *,
    max_entries: int = MAX_ENTRIES,
) -> ExactEval:
    """Exact win/draw/loss probabilities of `policy_left` vs `policy_right`.

    Mixtures decompose into their components first (the identity is drawn once
    per episode), then each pairing is evaluated by one forward pass.
    """
    config.validate()
    left = _flatten(config, policy_left, "left")
    right = _flatten(config, policy_right, "right")
    win = draw = loss = F0
    for wl, ml in left:
        for wr, mr in right:
            w, d, l = _forward(config, ml, mr, max_entries)
            win += wl * wr * w
            draw += wl * wr * d
            loss += wl * wr * l
    return ExactEval(win_left=win, draw=draw, win_right=loss)


# ---------------------------------------------------------------------------
# observation diagnostics

def observation_collisions(
    config: EngineConfig, *, max_states: int = MAX_ENTRIES
) -> dict[str, list[GameState]]:
    """States sharing an observation key, per side (keys prefixed `side:`).

    Empty means observations are faithful on every reachable state, which is
    what the exact solvers need to emit observation-keyed policies.
    """
    config.validate()
    acts = action_set(config)
    start = reset(config)
    seen = {start}
    frontier = [start]
    by_key: dict[str, list[GameState]] = {}
    while frontier:
        state = frontier.pop()
        if state.terminal:
            continue
        for side in ("left", "right"):
            by_key.setdefault(f"{side}:{observe(config, state, side).key()}", []).append(state)
        for a in acts:
            for b in acts:
                ns = step(config, state, a, b).state
                if ns not in seen:
                    if len(seen) >= max_states:
                        raise CapacityError(
                            f"state enumeration would exceed {max_states}",
                            measured=len(seen) + 1,
                        )
                    seen.add(ns)
                    frontier.append(ns)
    return {key: states for key, states in by_key.items() if len(states) > 1}
