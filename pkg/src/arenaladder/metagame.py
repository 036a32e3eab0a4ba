"""Population self-play: the alternating best-response loop.

Two populations grow one policy per iteration: odd iterations extend the
left (row) population with a best response to the right mixture, even
iterations extend the right (column) population against the left mixture.
After each extension the payoff matrix is refreshed — new pairs only — and
the meta-strategies are recomputed: uniform over the population for
fictitious self-play (``fsp``), the exact Nash solution of the payoff game
for
PSRO (``psro``).

The best-response oracle, the payoff evaluator, and the mixture builder are
all injectable.  The defaults run the fighting engine; swapping all three
runs the same loop on a bare matrix game, which is how the solver-level
behavior is pinned down in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .engine import EngineConfig
from .errors import CapacityError, UsageError
from .exact import exact_best_response
from .learn import LearnConfig, rl_best_response
from .nash import MetaStrategy, solve_nash, solve_uniform
from .payoff import PayoffMatrix, estimate_payoff
from .policy import MixturePolicy, Policy, PolicyId

F1 = Fraction(1)

# br(config, opponent_mixture, responder_side, seed) -> Policy | BRResult
BRHandle = Callable[[EngineConfig, object, str, int], object]
# evaluator(left_population, right_population, prior) -> PayoffMatrix
Evaluator = Callable[[Sequence, Sequence, "PayoffMatrix | None"], PayoffMatrix]
# mixer(components, weights) -> one opponent the responder can train against
Mixer = Callable[[Sequence, Sequence[Fraction]], object]


def exact_br(max_entries: int | None = None) -> BRHandle:
    """A best-response handle backed by exact backward induction."""

    def handle(config, opponent, side, seed):
        if max_entries is None:
            return exact_best_response(config, opponent, side)
        return exact_best_response(config, opponent, side, max_entries=max_entries)

    return handle


def learned_br(lc: LearnConfig, eval_matches: int = 400) -> BRHandle:
    """A best-response handle backed by Q-learning, reseeded per iteration."""

    def handle(config, opponent, side, seed):
        return rl_best_response(
            config, opponent, side, replace(lc, seed=seed), eval_matches=eval_matches
        )

    return handle


@dataclass(frozen=True)
class PopulationLoopResult:
    """Everything the loop produced, one entry per iteration where it grows."""

    algo: str
    mu: tuple[tuple[PolicyId, Policy], ...]
    nu: tuple[tuple[PolicyId, Policy], ...]
    meta_mu_history: tuple[MetaStrategy, ...]
    meta_nu_history: tuple[MetaStrategy, ...]
    payoffs: tuple[PayoffMatrix, ...]

    @property
    def meta_mu(self) -> MetaStrategy:
        return self.meta_mu_history[-1]

    @property
    def meta_nu(self) -> MetaStrategy:
        return self.meta_nu_history[-1]

    @property
    def payoff(self) -> PayoffMatrix:
        return self.payoffs[-1]


def _entry(item, role: str, side: str, checkpoint: int):
    if isinstance(item, tuple) and len(item) == 2 and isinstance(item[0], PolicyId):
        return (item[0], item[1])
    return (PolicyId(f"{role}_{side}_{checkpoint}", side=side, checkpoint=checkpoint), item)


def population_loop(
    algo: str,
    T: int,
    br: BRHandle,
    config: EngineConfig,
    rng: np.random.Generator,
    *,
    initial: "tuple[object, object] | None" = None,
    evaluator: Evaluator | None = None,
    mixer: Mixer | None = None,
    matches_per_pair: int = 200,
    workers: int | None = None,
) -> PopulationLoopResult:
    """Run ``T`` iterations of alternating population best response.

    ``initial`` holds one starting policy per side (optionally pre-labelled
    with a PolicyId).  Capacity errors from the oracle are re-raised with the
    iteration that hit them.
    """
    if algo not in ("fsp", "psro"):
        raise UsageError(f"algo must be 'fsp' or 'psro', got {algo!r}")
    if T < 1:
        raise UsageError("population loop needs at least one iteration")
    if initial is None:
        raise UsageError("population loop needs initial policies, one per side")
    first_left, first_right = initial
    mu = [_entry(first_left, "mu", "left", 0)]
    nu = [_entry(first_right, "nu", "right", 0)]
    if evaluator is None:

        def evaluator(left, right, prior):
            return estimate_payoff(
                left, right, matches_per_pair, config, rng, prior=prior, workers=workers
            )

    if mixer is None:

        def mixer(components, weights):
            return MixturePolicy(components, weights)

    meta_mu = MetaStrategy((F1,))
    meta_nu = MetaStrategy((F1,))
    payoff: PayoffMatrix | None = None
    payoffs: list[PayoffMatrix] = []
    mu_history: list[MetaStrategy] = []
    nu_history: list[MetaStrategy] = []
    for t in range(1, T + 1):
        seed = int(rng.integers(2**62))
        try:
            if t % 2 == 1:
                target = mixer([p for _, p in nu], meta_nu.weights)
                found = br(config, target, "left", seed)
                ident = PolicyId(f"mu_left_{t}", side="left", checkpoint=t)
                mu.append((ident, getattr(found, "policy", found)))
            else:
                target = mixer([p for _, p in mu], meta_mu.weights)
                found = br(config, target, "right", seed)
                ident = PolicyId(f"nu_right_{t}", side="right", checkpoint=t)
                nu.append((ident, getattr(found, "policy", found)))
        except CapacityError as err:
            raise CapacityError(
                f"best response at iteration {t} over budget: {err}", measured=err.measured
            ) from err
        payoff = evaluator(mu, nu, payoff)
        if algo == "fsp":
            meta_mu, meta_nu = solve_uniform(mu), solve_uniform(nu)
        else:
            solution = solve_nash(payoff)
            meta_mu, meta_nu = solution.row_strategy, solution.col_strategy
        payoffs.append(payoff)
        mu_history.append(meta_mu)
        nu_history.append(meta_nu)
    return PopulationLoopResult(
        algo=algo,
        mu=tuple(mu),
        nu=tuple(nu),
        meta_mu_history=tuple(mu_history),
        meta_nu_history=tuple(nu_history),
        payoffs=tuple(payoffs),
    )
