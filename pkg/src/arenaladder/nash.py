"""Exact zero-sum matrix-game solving and meta-strategy distributions.

The maximin problem (maximize v subject to Mᵀx ≥ v·1 over the simplex) is
solved with a dense tableau simplex over `Fraction` entries: shift the matrix
strictly positive, solve the column player's normalized program
max 1ᵀu s.t. A·u ≤ 1, u ≥ 0 from the all-slack starting basis with Bland's
pivoting rule, and read the row strategy off the slack reduced costs.  All
arithmetic stays rational, so the reported strategies certify themselves:
the row guarantee and the column cap meet the value exactly, not within a
solver tolerance.  Sized for the small matrices a population loop produces
(tens of strategies per side), not for general LP work.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import UsageError
from .payoff import PayoffMatrix

F0 = Fraction(0)
F1 = Fraction(1)


@dataclass(frozen=True)
class MetaStrategy:
    """A probability distribution over a policy population."""

    weights: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        weights = tuple(
            w if isinstance(w, Fraction) else Fraction(w) for w in self.weights
        )
        if not weights:
            raise UsageError("meta-strategy over an empty population")
        if any(w < 0 for w in weights):
            raise UsageError("meta-strategy weights must be non-negative")
        if abs(float(sum(weights)) - 1.0) > 1e-12:
            raise UsageError(
                f"meta-strategy weights sum to {float(sum(weights))}, not 1"
            )
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, w in enumerate(self.weights) if w > 0)


@dataclass(frozen=True)
class NashSolution:
    """Equilibrium of a zero-sum matrix game, from the row player's view."""

    row_strategy: MetaStrategy
    col_strategy: MetaStrategy
    value: Fraction


def solve_uniform(pop: Sequence[object]) -> MetaStrategy:
    """The fictitious-self-play meta-strategy: uniform over the population."""
    n = len(pop)
    if n == 0:
        raise UsageError("cannot build a meta-strategy over an empty population")
    return MetaStrategy((Fraction(1, n),) * n)


def _check_matrix(matrix: Sequence[Sequence[Fraction | float | int]]) -> list[list[Fraction]]:
    rows = [list(row) for row in matrix]
    if not rows or not rows[0]:
        raise UsageError("matrix game needs at least one row and one column")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise UsageError("matrix game rows must all have the same length")
    return [[v if isinstance(v, Fraction) else Fraction(v) for v in row] for row in rows]


def _pivot(
    rows: list[list[Fraction]], obj: list[Fraction], basis: list[int], pr: int, pc: int
) -> None:
    pivot = rows[pr][pc]
    rows[pr] = [v / pivot for v in rows[pr]]
    for i in range(len(rows)):
        if i != pr and rows[i][pc] != 0:
            coef = rows[i][pc]
            rows[i] = [v - coef * p for v, p in zip(rows[i], rows[pr])]
    if obj[pc] != 0:
        coef = obj[pc]
        for j, p in enumerate(rows[pr]):
            obj[j] -= coef * p
    basis[pr] = pc


def _simplex_max(
    A: list[list[Fraction]], b: list[Fraction], c: list[Fraction]
) -> tuple[list[Fraction], list[Fraction], Fraction]:
    """Maximize c·x subject to A·x ≤ b, x ≥ 0, with b ≥ 0.

    Returns (x, y, value) where y holds one dual multiplier per constraint,
    read from the slack reduced costs of the optimal tableau.  Bland's rule
    rules out cycling; the caller must pass a bounded program.
    """
    n, m = len(A), len(A[0])
    width = m + n + 1
    rows: list[list[Fraction]] = []
    for i in range(n):
        row = [F0] * width
        row[:m] = A[i]
        row[m + i] = F1
        row[-1] = b[i]
        rows.append(row)
    obj = [-cj for cj in c] + [F0] * (n + 1)
    basis = list(range(m, m + n))
    while True:
        enter = next((j for j in range(m + n) if obj[j] < 0), None)
        if enter is None:
            break
        best: tuple[tuple[Fraction, int], int] | None = None
        for i in range(n):
            coef = rows[i][enter]
            if coef > 0:
                key = (rows[i][-1] / coef, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            raise UsageError("unbounded linear program")
        _pivot(rows, obj, basis, best[1], enter)
    x = [F0] * m
    for i, var in enumerate(basis):
        if var < m:
            x[var] = rows[i][-1]
    y = obj[m : m + n]
    return x, y, obj[-1]


def solve_matrix_game(matrix: Sequence[Sequence[Fraction | float | int]]) -> NashSolution:
    """Exact equilibrium of the zero-sum game with row-player payoffs ``matrix``."""
    M = _check_matrix(matrix)
    n, m = len(M), len(M[0])
    shift = F1 - min(min(row) for row in M)  # every shifted entry >= 1
    A = [[M[i][j] + shift for j in range(m)] for i in range(n)]
    u, z, total = _simplex_max(A, [F1] * n, [F1] * m)
    if total <= 0:
        raise AssertionError("positive matrix game produced a non-positive program value")
    value = 1 / total  # of the shifted game
    col = MetaStrategy(tuple(ui * value for ui in u))
    row = MetaStrategy(tuple(zi * value for zi in z))
    return NashSolution(row, col, value - shift)


def solve_nash(p: PayoffMatrix) -> NashSolution:
    """Equilibrium of a win-rate payoff matrix, centered so 0 means balance.

    The matrix is treated as zero-sum with row payoff = win_rate − 1/2; the
    returned value lives on that centered scale (an even matchup solves to 0,
    a row the column player never beats solves to 1/2).
    """
    if not p.complete:
        raise UsageError(
            "payoff matrix has unknown entries; estimate them before solving"
        )
    half = Fraction(1, 2)
    centered = [
        [p.entry(r, c) - half for c in range(len(p.cols))] for r in range(len(p.rows))
    ]
    return solve_matrix_game(centered)
