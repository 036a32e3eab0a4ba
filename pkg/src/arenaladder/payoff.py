"""Empirical win-rate tables between two policy populations.

Each entry is the left (row) policy's average match score against the right
(column) policy, (wins + draws/2) / matches, over independently seeded
matches.  Matrices are immutable; when a population grows, `estimate_payoff`
takes the previous matrix as ``prior`` and reuses every already-estimated
pair, so a refresh only pays for new-vs-all pairings.

Entries with a match count of zero are *unknown*.  They are never silently
read as a 0 win rate: go through `PayoffMatrix.entry`, which refuses them.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .engine import EngineConfig
from .errors import UsageError
from .match import outcome_score, play_match
from .policy import Policy, PolicyId
from .rngutil import derive_seed

# populations are sequences of policies, optionally labelled with identities
Population = Sequence["Policy | tuple[PolicyId, Policy]"]


@dataclass(frozen=True)
class PayoffMatrix:
    """Win rates of left-side (row) policies against right-side (column) ones."""

    rows: tuple[PolicyId, ...]
    cols: tuple[PolicyId, ...]
    win_rate: tuple[tuple[Fraction, ...], ...]
    matches: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(self.rows)
        cols = tuple(self.cols)
        if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
            raise UsageError("payoff rows and cols must be unique policy ids")
        rate = tuple(tuple(Fraction(v) for v in row) for row in self.win_rate)
        count = tuple(tuple(int(m) for m in row) for row in self.matches)
        if len(rate) != len(rows) or len(count) != len(rows):
            raise UsageError("payoff matrix shape does not match the row ids")
        for rate_row, count_row in zip(rate, count):
            if len(rate_row) != len(cols) or len(count_row) != len(cols):
                raise UsageError("payoff matrix shape does not match the column ids")
            for v, m in zip(rate_row, count_row):
                if m < 0:
                    raise UsageError("match counts must be non-negative")
                if not 0 <= v <= 1:
                    raise UsageError(f"win rate {v} outside [0, 1]")
                if m == 0 and v != 0:
                    raise UsageError("unknown entries (matches == 0) must hold rate 0")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "win_rate", rate)
        object.__setattr__(self, "matches", count)

    @classmethod
    def empty(cls, rows: Sequence[PolicyId], cols: Sequence[PolicyId]) -> "PayoffMatrix":
        rows, cols = tuple(rows), tuple(cols)
        zeros = tuple(tuple(Fraction(0) for _ in cols) for _ in rows)
        counts = tuple(tuple(0 for _ in cols) for _ in rows)
        return cls(rows, cols, zeros, counts)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    def _lookup(self, which: str, ids: tuple[PolicyId, ...]) -> dict[PolicyId, int]:
        table = self.__dict__.get(which)
        if table is None:
            table = {ident: i for i, ident in enumerate(ids)}
            object.__setattr__(self, which, table)
        return table

    def row_index(self, ident: PolicyId) -> int:
        try:
            return self._lookup("_row_at", self.rows)[ident]
        except KeyError:
            raise UsageError(f"{ident} is not a row of this payoff matrix") from None

    def col_index(self, ident: PolicyId) -> int:
        try:
            return self._lookup("_col_at", self.cols)[ident]
        except KeyError:
            raise UsageError(f"{ident} is not a column of this payoff matrix") from None

    def _rc(self, row: "int | PolicyId", col: "int | PolicyId") -> tuple[int, int]:
        r = row if isinstance(row, int) else self.row_index(row)
        c = col if isinstance(col, int) else self.col_index(col)
        if not (0 <= r < len(self.rows) and 0 <= c < len(self.cols)):
            raise UsageError(f"payoff index ({r}, {c}) out of range for {self.shape}")
        return r, c

    def is_known(self, row: "int | PolicyId", col: "int | PolicyId") -> bool:
        r, c = self._rc(row, col)
        return self.matches[r][c] > 0

    def entry(self, row: "int | PolicyId", col: "int | PolicyId") -> Fraction:
        """Guarded read: unknown entries raise instead of pretending 0."""
        r, c = self._rc(row, col)
        if self.matches[r][c] == 0:
            raise UsageError(
                f"payoff entry ({self.rows[r].name}, {self.cols[c].name}) is "
                "unknown; estimate it before reading"
            )
        return self.win_rate[r][c]

    @property
    def complete(self) -> bool:
        return all(m > 0 for row in self.matches for m in row)

    def with_entry(
        self, row: "int | PolicyId", col: "int | PolicyId", rate: Fraction, matches: int
    ) -> "PayoffMatrix":
        r, c = self._rc(row, col)
        new_rate = [list(vals) for vals in self.win_rate]
        new_count = [list(vals) for vals in self.matches]
        new_rate[r][c] = Fraction(rate)
        new_count[r][c] = int(matches)
        return PayoffMatrix(
            self.rows, self.cols, tuple(map(tuple, new_rate)), tuple(map(tuple, new_count))
        )


def _named(pop: Population, side: str) -> list[tuple[PolicyId, Policy]]:
    entries: list[tuple[PolicyId, Policy]] = []
    for i, item in enumerate(pop):
        if isinstance(item, Policy):
            entries.append((PolicyId(f"{side}-{i}", side=side), item))
        else:
            ident, policy = item
            entries.append((ident, policy))
    if not entries:
        raise UsageError(f"the {side} population is empty")
    if len({ident for ident, _ in entries}) != len(entries):
        raise UsageError(f"duplicate policy ids in the {side} population")
    return entries


def _pair_rate(
    config: EngineConfig, left: Policy, right: Policy, seeds: Sequence[int]
) -> Fraction:
    score = Fraction(0)
    for seed in seeds:
        outcome = play_match(config, left, right, seed)
        score += outcome_score(outcome.winner, "left")
    return score / len(seeds)


def estimate_payoff(
    pop_left: Population,
    pop_right: Population,
    matches_per_pair: int,
    config: EngineConfig,
    rng: np.random.Generator,
    *,
    prior: PayoffMatrix | None = None,
    workers: int | None = None,
) -> PayoffMatrix:
    """Estimate the full win-rate matrix by simulated matches.

    Seeds derive from one root draw on ``rng`` plus the (row, col, match)
    coordinates, so the result is reproducible regardless of how the pair
    evaluations are scheduled across threads.  Pairs already known in
    ``prior`` (matched by PolicyId) are copied over instead of re-simulated.
    """
    if matches_per_pair < 1:
        raise UsageError("matches_per_pair must be at least 1")
    left = _named(pop_left, "left")
    right = _named(pop_right, "right")
    root = int(rng.integers(2**62))
    rows = tuple(ident for ident, _ in left)
    cols = tuple(ident for ident, _ in right)
    rate = [[Fraction(0)] * len(cols) for _ in rows]
    count = [[0] * len(cols) for _ in rows]
    todo: list[tuple[int, int]] = []
    for r, (rid, _) in enumerate(left):
        for c, (cid, _) in enumerate(right):
            if (
                prior is not None
                and rid in prior.rows
                and cid in prior.cols
                and prior.is_known(rid, cid)
            ):
                rate[r][c] = prior.entry(rid, cid)
                count[r][c] = prior.matches[prior.row_index(rid)][prior.col_index(cid)]
            else:
                todo.append((r, c))

    def run(pair: tuple[int, int]) -> tuple[int, int, Fraction]:
        r, c = pair
        seeds = [derive_seed(root, r, c, m) for m in range(matches_per_pair)]
        return r, c, _pair_rate(config, left[r][1], right[c][1], seeds)

    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, todo))
    else:
        results = [run(pair) for pair in todo]
    for r, c, value in results:
        rate[r][c] = value
        count[r][c] = matches_per_pair
    return PayoffMatrix(rows, cols, tuple(map(tuple, rate)), tuple(map(tuple, count)))
