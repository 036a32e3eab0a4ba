"""Deterministic hierarchical seeding.

Every stochastic component draws from its own numpy Generator derived from a
root seed plus an integer branch path, so results never depend on evaluation
order and parallel schedules reproduce serial ones.
"""

from __future__ import annotations

import numpy as np


def derive_seed(root: int, *branch: int) -> int:
    """Stable 63-bit seed for one branch of the seed tree."""
    ss = np.random.SeedSequence(entropy=root, spawn_key=tuple(branch))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def make_rng(root: int, *branch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=root, spawn_key=tuple(branch)))
