"""Named engine configurations used by the test battery, demos, and CLI.

- ``default_config``: the full game.
- ``small_config``: a short-horizon arena sized for tabular learners.
- ``tiny_config``: a few-step arena small enough for exact enumeration.
"""

from __future__ import annotations

from fractions import Fraction

from .engine import EngineConfig


def default_config(seed: int = 0) -> EngineConfig:
    return EngineConfig(seed=seed)


def small_config(seed: int = 0) -> EngineConfig:
    return EngineConfig(
        arena_width=7,
        max_hp=12,
        horizon=40,
        special_moves_enabled=False,
        hard_coded_specials=False,
        specials=(),
        seed=seed,
    )


def tiny_config(seed: int = 0, horizon: int = 3, max_hp: int = 5, arena_width: int = 5) -> EngineConfig:
    return EngineConfig(
        arena_width=arena_width,
        max_hp=max_hp,
        horizon=horizon,
        special_moves_enabled=False,
        hard_coded_specials=False,
        specials=(),
        chip_fraction=Fraction(1, 4),
        seed=seed,
    )


PRESETS = {
    "default": default_config,
    "small": small_config,
    "tiny": tiny_config,
}
