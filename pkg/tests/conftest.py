from __future__ import annotations

from fractions import Fraction

import pytest

from arenaladder.engine import (
    DEFAULT_DAMAGE_TABLE,
    AttackSpec,
    EngineConfig,
    FighterState,
    GameState,
    action_by_name,
)
from arenaladder.presets import small_config, tiny_config


def fighter(pos: int, hp: int, facing: str, phase: str = "neutral", frames: int = 0,
            pending: str | None = None, buffer: tuple[int, ...] = ()) -> FighterState:
    return FighterState(pos=pos, hp=hp, facing=facing, phase=phase, phase_frames=frames,
                        pending_attack=pending, buffer=buffer)


def duel_state(config: EngineConfig, left: FighterState, right: FighterState,
               timer: int | None = None, projectiles=()) -> GameState:
    return GameState(left=left, right=right,
                     timer=config.horizon if timer is None else timer,
                     projectiles=tuple(projectiles))


@pytest.fixture
def cfg():
    """Mid-size arena without specials: clean melee-only traces."""
    return EngineConfig(arena_width=9, max_hp=50, horizon=30,
                        special_moves_enabled=False, hard_coded_specials=False, specials=())


@pytest.fixture
def cfg_specials():
    """Default-size arena with both special mechanisms on."""
    return EngineConfig(arena_width=13, max_hp=50, horizon=60)


@pytest.fixture
def tiny():
    return tiny_config()


@pytest.fixture
def small():
    return small_config()


def A(config: EngineConfig, name: str):
    return action_by_name(config, name)


def flat_tiny(horizon: int = 3, **kw) -> EngineConfig:
    """Tiny arena with instant attacks (no startup, one recovery step), which
    keeps the reachable state space small enough for exhaustive oracles."""
    table = {
        name: AttackSpec(damage=spec.damage, reach=spec.reach, startup=0, recovery=1)
        for name, spec in DEFAULT_DAMAGE_TABLE.items()
    }
    base = dict(
        arena_width=5,
        max_hp=5,
        horizon=horizon,
        damage_table=table,
        special_moves_enabled=False,
        hard_coded_specials=False,
        specials=(),
    )
    base.update(kw)
    return EngineConfig(**base)
