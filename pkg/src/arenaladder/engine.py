"""Deterministic discrete arena-fighting simulator.

Two fighters share a one-dimensional arena of integer cells.  Every step both
sides submit one categorical action; the step function is a pure function of
(config, state, actions) with integer hit points and rational rewards, so whole
matches replay bit-exactly from their action logs.

Resolution order inside one step:

1. input acceptance — fighters in a committed phase ignore their input; free
   fighters accept it, and an accepted attack may be promoted to a special move
   by suffix-matching the input buffer,
2. motions — forward steps, flips, jump launches and postures, with collision
   clamping so the fighters never swap sides or share a cell,
3. melee attacks whose active step is this one test range on the post-move
   positions (crouching avoids punches, airborne avoids kicks, blocking
   converts damage to chip plus blockstun, a close-range medium punch throws a
   blocking opponent for full damage, and simultaneous active hits trade),
4. projectiles advance one cell and test contact; newly spawned projectiles
   test contact at their spawn cell,
5. damage and stuns apply simultaneously, hit points clamp at zero,
6. the timer decrements and the terminal outcome is decided.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import CapacityError, ConfigError, UsageError

# ---------------------------------------------------------------------------
# actions

MOTIONS = (
    "defense",
    "forward",
    "jump",
    "crouch",
    "back_flip",
    "front_flip",
    "offensive_crouch",
    "defensive_crouch",
)
ATTACKS = (
    "light_punch",
    "medium_punch",
    "hard_punch",
    "light_kick",
    "medium_kick",
    "hard_kick",
)

CROUCH_MOTIONS = frozenset({"crouch", "offensive_crouch", "defensive_crouch"})
BLOCK_MOTIONS = frozenset({"defense", "defensive_crouch"})

# Twelve-button pad layout used by the human-input encoder.
BUTTON_NAMES = ("B", "A", "MODE", "START", "UP", "DOWN", "LEFT", "RIGHT", "C", "Y", "X", "Z")

# Button -> attack, checked in this order when several are held.
_ATTACK_BUTTONS = (
    ("X", "light_punch"),
    ("Y", "medium_punch"),
    ("Z", "hard_punch"),
    ("A", "light_kick"),
    ("B", "medium_kick"),
    ("C", "hard_kick"),
)

HITSTUN_STEPS = 2
BLOCKSTUN_STEPS = 1


@dataclass(frozen=True, slots=True)
class TransAction:
    """One categorical engine action: a motion, an attack, a special, or noop."""

    index: int
    kind: str  # "noop" | "motion" | "attack" | "special"
    name: str

    def __str__(self) -> str:
        return self.name


NOOP = TransAction(0, "noop", "noop")
_BASE_ACTIONS = (NOOP,) + tuple(
    TransAction(1 + i, "motion", name) for i, name in enumerate(MOTIONS)
) + tuple(TransAction(9 + i, "attack", name) for i, name in enumerate(ATTACKS))
BASE_ACTION_COUNT = len(_BASE_ACTIONS)  # 15


# ---------------------------------------------------------------------------
# config

@dataclass(frozen=True, slots=True)
class AttackSpec:
    """Frame data for one melee attack."""

    damage: int
    reach: int
    startup: int
    recovery: int


@dataclass(frozen=True, slots=True)
class SpecialSpec:
    """A special move: its trigger sequence and its frame data.

    ``kind`` decides avoidance: "punch" is avoided by crouching, "kick" by
    being airborne, "projectile" spawns a travelling projectile instead of a
    direct hit.  ``invulnerable_startup`` makes the fighter unhittable during
    the move's startup steps.
    """

    name: str
    sequence: tuple[str, ...]
    kind: str
    damage: int
    reach: int
    startup: int
    recovery: int
    invulnerable_startup: bool = False


DEFAULT_DAMAGE_TABLE: Mapping[str, AttackSpec] = {
    "light_punch": AttackSpec(damage=4, reach=1, startup=0, recovery=1),
    "medium_punch": AttackSpec(damage=7, reach=1, startup=1, recovery=2),
    "hard_punch": AttackSpec(damage=11, reach=2, startup=2, recovery=3),
    "light_kick": AttackSpec(damage=4, reach=1, startup=0, recovery=1),
    "medium_kick": AttackSpec(damage=7, reach=1, startup=1, recovery=2),
    "hard_kick": AttackSpec(damage=11, reach=2, startup=2, recovery=3),
}

DEFAULT_SPECIALS: tuple[SpecialSpec, ...] = (
    SpecialSpec(
        name="projectile",
        sequence=("crouch", "forward", "light_punch"),
        kind="projectile",
        damage=6,
        reach=0,
        startup=1,
        recovery=2,
    ),
    SpecialSpec(
        name="rising_strike",
        sequence=("forward", "crouch", "light_punch"),
        kind="punch",
        damage=11,
        reach=1,
        startup=1,
        recovery=3,
        invulnerable_startup=True,
    ),
    SpecialSpec(
        name="spin_kick",
        sequence=("crouch", "back_flip", "light_kick"),
        kind="kick",
        damage=7,
        reach=3,
        startup=1,
        recovery=2,
    ),
)


@dataclass(frozen=True)
class EngineConfig:
    """Immutable match configuration.

    ``special_moves_enabled`` turns on buffer-matched specials (and with it the
    per-fighter input buffer); ``hard_coded_specials`` exposes each special as
    a directly selectable action appended to the action set.
    """

    arena_width: int = 13
    max_hp: int = 100
    horizon: int = 200
    damage_table: Mapping[str, AttackSpec] = field(default_factory=lambda: dict(DEFAULT_DAMAGE_TABLE))
    chip_fraction: Fraction = Fraction(1, 10)
    close_range: int = 1
    special_moves_enabled: bool = True
    hard_coded_specials: bool = True
    specials: tuple[SpecialSpec, ...] = DEFAULT_SPECIALS
    reward_alpha: Fraction = Fraction(1)
    reward_lambda: Fraction = Fraction(3)
    bonus_scale: Fraction = Fraction(1)
    seed: int = 0

    def validate(self) -> None:
        if self.arena_width < 5:
            raise ConfigError(f"arena_width must be >= 5, got {self.arena_width}")
        if self.max_hp < 1:
            raise ConfigError(f"max_hp must be >= 1, got {self.max_hp}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if not (0 <= self.chip_fraction <= 1):
            raise ConfigError(f"chip_fraction must lie in [0, 1], got {self.chip_fraction}")
        if not (0 <= self.close_range < self.arena_width):
            raise ConfigError(f"close_range must lie in [0, arena_width), got {self.close_range}")
        for name in ATTACKS:
            if name not in self.damage_table:
                raise ConfigError(f"damage_table is missing attack {name!r}")
        for name, spec in self.damage_table.items():
            if spec.damage < 0 or spec.reach < 0 or spec.startup < 0 or spec.recovery < 0:
                raise ConfigError(f"damage_table entry {name!r} has a negative field")
        seen: set[str] = set()
        seqs: set[tuple[str, ...]] = set()
        for sp in self.specials:
            if sp.name in seen or sp.name in self.damage_table:
                raise ConfigError(f"special name {sp.name!r} collides with another move")
            if sp.kind not in ("punch", "kick", "projectile"):
                raise ConfigError(f"special {sp.name!r} has unknown kind {sp.kind!r}")
            if sp.sequence in seqs:
                raise ConfigError(f"special {sp.name!r} duplicates another trigger sequence")
            if self.special_moves_enabled and not (1 <= len(sp.sequence) <= 4):
                raise ConfigError(f"special {sp.name!r} sequence must have 1..4 steps")
            seen.add(sp.name)
            seqs.add(sp.sequence)
        if self.reward_alpha < 0 or self.bonus_scale < 0:
            raise ConfigError("reward_alpha and bonus_scale must be >= 0")

    @property
    def start_positions(self) -> tuple[int, int]:
        off = max(1, self.arena_width // 4)
        return off, self.arena_width - 1 - off

    def special_by_name(self, name: str) -> SpecialSpec:
        for sp in self.specials:
            if sp.name == name:
                return sp
        raise UsageError(f"unknown special {name!r}")


def action_set(config: EngineConfig) -> tuple[TransAction, ...]:
    """The legal action set: noop, 8 motions, 6 attacks, plus any hard-coded specials."""
    cached = config.__dict__.get("_actions")
    if cached is not None:
        return cached
    acts = _BASE_ACTIONS
    if config.hard_coded_specials:
        acts = acts + tuple(
            TransAction(BASE_ACTION_COUNT + i, "special", sp.name)
            for i, sp in enumerate(config.specials)
        )
    object.__setattr__(config, "_actions", acts)
    return acts


def action_by_name(config: EngineConfig, name: str) -> TransAction:
    for act in action_set(config):
        if act.name == name:
            return act
    raise UsageError(f"unknown action {name!r}")


# ---------------------------------------------------------------------------
# state

@dataclass(frozen=True, slots=True)
class FighterState:
    pos: int
    hp: int
    facing: str  # "right" for the left fighter, "left" for the right fighter
    phase: str = "neutral"
    phase_frames: int = 0
    pending_attack: str | None = None
    buffer: tuple[int, ...] = ()

    def phase_code(self) -> str:
        parts = [self.phase]
        if self.phase_frames:
            parts.append(str(self.phase_frames))
        if self.pending_attack is not None:
            parts.append(self.pending_attack)
        return ":".join(parts)


@dataclass(frozen=True, slots=True)
class Projectile:
    pos: int
    direction: int  # +1 rightward, -1 leftward
    owner: int  # 0 = left fighter, 1 = right fighter
    damage: int


@dataclass(frozen=True, slots=True)
class GameState:
    left: FighterState
    right: FighterState
    timer: int
    projectiles: tuple[Projectile, ...] = ()
    terminal: bool = False
    winner: str | None = None  # "left" | "right" | "draw" once terminal
    rng_state: int = 0


@dataclass(frozen=True, slots=True)
class StepResult:
    state: GameState
    sparse: tuple[Fraction, Fraction]
    dense: tuple[Fraction, Fraction]
    events: tuple[str, ...] = ()


PHASES = (
    "neutral",
    "startup",
    "active",
    "recovery",
    "hitstun",
    "blockstun",
    "airborne",
    "crouching",
)

_FREE_PHASES = frozenset({"neutral", "crouching"})


def reset(config: EngineConfig) -> GameState:
    """A fresh match: full health, fighters at the start positions, timer at horizon."""
    config.validate()
    left_pos, right_pos = config.start_positions
    return GameState(
        left=FighterState(pos=left_pos, hp=config.max_hp, facing="right"),
        right=FighterState(pos=right_pos, hp=config.max_hp, facing="left"),
        timer=config.horizon,
        rng_state=config.seed,
    )


def state_key(state: GameState) -> str:
    """Canonical text form of a state, stable across processes."""
    parts = []
    for f in (state.left, state.right):
        parts.append(f"{f.pos},{f.hp},{f.phase},{f.phase_frames},{f.pending_attack or '-'},"
                     f"{'.'.join(map(str, f.buffer)) or '-'}")
    projs = ";".join(f"{p.pos},{p.direction},{p.owner},{p.damage}" for p in state.projectiles) or "-"
    tail = f"{state.timer}|{projs}|{int(state.terminal)}|{state.winner or '-'}"
    return "|".join(parts) + "|" + tail


def state_digest(state: GameState) -> str:
    return hashlib.sha256(state_key(state).encode()).hexdigest()


def mirror_state(config: EngineConfig, state: GameState) -> GameState:
    """Reflect the arena left-to-right and swap the two fighters."""
    w = config.arena_width

    def flip(f: FighterState) -> FighterState:
        return replace(f, pos=w - 1 - f.pos, facing="left" if f.facing == "right" else "right")

    winner = state.winner
    if winner == "left":
        winner = "right"
    elif winner == "right":
        winner = "left"
    return GameState(
        left=flip(state.right),
        right=flip(state.left),
        timer=state.timer,
        projectiles=tuple(sorted(
            (Projectile(w - 1 - p.pos, -p.direction, 1 - p.owner, p.damage)
             for p in state.projectiles),
            key=lambda p: p.owner,
        )),
        terminal=state.terminal,
        winner=winner,
        rng_state=state.rng_state,
    )


# ---------------------------------------------------------------------------
# special-move matching and human-input encoding

def match_special(config: EngineConfig, buffer: tuple[int, ...], nxt: TransAction) -> int | None:
    """Index of the longest special whose sequence is a suffix of buffer + [nxt], else None."""
    if not config.special_moves_enabled:
        raise UsageError("match_special requires special_moves_enabled")

    def buffered_name(i: int) -> str:
        if i < BASE_ACTION_COUNT:
            return _BASE_ACTIONS[i].name
        return config.specials[i - BASE_ACTION_COUNT].name

    names = [buffered_name(i) for i in buffer] + [nxt.name]
    best: int | None = None
    best_len = 0
    for idx, sp in enumerate(config.specials):
        seq = sp.sequence
        if len(seq) <= len(names) and tuple(names[-len(seq):]) == seq and len(seq) > best_len:
            best, best_len = idx, len(seq)
    return best


@dataclass(frozen=True)
class HumanAction:
    """State of the twelve pad buttons, ordered as BUTTON_NAMES."""

    buttons: tuple[bool, ...]

    def __post_init__(self) -> None:
        if len(self.buttons) != 12:
            raise UsageError(f"HumanAction needs 12 buttons, got {len(self.buttons)}")

    def pressed(self, name: str) -> bool:
        return self.buttons[BUTTON_NAMES.index(name)]

    @classmethod
    def from_names(cls, *names: str) -> "HumanAction":
        return cls(tuple(b in names for b in BUTTON_NAMES))


def encode_action(human: HumanAction, facing: str) -> TransAction:
    """Map a raw pad state to one categorical action.

    Attack buttons win over directions; opposite directions cancel; diagonals
    map to flips and angled crouches relative to which way the fighter faces.
    """
    for button, attack in _ATTACK_BUTTONS:
        if human.pressed(button):
            return action_by_name_base(attack)
    up = human.pressed("UP") and not human.pressed("DOWN")
    down = human.pressed("DOWN") and not human.pressed("UP")
    left = human.pressed("LEFT") and not human.pressed("RIGHT")
    right = human.pressed("RIGHT") and not human.pressed("LEFT")
    toward = right if facing == "right" else left
    away = left if facing == "right" else right
    if up and toward:
        name = "front_flip"
    elif up and away:
        name = "back_flip"
    elif up:
        name = "jump"
    elif down and toward:
        name = "offensive_crouch"
    elif down and away:
        name = "defensive_crouch"
    elif down:
        name = "crouch"
    elif toward:
        name = "forward"
    elif away:
        name = "defense"
    else:
        return NOOP
    return action_by_name_base(name)


def action_by_name_base(name: str) -> TransAction:
    for act in _BASE_ACTIONS:
        if act.name == name:
            return act
    raise UsageError(f"unknown base action {name!r}")


# ---------------------------------------------------------------------------
# the step function

class _Resolution:
    """Per-fighter scratch state while one step resolves."""

    __slots__ = (
        "fighter", "action", "move_delta", "blocking", "crouching", "airborne",
        "invulnerable", "active_profile", "spawn_projectile", "next_phase",
        "damage_taken", "stun",
    )

    def __init__(self, fighter: FighterState):
        self.fighter = fighter
        self.action: TransAction | None = None  # accepted input, if any
        self.move_delta = 0
        self.blocking = False
        self.crouching = False
        self.airborne = False
        self.invulnerable = False
        self.active_profile: tuple[str, str, int, int] | None = None  # (name, kind, damage, reach)
        self.spawn_projectile: int | None = None  # projectile damage
        self.next_phase: tuple[str, int, str | None] = ("neutral", 0, None)
        self.damage_taken = 0
        self.stun: str | None = None  # None | "blockstun" | "hitstun"


def _attack_profile(config: EngineConfig, name: str) -> tuple[str, str, int, int, int, int, bool]:
    """(name, kind, damage, reach, startup, recovery, invulnerable_startup) for any move name."""
    profiles = config.__dict__.get("_profiles")
    if profiles is None:
        profiles = {}
        for atk, spec in config.damage_table.items():
            kind = "punch" if atk.endswith("punch") else "kick"
            profiles[atk] = (atk, kind, spec.damage, spec.reach, spec.startup, spec.recovery, False)
        for sp in config.specials:
            profiles[sp.name] = (
                sp.name, sp.kind, sp.damage, sp.reach, sp.startup, sp.recovery,
                sp.invulnerable_startup,
            )
        object.__setattr__(config, "_profiles", profiles)
    try:
        return profiles[name]
    except KeyError:
        raise UsageError(f"unknown move {name!r}") from None


def _begin_move(config: EngineConfig, res: _Resolution, name: str) -> None:
    """Start attack/special `name` for this fighter; it may be active immediately."""
    _, kind, damage, reach, startup, recovery, invuln = _attack_profile(config, name)
    if startup == 0:
        if kind == "projectile":
            res.spawn_projectile = damage
        else:
            res.active_profile = (name, kind, damage, reach)
        res.next_phase = ("recovery", recovery, None) if recovery else ("neutral", 0, None)
    else:
        res.invulnerable = invuln
        res.next_phase = ("startup", startup - 1, name) if startup > 1 else ("active", 0, name)


def step(
    config: EngineConfig,
    state: GameState,
    a_left: TransAction,
    a_right: TransAction,
) -> StepResult:
    """Advance one step.  Pure function; raises UsageError on a terminal state."""
    if state.terminal:
        raise UsageError("step called on a terminal state")
    legal = action_set(config)
    for act in (a_left, a_right):
        if act.index >= len(legal) or legal[act.index] != act:
            raise UsageError(f"action {act} is not in the legal action set")

    res = [_Resolution(state.left), _Resolution(state.right)]
    directions = (1, -1)  # toward the opponent, by side
    events: list[str] = []
    side_names = ("left", "right")

    # 1. phase bookkeeping and input acceptance
    for i, (r, action) in enumerate(zip(res, (a_left, a_right))):
        f = r.fighter
        if f.phase in _FREE_PHASES:
            r.action = action
            name = action.name
            if action.kind == "attack" and config.special_moves_enabled:
                hit = match_special(config, f.buffer, action)
                if hit is not None:
                    name = config.specials[hit].name
                    events.append(f"{side_names[i]} special {name}")
            if action.kind in ("attack", "special") or name != action.name:
                _begin_move(config, r, name)
            elif action.kind == "motion":
                if name == "forward":
                    r.move_delta = directions[i]
                elif name == "front_flip":
                    r.move_delta = 2 * directions[i]
                elif name == "back_flip":
                    r.move_delta = -2 * directions[i]
                elif name == "jump":
                    r.airborne = True
                    r.next_phase = ("airborne", 1, None)
                if name in CROUCH_MOTIONS:
                    r.crouching = True
                    r.next_phase = ("crouching", 0, None)
                if name in BLOCK_MOTIONS:
                    r.blocking = True
        else:
            # committed: input ignored
            ph, fr, pend = f.phase, f.phase_frames, f.pending_attack
            if ph == "startup":
                prof = _attack_profile(config, pend or "")
                r.invulnerable = prof[6]
                r.next_phase = ("startup", fr - 1, pend) if fr > 1 else ("active", 0, pend)
            elif ph == "active":
                name, kind, damage, reach, _, recovery, _ = _attack_profile(config, pend or "")
                if kind == "projectile":
                    r.spawn_projectile = damage
                else:
                    r.active_profile = (name, kind, damage, reach)
                r.next_phase = ("recovery", recovery, None) if recovery else ("neutral", 0, None)
            elif ph in ("recovery", "hitstun", "blockstun", "airborne"):
                if ph == "blockstun":
                    r.blocking = True
                if ph == "airborne":
                    r.airborne = True
                r.next_phase = (ph, fr - 1, None) if fr > 1 else ("neutral", 0, None)
            else:  # pragma: no cover - phase enum is closed
                raise UsageError(f"unknown phase {ph!r}")

    # 2. motions with collision clamping: on any final conflict nobody moves
    w = config.arena_width
    want = [min(w - 1, max(0, r.fighter.pos + r.move_delta)) for r in res]
    if want[0] >= want[1]:
        want = [res[0].fighter.pos, res[1].fighter.pos]
    pos = want

    # 3. melee resolution on post-move positions
    for i, r in enumerate(res):
        if r.active_profile is None:
            continue
        name, kind, damage, reach = r.active_profile
        j = 1 - i
        target = res[j]
        dist = abs(pos[i] - pos[j])
        if dist > reach:
            events.append(f"{side_names[i]} whiff {name}")
            continue
        if target.invulnerable:
            events.append(f"{side_names[i]} miss {name} invulnerable")
            continue
        if target.crouching and kind == "punch":
            events.append(f"{side_names[j]} avoid {name} crouching")
            continue
        if target.airborne and kind == "kick":
            events.append(f"{side_names[j]} avoid {name} airborne")
            continue
        if name == "medium_punch" and dist <= config.close_range and target.blocking:
            target.damage_taken += damage
            target.stun = "hitstun"
            events.append(f"{side_names[i]} throw {name} {damage}")
            continue
        if target.blocking:
            chip = int(damage * config.chip_fraction)
            target.damage_taken += chip
            if target.stun != "hitstun":
                target.stun = "blockstun"
            events.append(f"{side_names[j]} block {name} chip {chip}")
        else:
            target.damage_taken += damage
            target.stun = "hitstun"
            events.append(f"{side_names[i]} hit {name} {damage}")

    # 4. projectiles: advance existing ones, then spawn new ones
    kept: list[Projectile] = []

    def projectile_contact(p: Projectile, lo: int, hi: int) -> bool:
        j = 1 - p.owner
        target = res[j]
        if not (lo <= pos[j] <= hi):
            return False
        if target.airborne or target.invulnerable:
            return False  # flies past
        if target.blocking:
            chip = int(p.damage * config.chip_fraction)
            target.damage_taken += chip
            if target.stun != "hitstun":
                target.stun = "blockstun"
            events.append(f"{side_names[j]} block projectile chip {chip}")
        else:
            target.damage_taken += p.damage
            target.stun = "hitstun"
            events.append(f"{side_names[p.owner]} hit projectile {p.damage}")
        return True

    for p in state.projectiles:
        new_pos = p.pos + p.direction
        if projectile_contact(p, min(p.pos, new_pos), max(p.pos, new_pos)):
            continue
        if 0 <= new_pos < w:
            kept.append(Projectile(pos=new_pos, direction=p.direction, owner=p.owner, damage=p.damage))
    for i, r in enumerate(res):
        if r.spawn_projectile is None:
            continue
        if any(p.owner == i for p in kept):
            events.append(f"{side_names[i]} projectile whiff owned")
            continue
        spawn = pos[i] + directions[i]
        if not (0 <= spawn < w):
            continue
        p = Projectile(pos=spawn, direction=directions[i], owner=i, damage=r.spawn_projectile)
        if not projectile_contact(p, spawn, spawn):
            kept.append(p)

    # 5. apply damage and stuns
    new_fighters: list[FighterState] = []
    for i, r in enumerate(res):
        f = r.fighter
        hp = max(0, f.hp - r.damage_taken)
        if r.stun == "hitstun":
            nxt: tuple[str, int, str | None] = ("hitstun", HITSTUN_STEPS, None)
        elif r.stun == "blockstun":
            nxt = ("blockstun", BLOCKSTUN_STEPS, None)
        else:
            nxt = r.next_phase
        buffer = f.buffer
        if config.special_moves_enabled and r.action is not None:
            buffer = (buffer + (r.action.index,))[-4:]
        elif not config.special_moves_enabled:
            buffer = ()
        new_fighters.append(
            FighterState(
                pos=pos[i],
                hp=hp,
                facing=f.facing,
                phase=nxt[0],
                phase_frames=nxt[1],
                pending_attack=nxt[2],
                buffer=buffer,
            )
        )

    # 6. timer and terminal outcome
    timer = state.timer - 1
    hp_l, hp_r = new_fighters[0].hp, new_fighters[1].hp
    terminal = False
    winner: str | None = None
    if hp_l == 0 or hp_r == 0:
        terminal = True
        winner = "draw" if hp_l == hp_r else ("right" if hp_l == 0 else "left")
    elif timer == 0:
        terminal = True
        winner = "draw" if hp_l == hp_r else ("left" if hp_l > hp_r else "right")

    # canonical order: at most one projectile per owner survives the whiff rule,
    # so owner-sorting makes the tuple a pure function of its contents (state
    # equality and digests never depend on launch history)
    kept.sort(key=lambda p: p.owner)
    next_state = GameState(
        left=new_fighters[0],
        right=new_fighters[1],
        timer=timer,
        projectiles=tuple(kept),
        terminal=terminal,
        winner=winner,
        rng_state=state.rng_state,
    )

    sparse = _sparse_rewards(next_state)
    if not terminal and res[0].damage_taken == 0 and res[1].damage_taken == 0:
        dense = _ZERO_PAIR
    else:
        dense = (
            dense_reward(config, state, next_state, "left"),
            dense_reward(config, state, next_state, "right"),
        )
    return StepResult(state=next_state, sparse=sparse, dense=dense, events=tuple(events))


_ZERO = Fraction(0)
_ZERO_PAIR = (_ZERO, _ZERO)
_WIN_LEFT = (Fraction(1), Fraction(-1))
_WIN_RIGHT = (Fraction(-1), Fraction(1))


def _sparse_rewards(state: GameState) -> tuple[Fraction, Fraction]:
    if not state.terminal or state.winner == "draw":
        return _ZERO_PAIR
    return _WIN_LEFT if state.winner == "left" else _WIN_RIGHT


def dense_reward(
    config: EngineConfig, before: GameState, after: GameState, side: str
) -> Fraction:
    """Shaped per-step reward: damage dealt weighted up, damage taken weighted
    down, plus a health-proportional win/loss bonus at the terminal step."""
    if side not in ("left", "right"):
        raise UsageError(f"side must be 'left' or 'right', got {side!r}")
    mine_before, mine_after = (
        (before.left.hp, after.left.hp) if side == "left" else (before.right.hp, after.right.hp)
    )
    opp_before, opp_after = (
        (before.right.hp, after.right.hp) if side == "left" else (before.left.hp, after.left.hp)
    )
    bonus = Fraction(0)
    if after.terminal and after.winner in ("left", "right"):
        if after.winner == side:
            bonus = config.bonus_scale * Fraction(mine_after, config.max_hp)
        else:
            bonus = -config.bonus_scale * Fraction(opp_after, config.max_hp)
    dealt = opp_before - opp_after
    taken = mine_before - mine_after
    return config.reward_alpha * (config.reward_lambda * dealt - taken + bonus)


# ---------------------------------------------------------------------------
# observations

@dataclass(frozen=True, slots=True)
class Observation:
    """One side's symbolic or grid view of the state."""

    side: str
    mode: str
    data: tuple

    def key(self) -> str:
        if self.mode == "grid":
            return "/".join(self.data)
        return "|".join(str(x) for x in self.data)


def _hp_bucket(hp: int, max_hp: int) -> int:
    return min(7, hp * 8 // max_hp)


def _timer_bucket(timer: int, horizon: int) -> int:
    return min(7, timer * 8 // horizon)


def observe(config: EngineConfig, state: GameState, side: str, mode: str = "symbolic") -> Observation:
    """One side's view.  Symbolic observations are side-relative: a mirrored
    state seen from the other side yields the identical observation."""
    if side not in ("left", "right"):
        raise UsageError(f"side must be 'left' or 'right', got {side!r}")
    if mode == "grid":
        return Observation(side=side, mode="grid", data=_grid(config, state))
    if mode != "symbolic":
        raise UsageError(f"unknown observation mode {mode!r}")
    me, opp = (state.left, state.right) if side == "left" else (state.right, state.left)
    w = config.arena_width
    if side == "left":
        own_pos, opp_pos = me.pos, opp.pos
        rel = lambda p: p - me.pos  # noqa: E731
    else:
        own_pos, opp_pos = w - 1 - me.pos, w - 1 - opp.pos
        rel = lambda p: me.pos - p  # noqa: E731
    nearest = "-"
    best: tuple[int, int, int] | None = None
    my_owner = 0 if side == "left" else 1
    for p in state.projectiles:
        off = rel(p.pos)
        rank = (abs(off), 0 if p.owner != my_owner else 1, off)
        if best is None or rank < best:
            best = rank
            nearest = f"{off:+d}"
    data = (
        own_pos,
        opp_pos,
        _hp_bucket(me.hp, config.max_hp),
        _hp_bucket(opp.hp, config.max_hp),
        me.phase_code(),
        opp.phase_code(),
        _timer_bucket(state.timer, config.horizon),
        nearest,
    )
    return Observation(side=side, mode="symbolic", data=data)


def _grid(config: EngineConfig, state: GameState) -> tuple[str, str, str]:
    """Three text rows: HP bar, sky (airborne fighters), ground (fighters and
    projectiles).  Crouching fighters render lowercase."""
    w = config.arena_width
    half = w // 2
    hp_row = ["."] * w
    left_cells = (state.left.hp * half + config.max_hp - 1) // config.max_hp if state.left.hp else 0
    right_cells = (state.right.hp * half + config.max_hp - 1) // config.max_hp if state.right.hp else 0
    for i in range(min(half, left_cells)):
        hp_row[i] = "#"
    for i in range(min(half, right_cells)):
        hp_row[w - 1 - i] = "#"
    sky = ["."] * w
    ground = ["."] * w
    for p in state.projectiles:
        ground[p.pos] = "*"
    for glyph, f in (("L", state.left), ("R", state.right)):
        if f.phase == "airborne":
            sky[f.pos] = glyph
        elif f.phase == "crouching":
            ground[f.pos] = glyph.lower()
        else:
            ground[f.pos] = glyph
    return ("".join(hp_row), "".join(sky), "".join(ground))


def enumerate_observations(
    config: EngineConfig,
    mode: str = "symbolic",
    max_states: int = 2_000_000,
) -> list[Observation]:
    """Every symbolic observation reachable at a non-terminal state, from either
    viewpoint, duplicate-free and sorted by key.

    Breadth-first over the exact dynamics from reset under all joint actions.
    Raises CapacityError if more than ``max_states`` distinct states appear.
    """
    if mode != "symbolic":
        raise UsageError("enumerate_observations supports symbolic mode only")
    start = reset(config)
    acts = action_set(config)
    seen_states = {start}
    frontier = [start]
    out: dict[str, Observation] = {}
    while frontier:
        nxt: list[GameState] = []
        for s in frontier:
            if s.terminal:
                continue
            for side in ("left", "right"):
                ob = observe(config, s, side)
                out.setdefault(ob.key(), ob)
            for al in acts:
                for ar in acts:
                    s2 = step(config, s, al, ar).state
                    if s2 not in seen_states:
                        seen_states.add(s2)
                        if len(seen_states) > max_states:
                            raise CapacityError(
                                f"reachable state set exceeded {max_states}",
                                measured=len(seen_states),
                            )
                        nxt.append(s2)
        frontier = nxt
    return [out[k] for k in sorted(out)]
