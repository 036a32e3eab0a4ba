"""Live human-versus-agent play service.

The engine advances at a fixed tick rate (default 8 steps/second).  Each tick
samples the *latest* human input — no queueing: an input message is consumed by
at most one tick, a tick with no fresh input plays noop — queries the agent
policy on the same observation granularity, and broadcasts a state snapshot.
The server is authoritative: client messages never touch the match except
through the latest-input slot.

Wire protocol: one JSON object per WebSocket text frame (equivalently one
object per line), field names and order as written here.

Client to server::

    {"type": "hello"}
    {"type": "input", "seq": <int>, "buttons": [<12 booleans>]}
    {"type": "rematch"}
    {"type": "quit"}

`buttons` follows BUTTON_NAMES order (B A MODE START UP DOWN LEFT RIGHT C Y X
Z); `seq` must increase strictly — an input whose seq is not beyond the last
*used* one is stale and ignored.

Server to client::

    {"type": "config", "session": <id>, "arena_width": <int>, "max_hp": <int>,
     "horizon": <int>, "tick_rate": <int>, "agent": <name>,
     "agent_side": "left"|"right", "human_side": "left"|"right"}
    {"type": "snapshot", "tick": <int>, "grid": [<hp row>, <sky>, <ground>],
     "hp": [<left>, <right>], "timer": <int>, "phases": [<left>, <right>],
     "projectiles": [[<pos>, <direction>, <owner>], ...]}
    {"type": "result", "winner": "left"|"right"|"draw", "hp": [<l>, <r>],
     "score": [<left rounds>, <right rounds>]}
    {"type": "error", "reason": <text>}

A malformed client line yields an error message and the session survives.
`rematch` is valid only between matches and resets with a fresh seed.  Finished
human matches are appended to the service's match log under the policy id
``human``, and their action traces are saved as replay files.
"""

from __future__ import annotations

import asyncio
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .engine import (
    NOOP,
    EngineConfig,
    GameState,
    HumanAction,
    encode_action,
    observe,
    reset,
    step,
)
from .errors import ConfigError, ProtocolError, UsageError
from .policy import Policy, PolicyId, PolicySession
from .rngutil import derive_seed, make_rng
from .store import MatchRecord, append_match, load_policy, save_replay

TICK_RATE_BOUNDS = (1, 30)
_SIDES = ("left", "right")


@dataclass
class SessionState:
    """One live human-versus-agent session and its current match."""

    session_id: str
    agent_id: PolicyId
    agent_side: str
    human_side: str
    config: EngineConfig
    tick_rate: int
    state: GameState = None  # type: ignore[assignment]
    tick: int = 0
    match_index: int = 0
    match_seed: int = 0
    latest: HumanAction | None = None
    latest_seq: int = -1
    used_seq: int = -1
    score: dict[str, int] = field(default_factory=lambda: {"left": 0, "right": 0})
    live: bool = True
    closed: bool = False
    actions: list[tuple[str, str]] = field(default_factory=list)
    dense: dict[str, Fraction] = field(
        default_factory=lambda: {"left": Fraction(0), "right": Fraction(0)})
    agent_policy: Policy = None  # type: ignore[assignment]
    agent_session: PolicySession = None  # type: ignore[assignment]
    agent_rng: np.random.Generator = None  # type: ignore[assignment]


def _message(kind: str, **fields) -> str:
    return json.dumps({"type": kind, **fields})


class PlayService:
    """Transport-independent session logic; the web layer is a thin adapter.

    Every method takes and mutates one session, so independent sessions never
    interact; `tick` may be driven by a timer (live serving) or called
    directly (tests, scripted clients).
    """

    def __init__(
        self,
        config: EngineConfig,
        agent_id: PolicyId,
        agent: Policy,
        *,
        human_side: str = "left",
        tick_rate: int = 8,
        seed: int = 0,
        match_log: str | Path | None = None,
        replay_dir: str | Path | None = None,
    ):
        if human_side not in _SIDES:
            raise UsageError(f"human_side must be 'left' or 'right', got {human_side!r}")
        lo, hi = TICK_RATE_BOUNDS
        if not lo <= tick_rate <= hi:
            raise ConfigError(f"tick rate must lie in [{lo}, {hi}], got {tick_rate}")
        config.validate()
        self.config = config
        self.agent_id = agent_id
        self.agent = agent
        self.human_side = human_side
        self.tick_rate = tick_rate
        self.seed = seed
        self.match_log = Path(match_log) if match_log is not None else None
        self.replay_dir = Path(replay_dir) if replay_dir is not None else None
        self._session_counter = itertools.count(1)

    # -- session lifecycle --------------------------------------------------

    def open_session(
        self,
        checkpoint: str | Path | None = None,
        human_side: str | None = None,
    ) -> SessionState:
        """A fresh independent session; the first snapshot is ready to send.

        With `checkpoint` the session plays that stored policy instead of the
        service default; an unreadable or config-incompatible checkpoint
        raises StoreError (the refusal the caller reports).
        """
        agent_id, agent = self.agent_id, self.agent
        if checkpoint is not None:
            agent_id, agent = load_policy(checkpoint, self.config)
        side = human_side if human_side is not None else self.human_side
        if side not in _SIDES:
            raise UsageError(f"human_side must be 'left' or 'right', got {side!r}")
        index = next(self._session_counter)
        sess = SessionState(
            session_id=f"s{index}",
            agent_id=agent_id,
            agent_side="right" if side == "left" else "left",
            human_side=side,
            config=self.config,
            tick_rate=self.tick_rate,
            agent_policy=agent,
        )
        self._reset_match(sess)
        return sess

    def _reset_match(self, sess: SessionState) -> None:
        sess.match_index += 1
        sess.match_seed = derive_seed(self.seed, int(sess.session_id[1:]),
                                      sess.match_index)
        sess.state = reset(self.config)
        sess.tick = 0
        sess.latest = None
        sess.latest_seq = -1
        sess.used_seq = -1
        sess.live = True
        sess.actions = []
        sess.dense = {"left": Fraction(0), "right": Fraction(0)}
        sess.agent_session = sess.agent_policy.session(self.config, sess.agent_side)
        sess.agent_rng = make_rng(sess.match_seed, 0 if sess.agent_side == "left" else 1)

    # -- messages -----------------------------------------------------------

    def config_message(self, sess: SessionState) -> str:
        return _message(
            "config",
            session=sess.session_id,
            arena_width=self.config.arena_width,
            max_hp=self.config.max_hp,
            horizon=self.config.horizon,
            tick_rate=sess.tick_rate,
            agent=sess.agent_id.name,
            agent_side=sess.agent_side,
            human_side=sess.human_side,
        )

    def snapshot_message(self, sess: SessionState) -> str:
        state = sess.state
        grid = observe(self.config, state, "left", mode="grid").data
        return _message(
            "snapshot",
            tick=sess.tick,
            grid=list(grid),
            hp=[state.left.hp, state.right.hp],
            timer=state.timer,
            phases=[state.left.phase_code(), state.right.phase_code()],
            projectiles=[[p.pos, p.direction, p.owner] for p in state.projectiles],
        )

    def _result_message(self, sess: SessionState) -> str:
        state = sess.state
        return _message(
            "result",
            winner=state.winner or "draw",
            hp=[state.left.hp, state.right.hp],
            score=[sess.score["left"], sess.score["right"]],
        )

    # -- client input -------------------------------------------------------

    def handle_line(self, sess: SessionState, line: str) -> list[str]:
        """Responses to one client line; protocol faults never kill the session."""
        if sess.closed:
            return [_message("error", reason="session closed")]
        try:
            payload = json.loads(line)
            if not isinstance(payload, dict) or "type" not in payload:
                raise ProtocolError("every message is an object with a 'type'")
            kind = payload["type"]
            if kind == "hello":
                return [self.config_message(sess), self.snapshot_message(sess)]
            if kind == "input":
                return self._handle_input(sess, payload)
            if kind == "rematch":
                if sess.live:
                    raise ProtocolError("rematch is only valid between matches")
                self._reset_match(sess)
                return [self.snapshot_message(sess)]
            if kind == "quit":
                sess.closed = True
                return []
            raise ProtocolError(f"unknown message type {kind!r}")
        except (json.JSONDecodeError, ProtocolError, UsageError, TypeError,
                KeyError, ValueError) as err:
            return [_message("error", reason=str(err) or "malformed message")]

    def _handle_input(self, sess: SessionState, payload: dict) -> list[str]:
        seq = payload["seq"]
        buttons = payload["buttons"]
        if not isinstance(seq, int):
            raise ProtocolError("seq must be an integer")
        if (not isinstance(buttons, list) or len(buttons) != 12
                or not all(isinstance(b, bool) for b in buttons)):
            raise ProtocolError("buttons must hold exactly 12 booleans")
        if seq <= sess.used_seq or seq <= sess.latest_seq:
            return []  # stale: superseded or already consumed by a tick
        sess.latest = HumanAction(tuple(buttons))
        sess.latest_seq = seq
        return []

    # -- the clock ----------------------------------------------------------

    def tick(self, sess: SessionState) -> list[str]:
        """Advance one engine step; the snapshot (and result, when the match
        ends) to broadcast."""
        if sess.closed:
            return [_message("error", reason="session closed")]
        if not sess.live:
            return []  # waiting for a rematch; nothing advances
        state = sess.state
        if sess.latest_seq > sess.used_seq:
            human_act = encode_action(
                sess.latest, getattr(state, sess.human_side).facing)
            sess.used_seq = sess.latest_seq
        else:
            human_act = NOOP
        agent_act = sess.agent_session.act(state, sess.agent_rng)
        if sess.human_side == "left":
            a_left, a_right = human_act, agent_act
        else:
            a_left, a_right = agent_act, human_act
        result = step(self.config, state, a_left, a_right)
        sess.agent_session.notify(state, agent_act, result.state)
        sess.dense["left"] += result.dense[0]
        sess.dense["right"] += result.dense[1]
        sess.actions.append((a_left.name, a_right.name))
        sess.state = result.state
        sess.tick += 1
        out = [self.snapshot_message(sess)]
        if result.state.terminal:
            sess.live = False
            winner = result.state.winner or "draw"
            if winner in _SIDES:
                sess.score[winner] += 1
            out.append(self._result_message(sess))
            self._record_match(sess)
        return out

    # -- artifacts ----------------------------------------------------------

    def _record_match(self, sess: SessionState) -> None:
        match_id = f"{sess.session_id}-m{sess.match_index}"
        if self.replay_dir is not None:
            self.replay_dir.mkdir(parents=True, exist_ok=True)
            save_replay(self.replay_dir / f"{match_id}.rpl", self.config,
                        sess.match_seed, sess.actions)
        if self.match_log is None:
            return
        human = PolicyId("human", side=sess.human_side)
        agent = sess.agent_id
        left, right = (human, agent) if sess.human_side == "left" else (agent, human)
        state = sess.state
        append_match(self.match_log, MatchRecord(
            match_id=match_id,
            left=left,
            right=right,
            seed=sess.match_seed,
            outcome=state.winner or "draw",
            hp_left=state.left.hp,
            hp_right=state.right.hp,
            length=sess.tick,
            dense_left=sess.dense["left"],
            dense_right=sess.dense["right"],
        ))


# ---------------------------------------------------------------------------
# web adapter

def build_app(service: PlayService, *, manual_tick: bool = False, assets=None):
    """FastAPI app exposing the service at ``/play`` (WebSocket) plus optional
    static assets.  With `manual_tick` no timer runs and the test-only message
    ``{"type": "tick"}`` advances the match — scripted clients use this to hit
    exact ticks."""
    app = FastAPI(title="arenaladder play service")

    @app.websocket("/play")
    async def play(ws: WebSocket) -> None:
        await ws.accept()
        sess = service.open_session()
        done = asyncio.Event()

        async def run_clock() -> None:
            while not done.is_set():
                await asyncio.sleep(1.0 / sess.tick_rate)
                for line in service.tick(sess):
                    await ws.send_text(line)

        clock = None if manual_tick else asyncio.create_task(run_clock())
        try:
            while not sess.closed:
                line = await ws.receive_text()
                if manual_tick and _is_tick(line):
                    outputs = service.tick(sess)
                else:
                    outputs = service.handle_line(sess, line)
                for out in outputs:
                    await ws.send_text(out)
        except WebSocketDisconnect:
            pass
        finally:
            done.set()
            if clock is not None:
                clock.cancel()
            sess.closed = True

    if assets is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=assets, html=True), name="ui")
    return app


def _is_tick(line: str) -> bool:
    try:
        return json.loads(line).get("type") == "tick"
    except (json.JSONDecodeError, AttributeError):
        return False


def serve(
    config: EngineConfig,
    agent_id: PolicyId,
    agent: Policy,
    *,
    human_side: str = "left",
    tick_rate: int = 8,
    host: str = "127.0.0.1",
    port: int = 8000,
    match_log: str | Path | None = None,
    replay_dir: str | Path | None = None,
    assets: str | Path | None = None,
) -> None:
    """Run the play service until interrupted."""
    import uvicorn

    service = PlayService(
        config, agent_id, agent,
        human_side=human_side, tick_rate=tick_rate,
        match_log=match_log, replay_dir=replay_dir,
    )
    app = build_app(service, assets=assets)
    uvicorn.run(app, host=host, port=port, log_level="warning")
