"""Network gateway: WebSocket fan-out of session state, operator input
ingestion, spectator streams, and the latency-injection harness.

Connection URLs follow /session/{session_id}?role={operator|spectator}
&token=...; the same path with role=spectator is the shareable spectator
URL. One operator per session; spectators are read-only by construction
(their frames are never routed into the session).
"""
from __future__ import annotations

import asyncio
import hashlib
import hmac
import json
import os
import secrets
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from . import arm as arm_mod
from . import kernels
from .cloud import synth_point_cloud
from .dataset import Recorder
from .geometry import quat_rotate
from .latency import LatencyModel
from .progression import ProgressionStore, UsernameError
from .protocol import (
    PROTOCOL_VERSION,
    WireMessage,
    check_version,
    decode,
    encode,
    quantize_cloud,
)
from .session import OperatorInput, Session, SIM_DT, create_session
from .tasks import TASK_IDS, goal_overlay, load_task

STATE_EVERY_TICKS = 3  # 60 Hz sim -> 20 Hz state fan-out
CLOUD_EVERY_TICKS = 6  # -> 10 Hz cloud chunks
CLOUD_BUDGET = 1024
BETWEEN_ATTEMPTS_PAUSE_S = 2.0
EVENT_QUEUE_CAP = 4096


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    data_dir: Path = Path("./armplay-data")
    max_spectators: int = 32
    secret: str = ""
    latency: LatencyModel | None = None

    @classmethod
    def from_env(cls, **overrides) -> "ServerConfig":
        cfg = cls(
            host=os.environ.get("ARMPLAY_BIND", "127.0.0.1"),
            port=int(os.environ.get("ARMPLAY_PORT", "8787")),
            data_dir=Path(os.environ.get("ARMPLAY_DATA_DIR", "./armplay-data")),
            max_spectators=int(os.environ.get("ARMPLAY_MAX_SPECTATORS", "32")),
            secret=os.environ.get("ARMPLAY_SECRET", ""),
        )
        base = float(os.environ.get("ARMPLAY_LAT_BASE_MS", "0"))
        jitter = float(os.environ.get("ARMPLAY_LAT_JITTER_MS", "0"))
        drop = float(os.environ.get("ARMPLAY_LAT_DROP", "0"))
        if base or jitter or drop:
            cfg.latency = LatencyModel(base, jitter, drop, seed=1234)
        for k, v in overrides.items():
            setattr(cfg, k, v)
        if not cfg.secret:
            cfg.secret = secrets.token_hex(16)
        return cfg


def sign_token(secret: str, player_id: str) -> str:
    mac = hmac.new(secret.encode(), player_id.encode(), hashlib.sha256).hexdigest()
    return f"{player_id}.{mac}"


def verify_token(secret: str, token: str) -> str | None:
    if "." not in token:
        return None
    player_id, mac = token.rsplit(".", 1)
    good = hmac.new(secret.encode(), player_id.encode(), hashlib.sha256).hexdigest()
    return player_id if hmac.compare_digest(mac, good) else None


class Connection:
    """Outbound half of one WebSocket: reliable ordered events, latest-wins
    coalescing for state/cloud frames, optional simulated latency."""

    def __init__(self, ws: WebSocket, conn_id: str, role: str, latency: LatencyModel | None):
        self.ws = ws
        self.conn_id = conn_id
        self.role = role
        self.latency = None
        if latency is not None:
            self.latency = LatencyModel(
                latency.base_delay_ms, latency.jitter_ms, latency.drop_rate,
                seed=hash(conn_id) & 0x7FFFFFFF,
            )
        self._queue: asyncio.Queue = asyncio.Queue()
        self._pending_state: dict[str, tuple[float, bytes]] = {}
        self._wake = asyncio.Event()
        self.closed = False
        self.sent_events = 0

    def offer(self, kind: str, data: bytes, droppable: bool):
        if self.closed:
            return
        now = time.monotonic()
        deliver_at = now
        if self.latency is not None:
            at = self.latency.schedule(now, droppable=droppable)
            if at is None:
                return
            deliver_at = at
        if droppable:
            # latest-wins: an unsent frame of the same kind is replaced
            self._pending_state[kind] = (deliver_at, data)
        else:
            if self._queue.qsize() > EVENT_QUEUE_CAP:
                self.closed = True
                return
            self._queue.put_nowait((deliver_at, data))
        self._wake.set()

    def queue_size(self) -> int:
        return self._queue.qsize() + len(self._pending_state)

    async def sender(self):
        try:
            while not self.closed:
                item = None
                if not self._queue.empty():
                    item = self._queue.get_nowait()
                elif self._pending_state:
                    kind = next(iter(self._pending_state))
                    item = self._pending_state.pop(kind)
                else:
                    self._wake.clear()
                    await self._wake.wait()
                    continue
                deliver_at, data = item
                delay = deliver_at - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
                if isinstance(data, bytes) and data and data[0] == 0:
                    await self.ws.send_bytes(data)
                else:
                    await self.ws.send_text(data.decode())
        except Exception:
            self.closed = True


class SessionRuntime:
    """Owns one Session plus its connections; single writer via run()."""

    def __init__(self, session: Session, recorder: Recorder, cfg: ServerConfig,
                 store: ProgressionStore, attempts_requested: int | None = None):
        self.session = session
        self.recorder = recorder
        self.cfg = cfg
        self.store = store
        self.attempts_requested = attempts_requested or session.spec.max_attempts
        self.operator: Connection | None = None
        self.spectators: dict[str, Connection] = {}
        self.pending_inputs: list[OperatorInput] = []
        self.state_seq = 0
        self.msg_seq = 0
        self.cloud_seq = 0
        self.done = asyncio.Event()
        self.summary = None
        self.state_send_times: list[float] = []
        self.record_times: list[float] = []
        self.episode_paths: list[str] = []
        self._task: asyncio.Task | None = None

    # -- payload builders -------------------------------------------------

    def _camera_hint(self) -> dict:
        ee = self.session.arm.ee_pose
        approach = quat_rotate(ee.orientation, np.array([0.0, 0.0, 1.0]))
        if approach[2] > -1e-3:
            approach = np.array([0.0, 0.0, -1.0])
        tz = self.session.scene.table_z
        s = (tz - ee.position[2]) / approach[2]
        hit = ee.position + s * approach
        hit[2] = tz
        return {
            "follow_target": [float(v) for v in ee.position],
            "beam": {
                "origin": [float(v) for v in ee.position],
                "direction": [float(v) for v in approach],
                "table_point": [float(v) for v in hit],
            },
        }

    def state_payload(self) -> dict:
        s = self.session
        return {
            "session_id": s.session_id,
            "state_seq": self.state_seq,
            "phase": s.phase,
            "attempt": s.attempt_index,
            "max_attempts": s.spec.max_attempts,
            "clock": round(s.clock, 6),
            "time_limit": s.spec.time_limit,
            "q": [float(v) for v in s.arm.q],
            "gripper": {
                "aperture": s.arm.gripper.aperture,
                "commanded_closed": s.arm.gripper.commanded_closed,
            },
            "ee": {
                "position": [float(v) for v in s.arm.ee_pose.position],
                "orientation": [float(v) for v in s.arm.ee_pose.orientation],
            },
            "objects": [
                {
                    "id": o.id,
                    "cls": o.cls,
                    "position": [float(v) for v in o.pose.position],
                    "orientation": [float(v) for v in o.pose.orientation],
                    "attached": o.attached,
                    "color": list(o.rgb),
                }
                for o in s.scene.objects
            ],
            "lid_angle": float(s.scene.lid_angle),
            "stages": [
                {"id": r.stage_id, "achieved": r.achieved, "t": r.t_achieved}
                for r in s.stage_results
            ],
            "score": s.score_so_far,
            "camera": self._camera_hint(),
        }

    def _next_seq(self) -> int:
        self.msg_seq += 1
        return self.msg_seq

    def _broadcast(self, msg: WireMessage, kind: str, droppable: bool):
        data = encode(msg)
        conns = list(self.spectators.values())
        if self.operator:
            conns.append(self.operator)
        for c in conns:
            c.offer(kind, data, droppable)

    def broadcast_state(self, droppable: bool = True):
        self.state_seq += 1
        msg = WireMessage("state_update", self._next_seq(), self.state_payload())
        self.state_send_times.append(time.monotonic())
        self._broadcast(msg, "state", droppable)

    def broadcast_overlay(self):
        payload = goal_overlay(self.session.spec, self.session.scene, self.session.stage_results)
        payload["narrative"] = self.session.spec.narrative
        self._broadcast(WireMessage("overlay_update", self._next_seq(), payload), "event", False)

    def broadcast_events(self, events):
        for ev in events:
            self._broadcast(
                WireMessage(
                    "event", self._next_seq(), {"kind": ev.kind, "t": ev.t, **ev.payload}
                ),
                "event",
                False,
            )

    def broadcast_cloud(self):
        self.cloud_seq += 1
        lo = self.session.safety.workspace_lo
        hi = self.session.safety.workspace_hi
        raw = synth_point_cloud(
            self.session.scene, (lo[0], lo[1], hi[0], hi[1]), CLOUD_BUDGET
        )
        chunk = quantize_cloud(self.cloud_seq, raw.points, raw.colors, lo, hi)
        msg = WireMessage("cloud_chunk", self._next_seq(), cloud=chunk)
        self._broadcast(msg, "cloud", True)

    # -- connection management --------------------------------------------

    def attach(self, conn: Connection) -> WireMessage | None:
        if conn.role == "operator":
            if self.operator is not None and not self.operator.closed:
                return WireMessage("error", 0, {"code": "operator_slot_taken"})
            self.operator = conn
        else:
            if len(self.spectators) >= self.cfg.max_spectators:
                return WireMessage("error", 0, {"code": "spectator_cap_reached"})
            self.spectators[conn.conn_id] = conn
            self.session.spectators.add(conn.conn_id)
            # full snapshot first, then deltas
            snap = WireMessage("state_update", self._next_seq(), self.state_payload())
            conn.offer("snapshot", encode(snap), droppable=False)
        return None

    def detach(self, conn: Connection):
        conn.closed = True
        if conn is self.operator:
            self.operator = None
        else:
            self.spectators.pop(conn.conn_id, None)
            self.session.spectators.discard(conn.conn_id)

    def submit_input(self, msg: WireMessage):
        p = msg.payload
        try:
            self.pending_inputs.append(
                OperatorInput(
                    seq=int(p["seq"]),
                    target_q=np.asarray(p["target_q"], dtype=np.float64),
                    gripper_closed=bool(p["gripper_closed"]),
                    client_timestamp=float(p.get("client_timestamp", 0.0)),
                )
            )
        except (KeyError, TypeError, ValueError):
            self.session.dropped_inputs += 1

    # -- main loop --------------------------------------------------------

    async def run(self):
        s = self.session
        s.begin_attempt()
        self.broadcast_overlay()
        tick_i = 0
        deadline = time.monotonic()
        attempts_done = 0
        try:
            while True:
                deadline += SIM_DT
                delay = deadline - time.monotonic()
                if delay > 0:
                    await asyncio.sleep(delay)
                if s.phase in ("countdown", "playing"):
                    inputs, self.pending_inputs = self.pending_inputs, []
                    events, transitions = s.tick(inputs)
                    if transitions:
                        self.record_times.append(time.monotonic())
                    if events:
                        self.broadcast_events(events)
                        if any(e.kind == "attempt_start" for e in events):
                            self.broadcast_overlay()
                        if any(e.kind in ("receipt_check", "stage_complete") for e in events):
                            self.broadcast_overlay()
                    tick_i += 1
                    if tick_i % STATE_EVERY_TICKS == 0:
                        self.broadcast_state()
                    if tick_i % CLOUD_EVERY_TICKS == 0:
                        self.broadcast_cloud()
                    if any(e.kind == "attempt_end" for e in events):
                        attempts_done += 1
                        path = self.recorder.flush_attempt(s)
                        if path:
                            self.episode_paths.append(str(path))
                if s.phase == "between_attempts":
                    if attempts_done >= self.attempts_requested:
                        break
                    await asyncio.sleep(BETWEEN_ATTEMPTS_PAUSE_S)
                    try:
                        s.next_attempt()
                        s.begin_attempt()
                        self.broadcast_overlay()
                        deadline = time.monotonic()
                    except Exception:
                        break
                if s.phase == "ended":
                    break
                if self.operator is None and s.phase in ("countdown", "playing"):
                    # disconnect grace handled by caller re-attaching; end now
                    s.abort_attempt()
                    self.recorder.flush_attempt(s)
                    break
        finally:
            await self._finalize()

    async def _finalize(self):
        s = self.session
        self.summary = s.end_session()
        profile, newly = None, []
        try:
            profile, newly = self.store.apply_summary(self.summary)
        except Exception:
            pass
        # final authoritative state is reliable, never dropped
        self.broadcast_state(droppable=False)
        payload = {
            "summary": summary_to_dict(self.summary),
            "final_state_seq": self.state_seq,
            "new_badges": [{"id": b.id, "name": b.name} for b in newly],
            "total_points": profile.total_points if profile else None,
            "episodes": self.episode_paths,
        }
        self._broadcast(WireMessage("session_end", self._next_seq(), payload), "event", False)
        board = [
            {"rank": e.rank, "username": e.username, "total_points": e.total_points}
            for e in self.store.leaderboard(10)
        ]
        self._broadcast(
            WireMessage("leaderboard_update", self._next_seq(), {"entries": board}),
            "event",
            False,
        )
        await asyncio.sleep(0.1)
        self.done.set()


def summary_to_dict(summary) -> dict:
    return {
        "summary_id": summary.summary_id,
        "session_id": summary.session_id,
        "player_id": summary.player_id,
        "task_id": summary.task_id,
        "total_points": summary.total_points,
        "best_attempt_index": summary.best_attempt_index,
        "attempts": [
            {
                "attempt_index": a.attempt_index,
                "seed": a.seed,
                "points": a.points,
                "success": a.success,
                "incomplete": a.incomplete,
                "episode_id": a.episode_id,
                "duration": round(a.duration, 4),
                "stages": [
                    {"id": r.stage_id, "achieved": r.achieved, "t": r.t_achieved}
                    for r in a.stage_results
                ],
            }
            for a in summary.attempts
        ],
    }


def create_app(cfg: ServerConfig | None = None) -> FastAPI:
    cfg = cfg or ServerConfig.from_env()
    cfg.data_dir.mkdir(parents=True, exist_ok=True)
    app = FastAPI()
    store = ProgressionStore(cfg.data_dir / "progression")
    recorder_root = cfg.data_dir / "episodes"
    chain, safety = arm_mod.load_arm_config()
    kernels.warmup()
    runtimes: dict[str, SessionRuntime] = {}
    app.state.cfg = cfg
    app.state.store = store
    app.state.runtimes = runtimes

    @app.post("/login")
    async def login(body: dict):
        try:
            profile = store.register_player(
                body.get("username", ""), body.get("avatar_id", "avatar-0")
            )
        except UsernameError as e:
            return JSONResponse({"error": str(e)}, status_code=400)
        return {
            "player_id": profile.player_id,
            "username": profile.username,
            "avatar_id": profile.avatar_id,
            "token": sign_token(cfg.secret, profile.player_id),
            "total_points": profile.total_points,
            "badges": sorted(profile.badges),
        }

    @app.get("/tasks")
    async def tasks():
        out = []
        for tid in TASK_IDS:
            spec = load_task(tid)
            out.append(
                {
                    "id": tid,
                    "narrative": spec.narrative,
                    "time_limit": spec.time_limit,
                    "max_attempts": spec.max_attempts,
                    "stages": [s.id for s in spec.stages],
                    "support": spec.support,
                }
            )
        return {"tasks": out}

    @app.get("/leaderboard")
    async def leaderboard(top: int = 10):
        return {
            "entries": [
                {"rank": e.rank, "username": e.username, "total_points": e.total_points}
                for e in store.leaderboard(max(1, top))
            ]
        }

    @app.post("/sessions")
    async def create_session_ep(body: dict):
        player_id = verify_token(cfg.secret, body.get("token", ""))
        if player_id is None or player_id not in store.players:
            return JSONResponse({"error": "unauthorized"}, status_code=401)
        task_id = body.get("task_id", "")
        if task_id not in TASK_IDS:
            return JSONResponse({"error": f"unknown task {task_id!r}"}, status_code=404)
        seed = int(body.get("seed", secrets.randbits(48)))
        session = create_session(player_id, task_id, seed, chain, safety)
        runtime = SessionRuntime(
            session,
            Recorder(recorder_root),
            cfg,
            store,
            attempts_requested=body.get("attempts"),
        )
        runtimes[session.session_id] = runtime
        return {
            "session_id": session.session_id,
            "seed": seed,
            "operator_url": f"/session/{session.session_id}?role=operator",
            "spectator_url": f"/session/{session.session_id}?role=spectator",
        }

    @app.websocket("/session/{session_id}")
    async def session_ws(
        ws: WebSocket,
        session_id: str,
        role: str = Query("spectator"),
        token: str = Query(""),
    ):
        await ws.accept()

        async def refuse(code: str):
            await ws.send_text(encode(WireMessage("error", 0, {"code": code})).decode())
            await ws.close()

        runtime = runtimes.get(session_id)
        if runtime is None:
            await refuse("session_not_found")
            return
        player_id = verify_token(cfg.secret, token)
        if player_id is None:
            await refuse("unauthorized")
            return
        if role == "operator" and player_id != runtime.session.player_id:
            await refuse("unauthorized")
            return
        conn = Connection(ws, secrets.token_hex(8), role, cfg.latency)
        err = runtime.attach(conn)
        if err is not None:
            await ws.send_text(encode(err).decode())
            await ws.close()
            return
        hello = WireMessage(
            "hello",
            0,
            {
                "session_id": session_id,
                "role": role,
                "task_id": runtime.session.spec.id,
                "protocol_version": PROTOCOL_VERSION,
            },
        )
        conn.offer("event", encode(hello), droppable=False)
        sender = asyncio.create_task(conn.sender())
        if role == "operator" and runtime._task is None:
            runtime._task = asyncio.create_task(runtime.run())
        try:
            while True:
                raw = await ws.receive()
                if raw.get("type") == "websocket.disconnect":
                    break
                data = raw.get("bytes") or (raw.get("text") or "").encode()
                try:
                    msg = decode(data)
                except Exception:
                    conn.offer(
                        "event",
                        encode(WireMessage("error", 0, {"code": "malformed_frame"})),
                        droppable=False,
                    )
                    continue
                reply = check_version(msg)
                if reply is not None:
                    conn.offer("event", encode(reply), droppable=False)
                    continue
                # only the operator's input messages can influence state
                if role == "operator" and msg.type == "input":
                    runtime.submit_input(msg)
        except WebSocketDisconnect:
            pass
        finally:
            runtime.detach(conn)
            sender.cancel()

    return app


def serve(cfg: ServerConfig):
    import uvicorn

    uvicorn.run(create_app(cfg), host=cfg.host, port=cfg.port, log_level="warning")
