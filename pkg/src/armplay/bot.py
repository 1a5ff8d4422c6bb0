"""Headless operator client: logs in over HTTP, opens the operator
WebSocket, drives a recorded target-state script at 60 Hz, and reports the
session summary. Exercises the full network stack end to end."""
from __future__ import annotations

import asyncio
import json
import time
from dataclasses import dataclass, field

import httpx
import numpy as np
import websockets

from .protocol import PROTOCOL_VERSION, WireMessage, decode, encode
from .scripting import ScriptDriver, ScriptEntry, load_script, script_path
from .session import SIM_DT


@dataclass
class BotReport:
    summary: dict | None = None
    stage_flags: list[bool] = field(default_factory=list)
    success: bool = False
    events: list[dict] = field(default_factory=list)
    episodes: list[str] = field(default_factory=list)
    state_count: int = 0
    errors: list[str] = field(default_factory=list)


async def run_bot(
    base_url: str,
    task_id: str,
    seed: int,
    username: str = "bot-operator",
    entries: list[ScriptEntry] | None = None,
    attempts: int = 1,
    timeout_s: float = 120.0,
    session_box: dict | None = None,
) -> BotReport:
    """Play one session via the gateway; returns what the wire reported."""
    report = BotReport()
    if entries is None:
        entries = load_script(script_path(task_id))
    async with httpx.AsyncClient(base_url=base_url, timeout=10.0) as http:
        r = await http.post("/login", json={"username": username})
        r.raise_for_status()
        token = r.json()["token"]
        r = await http.post(
            "/sessions",
            json={"token": token, "task_id": task_id, "seed": seed, "attempts": attempts},
        )
        r.raise_for_status()
        session_id = r.json()["session_id"]
    if session_box is not None:
        # let a caller attach spectators to the same session
        session_box["session_id"] = session_id
        session_box["token"] = token

    ws_url = base_url.replace("http", "ws", 1)
    ws_url = f"{ws_url}/session/{session_id}?role=operator&token={token}"
    driver = ScriptDriver(entries)
    clock = None  # server attempt clock, advanced locally between updates
    clock_at = 0.0

    async def sender(ws):
        nonlocal clock, clock_at
        while report.summary is None:
            await asyncio.sleep(SIM_DT)
            if clock is None:
                continue
            est = clock + (time.monotonic() - clock_at)
            inp = driver.input_at(est)
            msg = WireMessage(
                "input",
                inp.seq,
                {
                    "seq": inp.seq,
                    "target_q": [float(v) for v in inp.target_q],
                    "gripper_closed": inp.gripper_closed,
                    "client_timestamp": time.time(),
                },
            )
            await ws.send(encode(msg).decode())

    async with websockets.connect(ws_url, max_size=1 << 22) as ws:
        send_task = asyncio.create_task(sender(ws))
        deadline = time.monotonic() + timeout_s
        try:
            while report.summary is None and time.monotonic() < deadline:
                raw = await asyncio.wait_for(ws.recv(), timeout=timeout_s)
                if isinstance(raw, str):
                    raw = raw.encode()
                msg = decode(raw)
                if msg.type == "state_update":
                    report.state_count += 1
                    if msg.payload["phase"] == "playing":
                        clock = float(msg.payload["clock"])
                        clock_at = time.monotonic()
                    else:
                        clock = None
                elif msg.type == "event":
                    report.events.append(msg.payload)
                    if msg.payload.get("kind") == "attempt_start":
                        clock = 0.0
                        clock_at = time.monotonic()
                elif msg.type == "error":
                    report.errors.append(msg.payload.get("code", "unknown"))
                elif msg.type == "session_end":
                    report.summary = msg.payload["summary"]
                    report.episodes = list(msg.payload.get("episodes", []))
        except (asyncio.TimeoutError, websockets.ConnectionClosed) as e:
            report.errors.append(f"connection: {type(e).__name__}")
        finally:
            send_task.cancel()

    if report.summary:
        best = report.summary["attempts"][report.summary["best_attempt_index"] - 1]
        report.stage_flags = [s["achieved"] for s in best["stages"]]
        report.success = bool(best["success"])
    return report


async def run_spectator(
    base_url: str,
    session_id: str,
    token: str,
    until_end: bool = True,
    timeout_s: float = 120.0,
) -> dict:
    """Passive watcher; collects the delivered message stream for analysis."""
    ws_url = base_url.replace("http", "ws", 1)
    ws_url = f"{ws_url}/session/{session_id}?role=spectator&token={token}"
    out = {
        "states": [],
        "events": [],
        "event_seqs": [],
        "clouds": 0,
        "end": None,
        "errors": [],
    }
    async with websockets.connect(ws_url, max_size=1 << 22) as ws:
        deadline = time.monotonic() + timeout_s
        while time.monotonic() < deadline:
            try:
                raw = await asyncio.wait_for(ws.recv(), timeout=5.0)
            except asyncio.TimeoutError:
                if not until_end:
                    break
                continue
            except websockets.ConnectionClosed:
                break
            if isinstance(raw, str):
                raw = raw.encode()
            msg = decode(raw)
            if msg.type == "state_update":
                out["states"].append(msg.payload)
            elif msg.type == "cloud_chunk":
                out["clouds"] += 1
            elif msg.type == "event":
                out["events"].append(msg.payload)
                out["event_seqs"].append(msg.seq)
            elif msg.type == "error":
                out["errors"].append(msg.payload.get("code"))
            elif msg.type == "session_end":
                out["end"] = msg.payload
                if until_end:
                    break
    return out
