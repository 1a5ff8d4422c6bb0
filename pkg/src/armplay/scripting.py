"""Timestamped operator input scripts (JSONL) and an in-process runner.

A script line is {"t": seconds_since_attempt_start, "q": [7 floats],
"grip": bool}; the entry becomes the operator's held target from time t
until the next entry. Scripts are target-state based, so delivery latency
shifts timing but not outcomes (within the task time limit).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .session import OperatorInput, Session
from .tasks import GameEvent

SCRIPT_DIR = Path(__file__).parent / "data" / "scripts"


class ScriptParseError(ValueError):
    pass


@dataclass(frozen=True)
class ScriptEntry:
    t: float
    q: np.ndarray
    grip: bool


def load_script(path: str | Path) -> list[ScriptEntry]:
    entries = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                d = json.loads(line)
                entries.append(
                    ScriptEntry(
                        t=float(d["t"]),
                        q=np.asarray(d["q"], dtype=np.float64),
                        grip=bool(d["grip"]),
                    )
                )
                if entries[-1].q.shape != (7,):
                    raise ValueError("q must have 7 entries")
            except (KeyError, ValueError, TypeError) as e:
                raise ScriptParseError(f"{path}: line {lineno}: {e}") from e
    if not entries:
        raise ScriptParseError(f"{path}: empty script")
    return sorted(entries, key=lambda e: e.t)


def save_script(path: str | Path, entries: list[ScriptEntry]):
    with open(path, "w") as f:
        for e in entries:
            f.write(
                json.dumps({"t": round(e.t, 4), "q": [round(float(v), 6) for v in e.q], "grip": e.grip})
                + "\n"
            )


def script_path(task_id: str) -> Path:
    return SCRIPT_DIR / f"{task_id}_success.jsonl"


class ScriptDriver:
    """Yields the scripted operator input for a given attempt clock."""

    def __init__(self, entries: list[ScriptEntry]):
        self.entries = entries
        self._seq = 0

    @property
    def duration(self) -> float:
        return self.entries[-1].t

    def input_at(self, clock: float) -> OperatorInput:
        current = self.entries[0]
        for e in self.entries:
            if e.t <= clock + 1e-9:
                current = e
            else:
                break
        self._seq += 1
        return OperatorInput(
            seq=self._seq, target_q=current.q, gripper_closed=current.grip,
            client_timestamp=clock,
        )


def run_script(session: Session, entries: list[ScriptEntry]) -> list[GameEvent]:
    """Drive one attempt in-process; returns all events emitted."""
    driver = ScriptDriver(entries)
    all_events: list[GameEvent] = []
    session.begin_attempt()
    while session.phase == "countdown":
        ev, _ = session.tick([])
        all_events += ev
    while session.phase == "playing":
        ev, _ = session.tick([driver.input_at(session.clock)])
        all_events += ev
    return all_events
