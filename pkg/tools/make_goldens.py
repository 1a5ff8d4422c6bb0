"""Freeze one golden frame per wire message type into tests/goldens/.

Run once; the outputs are committed and the protocol tests compare
encode() results byte-for-byte against them. Regenerating after a format
change is a deliberate, reviewed act.
"""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from armplay.protocol import (  # noqa: E402
    MESSAGE_TYPES,
    PointCloudChunk,
    WireMessage,
    encode,
)

OUT = ROOT / "tests" / "goldens"

PAYLOADS: dict[str, dict] = {
    "hello": {"session_id": "s-1", "role": "operator", "task_id": "ScanBottle", "protocol_version": 1},
    "auth": {"token": "p000001.abcdef", "role": "operator"},
    "join_operator": {"session_id": "s-1", "attempts": 1},
    "join_spectator": {"session_id": "s-1"},
    "input": {
        "seq": 42,
        "target_q": [0.0, -0.2, 0.0, -2.0, 0.0, 2.0, 0.785],
        "gripper_closed": True,
        "client_timestamp": 1234.5,
    },
    "state_update": {
        "session_id": "s-1",
        "state_seq": 7,
        "phase": "playing",
        "attempt": 1,
        "max_attempts": 3,
        "clock": 1.25,
        "time_limit": 120.0,
        "q": [0.0, -0.2, 0.0, -2.0, 0.0, 2.0, 0.785],
        "gripper": {"aperture": 1.0, "commanded_closed": False},
        "ee": {"position": [0.5, 0.0, 0.4], "orientation": [1.0, 0.0, 0.0, 0.0]},
        "objects": [
            {
                "id": "bottle",
                "cls": "threadlocker_bottle",
                "position": [0.4, 0.1, 0.045],
                "orientation": [1.0, 0.0, 0.0, 0.0],
                "attached": False,
                "color": [200, 40, 40],
            }
        ],
        "lid_angle": 1.5707963267948966,
        "stages": [{"id": "reach_bottle", "achieved": False, "t": None}],
        "score": 0,
        "camera": {
            "follow_target": [0.5, 0.0, 0.4],
            "beam": {
                "origin": [0.5, 0.0, 0.4],
                "direction": [0.0, 0.0, -1.0],
                "table_point": [0.5, 0.0, 0.0],
            },
        },
    },
    "overlay_update": {
        "kind": "scan_target",
        "ref": "bottle",
        "scanner": "scanner",
        "narrative": "Scan the item at the register.",
    },
    "event": {"kind": "scan_beep", "t": 3.25, "object": "bottle"},
    "session_end": {
        "summary": {
            "summary_id": "s-1",
            "session_id": "s-1",
            "player_id": "p000001",
            "task_id": "ScanBottle",
            "total_points": 1500,
            "best_attempt_index": 1,
            "attempts": [],
        },
        "final_state_seq": 99,
        "new_badges": [{"id": "first_episode", "name": "First Steps"}],
        "total_points": 1500,
        "episodes": [],
    },
    "leaderboard_update": {
        "entries": [{"rank": 1, "username": "ada", "total_points": 4200}]
    },
    "error": {"code": "operator_slot_taken"},
}


def golden_messages() -> dict[str, WireMessage]:
    out = {}
    for mtype in MESSAGE_TYPES:
        if mtype == "cloud_chunk":
            rng = np.random.default_rng(99)
            chunk = PointCloudChunk(
                frame_id=5,
                xyz_q=rng.integers(0, 65536, size=(16, 3)).astype(np.uint16),
                rgb=rng.integers(0, 256, size=(16, 3)).astype(np.uint8),
            )
            out[mtype] = WireMessage("cloud_chunk", 11, cloud=chunk)
        else:
            out[mtype] = WireMessage(mtype, 3, PAYLOADS[mtype])
    return out


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for mtype, msg in golden_messages().items():
        path = OUT / f"{mtype}.bin"
        path.write_bytes(encode(msg))
        print(f"{path.name}: {path.stat().st_size} bytes")


if __name__ == "__main__":
    main()
