"""Versioned wire protocol for operator/spectator traffic.

Every frame is bytes. Point-cloud chunks are binary (little-endian, layout
below); every other message type is a compact JSON envelope. The schema is
documented in docs/PROTOCOL.md and pinned by golden fixtures in
tests/goldens/.

Binary cloud frame layout:
    magic      u8   0x00 (JSON frames always start with '{')
    version    u8
    seq        u32
    frame_id   u32
    count      u32
    points     count * (x u16, y u16, z u16)   quantized against the AABB
    colors     count * (r u8, g u8, b u8)
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

PROTOCOL_VERSION = 1
BINARY_MAGIC = 0x00
_HEADER = struct.Struct("<BBIII")

MESSAGE_TYPES = (
    "hello",
    "auth",
    "join_operator",
    "join_spectator",
    "input",
    "state_update",
    "overlay_update",
    "event",
    "cloud_chunk",
    "session_end",
    "leaderboard_update",
    "error",
)


class MalformedFrameError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class UnsupportedVersionError(ValueError):
    def __init__(self, version: int):
        super().__init__(f"unsupported protocol version {version}")
        self.version = version


@dataclass(frozen=True)
class PointCloudChunk:
    frame_id: int
    xyz_q: np.ndarray  # (N, 3) uint16
    rgb: np.ndarray  # (N, 3) uint8

    @property
    def count(self) -> int:
        return len(self.xyz_q)


def quantize_cloud(
    frame_id: int, points: np.ndarray, colors: np.ndarray, lo: np.ndarray, hi: np.ndarray
) -> PointCloudChunk:
    """16-bit per axis against the workspace AABB; error <= extent/2^17."""
    lo = np.asarray(lo, dtype=np.float64)
    extent = np.asarray(hi, dtype=np.float64) - lo
    scaled = (np.asarray(points) - lo) / extent * 65535.0
    xyz_q = np.clip(np.rint(scaled), 0, 65535).astype(np.uint16)
    return PointCloudChunk(frame_id=frame_id, xyz_q=xyz_q, rgb=np.asarray(colors, dtype=np.uint8))


def dequantize_cloud(chunk: PointCloudChunk, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    lo = np.asarray(lo, dtype=np.float64)
    extent = np.asarray(hi, dtype=np.float64) - lo
    return lo + chunk.xyz_q.astype(np.float64) / 65535.0 * extent


@dataclass(frozen=True)
class WireMessage:
    type: str
    seq: int
    payload: dict = field(default_factory=dict)
    version: int = PROTOCOL_VERSION
    cloud: PointCloudChunk | None = None


def encode(msg: WireMessage) -> bytes:
    if msg.type not in MESSAGE_TYPES:
        raise ValueError(f"unknown message type {msg.type!r}")
    if msg.type == "cloud_chunk":
        if msg.cloud is None:
            raise ValueError("cloud_chunk requires cloud data")
        c = msg.cloud
        head = _HEADER.pack(BINARY_MAGIC, msg.version, msg.seq, c.frame_id, c.count)
        return head + c.xyz_q.astype("<u2").tobytes() + c.rgb.tobytes()
    body = {"version": msg.version, "type": msg.type, "seq": msg.seq, "payload": msg.payload}
    return json.dumps(body, sort_keys=True, separators=(",", ":")).encode()


def decode(data: bytes) -> WireMessage:
    if not data:
        raise MalformedFrameError("empty frame", 0)
    if data[0] == BINARY_MAGIC:
        if len(data) < _HEADER.size:
            raise MalformedFrameError("truncated binary header", len(data))
        _, version, seq, frame_id, count = _HEADER.unpack_from(data)
        need = _HEADER.size + count * 6 + count * 3
        if len(data) != need:
            raise MalformedFrameError(
                f"binary frame length {len(data)} != expected {need}",
                min(len(data), need),
            )
        off = _HEADER.size
        xyz = np.frombuffer(data, dtype="<u2", count=count * 3, offset=off).reshape(count, 3)
        off += count * 6
        rgb = np.frombuffer(data, dtype="u1", count=count * 3, offset=off).reshape(count, 3)
        return WireMessage(
            type="cloud_chunk",
            seq=seq,
            version=version,
            cloud=PointCloudChunk(frame_id=frame_id, xyz_q=xyz.copy(), rgb=rgb.copy()),
        )
    try:
        body = json.loads(data.decode())
    except UnicodeDecodeError as e:
        raise MalformedFrameError("invalid utf-8", e.start) from e
    except json.JSONDecodeError as e:
        raise MalformedFrameError(f"invalid json: {e.msg}", e.pos) from e
    for key in ("version", "type", "seq", "payload"):
        if key not in body:
            raise MalformedFrameError(f"missing field {key!r}", 0)
    if body["type"] not in MESSAGE_TYPES:
        raise MalformedFrameError(f"unknown message type {body['type']!r}", 0)
    return WireMessage(
        type=body["type"], seq=body["seq"], payload=body["payload"], version=body["version"]
    )


def check_version(msg: WireMessage) -> WireMessage | None:
    """Version gate: returns an error reply for unknown versions (the
    connection stays open so the peer can renegotiate), else None."""
    if msg.version != PROTOCOL_VERSION:
        return WireMessage(
            type="error",
            seq=0,
            payload={
                "code": "unsupported_version",
                "got": msg.version,
                "supported": [PROTOCOL_VERSION],
            },
        )
    return None
