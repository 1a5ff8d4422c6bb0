"""Episode recording, dataset indexing, the 50/50 co-training batch
sampler, and deterministic replay.

On-disk layout (documented bit-exactly in docs/DATAFORMAT.md):

    <root>/<task_id>/<episode_id>/
        manifest.json     human-readable metadata + stage results
        transitions.bin   fixed-width little-endian transition records
        commands.bin      per-sim-tick applied commands (the replay log)
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import arm as arm_mod
from .records import SOFTWARE_VERSION, Episode, Transition
from .session import OperatorInput, Session, SessionSummary, create_session
from .tasks import StageResult, load_task

MANIFEST_SCHEMA = "armplay/episode-v1"

COMMAND_DTYPE = np.dtype(
    [("q", "<f8", (7,)), ("grip", "u1"), ("_pad", "u1", (7,))]
)


class EmptySourceError(ValueError):
    pass


class VersionMismatchError(RuntimeError):
    pass


def transition_dtype(num_objects: int) -> np.dtype:
    return np.dtype(
        [
            ("t", "<f8"),
            ("q", "<f8", (7,)),
            ("aperture", "<f8"),
            ("ee_pos", "<f8", (3,)),
            ("ee_quat", "<f8", (4,)),
            ("objects", "<f8", (num_objects, 7)),
            ("action_q", "<f8", (7,)),
            ("grip", "u1"),
            ("_pad", "u1", (7,)),
        ]
    )


def episode_dir(root: str | Path, episode: Episode) -> Path:
    return Path(root) / episode.task_id / episode.episode_id


def write_episode(
    root: str | Path,
    episode: Episode,
    command_log: np.ndarray,
    final_hash: str,
) -> Path:
    d = Path(root) / episode.task_id / episode.episode_id
    d.mkdir(parents=True, exist_ok=True)
    k = len(episode.object_ids)
    arr = np.empty(len(episode.transitions), dtype=transition_dtype(k))
    for i, tr in enumerate(episode.transitions):
        arr[i]["t"] = tr.t
        arr[i]["q"] = tr.q
        arr[i]["aperture"] = tr.gripper_aperture
        arr[i]["ee_pos"] = tr.ee_position
        arr[i]["ee_quat"] = tr.ee_orientation
        arr[i]["objects"] = tr.object_poses
        arr[i]["action_q"] = tr.action_q
        arr[i]["grip"] = 1 if tr.action_gripper_closed else 0
        arr[i]["_pad"] = 0
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "episode_id": episode.episode_id,
        "task_id": episode.task_id,
        "player_id": episode.player_id,
        "attempt_index": episode.attempt_index,
        "seed": episode.seed,
        "success": episode.success,
        "incomplete": episode.incomplete,
        "software_version": episode.software_version,
        "object_ids": list(episode.object_ids),
        "transition_count": len(episode.transitions),
        "command_count": int(len(command_log)),
        "final_hash": final_hash,
        "stage_results": [
            {"stage_id": r.stage_id, "achieved": r.achieved, "t_achieved": r.t_achieved}
            for r in episode.stage_results
        ],
    }
    for name, payload in (
        ("transitions.bin", arr.tobytes()),
        ("commands.bin", np.ascontiguousarray(command_log, dtype=COMMAND_DTYPE).tobytes()),
        ("manifest.json", json.dumps(manifest, indent=2).encode()),
    ):
        with open(d / name, "wb") as f:
            f.write(payload)
            f.flush()
            os.fsync(f.fileno())
    return d


def read_episode(path: str | Path) -> tuple[Episode, np.ndarray, str]:
    """Returns (episode, command_log, stored_final_hash)."""
    path = Path(path)
    with open(path / "manifest.json") as f:
        m = json.load(f)
    if m.get("schema") != MANIFEST_SCHEMA:
        raise VersionMismatchError(f"unknown manifest schema in {path}")
    k = len(m["object_ids"])
    arr = np.fromfile(path / "transitions.bin", dtype=transition_dtype(k))
    if len(arr) != m["transition_count"]:
        raise ValueError(f"{path}: transition count mismatch")
    commands = np.fromfile(path / "commands.bin", dtype=COMMAND_DTYPE)
    transitions = tuple(
        Transition(
            t=float(r["t"]),
            q=r["q"].copy(),
            gripper_aperture=float(r["aperture"]),
            ee_position=r["ee_pos"].copy(),
            ee_orientation=r["ee_quat"].copy(),
            object_poses=r["objects"].copy(),
            action_q=r["action_q"].copy(),
            action_gripper_closed=bool(r["grip"]),
        )
        for r in arr
    )
    episode = Episode(
        episode_id=m["episode_id"],
        task_id=m["task_id"],
        player_id=m["player_id"],
        attempt_index=m["attempt_index"],
        seed=m["seed"],
        stage_results=tuple(
            StageResult(s["stage_id"], s["achieved"], s["t_achieved"])
            for s in m["stage_results"]
        ),
        success=m["success"],
        incomplete=m["incomplete"],
        object_ids=tuple(m["object_ids"]),
        transitions=transitions,
        software_version=m["software_version"],
    )
    return episode, commands, m["final_hash"]


class Recorder:
    """Attach to a session and persist each finished attempt as an episode."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.enabled = True
        self._written: set[str] = set()

    def flush_attempt(self, session: Session) -> Path | None:
        """Persist the newest finished episode of the session, if any."""
        if not self.enabled or not session.episodes:
            return None
        episode = session.episodes[-1]
        if episode.episode_id in self._written:
            return None
        self._written.add(episode.episode_id)
        commands = session.command_log(episode.episode_id)
        log = np.zeros(len(commands), dtype=COMMAND_DTYPE)
        for i, (q, g) in enumerate(commands):
            log[i]["q"] = q
            log[i]["grip"] = 1 if g else 0
        try:
            return write_episode(
                self.root, episode, log, session.episode_final_hash(episode.episode_id)
            )
        except OSError:
            self.enabled = False
            return None


@dataclass(frozen=True)
class IndexedEpisode:
    task_id: str
    episode_id: str
    path: Path
    transition_count: int
    success: bool
    label: str  # "support" | "target"


@dataclass
class DatasetIndex:
    root: Path
    episodes: list[IndexedEpisode]

    @property
    def per_task_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for e in self.episodes:
            out[e.task_id] = out.get(e.task_id, 0) + 1
        return out

    @property
    def total_transitions(self) -> int:
        return sum(e.transition_count for e in self.episodes)

    def filter(self, label: str | None = None, task_id: str | None = None) -> "DatasetIndex":
        eps = [
            e
            for e in self.episodes
            if (label is None or e.label == label)
            and (task_id is None or e.task_id == task_id)
        ]
        return DatasetIndex(self.root, eps)


def build_index(root: str | Path) -> DatasetIndex:
    root = Path(root)
    episodes = []
    for manifest in sorted(root.glob("*/*/manifest.json")):
        with open(manifest) as f:
            m = json.load(f)
        try:
            label = "support" if load_task(m["task_id"]).support else "target"
        except KeyError:
            label = "target"
        episodes.append(
            IndexedEpisode(
                task_id=m["task_id"],
                episode_id=m["episode_id"],
                path=manifest.parent,
                transition_count=m["transition_count"],
                success=m["success"],
                label=label,
            )
        )
    return DatasetIndex(root, episodes)


class CotrainSampler:
    """Deterministic batch sampler with an exact per-batch source split.

    Each batch contains round(split * batch_size) items from source A and
    the remainder from source B; within a source, draws are uniform over
    all transitions."""

    def __init__(
        self,
        source_a: DatasetIndex,
        source_b: DatasetIndex,
        batch_size: int,
        split: float = 0.5,
        seed: int = 0,
    ):
        if batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if not source_a.episodes:
            raise EmptySourceError("source A is empty")
        if not source_b.episodes:
            raise EmptySourceError("source B is empty")
        self.sources = {"a": source_a, "b": source_b}
        self.batch_size = batch_size
        self.split = split
        self.n_a = round(split * batch_size)
        self.rng = np.random.default_rng(seed)
        self._cum = {
            tag: np.cumsum([e.transition_count for e in src.episodes])
            for tag, src in self.sources.items()
        }

    def _draw(self, tag: str, n: int) -> list[tuple[str, str, int]]:
        cum = self._cum[tag]
        src = self.sources[tag]
        flat = self.rng.integers(0, cum[-1], size=n)
        out = []
        for v in flat:
            ep_i = int(np.searchsorted(cum, v, side="right"))
            base = 0 if ep_i == 0 else int(cum[ep_i - 1])
            ep = src.episodes[ep_i]
            out.append((tag, ep.episode_id, int(v - base)))
        return out

    def sample_batch(self) -> list[tuple[str, str, int]]:
        return self._draw("a", self.n_a) + self._draw("b", self.batch_size - self.n_a)

    def __iter__(self):
        while True:
            yield self.sample_batch()


@dataclass(frozen=True)
class ReplayResult:
    summary: SessionSummary
    stage_results: tuple[StageResult, ...]
    final_hash: str
    matches_stored: bool
    mismatches: tuple[str, ...]


def replay_episode(path: str | Path, chain=None, safety=None) -> ReplayResult:
    """Re-run the stored command log through a fresh session and verify the
    stored stage results and final world hash are reproduced."""
    episode, commands, stored_hash = read_episode(path)
    if episode.software_version != SOFTWARE_VERSION:
        raise VersionMismatchError(
            f"episode recorded by {episode.software_version}, running {SOFTWARE_VERSION}"
        )
    session = create_session(
        episode.player_id,
        episode.task_id,
        episode.seed,
        chain=chain,
        safety=safety,
        session_id="replay",
    )
    session.begin_attempt()
    while session.phase == "countdown":
        session.tick([])
    i = 0
    while session.phase == "playing" and i < len(commands):
        session.tick(
            [
                OperatorInput(
                    seq=i,
                    target_q=np.asarray(commands[i]["q"], dtype=np.float64),
                    gripper_closed=bool(commands[i]["grip"]),
                )
            ]
        )
        i += 1
    if session.phase == "playing":
        if episode.incomplete:
            session.abort_attempt()
        else:
            session.tick([])  # timeout tick consumes no command
    mismatches: list[str] = []
    got = tuple(session.episodes[-1].stage_results) if session.episodes else ()
    if got != episode.stage_results:
        mismatches.append("stage_results")
    final_hash = session.final_hash()
    if final_hash != stored_hash:
        mismatches.append("final_hash")
    summary = session.end_session()
    return ReplayResult(
        summary=summary,
        stage_results=got,
        final_hash=final_hash,
        matches_stored=not mismatches,
        mismatches=tuple(mismatches),
    )
