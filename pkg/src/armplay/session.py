"""Per-session game loop: phase machine, clock, attempts, input application,
event aggregation, and episode boundaries.

A Session is single-writer: tick/next_attempt/end_session must be invoked
sequentially by the owning execution context. Given the same (seed, input
log, dt schedule) the full trajectory, events, and summary are bit-identical.
"""
from __future__ import annotations

import hashlib
import math
import secrets
import struct
from dataclasses import dataclass, field

import numpy as np

from . import arm as arm_mod
from . import scene as scene_mod
from . import tasks as tasks_mod
from .arm import ArmState, KinematicChain, SafetyConfig
from .records import SOFTWARE_VERSION, Episode, Transition
from .scene import SceneState
from .tasks import GameEvent, StageResult, TaskSpec

SIM_DT = 1.0 / 60.0
RECORD_EVERY_TICKS = 5  # 60 Hz sim -> 12 Hz transitions
COUNTDOWN_S = 3.0
TIME_WARNING_FRACTION = 0.75

PHASES = ("lobby", "countdown", "playing", "between_attempts", "ended")


class AttemptsExhaustedError(RuntimeError):
    pass


class PhaseError(RuntimeError):
    pass


@dataclass(frozen=True)
class OperatorInput:
    seq: int
    target_q: np.ndarray
    gripper_closed: bool
    client_timestamp: float = 0.0


@dataclass(frozen=True)
class AttemptSummary:
    attempt_index: int
    seed: int
    stage_results: tuple[StageResult, ...]
    points: int
    success: bool
    incomplete: bool
    episode_id: str
    duration: float


@dataclass(frozen=True)
class SessionSummary:
    summary_id: str
    session_id: str
    player_id: str
    task_id: str
    attempts: tuple[AttemptSummary, ...]
    total_points: int
    best_attempt_index: int | None

    @property
    def episode_ids(self) -> tuple[str, ...]:
        return tuple(a.episode_id for a in self.attempts)


def derive_attempt_seed(base_seed: int, attempt_index: int) -> int:
    if attempt_index == 1:
        return base_seed
    x = (base_seed ^ (attempt_index * 0x9E3779B97F4A7C15)) & 0x7FFFFFFFFFFFFFFF
    return x


def scene_hash(scene: SceneState, arm_state: ArmState) -> str:
    """Canonical digest of the final world state, used by replay checks."""
    h = hashlib.sha256()
    h.update(struct.pack("<d", scene.lid_angle))
    h.update((scene.attached_id or "").encode())
    for o in scene.objects:
        h.update(o.id.encode())
        h.update(o.pose.position.astype("<f8").tobytes())
        h.update(o.pose.orientation.astype("<f8").tobytes())
        h.update(o.support.encode())
    h.update(arm_state.q.astype("<f8").tobytes())
    h.update(struct.pack("<d", arm_state.gripper.aperture))
    return h.hexdigest()


class Session:
    """Owns the live state for one operator and any number of spectators."""

    def __init__(
        self,
        player_id: str,
        spec: TaskSpec,
        chain: KinematicChain,
        safety: SafetyConfig,
        seed: int,
        session_id: str | None = None,
    ):
        self.session_id = session_id or secrets.token_hex(16)
        self.player_id = player_id
        self.spec = spec
        self.chain = chain
        self.safety = safety
        self.base_seed = int(seed)
        self.phase = "lobby"
        self.attempt_index = 1
        self.clock = 0.0
        self.score_so_far = 0
        self.spectators: set[str] = set()
        self.dropped_inputs = 0
        self._countdown = 0.0
        self._attempts: list[AttemptSummary] = []
        self._episodes: list[Episode] = []
        self._command_logs: dict[str, list[tuple[np.ndarray, bool]]] = {}
        self._final_hashes: dict[str, str] = {}
        self._reset_attempt(derive_attempt_seed(self.base_seed, 1))

    # -- attempt lifecycle ------------------------------------------------

    def _reset_attempt(self, seed: int):
        self.attempt_seed = seed
        self.scene: SceneState = scene_mod.randomize_scene(self.spec.randomization, seed)
        self.arm: ArmState = arm_mod.initial_state(self.chain)
        self.stage_results: list[StageResult] = [
            StageResult(s.id, False) for s in self.spec.stages
        ]
        self.clock = 0.0
        self._play_tick = 0
        self._last_seq = -1
        self._commanded_q = self.arm.q.copy()
        self._gripper_cmd = False
        self._warned = False
        self._transitions: list[Transition] = []
        self._commands: list[tuple[np.ndarray, bool]] = []

    def begin_attempt(self) -> list[GameEvent]:
        if self.phase not in ("lobby", "between_attempts"):
            raise PhaseError(f"cannot begin attempt in phase {self.phase}")
        self.phase = "countdown"
        self._countdown = COUNTDOWN_S
        return []

    def next_attempt(self, reuse_seed: bool = False):
        if self.phase != "between_attempts":
            raise PhaseError(f"next_attempt requires between_attempts, got {self.phase}")
        if self.attempt_index >= self.spec.max_attempts:
            self.phase = "ended"
            raise AttemptsExhaustedError(
                f"all {self.spec.max_attempts} attempts used"
            )
        self.attempt_index += 1
        seed = self.attempt_seed if reuse_seed else derive_attempt_seed(
            self.base_seed, self.attempt_index
        )
        self._reset_attempt(seed)

    # -- main loop --------------------------------------------------------

    def tick(
        self, pending_inputs: list[OperatorInput], dt: float = SIM_DT
    ) -> tuple[list[GameEvent], list[Transition]]:
        if self.phase == "countdown":
            self._countdown -= dt
            if self._countdown <= 1e-9:
                self.phase = "playing"
                return [GameEvent("attempt_start", 0.0, {"attempt": self.attempt_index})], []
            return [], []
        if self.phase != "playing":
            raise PhaseError(f"tick requires playing phase, got {self.phase}")

        events: list[GameEvent] = []
        transitions: list[Transition] = []

        if self.clock >= self.spec.time_limit - 1e-9:
            events.append(GameEvent("timeout", self.clock, {}))
            events += self._finish_attempt(success=False)
            return events, transitions

        # latest-wins input coalescing; non-increasing seq is dropped
        applied: OperatorInput | None = None
        for inp in pending_inputs:
            if inp.seq > self._last_seq:
                self._last_seq = inp.seq
                applied = inp
            else:
                self.dropped_inputs += 1
        if applied is not None:
            self._commanded_q = np.asarray(applied.target_q, dtype=np.float64)
            new_grip = bool(applied.gripper_closed)
        else:
            new_grip = self._gripper_cmd

        safe_q = arm_mod.clamp_command(self.arm, self._commanded_q, self.safety, self.chain)
        self._commands.append((self._commanded_q.copy(), new_grip))

        if self._play_tick % RECORD_EVERY_TICKS == 0:
            tr = self._make_transition(safe_q, new_grip)
            transitions.append(tr)
            self._transitions.append(tr)

        self.arm = arm_mod.step(self.arm, safe_q, new_grip, dt, self.chain)

        if new_grip != self._gripper_cmd:
            if new_grip:
                self.scene, grasped = scene_mod.try_grasp(self.scene, self.arm.ee_pose, True)
                if grasped is not None:
                    events.append(
                        GameEvent("grasp_highlight", self.clock, {"object": grasped})
                    )
            else:
                self.scene = scene_mod.release(self.scene, self.arm.ee_pose)
            self._gripper_cmd = new_grip
        self.scene = scene_mod.carry(self.scene, self.arm.ee_pose)
        self.scene = scene_mod.update_lid(
            self.scene, self.arm.ee_pose, self.arm.gripper_closed, dt
        )

        self._play_tick += 1
        self.clock += dt

        self.stage_results, stage_events = tasks_mod.evaluate_stages(
            self.spec, self.scene, self.arm, self.stage_results, self.clock
        )
        events += stage_events

        if not self._warned and self.clock >= TIME_WARNING_FRACTION * self.spec.time_limit:
            self._warned = True
            events.append(GameEvent("time_warning", self.clock, {}))

        if all(r.achieved for r in self.stage_results):
            events += self._finish_attempt(success=True)
        return events, transitions

    def _make_transition(self, action_q: np.ndarray, action_grip: bool) -> Transition:
        poses = np.array(
            [
                np.concatenate([o.pose.position, o.pose.orientation])
                for o in self.scene.objects
            ]
        )
        return Transition(
            t=self._play_tick * SIM_DT,
            q=self.arm.q.copy(),
            gripper_aperture=self.arm.gripper.aperture,
            ee_position=self.arm.ee_pose.position.copy(),
            ee_orientation=self.arm.ee_pose.orientation.copy(),
            object_poses=poses,
            action_q=np.asarray(action_q, dtype=np.float64).copy(),
            action_gripper_closed=action_grip,
        )

    def _finish_attempt(self, success: bool, incomplete: bool = False) -> list[GameEvent]:
        remaining = max(0.0, self.spec.time_limit - self.clock)
        points = tasks_mod.score_attempt(self.spec, self.stage_results, remaining)
        episode_id = (
            f"{self.spec.id}-{self.player_id}-{self.attempt_seed:016x}-a{self.attempt_index}"
        )
        summary = AttemptSummary(
            attempt_index=self.attempt_index,
            seed=self.attempt_seed,
            stage_results=tuple(self.stage_results),
            points=points,
            success=success,
            incomplete=incomplete,
            episode_id=episode_id,
            duration=self.clock,
        )
        self._attempts.append(summary)
        self._episodes.append(
            Episode(
                episode_id=episode_id,
                task_id=self.spec.id,
                player_id=self.player_id,
                attempt_index=self.attempt_index,
                seed=self.attempt_seed,
                stage_results=tuple(self.stage_results),
                success=success,
                incomplete=incomplete,
                object_ids=tuple(o.id for o in self.scene.objects),
                transitions=tuple(self._transitions),
            )
        )
        self._command_logs[episode_id] = list(self._commands)
        self._final_hashes[episode_id] = scene_hash(self.scene, self.arm)
        self.score_so_far += points
        self.phase = "between_attempts"
        if self.attempt_index >= self.spec.max_attempts:
            self.phase = "ended"
        return [
            GameEvent(
                "attempt_end",
                self.clock,
                {
                    "attempt": self.attempt_index,
                    "success": success,
                    "points": points,
                    "incomplete": incomplete,
                },
            )
        ]

    def abort_attempt(self) -> list[GameEvent]:
        """Operator disconnected mid-attempt: persist what we have."""
        if self.phase not in ("playing", "countdown"):
            return []
        if self.phase == "countdown":
            self.phase = "between_attempts"
            return []
        events = self._finish_attempt(success=False, incomplete=True)
        return events

    def end_session(self) -> SessionSummary:
        if self.phase in ("playing", "countdown"):
            self.abort_attempt()
        self.phase = "ended"
        total = sum(a.points for a in self._attempts)
        best = None
        if self._attempts:
            best = max(
                self._attempts,
                key=lambda a: (a.success, a.points, -a.attempt_index),
            ).attempt_index
        return SessionSummary(
            summary_id=self.session_id,
            session_id=self.session_id,
            player_id=self.player_id,
            task_id=self.spec.id,
            attempts=tuple(self._attempts),
            total_points=total,
            best_attempt_index=best,
        )

    @property
    def episodes(self) -> tuple[Episode, ...]:
        return tuple(self._episodes)

    def command_log(self, episode_id: str) -> list[tuple[np.ndarray, bool]]:
        return self._command_logs[episode_id]

    def episode_final_hash(self, episode_id: str) -> str:
        return self._final_hashes[episode_id]

    def final_hash(self) -> str:
        return scene_hash(self.scene, self.arm)


def create_session(
    player_id: str,
    task_id: str,
    seed: int,
    chain: KinematicChain | None = None,
    safety: SafetyConfig | None = None,
    session_id: str | None = None,
) -> Session:
    spec = tasks_mod.load_task(task_id)
    if chain is None or safety is None:
        chain, safety = arm_mod.load_arm_config()
    return Session(player_id, spec, chain, safety, seed, session_id=session_id)
