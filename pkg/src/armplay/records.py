"""Recorded transition / episode value types shared by the session loop,
the on-disk dataset, and replay."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tasks import StageResult

SOFTWARE_VERSION = "armplay-0.1.0"


@dataclass(frozen=True)
class Transition:
    t: float
    q: np.ndarray  # (7,)
    gripper_aperture: float
    ee_position: np.ndarray  # (3,)
    ee_orientation: np.ndarray  # (4,) wxyz
    object_poses: np.ndarray  # (K, 7): xyz + wxyz, scene object order
    action_q: np.ndarray  # (7,) commanded target
    action_gripper_closed: bool


@dataclass(frozen=True)
class Episode:
    episode_id: str
    task_id: str
    player_id: str
    attempt_index: int
    seed: int
    stage_results: tuple[StageResult, ...]
    success: bool
    incomplete: bool
    object_ids: tuple[str, ...]
    transitions: tuple[Transition, ...]
    software_version: str = SOFTWARE_VERSION
