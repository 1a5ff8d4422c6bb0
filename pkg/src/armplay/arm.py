"""Deterministic kinematic simulation of a 7-DoF arm.

The arm tracks joint-space targets with per-joint velocity limits; commands
pass through a safety clamp that rate-limits them and keeps the end effector
inside the workspace box and above the table.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from . import kernels
from .geometry import Pose3, quat_from_matrix

JointVector = np.ndarray  # shape (7,), radians

NUM_JOINTS = 7
DEFAULT_CONFIG = Path(__file__).parent / "data" / "arm.yaml"


class ConfigError(ValueError):
    pass


class JointLimitError(ValueError):
    pass


@dataclass(frozen=True)
class KinematicChain:
    """Standard DH rows (a, d, alpha, theta_offset) plus joint/velocity limits."""

    dh: np.ndarray  # (7, 4)
    q_min: np.ndarray
    q_max: np.ndarray
    vel_limit: np.ndarray  # rad/s
    home_q: np.ndarray

    def __post_init__(self):
        for name in ("dh", "q_min", "q_max", "vel_limit", "home_q"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if self.dh.shape != (NUM_JOINTS, 4):
            raise ConfigError(f"expected {NUM_JOINTS} DH rows, got {self.dh.shape}")
        for v in (self.q_min, self.q_max, self.vel_limit, self.home_q):
            if v.shape != (NUM_JOINTS,):
                raise ConfigError("limit vectors must have 7 entries")
        if not np.all(np.isfinite(self.q_min)) or not np.all(np.isfinite(self.q_max)):
            raise ConfigError("joint limits must be finite")
        if not np.all(self.q_min < self.q_max):
            raise ConfigError("q_min must be < q_max per joint")
        if not np.all(self.vel_limit > 0):
            raise ConfigError("velocity limits must be positive")

    def check_limits(self, q: JointVector, tol: float = 1e-12):
        q = np.asarray(q, dtype=np.float64)
        if np.any(q < self.q_min - tol) or np.any(q > self.q_max + tol):
            raise JointLimitError(f"joint vector outside limits: {q}")


@dataclass(frozen=True)
class SafetyConfig:
    workspace_lo: np.ndarray  # AABB corner, meters
    workspace_hi: np.ndarray
    max_joint_delta_per_tick: float
    table_height_z: float
    projection_iters: int = 16

    def __post_init__(self):
        object.__setattr__(self, "workspace_lo", np.asarray(self.workspace_lo, dtype=np.float64))
        object.__setattr__(self, "workspace_hi", np.asarray(self.workspace_hi, dtype=np.float64))
        if self.max_joint_delta_per_tick <= 0:
            raise ConfigError("max_joint_delta_per_tick must be > 0")
        if not np.all(self.workspace_lo < self.workspace_hi):
            raise ConfigError("workspace box is inverted")

    @property
    def effective_lo(self) -> np.ndarray:
        lo = self.workspace_lo.copy()
        lo[2] = max(lo[2], self.table_height_z)
        return lo


@dataclass(frozen=True)
class GripperState:
    aperture: float = 1.0  # normalized, 1 = fully open
    commanded_closed: bool = False

    CLOSE_RATE = 4.0  # aperture units per second


@dataclass(frozen=True)
class ArmState:
    q: JointVector
    dq: np.ndarray
    gripper: GripperState
    ee_pose: Pose3
    tick: int = 0

    @property
    def gripper_closed(self) -> bool:
        return self.gripper.aperture < 0.5


def load_arm_config(path: str | Path = DEFAULT_CONFIG) -> tuple[KinematicChain, SafetyConfig]:
    with open(path) as f:
        raw = yaml.safe_load(f)
    if raw.get("schema") != "armplay/arm-v1":
        raise ConfigError(f"unsupported arm config schema in {path}")
    c = raw["chain"]
    chain = KinematicChain(
        dh=[[r["a"], r["d"], r["alpha"], r["theta_offset"]] for r in c["links"]],
        q_min=c["q_min"],
        q_max=c["q_max"],
        vel_limit=c["vel_limit"],
        home_q=c["home_q"],
    )
    s = raw["safety"]
    safety = SafetyConfig(
        workspace_lo=s["workspace_aabb"]["lo"],
        workspace_hi=s["workspace_aabb"]["hi"],
        max_joint_delta_per_tick=s["max_joint_delta_per_tick"],
        table_height_z=s["table_height_z"],
    )
    return chain, safety


def forward_kinematics(chain: KinematicChain, q: JointVector) -> Pose3:
    chain.check_limits(q)
    T = kernels.dh_transform(chain.dh, np.asarray(q, dtype=np.float64))
    return Pose3(T[:3, 3], quat_from_matrix(T[:3, :3]))


def initial_state(chain: KinematicChain) -> ArmState:
    q = chain.home_q.copy()
    return ArmState(
        q=q,
        dq=np.zeros(NUM_JOINTS),
        gripper=GripperState(),
        ee_pose=forward_kinematics(chain, q),
        tick=0,
    )


def clamp_command(
    state: ArmState, target_q: JointVector, cfg: SafetyConfig, chain: KinematicChain
) -> JointVector:
    """Returns a safe joint target; never raises, hostile input allowed."""
    target = np.asarray(target_q, dtype=np.float64)
    target = np.nan_to_num(target, nan=0.0, posinf=1e6, neginf=-1e6)
    return kernels.clamp_command_kernel(
        state.q,
        target,
        chain.q_min,
        chain.q_max,
        cfg.max_joint_delta_per_tick,
        chain.dh,
        cfg.effective_lo,
        cfg.workspace_hi,
        cfg.projection_iters,
    )


def step(
    state: ArmState,
    commanded_q: JointVector,
    gripper_cmd: bool,
    dt: float,
    chain: KinematicChain,
) -> ArmState:
    """Pure transition: velocity-limited tracking plus gripper actuation."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    q_new, dq = kernels.track_step(
        state.q, np.asarray(commanded_q, dtype=np.float64), chain.vel_limit, dt
    )
    g = state.gripper
    target = 0.0 if gripper_cmd else 1.0
    d = np.clip(target - g.aperture, -GripperState.CLOSE_RATE * dt, GripperState.CLOSE_RATE * dt)
    gripper = GripperState(aperture=float(g.aperture + d), commanded_closed=gripper_cmd)
    return ArmState(
        q=q_new,
        dq=dq,
        gripper=gripper,
        ee_pose=forward_kinematics(chain, q_new),
        tick=state.tick + 1,
    )
