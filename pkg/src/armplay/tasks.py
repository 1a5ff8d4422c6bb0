"""Declarative task specs, ordered stage predicates, scoring, and the
gamified feedback events they emit.

Tasks are data: each ships as a YAML file under data/tasks/ (schema
armplay/task-v1; see the authoring notes in data/tasks/README.md).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .arm import ArmState
from .geometry import yaw_of_quat
from .scene import (
    ObjectPlacement,
    RandomizationSpec,
    SceneState,
    lid_closed as scene_lid_closed,
)

TASK_DIR = Path(__file__).parent / "data" / "tasks"
TASK_IDS = (
    "SceneTwins",
    "GroceryCheckout",
    "AnimalDorms",
    "ArrangeDesk",
    "ScanBottle",
    "PackBox",
)

STAGE_KINDS = (
    "picked",
    "placed_in_zone",
    "placed_matching_pose",
    "scanned",
    "inserted_color_match",
    "lid_closed",
    "reached",
)

STAGE_POINTS = 100
BONUS_PER_10S = 100


class UnknownTaskError(KeyError):
    pass


class UnsupportedGoalKindError(ValueError):
    pass


@dataclass(frozen=True)
class StagePredicate:
    id: str
    kind: str
    ref: str | None = None
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StageResult:
    stage_id: str
    achieved: bool
    t_achieved: float | None = None


@dataclass(frozen=True)
class GameEvent:
    kind: str
    t: float
    payload: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TaskSpec:
    id: str
    narrative: str
    time_limit: float
    stages: tuple[StagePredicate, ...]
    randomization: RandomizationSpec
    max_attempts: int = 3
    support: bool = True  # gamified support task vs plain target task

    def stage_index(self, stage_id: str) -> int:
        for i, s in enumerate(self.stages):
            if s.id == stage_id:
                return i
        raise KeyError(stage_id)


def load_task(task_id: str) -> TaskSpec:
    path = TASK_DIR / f"{task_id}.yaml"
    if not path.exists():
        raise UnknownTaskError(task_id)
    with open(path) as f:
        raw = yaml.safe_load(f)
    if raw.get("schema") != "armplay/task-v1":
        raise ValueError(f"unsupported task schema in {path}")
    placements = tuple(
        ObjectPlacement(
            id=p["id"],
            cls=p["cls"],
            aabb=tuple(p["aabb"]) if "aabb" in p else None,
            yaw_range=tuple(p.get("yaw_range", (0.0, 0.0))),
            fixed=tuple(p["fixed"]) if "fixed" in p else None,
            color_tag=p.get("color_tag"),
            color_choices=tuple(p["color_choices"]) if "color_choices" in p else None,
            graspable=p.get("graspable", True),
            grasp_radius=p.get("grasp_radius", 0.03),
            barcode_axis=tuple(p["barcode_axis"]) if "barcode_axis" in p else None,
        )
        for p in raw["objects"]
    )
    rand = RandomizationSpec(
        placements=placements,
        goal_kind=raw["goal"]["kind"],
        goal_params=raw["goal"].get("params", {}),
        min_clearance=raw.get("min_clearance", 0.06),
    )
    stages = tuple(
        StagePredicate(
            id=s["id"], kind=s["kind"], ref=s.get("ref"), params=s.get("params", {})
        )
        for s in raw["stages"]
    )
    if not stages:
        raise ValueError(f"{task_id}: stages must be non-empty")
    for s in stages:
        if s.kind not in STAGE_KINDS:
            raise ValueError(f"{task_id}: unknown stage kind {s.kind!r}")
    return TaskSpec(
        id=raw["id"],
        narrative=raw["narrative"],
        time_limit=float(raw["time_limit"]),
        stages=stages,
        randomization=rand,
        max_attempts=int(raw.get("max_attempts", 3)),
        support=bool(raw.get("support", True)),
    )


def resolve_ref(scene: SceneState, ref: str) -> str:
    """Map a stage ref to a concrete object id. Refs of the form goal:<n>
    indirect through the seeded goal so stages can track randomized targets."""
    if ref.startswith("goal:"):
        key = ref.split(":", 1)[1]
        if key.isdigit():
            return scene.goal.entries[int(key)]["ref"]
        return scene.goal.entries[0][key]
    return ref


def _yaw_diff(a: float, b: float) -> float:
    d = (a - b + math.pi) % (2 * math.pi) - math.pi
    return abs(d)


def _stage_holds(
    stage: StagePredicate,
    scene: SceneState,
    arm: ArmState,
    achieved_ids: set[str],
) -> bool:
    p = stage.params
    if stage.kind == "lid_closed":
        return scene_lid_closed(scene)
    obj = scene.get(resolve_ref(scene, stage.ref))
    if stage.kind == "picked":
        return obj.attached
    if stage.kind == "reached":
        if p.get("require_attached") is not None:
            if scene.attached_id != resolve_ref(scene, p["require_attached"]):
                return False
        d = float(np.linalg.norm(obj.pose.position - arm.ee_pose.position))
        return d <= p.get("dist", 0.05)
    if stage.kind == "placed_in_zone":
        return (not obj.attached) and obj.support == _zone_tag(scene, p["zone"])
    if stage.kind == "inserted_color_match":
        house = scene.goal.entries[0]["house"]
        return (not obj.attached) and obj.support == f"house:{house}"
    if stage.kind == "placed_matching_pose":
        if obj.attached:
            return False
        entry = scene.goal.entries[int(p["goal_entry"])]
        tx, ty = entry["target_pos"]
        dx = float(obj.pose.position[0] - tx)
        dy = float(obj.pose.position[1] - ty)
        if "perp_tol" in p:
            if abs(dx) > p["perp_tol"] or abs(dy) > p["along_tol"]:
                return False
        elif math.hypot(dx, dy) > p["pos_tol"]:
            return False
        if "yaw_tol_deg" in p and "target_yaw" in entry:
            if _yaw_diff(yaw_of_quat(obj.pose.orientation), entry["target_yaw"]) > math.radians(
                p["yaw_tol_deg"]
            ):
                return False
        return True
    if stage.kind == "scanned":
        scanner = scene.get(p["scanner"])
        center = scanner.pose.position + np.asarray(p.get("scan_center_offset", [0, 0, 0.12]))
        half = p.get("zone_half", 0.075)
        if np.max(np.abs(obj.pose.position - center)) > half:
            return False
        axis_w = obj.barcode_axis_world()
        if axis_w is None:
            return True
        scan_axis = np.asarray(p.get("scanner_axis", [0.0, 1.0, 0.0]), dtype=np.float64)
        scan_axis = scan_axis / np.linalg.norm(scan_axis)
        cos = float(np.dot(axis_w, scan_axis) / np.linalg.norm(axis_w))
        return cos >= math.cos(math.radians(p.get("cone_half_angle_deg", 30.0)))
    raise ValueError(f"unknown stage kind {stage.kind!r}")


def _zone_tag(scene: SceneState, zone: str) -> str:
    return zone


def evaluate_stages(
    spec: TaskSpec,
    scene: SceneState,
    arm: ArmState,
    prior: list[StageResult],
    t: float,
) -> tuple[list[StageResult], list[GameEvent]]:
    """Latching, ordered stage evaluation; returns updated results plus the
    feedback events triggered by newly achieved stages."""
    if not prior:
        prior = [StageResult(s.id, False) for s in spec.stages]
    results: list[StageResult] = []
    events: list[GameEvent] = []
    achieved_ids = {r.stage_id for r in prior if r.achieved}
    all_previous_achieved = True
    for stage, old in zip(spec.stages, prior):
        if old.achieved:
            results.append(old)
            continue
        achieved = all_previous_achieved and _stage_holds(stage, scene, arm, achieved_ids)
        if achieved:
            results.append(StageResult(stage.id, True, t))
            events.append(GameEvent("stage_complete", t, {"stage": stage.id}))
            if stage.kind == "scanned":
                events.append(GameEvent("scan_beep", t, {"object": resolve_ref(scene, stage.ref)}))
                if scene.goal.kind == "receipt_list":
                    events.append(
                        GameEvent("receipt_check", t, {"object": resolve_ref(scene, stage.ref)})
                    )
                events.append(GameEvent("confetti", t, {}))
        else:
            results.append(StageResult(stage.id, False))
            all_previous_achieved = False
    return results, events


def score_attempt(spec: TaskSpec, results: list[StageResult], remaining_time: float = 0.0) -> int:
    """100 points per achieved stage, plus a speed bonus on full success."""
    if len(results) != len(spec.stages):
        raise ValueError("results length must match stage count")
    achieved = sum(1 for r in results if r.achieved)
    points = STAGE_POINTS * achieved
    if achieved == len(spec.stages):
        points += BONUS_PER_10S * math.ceil(max(0.0, remaining_time) / 10.0)
    return points


def _footprint_polygon(cls: str, x: float, y: float, yaw: float) -> list[list[float]]:
    from .scene import CLASS_DIMS

    w, d, _ = CLASS_DIMS[cls]
    c, s = math.cos(yaw), math.sin(yaw)
    corners = []
    for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
        px, py = sx * w / 2, sy * d / 2
        corners.append([x + c * px - s * py, y + s * px + c * py])
    return corners


def goal_overlay(spec: TaskSpec, scene: SceneState, results: list[StageResult] | None = None) -> dict:
    """Render-agnostic goal description for the HUD overlay."""
    goal = scene.goal
    if goal.kind in ("scene_layout", "line_arrangement"):
        outlines = []
        for e in goal.entries:
            obj = scene.get(e["ref"])
            yaw = e.get("target_yaw", 0.0)
            outlines.append(
                {
                    "ref": e["ref"],
                    "polygon": _footprint_polygon(obj.cls, *e["target_pos"], yaw),
                    "target_yaw": yaw,
                }
            )
        return {"kind": goal.kind, "outlines": outlines}
    if goal.kind == "receipt_list":
        checked = set()
        if results:
            by_id = {r.stage_id: r for r in results}
            for stage in spec.stages:
                if stage.kind == "scanned" and by_id.get(stage.id, StageResult("", False)).achieved:
                    checked.add(resolve_ref(scene, stage.ref))
        return {
            "kind": "receipt_list",
            "items": [
                {"ref": e["ref"], "checked": e["ref"] in checked} for e in goal.entries
            ],
        }
    if goal.kind == "color_match":
        houses = [
            {"house": o.id, "color": o.color_tag}
            for o in scene.by_class("house_box")
        ]
        return {"kind": "color_match", "target": dict(goal.entries[0]), "houses": houses}
    if goal.kind == "scan_target":
        return {"kind": "scan_target", **goal.entries[0]}
    if goal.kind == "pack_target":
        return {"kind": "pack_target", **goal.entries[0]}
    raise UnsupportedGoalKindError(goal.kind)
