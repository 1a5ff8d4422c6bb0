"""Manipulable scene objects, magnetic grasping, and seeded randomization.

Objects are bounding-box primitives resting on a table plane at z=0 (by
default). A closing gripper rigidly attaches the nearest graspable object
within its grasp radius; releases project the object onto the nearest
support surface (table, box interior, basket).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Pose3, quat_from_yaw, yaw_of_quat

OBJECT_CLASSES = (
    "animal_block",
    "grocery_item",
    "animal_toy",
    "house_box",
    "usb_adapter",
    "mouse",
    "mug",
    "threadlocker_bottle",
    "tape_roll",
    "cardboard_box",
    "box_lid",
    "basket",
    "scanner",
)

# footprint (x, y) and height (z), meters
CLASS_DIMS = {
    "animal_block": (0.04, 0.04, 0.04),
    "grocery_item": (0.05, 0.05, 0.10),
    "animal_toy": (0.04, 0.04, 0.06),
    "house_box": (0.12, 0.12, 0.10),
    "usb_adapter": (0.03, 0.02, 0.01),
    "mouse": (0.06, 0.10, 0.035),
    "mug": (0.08, 0.08, 0.09),
    "threadlocker_bottle": (0.03, 0.03, 0.09),
    "tape_roll": (0.07, 0.07, 0.02),
    "cardboard_box": (0.20, 0.20, 0.10),
    "box_lid": (0.20, 0.20, 0.01),
    "basket": (0.25, 0.25, 0.12),
    "scanner": (0.10, 0.10, 0.15),
}

COLOR_RGB = {
    "red": (220, 60, 50),
    "green": (60, 180, 80),
    "blue": (60, 90, 220),
    "yellow": (230, 200, 40),
    "orange": (240, 140, 40),
    "purple": (150, 70, 200),
    "brown": (140, 100, 60),
    "white": (235, 235, 235),
    "gray": (130, 130, 130),
    "black": (40, 40, 40),
}

CLASS_COLOR = {
    "animal_block": "yellow",
    "grocery_item": "orange",
    "animal_toy": "red",
    "house_box": "brown",
    "usb_adapter": "black",
    "mouse": "gray",
    "mug": "white",
    "threadlocker_bottle": "red",
    "tape_roll": "black",
    "cardboard_box": "brown",
    "box_lid": "brown",
    "basket": "green",
    "scanner": "purple",
}

DEFAULT_GRASP_RADIUS = 0.03
DEFAULT_MIN_CLEARANCE = 0.06
BOX_FLOOR = 0.01  # interior floor height above box base
LID_OPEN_ANGLE = np.pi / 2
LID_RATE = 1.2  # rad/s while pushing
LID_CLOSED_ANGLE = 0.05
LID_BLOCK_ANGLE = 0.4  # cannot close past this while blocked
LID_PASSABLE_ANGLE = 1.0  # interior reachable while lid at least this open
INNER_FOOTPRINT_FRACTION = 0.6


class PlacementInfeasibleError(RuntimeError):
    pass


@dataclass(frozen=True)
class SceneObject:
    id: str
    cls: str
    pose: Pose3
    grasp_radius: float = DEFAULT_GRASP_RADIUS
    graspable: bool = True
    attached: bool = False
    color_tag: str | None = None
    barcode_axis: np.ndarray | None = None  # unit vector, object frame
    support: str = "table"  # "table" | "box:<id>" | "basket:<id>" | "house:<id>"

    @property
    def dims(self) -> tuple[float, float, float]:
        return CLASS_DIMS[self.cls]

    @property
    def half_height(self) -> float:
        return self.dims[2] / 2.0

    @property
    def footprint_radius(self) -> float:
        w, d, _ = self.dims
        return max(w, d) / 2.0

    @property
    def rgb(self) -> tuple[int, int, int]:
        return COLOR_RGB[self.color_tag or CLASS_COLOR[self.cls]]

    def barcode_axis_world(self) -> np.ndarray | None:
        if self.barcode_axis is None:
            return None
        from .geometry import quat_rotate

        return quat_rotate(self.pose.orientation, np.asarray(self.barcode_axis, dtype=np.float64))


@dataclass(frozen=True)
class GoalSpec:
    kind: str  # scene_layout | receipt_list | color_match | line_arrangement | scan_target | pack_target
    entries: tuple[dict, ...] = ()


@dataclass(frozen=True)
class SceneState:
    objects: tuple[SceneObject, ...]
    goal: GoalSpec
    seed: int
    table_z: float = 0.0
    lid_angle: float = LID_OPEN_ANGLE
    attached_id: str | None = None
    grasp_offset: Pose3 | None = None

    def get(self, obj_id: str) -> SceneObject:
        for o in self.objects:
            if o.id == obj_id:
                return o
        raise KeyError(obj_id)

    def by_class(self, cls: str) -> list[SceneObject]:
        return [o for o in self.objects if o.cls == cls]

    def with_object(self, obj: SceneObject) -> "SceneState":
        return replace(
            self, objects=tuple(obj if o.id == obj.id else o for o in self.objects)
        )


@dataclass(frozen=True)
class ObjectPlacement:
    """Randomization entry for one object."""

    id: str
    cls: str
    aabb: tuple[float, float, float, float] | None = None  # x0, y0, x1, y1
    yaw_range: tuple[float, float] = (0.0, 0.0)
    fixed: tuple[float, float, float] | None = None  # x, y, yaw
    color_tag: str | None = None
    color_choices: tuple[str, ...] | None = None
    graspable: bool = True
    grasp_radius: float = DEFAULT_GRASP_RADIUS
    barcode_axis: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class RandomizationSpec:
    placements: tuple[ObjectPlacement, ...]
    goal_kind: str
    goal_params: dict = field(default_factory=dict)
    min_clearance: float = DEFAULT_MIN_CLEARANCE
    table_z: float = 0.0


def _clearance(px, py, placed: list[SceneObject]) -> float:
    best = np.inf
    for o in placed:
        d = float(np.hypot(px - o.pose.position[0], py - o.pose.position[1]))
        best = min(best, d)
    return best


def randomize_scene(spec: RandomizationSpec, seed: int) -> SceneState:
    """Deterministic seeded layout; rejection-samples until clearances hold."""
    if not spec.placements:
        raise ValueError("empty randomization spec")
    rng = np.random.default_rng(np.uint64(seed) & np.uint64(0xFFFFFFFFFFFFFFFF))
    placed: list[SceneObject] = []
    for pl in spec.placements:
        color = pl.color_tag
        if pl.color_choices:
            color = str(rng.choice(list(pl.color_choices)))
        if pl.fixed is not None:
            x, y, yaw = pl.fixed
        else:
            x0, y0, x1, y1 = pl.aabb
            ok = False
            for _ in range(1000):
                x = float(rng.uniform(x0, x1))
                y = float(rng.uniform(y0, y1))
                if _clearance(x, y, placed) >= spec.min_clearance:
                    ok = True
                    break
            if not ok:
                raise PlacementInfeasibleError(
                    f"could not place {pl.id!r} with clearance {spec.min_clearance}"
                )
            yaw = float(rng.uniform(*pl.yaw_range))
        half_h = CLASS_DIMS[pl.cls][2] / 2.0
        placed.append(
            SceneObject(
                id=pl.id,
                cls=pl.cls,
                pose=Pose3(np.array([x, y, spec.table_z + half_h]), quat_from_yaw(yaw)),
                grasp_radius=pl.grasp_radius,
                graspable=pl.graspable,
                color_tag=color,
                barcode_axis=None
                if pl.barcode_axis is None
                else np.asarray(pl.barcode_axis, dtype=np.float64),
            )
        )
    goal = _generate_goal(spec, placed, rng)
    return SceneState(objects=tuple(placed), goal=goal, seed=int(seed), table_z=spec.table_z)


def _generate_goal(spec: RandomizationSpec, placed: list[SceneObject], rng) -> GoalSpec:
    kind = spec.goal_kind
    p = spec.goal_params
    if kind == "scene_layout":
        targets = []
        goal_placed: list[SceneObject] = []
        for ref in p["objects"]:
            obj = next(o for o in placed if o.id == ref)
            x0, y0, x1, y1 = p["aabb"]
            for _ in range(1000):
                x = float(rng.uniform(x0, x1))
                y = float(rng.uniform(y0, y1))
                if _clearance(x, y, goal_placed) >= spec.min_clearance:
                    break
            else:
                raise PlacementInfeasibleError("goal layout infeasible")
            yaw = float(rng.uniform(-np.pi, np.pi))
            goal_placed.append(replace(obj, pose=Pose3(np.array([x, y, 0.0]), quat_from_yaw(yaw))))
            targets.append({"ref": ref, "target_pos": [x, y], "target_yaw": yaw})
        return GoalSpec("scene_layout", tuple(targets))
    if kind == "receipt_list":
        pool = [o.id for o in placed if o.cls == "grocery_item"]
        count = int(p.get("count", 2))
        ids = list(rng.choice(pool, size=count, replace=False))
        return GoalSpec("receipt_list", tuple({"ref": str(i)} for i in ids))
    if kind == "color_match":
        animal = next(o for o in placed if o.cls == "animal_toy")
        house = next(o for o in placed if o.cls == "house_box" and o.color_tag == animal.color_tag)
        return GoalSpec("color_match", ({"ref": animal.id, "house": house.id},))
    if kind == "line_arrangement":
        x = float(p["line_x"])
        y0 = float(rng.uniform(*p.get("anchor_y_range", (-0.15, 0.05))))
        spacing = float(p.get("spacing", 0.12))
        entries = []
        for i, ref in enumerate(p["objects"]):
            entries.append({"ref": ref, "target_pos": [x, y0 + i * spacing]})
        return GoalSpec("line_arrangement", tuple(entries))
    if kind == "scan_target":
        return GoalSpec("scan_target", ({"ref": p["object"], "scanner": p["scanner"]},))
    if kind == "pack_target":
        return GoalSpec("pack_target", ({"ref": p["object"], "box": p["box"]},))
    raise ValueError(f"unknown goal kind {kind!r}")


def try_grasp(
    scene: SceneState, ee: Pose3, gripper_closing: bool
) -> tuple[SceneState, str | None]:
    """Magnetic grasp: on close, attach the nearest graspable object within
    its grasp radius. Ties break toward the lexicographically smaller id."""
    if not gripper_closing or scene.attached_id is not None:
        return scene, None
    best: SceneObject | None = None
    best_d = np.inf
    for o in sorted(scene.objects, key=lambda o: o.id):
        if not o.graspable or o.attached:
            continue
        d = float(np.linalg.norm(o.pose.position - ee.position))
        if d <= o.grasp_radius and d < best_d - 1e-12:
            best, best_d = o, d
    if best is None:
        return scene, None
    offset = ee.inverse().compose(best.pose)
    scene = scene.with_object(replace(best, attached=True, support="gripper"))
    scene = replace(scene, attached_id=best.id, grasp_offset=offset)
    return scene, best.id


def carry(scene: SceneState, ee: Pose3) -> SceneState:
    """Keep the attached object rigidly on the gripper."""
    if scene.attached_id is None:
        return scene
    obj = scene.get(scene.attached_id)
    return scene.with_object(replace(obj, pose=ee.compose(scene.grasp_offset)))


def _support_for(scene: SceneState, x: float, y: float) -> tuple[str, float]:
    """Support tag and surface z under (x, y)."""
    for o in scene.objects:
        if o.cls not in ("cardboard_box", "basket", "house_box"):
            continue
        w, d, _ = o.dims
        dx = abs(x - o.pose.position[0])
        dy = abs(y - o.pose.position[1])
        if dx <= w / 2 and dy <= d / 2:
            if o.cls == "cardboard_box":
                if scene.lid_angle < LID_PASSABLE_ANGLE:
                    return "table", scene.table_z + o.dims[2]  # lands on the lid
                return f"box:{o.id}", scene.table_z + BOX_FLOOR
            tag = "basket" if o.cls == "basket" else "house"
            return f"{tag}:{o.id}", scene.table_z + BOX_FLOOR
    return "table", scene.table_z


def release(scene: SceneState, ee: Pose3) -> SceneState:
    """Detach and settle the carried object upright on its support."""
    if scene.attached_id is None:
        return scene
    obj = scene.get(scene.attached_id)
    x, y = float(obj.pose.position[0]), float(obj.pose.position[1])
    support, z_surface = _support_for(scene, x, y)
    pose = Pose3(
        np.array([x, y, z_surface + obj.half_height]),
        quat_from_yaw(yaw_of_quat(obj.pose.orientation)),
    )
    scene = scene.with_object(replace(obj, attached=False, pose=pose, support=support))
    return replace(scene, attached_id=None, grasp_offset=None)


def update_lid(scene: SceneState, ee: Pose3, gripper_closed: bool, dt: float) -> SceneState:
    """Hinged box lid: pushing inside the handle zone with an empty, open
    gripper closes it. Blocked midway if the boxed object sits near an edge."""
    boxes = scene.by_class("cardboard_box")
    if not boxes or scene.lid_angle <= LID_CLOSED_ANGLE:
        return scene
    box = boxes[0]
    if gripper_closed or scene.attached_id is not None:
        return scene
    w, d, h = box.dims
    # handle zone: above the lid hinge edge (+x side), within reach of the lid top
    hx = box.pose.position[0] + w / 2
    hy = box.pose.position[1]
    ex, ey, ez = ee.position
    if abs(ex - hx) > 0.08 or abs(ey - hy) > d / 2 or not (0.0 < ez - scene.table_z < h + 0.25):
        return scene
    angle = max(0.0, scene.lid_angle - LID_RATE * dt)
    if _lid_blocked(scene, box):
        angle = max(angle, LID_BLOCK_ANGLE)
    return replace(scene, lid_angle=angle)


def _lid_blocked(scene: SceneState, box: SceneObject) -> bool:
    w, d, _ = box.dims
    for o in scene.objects:
        if o.support == f"box:{box.id}":
            dx = abs(o.pose.position[0] - box.pose.position[0])
            dy = abs(o.pose.position[1] - box.pose.position[1])
            if dx > INNER_FOOTPRINT_FRACTION * w / 2 or dy > INNER_FOOTPRINT_FRACTION * d / 2:
                return True
    return False


def lid_closed(scene: SceneState) -> bool:
    return scene.lid_angle <= LID_CLOSED_ANGLE


def scene_to_dict(scene: SceneState) -> dict:
    return {
        "seed": scene.seed,
        "table_z": scene.table_z,
        "lid_angle": float(scene.lid_angle),
        "attached_id": scene.attached_id,
        "grasp_offset": None
        if scene.grasp_offset is None
        else {
            "position": [float(v) for v in scene.grasp_offset.position],
            "orientation": [float(v) for v in scene.grasp_offset.orientation],
        },
        "goal": None
        if scene.goal is None
        else {"kind": scene.goal.kind, "entries": [dict(e) for e in scene.goal.entries]},
        "objects": [
            {
                "id": o.id,
                "cls": o.cls,
                "position": [float(v) for v in o.pose.position],
                "orientation": [float(v) for v in o.pose.orientation],
                "grasp_radius": o.grasp_radius,
                "graspable": o.graspable,
                "attached": o.attached,
                "color_tag": o.color_tag,
                "barcode_axis": None
                if o.barcode_axis is None
                else [float(v) for v in o.barcode_axis],
                "support": o.support,
            }
            for o in scene.objects
        ],
    }


def scene_from_dict(d: dict) -> SceneState:
    objects = tuple(
        SceneObject(
            id=o["id"],
            cls=o["cls"],
            pose=Pose3(np.array(o["position"]), np.array(o["orientation"])),
            grasp_radius=o["grasp_radius"],
            graspable=o["graspable"],
            attached=o["attached"],
            color_tag=o["color_tag"],
            barcode_axis=None if o["barcode_axis"] is None else np.array(o["barcode_axis"]),
            support=o["support"],
        )
        for o in d["objects"]
    )
    go = d["grasp_offset"]
    return SceneState(
        objects=objects,
        goal=None
        if d["goal"] is None
        else GoalSpec(d["goal"]["kind"], tuple(d["goal"]["entries"])),
        seed=d["seed"],
        table_z=d["table_z"],
        lid_angle=d["lid_angle"],
        attached_id=d["attached_id"],
        grasp_offset=None if go is None else Pose3(np.array(go["position"]), np.array(go["orientation"])),
    )
