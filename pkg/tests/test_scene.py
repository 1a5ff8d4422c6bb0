import numpy as np
import pytest

from armplay.geometry import Pose3, quat_from_yaw
from armplay.scene import (
    DEFAULT_GRASP_RADIUS,
    LID_CLOSED_ANGLE,
    LID_OPEN_ANGLE,
    PlacementInfeasibleError,
    RandomizationSpec,
    ObjectPlacement,
    SceneObject,
    SceneState,
    carry,
    lid_closed,
    randomize_scene,
    release,
    scene_from_dict,
    scene_to_dict,
    try_grasp,
    update_lid,
)


def ee_at(x, y, z, yaw=0.0):
    return Pose3(np.array([x, y, z]), quat_from_yaw(yaw))


def simple_scene(**kw):
    objs = [
        SceneObject(
            id="cup", cls="mug",
            pose=Pose3(np.array([0.4, 0.0, 0.05]), quat_from_yaw(0.0)),
        ),
        SceneObject(
            id="toy", cls="animal_toy",
            pose=Pose3(np.array([0.4, 0.2, 0.035]), quat_from_yaw(0.0)),
        ),
    ]
    return SceneState(objects=tuple(objs), goal=None, seed=0, **kw)


class TestGrasp:
    def test_within_radius(self):
        scene = simple_scene()
        scene2, grabbed = try_grasp(scene, ee_at(0.4, 0.0, 0.06), True)
        assert grabbed == "cup"
        assert scene2.attached_id == "cup"

    def test_out_of_radius_noop(self):
        scene = simple_scene()
        ee = ee_at(0.4, 0.0, 0.05 + DEFAULT_GRASP_RADIUS * 2)
        scene2, grabbed = try_grasp(scene, ee, True)
        assert grabbed is None
        assert scene2.attached_id is None

    def test_nearest_wins(self):
        objs = [
            SceneObject(id="b", cls="mug", pose=Pose3(np.array([0.4, 0.011, 0.05]), quat_from_yaw(0))),
            SceneObject(id="a", cls="mug", pose=Pose3(np.array([0.4, -0.01, 0.05]), quat_from_yaw(0))),
        ]
        scene = SceneState(objects=tuple(objs), goal=None, seed=0)
        _, grabbed = try_grasp(scene, ee_at(0.4, 0.0, 0.05), True)
        assert grabbed == "a"

    def test_tie_break_lexicographic(self):
        objs = [
            SceneObject(id="zed", cls="mug", pose=Pose3(np.array([0.4, 0.01, 0.05]), quat_from_yaw(0))),
            SceneObject(id="axe", cls="mug", pose=Pose3(np.array([0.4, -0.01, 0.05]), quat_from_yaw(0))),
        ]
        scene = SceneState(objects=tuple(objs), goal=None, seed=0)
        _, grabbed = try_grasp(scene, ee_at(0.4, 0.0, 0.05), True)
        assert grabbed == "axe"


class TestCarryRelease:
    def test_rigid_carry(self):
        scene = simple_scene()
        scene, _ = try_grasp(scene, ee_at(0.4, 0.0, 0.06), True)
        scene = carry(scene, ee_at(0.5, 0.1, 0.2))
        cup = scene.get("cup")
        assert np.allclose(cup.pose.position, [0.5, 0.1, 0.19], atol=1e-9)
        assert cup.attached

    def test_release_lands_on_table(self):
        scene = simple_scene()
        scene, _ = try_grasp(scene, ee_at(0.4, 0.0, 0.06), True)
        scene = carry(scene, ee_at(0.5, 0.1, 0.3))
        scene = release(scene, ee_at(0.5, 0.1, 0.3))
        cup = scene.get("cup")
        assert not cup.attached
        assert cup.support == "table"
        assert cup.pose.position[2] == pytest.approx(cup.half_height)


class TestLid:
    def make_box_scene(self, lid_angle=LID_OPEN_ANGLE, extra=()):
        box = SceneObject(
            id="box", cls="cardboard_box",
            pose=Pose3(np.array([0.5, 0.0, 0.05]), quat_from_yaw(0.0)),
        )
        return SceneState(objects=(box,) + tuple(extra), goal=None, seed=0, lid_angle=lid_angle)

    def test_push_closes_with_open_gripper(self):
        scene = self.make_box_scene()
        # handle zone is just beyond the +x edge of the box
        ee = ee_at(0.5 + 0.10, 0.0, 0.18)
        for _ in range(120):
            scene = update_lid(scene, ee, gripper_closed=False, dt=1 / 60)
        assert lid_closed(scene)

    def test_closed_gripper_does_not_push(self):
        scene = self.make_box_scene()
        ee = ee_at(0.60, 0.0, 0.18)
        scene2 = update_lid(scene, ee, gripper_closed=True, dt=1 / 60)
        assert scene2.lid_angle == scene.lid_angle

    def test_far_hand_does_not_close(self):
        scene = self.make_box_scene()
        ee = ee_at(0.2, 0.3, 0.4)
        for _ in range(120):
            scene = update_lid(scene, ee, gripper_closed=False, dt=1 / 60)
        assert not lid_closed(scene)

    def test_blocked_by_object_on_rim(self):
        # object in the box but outside the inner 60% footprint jams the lid
        rim = SceneObject(
            id="jam", cls="animal_toy",
            pose=Pose3(np.array([0.59, 0.0, 0.05]), quat_from_yaw(0.0)),
            support="box:box",
        )
        scene = self.make_box_scene(extra=(rim,))
        ee = ee_at(0.60, 0.0, 0.18)
        for _ in range(300):
            scene = update_lid(scene, ee, gripper_closed=False, dt=1 / 60)
        assert not lid_closed(scene)

    def test_interior_object_does_not_block(self):
        inner = SceneObject(
            id="toy", cls="animal_toy",
            pose=Pose3(np.array([0.5, 0.0, 0.02]), quat_from_yaw(0.0)),
            support="box:box",
        )
        scene = self.make_box_scene(extra=(inner,))
        ee = ee_at(0.60, 0.0, 0.18)
        for _ in range(300):
            scene = update_lid(scene, ee, gripper_closed=False, dt=1 / 60)
        assert lid_closed(scene)


class TestRandomization:
    def spec(self, n=3):
        return RandomizationSpec(
            placements=tuple(
                ObjectPlacement(
                    id=f"toy{i}", cls="animal_toy",
                    aabb=(0.30, -0.25, 0.60, 0.25), yaw_range=(-3.1, 3.1),
                )
                for i in range(n)
            ),
            goal_kind="scene_layout",
            goal_params={"objects": [f"toy{i}" for i in range(n)], "aabb": (0.30, -0.25, 0.60, 0.25)},
        )

    def test_deterministic_per_seed(self):
        a = randomize_scene(self.spec(), seed=42)
        b = randomize_scene(self.spec(), seed=42)
        for o1, o2 in zip(a.objects, b.objects):
            assert o1.pose.almost_equal(o2.pose)

    def test_different_seeds_differ(self):
        a = randomize_scene(self.spec(), seed=1)
        b = randomize_scene(self.spec(), seed=2)
        assert any(
            not o1.pose.almost_equal(o2.pose, tol=1e-6)
            for o1, o2 in zip(a.objects, b.objects)
        )

    def test_min_clearance(self):
        scene = randomize_scene(self.spec(5), seed=9)
        objs = scene.objects
        for i in range(len(objs)):
            for j in range(i + 1, len(objs)):
                d = np.linalg.norm(objs[i].pose.position[:2] - objs[j].pose.position[:2])
                assert d >= 0.06 - 1e-9

    def test_infeasible_raises(self):
        tight = RandomizationSpec(
            placements=tuple(
                ObjectPlacement(
                    id=f"o{i}", cls="grocery_item",
                    aabb=(0.40, -0.01, 0.42, 0.01), yaw_range=(0.0, 0.0),
                )
                for i in range(6)
            ),
            goal_kind="scene_layout",
            goal_params={"objects": ["o0"], "aabb": (0.30, -0.25, 0.60, 0.25)},
        )
        with pytest.raises(PlacementInfeasibleError):
            randomize_scene(tight, seed=0)


def test_scene_dict_roundtrip():
    scene = simple_scene(lid_angle=0.3)
    scene, _ = try_grasp(scene, ee_at(0.4, 0.0, 0.06), True)
    back = scene_from_dict(scene_to_dict(scene))
    assert back.attached_id == scene.attached_id
    assert back.lid_angle == scene.lid_angle
    for a, b in zip(scene.objects, back.objects):
        assert a.id == b.id and a.support == b.support
        assert a.pose.almost_equal(b.pose, tol=1e-12)
