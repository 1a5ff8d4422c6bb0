#!/usr/bin/env python3
"""Author success input scripts for the shipped tasks.

For a (task, seed) pair this plans joint-space waypoints with numerical IK
against the task's seeded scene, verifies the script completes every stage
by simulating it in-process, and writes the JSONL script.

Usage: python tools/author_scripts.py [--task TASK] [--seed N] [--out DIR]
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from armplay import arm as arm_mod
from armplay.geometry import quat_multiply, quat_rotate, yaw_of_quat
from armplay.scripting import ScriptEntry, run_script, save_script, script_path
from armplay.session import create_session
from armplay.tasks import load_task, resolve_ref

HOVER_Z = 0.28
SETTLE = 0.4  # dwell after each waypoint, seconds
GRIP_DWELL = 0.5


class Planner:
    def __init__(self, chain):
        self.chain = chain
        self.q = chain.home_q.copy()
        self.t = 0.0
        self.entries: list[ScriptEntry] = []
        self.grip = False

    def _travel_time(self, q_new):
        dq = np.abs(q_new - self.q)
        return float(np.max(dq / self.chain.vel_limit)) + SETTLE

    def emit(self, q_new, grip=None, extra_dwell=0.0):
        if grip is None:
            grip = self.grip
        self.entries.append(ScriptEntry(t=self.t, q=q_new.copy(), grip=grip))
        self.t += self._travel_time(q_new) + extra_dwell
        self.q = q_new.copy()
        self.grip = grip

    def set_grip(self, closed: bool):
        self.entries.append(ScriptEntry(t=self.t, q=self.q.copy(), grip=closed))
        self.t += GRIP_DWELL
        self.grip = closed

    def ik(self, pos, carried_yaw=None, yaw_offset=0.0, carried_axis=None,
           axis_local=None, axis_world=None, q0=None):
        """Solve for q reaching pos; optionally align a carried object's yaw
        or a carried local axis with a world axis."""
        chain = self.chain
        q0 = self.q if q0 is None else q0

        def resid(q):
            pose = arm_mod.forward_kinematics(chain, np.clip(q, chain.q_min, chain.q_max))
            r = list((pose.position - pos) * 20.0)
            if carried_yaw is not None:
                yaw = yaw_of_quat(quat_multiply(pose.orientation, carried_yaw_qoff))
                d = (yaw - carried_yaw + math.pi) % (2 * math.pi) - math.pi
                r.append(d * 2.0)
            if axis_world is not None:
                qw = quat_multiply(pose.orientation, axis_qoff)
                a = quat_rotate(qw, np.asarray(axis_local))
                r += list((a - np.asarray(axis_world)) * 2.0)
            return r

        carried_yaw_qoff = yaw_offset if isinstance(yaw_offset, np.ndarray) else np.array([1.0, 0, 0, 0])
        axis_qoff = carried_axis if carried_axis is not None else np.array([1.0, 0, 0, 0])
        best = None
        for attempt, qq in enumerate([q0, self.chain.home_q, q0 + 0.3]):
            sol = least_squares(
                resid, np.clip(qq, chain.q_min, chain.q_max),
                bounds=(chain.q_min, chain.q_max), xtol=1e-12, ftol=1e-12, gtol=1e-12,
            )
            if best is None or sol.cost < best.cost:
                best = sol
            if sol.cost < 1e-8:
                break
        return best.x


def _object_pos(scene, ref):
    return scene.get(resolve_ref(scene, ref)).pose.position.copy()


def plan_pick(pl: Planner, scene, obj_id, lift_z=HOVER_Z):
    obj = scene.get(obj_id)
    p = obj.pose.position
    above = pl.ik(np.array([p[0], p[1], lift_z]))
    pl.emit(above)
    grasp = pl.ik(p.copy())
    pl.emit(grasp)
    pl.set_grip(True)
    lifted = pl.ik(np.array([p[0], p[1], lift_z]))
    pl.emit(lifted)
    # carried-object orientation offset relative to the ee, for later alignment
    ee = arm_mod.forward_kinematics(pl.chain, grasp)
    from armplay.geometry import quat_conjugate

    return quat_multiply(quat_conjugate(ee.orientation), obj.pose.orientation)


def plan_place(pl: Planner, xy, target_yaw=None, qoff=None, drop_z=HOVER_Z):
    if target_yaw is None:
        q = pl.ik(np.array([xy[0], xy[1], drop_z]))
    else:
        q = pl.ik(np.array([xy[0], xy[1], drop_z]), carried_yaw=target_yaw, yaw_offset=qoff)
    pl.emit(q, extra_dwell=0.2)
    pl.set_grip(False)


def plan_scan(pl: Planner, scene, stage, qoff, carried_axis_local):
    p = stage.params
    scanner = scene.get(p["scanner"])
    center = scanner.pose.position + np.asarray(p.get("scan_center_offset", [0, 0, 0.12]))
    axis = np.asarray(p.get("scanner_axis", [0.0, 1.0, 0.0]), dtype=float)
    q = pl.ik(center, carried_axis=qoff, axis_local=carried_axis_local, axis_world=axis)
    pl.emit(q, extra_dwell=0.6)


def author(task_id: str, seed: int) -> list[ScriptEntry]:
    chain, safety = arm_mod.load_arm_config()
    spec = load_task(task_id)
    probe = create_session("author", task_id, seed, chain, safety, session_id="author")
    scene = probe.scene
    pl = Planner(chain)

    if task_id in ("SceneTwins",):
        for i, entry in enumerate(scene.goal.entries):
            qoff = plan_pick(pl, scene, entry["ref"])
            plan_place(pl, entry["target_pos"], target_yaw=entry["target_yaw"], qoff=qoff)
    elif task_id == "ArrangeDesk":
        for entry in scene.goal.entries:
            plan_pick(pl, scene, entry["ref"])
            plan_place(pl, entry["target_pos"])
    elif task_id == "AnimalDorms":
        qoff = plan_pick(pl, scene, "animal")
        house = scene.get(scene.goal.entries[0]["house"])
        hp = house.pose.position
        over = pl.ik(np.array([hp[0], hp[1], 0.18]))
        pl.emit(over, extra_dwell=0.4)
        pl.set_grip(False)
    elif task_id == "ScanBottle":
        obj = scene.get("bottle")
        qoff = plan_pick(pl, scene, "bottle")
        stage = next(s for s in spec.stages if s.kind == "scanned")
        plan_scan(pl, scene, stage, qoff, obj.barcode_axis)
    elif task_id == "GroceryCheckout":
        basket = scene.get("basket")
        for key in ("goal:0", "goal:1"):
            oid = resolve_ref(scene, key)
            obj = scene.get(oid)
            qoff = plan_pick(pl, scene, oid)
            stage = next(s for s in spec.stages if s.kind == "scanned")
            plan_scan(pl, scene, stage, qoff, obj.barcode_axis)
            plan_place(pl, basket.pose.position[:2])
    elif task_id == "PackBox":
        box = scene.get("box")
        plan_pick(pl, scene, "tape")
        plan_place(pl, box.pose.position[:2])
        # push the lid shut from the handle zone beside the hinge edge
        hx = box.pose.position[0] + box.dims[0] / 2
        hy = box.pose.position[1]
        qh = pl.ik(np.array([hx, hy, 0.18]))
        pl.emit(qh, extra_dwell=2.2)
    else:
        raise SystemExit(f"no planner for task {task_id}")

    pl.emit(chain.home_q.copy())
    return pl.entries


def verify(task_id: str, seed: int, entries) -> tuple[bool, list]:
    session = create_session("author", task_id, seed, session_id="author")
    run_script(session, entries)
    results = session.episodes[-1].stage_results
    return all(r.achieved for r in results), results


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--task", action="append", default=None)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()
    tasks = args.task or [
        "SceneTwins", "GroceryCheckout", "AnimalDorms",
        "ArrangeDesk", "ScanBottle", "PackBox",
    ]
    failed = []
    for task_id in tasks:
        entries = author(task_id, args.seed)
        ok, results = verify(task_id, args.seed, entries)
        print(f"{task_id}: duration={entries[-1].t:.1f}s stages="
              f"{[r.achieved for r in results]} {'OK' if ok else 'FAIL'}")
        if ok:
            out = (args.out / f"{task_id}_success.jsonl") if args.out else script_path(task_id)
            save_script(out, entries)
        else:
            failed.append(task_id)
    if failed:
        print("FAILED:", failed)
        sys.exit(1)


if __name__ == "__main__":
    main()
