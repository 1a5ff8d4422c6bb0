"""Synthetic point clouds for streaming: table plane plus object surfaces.

Sampling uses a fixed seed so the same scene always yields the same cloud
bytes on the wire.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import quat_rotate
from .scene import SceneState

_CLOUD_SEED = 0x5EED_C10D
TABLE_FRACTION = 0.3
TABLE_RGB = (90, 90, 100)


@dataclass(frozen=True)
class RawCloud:
    points: np.ndarray  # (N, 3) float64, meters
    colors: np.ndarray  # (N, 3) uint8


def _box_surface(rng, n: int, dims, pose) -> np.ndarray:
    """Uniform-ish samples on an axis-aligned box surface, then posed."""
    w, d, h = dims
    areas = np.array([d * h, d * h, w * h, w * h, w * d, w * d])
    faces = rng.choice(6, size=n, p=areas / areas.sum())
    u = rng.uniform(-0.5, 0.5, size=n)
    v = rng.uniform(-0.5, 0.5, size=n)
    sign = np.where(faces % 2 == 0, 1.0, -1.0)
    pts = np.empty((n, 3))
    m = faces < 2
    pts[m] = np.column_stack([w / 2 * sign[m], u[m] * d, v[m] * h])
    m = (faces >= 2) & (faces < 4)
    pts[m] = np.column_stack([u[m] * w, d / 2 * sign[m], v[m] * h])
    m = faces >= 4
    pts[m] = np.column_stack([u[m] * w, v[m] * d, h / 2 * sign[m]])
    return pose.position + quat_rotate(pose.orientation, pts)


def synth_point_cloud(scene: SceneState, table_bounds, budget: int) -> RawCloud:
    """Deterministic stratified sampling of the scene within a point budget."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    rng = np.random.default_rng(_CLOUD_SEED)
    x0, y0, x1, y1 = table_bounds
    n_table = max(1, int(budget * TABLE_FRACTION)) if budget > 1 else budget
    objs = [o for o in scene.objects if o.cls != "box_lid"]
    remaining = budget - n_table
    chunks = []
    colors = []
    tx = rng.uniform(x0, x1, size=n_table)
    ty = rng.uniform(y0, y1, size=n_table)
    chunks.append(np.column_stack([tx, ty, np.full(n_table, scene.table_z)]))
    colors.append(np.tile(np.array(TABLE_RGB, dtype=np.uint8), (n_table, 1)))
    if objs and remaining > 0:
        areas = np.array(
            [2 * (o.dims[0] * o.dims[1] + o.dims[1] * o.dims[2] + o.dims[0] * o.dims[2]) for o in objs]
        )
        counts = np.maximum(1, np.floor(remaining * areas / areas.sum()).astype(int))
        while counts.sum() > remaining:
            counts[int(np.argmax(counts))] -= 1
        for o, n in zip(objs, counts):
            if n <= 0:
                continue
            chunks.append(_box_surface(rng, int(n), o.dims, o.pose))
            colors.append(np.tile(np.array(o.rgb, dtype=np.uint8), (int(n), 1)))
    pts = np.concatenate(chunks)[:budget]
    rgb = np.concatenate(colors)[:budget]
    return RawCloud(points=pts, colors=rgb)
