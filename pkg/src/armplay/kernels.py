"""Hot numeric kernels: DH forward kinematics and the safety clamp.

Every kernel has a pure-numpy implementation; when numba is importable and
ARMPLAY_FORCE_NUMPY is unset, the same functions are compiled with @njit.
`benchmarks/bench_kernels.py` compares the two paths.
"""
from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("ARMPLAY_FORCE_NUMPY", "") not in ("1", "true", "yes")
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

BACKEND = "numba" if USE_NUMBA else "numpy"


def _dh_transform_impl(dh, q):
    """Compose standard-DH link transforms; dh rows are (a, d, alpha, theta_offset)."""
    T = np.eye(4)
    for i in range(dh.shape[0]):
        a = dh[i, 0]
        d = dh[i, 1]
        alpha = dh[i, 2]
        theta = q[i] + dh[i, 3]
        ct = np.cos(theta)
        st = np.sin(theta)
        ca = np.cos(alpha)
        sa = np.sin(alpha)
        L = np.empty((4, 4))
        L[0, 0] = ct
        L[0, 1] = -st * ca
        L[0, 2] = st * sa
        L[0, 3] = a * ct
        L[1, 0] = st
        L[1, 1] = ct * ca
        L[1, 2] = -ct * sa
        L[1, 3] = a * st
        L[2, 0] = 0.0
        L[2, 1] = sa
        L[2, 2] = ca
        L[2, 3] = d
        L[3, 0] = 0.0
        L[3, 1] = 0.0
        L[3, 2] = 0.0
        L[3, 3] = 1.0
        T = T @ L
    return T


def _fk_position_impl(dh, q):
    T = _dh_transform_impl(dh, q)
    return T[:3, 3].copy()


def _position_safe_impl(dh, q, lo, hi):
    p = _fk_position_impl(dh, q)
    for k in range(3):
        if p[k] < lo[k] or p[k] > hi[k]:
            return False
    return True


def _clamp_command_impl(q_from, target, q_min, q_max, max_delta, dh, lo, hi, iters):
    """Rate-limit, clip to joint limits, then project back along the
    q_from->candidate interpolation until the end effector stays inside
    the workspace box. q_from is assumed safe."""
    n = q_from.shape[0]
    cand = np.empty(n)
    for i in range(n):
        d = target[i] - q_from[i]
        if d > max_delta:
            d = max_delta
        elif d < -max_delta:
            d = -max_delta
        v = q_from[i] + d
        if v < q_min[i]:
            v = q_min[i]
        elif v > q_max[i]:
            v = q_max[i]
        cand[i] = v
    if _position_safe_impl(dh, cand, lo, hi):
        return cand
    s_lo = 0.0
    s_hi = 1.0
    q_try = np.empty(n)
    for _ in range(iters):
        s = 0.5 * (s_lo + s_hi)
        for i in range(n):
            q_try[i] = q_from[i] + s * (cand[i] - q_from[i])
        if _position_safe_impl(dh, q_try, lo, hi):
            s_lo = s
        else:
            s_hi = s
    for i in range(n):
        q_try[i] = q_from[i] + s_lo * (cand[i] - q_from[i])
    return q_try


def _track_step_impl(q, commanded, vel_limit, dt):
    """Move each joint toward its command, bounded by vel_limit*dt."""
    n = q.shape[0]
    out = np.empty(n)
    dq = np.empty(n)
    for i in range(n):
        d = commanded[i] - q[i]
        m = vel_limit[i] * dt
        if d > m:
            d = m
        elif d < -m:
            d = -m
        out[i] = q[i] + d
        dq[i] = d / dt
    return out, dq


if USE_NUMBA:
    _dh_transform_impl = njit(cache=True)(_dh_transform_impl)
    _fk_position_impl = njit(cache=True)(_fk_position_impl)
    _position_safe_impl = njit(cache=True)(_position_safe_impl)
    _clamp_command_impl = njit(cache=True)(_clamp_command_impl)
    _track_step_impl = njit(cache=True)(_track_step_impl)

dh_transform = _dh_transform_impl
fk_position = _fk_position_impl
clamp_command_kernel = _clamp_command_impl
track_step = _track_step_impl


def warmup():
    """Trigger JIT compilation up front so servers do not stall mid-session."""
    dh = np.zeros((7, 4))
    q = np.zeros(7)
    dh_transform(dh, q)
    clamp_command_kernel(
        q, q + 1.0, q - 3.0, q + 3.0, 0.05, dh, np.full(3, -10.0), np.full(3, 10.0), 16
    )
    track_step(q, q + 1.0, np.full(7, 1.0), 1.0 / 60.0)
