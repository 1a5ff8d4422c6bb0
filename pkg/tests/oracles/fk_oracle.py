"""Independent forward-kinematics reference via explicit 4x4 homogeneous
matrices. Deliberately written without reuse of the package kernels so the
two implementations can only agree by computing the same thing.
"""
from __future__ import annotations

import math

import numpy as np


def link_matrix(a: float, d: float, alpha: float, theta: float) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def fk_matrix(dh: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Full end-effector transform for DH rows (a, d, alpha, theta_offset)."""
    T = np.eye(4)
    for i in range(dh.shape[0]):
        a, d, alpha, theta_off = dh[i]
        T = T @ link_matrix(a, d, alpha, theta_off + q[i])
    return T


def fk_position(dh: np.ndarray, q: np.ndarray) -> np.ndarray:
    return fk_matrix(dh, q)[:3, 3]
