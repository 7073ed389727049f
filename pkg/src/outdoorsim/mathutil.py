"""Small vector and quaternion helpers.

Quaternions are stored as ``(w, x, y, z)`` float arrays. World frame is
right-handed with +Y up, +X east and +Z south (north is -Z).
"""
from __future__ import annotations

import math

import numpy as np

UP = np.array([0.0, 1.0, 0.0])


def normalize(v, axis=-1):
    v = np.asarray(v, dtype=float)
    n = np.sqrt(np.sum(v * v, axis=axis, keepdims=True))
    return np.where(n > 0.0, v / np.where(n > 0.0, n, 1.0), v)


def dot3(a, b):
    """Component-wise dot product over the last axis (no BLAS, order fixed)."""
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def cross3(a, b):
    return np.stack(
        [
            a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1],
            a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2],
            a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0],
        ],
        axis=-1,
    )


def smoothstep(e0, e1, x):
    t = np.clip((np.asarray(x, dtype=float) - e0) / (e1 - e0), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def direction_from_horizontal(azimuth, elevation):
    """Unit world vector for azimuth (from north, clockwise to east) and elevation."""
    ce = np.cos(elevation)
    return np.stack(
        [np.sin(azimuth) * ce, np.sin(elevation) * np.ones_like(ce), -np.cos(azimuth) * ce], axis=-1
    )


# -- quaternions -------------------------------------------------------------

def quat_identity():
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q):
    q = np.asarray(q, dtype=float)
    return q / math.sqrt(float(q @ q))


def quat_mul(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_from_axis_angle(axis, angle):
    axis = normalize(np.asarray(axis, dtype=float))
    s = math.sin(angle / 2.0)
    return np.array([math.cos(angle / 2.0), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_from_yaw_pitch(yaw, pitch, roll=0.0):
    """Heading rotation about +Y, then pitch about local +X, then roll about local -Z.

    With identity orientation the camera looks along -Z (north).
    Positive yaw turns toward west (counter-clockwise seen from above).
    """
    q = quat_from_axis_angle((0, 1, 0), yaw)
    q = quat_mul(q, quat_from_axis_angle((1, 0, 0), pitch))
    if roll:
        q = quat_mul(q, quat_from_axis_angle((0, 0, -1), roll))
    return q


def quat_to_matrix(q):
    w, x, y, z = quat_normalize(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(m):
    m = np.asarray(m, dtype=float)
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2
        q = [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2
        q = [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
    elif m[1, 1] > m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2
        q = [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2
        q = [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
    q = quat_normalize(np.array(q))
    return q if q[0] >= 0 else -q


def quat_rotate(q, v):
    """Rotate vectors ``v`` (..., 3) by unit quaternion ``q``."""
    m = quat_to_matrix(q)
    v = np.asarray(v, dtype=float)
    return np.stack(
        [
            m[0, 0] * v[..., 0] + m[0, 1] * v[..., 1] + m[0, 2] * v[..., 2],
            m[1, 0] * v[..., 0] + m[1, 1] * v[..., 1] + m[1, 2] * v[..., 2],
            m[2, 0] * v[..., 0] + m[2, 1] * v[..., 1] + m[2, 2] * v[..., 2],
        ],
        axis=-1,
    )


def slerp(q0, q1, s):
    """Shortest-arc spherical interpolation.

    Exactly antipodal-arc ties (dot == 0) pick the sign of ``q1`` with a
    non-negative scalar part.
    """
    q0 = quat_normalize(q0)
    q1 = quat_normalize(q1)
    d = float(q0 @ q1)
    if d < 0.0 or (d == 0.0 and q1[0] < 0.0):
        q1 = -q1
        d = -d
    if d > 0.9995:
        return quat_normalize(q0 + (q1 - q0) * s)
    theta = math.acos(min(d, 1.0))
    st = math.sin(theta)
    return quat_normalize((math.sin((1 - s) * theta) * q0 + math.sin(s * theta) * q1) / st)
