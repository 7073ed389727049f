"""Camera pose, keyframed camera paths and projection helpers.

View space looks down -Z with +X right and +Y up; view depth is ``-z_view``.
Screen coordinates put the origin at the top-left corner with y down.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

import numpy as np

from .mathutil import normalize, quat_identity, quat_normalize, quat_to_matrix, slerp


@dataclass
class Camera:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    orientation: np.ndarray = field(default_factory=quat_identity)
    fov_y: float = math.radians(60.0)
    near: float = 0.5
    far: float = 4000.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.orientation = quat_normalize(self.orientation)
        if not 0 < self.near < self.far:
            raise ValueError(f"camera needs 0 < near < far, got near={self.near} far={self.far}")
        if not 0 < self.fov_y < math.pi:
            raise ValueError(f"vertical FOV must lie in (0, pi), got {self.fov_y}")

    @property
    def rotation(self) -> np.ndarray:
        """Camera-to-world rotation matrix (columns are right, up, back)."""
        return quat_to_matrix(self.orientation)

    @property
    def forward(self) -> np.ndarray:
        return -self.rotation[:, 2]

    @property
    def right(self) -> np.ndarray:
        return self.rotation[:, 0]

    @property
    def up(self) -> np.ndarray:
        return self.rotation[:, 1]

    def to_view(self, points):
        """World points (..., 3) to view space, evaluated component-wise."""
        r = self.rotation
        d = np.asarray(points, dtype=float) - self.position
        x, y, z = d[..., 0], d[..., 1], d[..., 2]
        return np.stack(
            [
                r[0, 0] * x + r[1, 0] * y + r[2, 0] * z,
                r[0, 1] * x + r[1, 1] * y + r[2, 1] * z,
                r[0, 2] * x + r[1, 2] * y + r[2, 2] * z,
            ],
            axis=-1,
        )

    def focal(self) -> float:
        return 1.0 / math.tan(self.fov_y / 2.0)

    def project(self, view_points, width: int, height: int):
        """View-space points to (screen x, screen y, depth). Points must be in front."""
        f = self.focal()
        aspect = width / height
        depth = -view_points[..., 2]
        sx = (view_points[..., 0] * (f / aspect) / depth + 1.0) * (0.5 * width)
        sy = (1.0 - view_points[..., 1] * f / depth) * (0.5 * height)
        return sx, sy, depth

    def pixel_rays(self, width: int, height: int, y0: int = 0, y1: int | None = None):
        """Unit world-space ray directions through pixel centres, shape (rows, width, 3)."""
        y1 = height if y1 is None else y1
        f = self.focal()
        aspect = width / height
        px = (np.arange(width) + 0.5) / width * 2.0 - 1.0
        py = 1.0 - (np.arange(y0, y1) + 0.5) / height * 2.0
        vx = np.broadcast_to(px[None, :] * aspect / f, (y1 - y0, width))
        vy = np.broadcast_to(py[:, None] / f, (y1 - y0, width))
        r = self.rotation
        wx = r[0, 0] * vx + r[0, 1] * vy - r[0, 2]
        wy = r[1, 0] * vx + r[1, 1] * vy - r[1, 2]
        wz = r[2, 0] * vx + r[2, 1] * vy - r[2, 2]
        return normalize(np.stack([wx, wy, wz], axis=-1))

    def frustum_planes(self, width: int, height: int) -> np.ndarray:
        """Six inward-facing world planes ``(nx, ny, nz, d)``; inside means n.p + d >= 0."""
        f = self.focal()
        aspect = width / height
        view_planes = [
            (0.0, 0.0, -1.0, -self.near),
            (0.0, 0.0, 1.0, self.far),
            (f / aspect, 0.0, -1.0, 0.0),
            (-f / aspect, 0.0, -1.0, 0.0),
            (0.0, f, -1.0, 0.0),
            (0.0, -f, -1.0, 0.0),
        ]
        r = self.rotation
        out = []
        for nx, ny, nz, d in view_planes:
            nv = np.array([nx, ny, nz])
            ln = math.sqrt(float(nv @ nv))
            nv = nv / ln
            d = d / ln
            nw = r @ nv
            out.append([nw[0], nw[1], nw[2], d - float(nw @ self.position)])
        return np.array(out)


@dataclass(frozen=True)
class Keyframe:
    time: float
    position: tuple
    orientation: tuple  # (w, x, y, z)


@dataclass
class CameraPath:
    keys: list
    fov_y: float = math.radians(60.0)
    near: float = 0.5
    far: float = 4000.0

    def __post_init__(self):
        self.keys = sorted(self.keys, key=lambda k: k.time)


def sample_camera(path: CameraPath, t: float) -> Camera:
    """Camera pose at time ``t``: lerp positions, slerp orientations, clamped at the ends."""
    keys = path.keys
    if not keys:
        raise ValueError("camera path has no keyframes")

    def make(pos, q):
        return Camera(np.array(pos, dtype=float), np.array(q, dtype=float), path.fov_y, path.near, path.far)

    if t <= keys[0].time:
        return make(keys[0].position, keys[0].orientation)
    if t >= keys[-1].time:
        return make(keys[-1].position, keys[-1].orientation)
    times = [k.time for k in keys]
    i = bisect.bisect_right(times, t) - 1
    a, b = keys[i], keys[i + 1]
    if t == a.time:
        return make(a.position, a.orientation)
    s = (t - a.time) / (b.time - a.time)
    pa, pb = np.array(a.position, dtype=float), np.array(b.position, dtype=float)
    pos = pa + (pb - pa) * s
    return make(pos, slerp(np.array(a.orientation, float), np.array(b.orientation, float), s))
