"""Procedural mesh prototypes for paged vegetation and rocks.

Prototypes are unindexed triangle soups with flat normals, per-vertex
albedo and a per-vertex sway weight (0 at the base, 1 at the top). The
base sits at the local origin with +Y up.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mathutil import cross3, normalize

BARK = (0.32, 0.22, 0.13)
NEEDLES = (0.10, 0.27, 0.12)
LEAVES = (0.20, 0.40, 0.14)
STONE = (0.42, 0.40, 0.37)
GRASS = (0.30, 0.48, 0.18)


@dataclass(frozen=True)
class MeshPrototype:
    name: str
    positions: np.ndarray  # (3T, 3)
    normals: np.ndarray
    albedo: np.ndarray
    sway: np.ndarray  # (3T,)
    double_sided: bool = False

    @property
    def triangle_count(self) -> int:
        return len(self.positions) // 3

    @property
    def bounds(self):
        return self.positions.min(axis=0), self.positions.max(axis=0)

    @property
    def height(self) -> float:
        return float(self.positions[:, 1].max())

    @property
    def width(self) -> float:
        lo, hi = self.bounds
        return float(max(hi[0] - lo[0], hi[2] - lo[2]))

    @property
    def radius(self) -> float:
        """Bounding-sphere radius about the point half way up the mesh."""
        c = np.array([0.0, self.height / 2.0, 0.0])
        return float(np.sqrt(np.max(np.sum((self.positions - c) ** 2, axis=1))))

    def average_albedo(self) -> np.ndarray:
        """Area-weighted mean albedo."""
        p = self.positions.reshape(-1, 3, 3)
        area = 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)
        alb = self.albedo.reshape(-1, 3, 3).mean(axis=1)
        return (alb * area[:, None]).sum(axis=0) / area.sum()


class _Builder:
    def __init__(self):
        self.tris, self.cols = [], []

    def tri(self, a, b, c, col):
        self.tris.append((a, b, c))
        self.cols.append(col)

    def build(self, name, height, double_sided=False):
        p = np.array(self.tris, dtype=float)  # (T, 3, 3)
        n = normalize(cross3(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]))
        pos = p.reshape(-1, 3)
        nrm = np.repeat(n, 3, axis=0)
        alb = np.repeat(np.array(self.cols, dtype=float), 3, axis=0)
        sway = np.clip(pos[:, 1] / height, 0.0, 1.0) ** 2
        return MeshPrototype(name, pos, nrm, alb, sway, double_sided)


def _ring(r, y, seg, offset=0.0):
    a = 2 * math.pi * (np.arange(seg) + offset) / seg
    return [(r * math.cos(t), y, -r * math.sin(t)) for t in a]


def _cylinder(b, r0, r1, y0, y1, seg, col):
    lo, hi = _ring(r0, y0, seg), _ring(r1, y1, seg)
    for s in range(seg):
        s1 = (s + 1) % seg
        b.tri(lo[s], lo[s1], hi[s1], col)
        b.tri(lo[s], hi[s1], hi[s], col)


def _cone(b, r, y0, y1, seg, col):
    rim = _ring(r, y0, seg)
    apex = (0.0, y1, 0.0)
    base = (0.0, y0, 0.0)
    for s in range(seg):
        s1 = (s + 1) % seg
        b.tri(rim[s], rim[s1], apex, col)
        b.tri(rim[s1], rim[s], base, col)


def pine(segments: int = 12, layers: int = 4, height: float = 12.0) -> MeshPrototype:
    """Trunk plus stacked cones; 2*segments*(1 + layers) triangles."""
    b = _Builder()
    trunk_top = 0.3 * height
    _cylinder(b, 0.25, 0.18, 0.0, trunk_top, segments, BARK)
    span = height - trunk_top
    for i in range(layers):
        y0 = trunk_top + span * 0.55 * i / max(layers, 1)
        top = y0 + span * (1.0 - 0.55 * i / max(layers, 1)) * 0.75 if i < layers - 1 else height
        r = 0.3 * height * (1.0 - 0.6 * i / max(layers, 1))
        _cone(b, r, y0, min(top, height), segments, NEEDLES)
    return b.build("pine", height)


def broadleaf(segments: int = 10, rings: int = 6, height: float = 10.0) -> MeshPrototype:
    """Trunk plus an ellipsoidal crown."""
    b = _Builder()
    trunk_top = 0.45 * height
    _cylinder(b, 0.3, 0.22, 0.0, trunk_top, segments, BARK)
    cy, ry, rxz = 0.68 * height, 0.32 * height, 0.3 * height
    lat = np.linspace(-math.pi / 2, math.pi / 2, rings + 1)
    rows = [[(rxz * math.cos(la) * math.cos(t), cy + ry * math.sin(la), -rxz * math.cos(la) * math.sin(t))
             for t in 2 * math.pi * np.arange(segments) / segments] for la in lat]
    for k in range(rings):
        lo, hi = rows[k], rows[k + 1]
        for s in range(segments):
            s1 = (s + 1) % segments
            if k > 0:
                b.tri(lo[s], lo[s1], hi[s1], LEAVES)
            if k < rings - 1:
                b.tri(lo[s], hi[s1], hi[s], LEAVES)
    return b.build("broadleaf", height)


def rock(segments: int = 8, rings: int = 4, size: float = 1.5) -> MeshPrototype:
    """Squashed half-sphere resting on the ground."""
    b = _Builder()
    lat = np.linspace(0.0, math.pi / 2, rings + 1)
    rows = [[(size * math.cos(la) * math.cos(t) * (1.0 + 0.15 * math.sin(3 * t)), 0.6 * size * math.sin(la),
              -size * math.cos(la) * math.sin(t)) for t in 2 * math.pi * np.arange(segments) / segments] for la in lat]
    for k in range(rings):
        lo, hi = rows[k], rows[k + 1]
        for s in range(segments):
            s1 = (s + 1) % segments
            b.tri(lo[s], lo[s1], hi[s1], STONE)
            if k < rings - 1:
                b.tri(lo[s], hi[s1], hi[s], STONE)
    m = b.build("rock", 0.6 * size)
    return MeshPrototype(m.name, m.positions, m.normals, m.albedo, np.zeros(len(m.sway)))


def grass_tuft(width: float = 0.8, height: float = 0.6) -> MeshPrototype:
    """Two crossed vertical quads, rendered double-sided."""
    b = _Builder()
    h = width / 2.0
    for ax, az in ((1.0, 0.0), (0.0, 1.0)):
        p0, p1 = (-h * ax, 0.0, -h * az), (h * ax, 0.0, h * az)
        p2, p3 = (h * ax, height, h * az), (-h * ax, height, -h * az)
        b.tri(p0, p1, p2, GRASS)
        b.tri(p0, p2, p3, GRASS)
    return b.build("grass", height, double_sided=True)


PROTOTYPES = {"pine": pine, "broadleaf": broadleaf, "rock": rock, "grass": grass_tuft}


def make_prototype(name: str) -> MeshPrototype:
    try:
        return PROTOTYPES[name]()
    except KeyError:
        raise ValueError(f"unknown mesh prototype {name!r}; known: {sorted(PROTOTYPES)}") from None
