"""Heightmap terrain: mesh construction, grounding queries and splat material."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assets import GrayMap, RgbaMap, bilinear, sample_bilinear, sample_height
from .mathutil import cross3, normalize


@dataclass(frozen=True)
class HeightField:
    source: GrayMap
    spacing: float = 4.0
    vertical_scale: float = 100.0
    origin: tuple = (0.0, 0.0)  # world (x, z) of sample (0, 0)

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError(f"heightfield spacing must be > 0, got {self.spacing}")
        if self.vertical_scale < 0:
            raise ValueError(f"vertical scale must be >= 0, got {self.vertical_scale}")

    @property
    def shape(self):
        return self.source.width, self.source.height

    @property
    def extent(self):
        """(x0, z0, x1, z1) covered by the samples."""
        w, h = self.shape
        ox, oz = self.origin
        return ox, oz, ox + (w - 1) * self.spacing, oz + (h - 1) * self.spacing

    def heights(self) -> np.ndarray:
        """(H, W) array of sample heights in metres; index [j, i]."""
        return self.source.data * self.vertical_scale


@dataclass
class TerrainMesh:
    positions: np.ndarray  # (W*H, 3)
    normals: np.ndarray  # (W*H, 3)
    uvs: np.ndarray  # (W*H, 2)
    triangles: np.ndarray  # (T, 3) int, counter-clockwise seen from +Y

    @property
    def vertex_count(self) -> int:
        return len(self.positions)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)


def grid_triangles(w: int, h: int) -> np.ndarray:
    """Two triangles per cell, every cell split along the same diagonal."""
    i, j = np.meshgrid(np.arange(w - 1), np.arange(h - 1))
    a = (j * w + i).ravel()
    b = a + 1
    c = a + w
    d = c + 1
    tris = np.empty((len(a) * 2, 3), dtype=np.int64)
    tris[0::2] = np.stack([a, c, b], axis=1)
    tris[1::2] = np.stack([b, c, d], axis=1)
    return tris


def build_mesh(hf: HeightField) -> TerrainMesh:
    w, h = hf.shape
    ox, oz = hf.origin
    i, j = np.meshgrid(np.arange(w), np.arange(h))
    x = ox + i * hf.spacing
    z = oz + j * hf.spacing
    y = hf.heights()
    positions = np.stack([x, y, z], axis=-1).reshape(-1, 3).astype(float)
    uvs = np.stack([i / (w - 1), j / (h - 1)], axis=-1).reshape(-1, 2)
    mesh = TerrainMesh(positions, np.zeros_like(positions), uvs, grid_triangles(w, h))
    return vertex_normals(mesh)


def vertex_normals(mesh: TerrainMesh) -> TerrainMesh:
    """Normalised sum of unit face normals of the faces around each vertex."""
    p = mesh.positions
    t = mesh.triangles
    fn = cross3(p[t[:, 1]] - p[t[:, 0]], p[t[:, 2]] - p[t[:, 0]])
    length = np.sqrt(np.sum(fn * fn, axis=1))
    keep = length > 0.0
    fn = fn[keep] / length[keep, None]
    t = t[keep]
    acc = np.zeros_like(p)
    for k in range(3):
        for c in range(3):
            acc[:, c] += np.bincount(t[:, k], weights=fn[:, c], minlength=len(p))
    n = normalize(acc)
    n[np.all(acc == 0.0, axis=1)] = (0.0, 1.0, 0.0)
    mesh.normals = n
    return mesh


def height_at(hf: HeightField, x, z):
    """Bilinearly interpolated height in metres; queries outside clamp to the edge."""
    w, h = hf.shape
    ox, oz = hf.origin
    fi = np.clip((np.asarray(x, dtype=float) - ox) / hf.spacing, 0.0, w - 1)
    fj = np.clip((np.asarray(z, dtype=float) - oz) / hf.spacing, 0.0, h - 1)
    i0 = np.minimum(np.floor(fi).astype(np.int64), w - 2)
    j0 = np.minimum(np.floor(fj).astype(np.int64), h - 2)
    tx = fi - i0
    tz = fj - j0
    s = hf.source.data
    top = s[j0, i0] + (s[j0, i0 + 1] - s[j0, i0]) * tx
    bot = s[j0 + 1, i0] + (s[j0 + 1, i0 + 1] - s[j0 + 1, i0]) * tx
    return (top + (bot - top) * tz) * hf.vertical_scale


def height_range(hf: HeightField, rect):
    """Exact (min, max) of ``height_at`` over the rectangle (x0, z0, x1, z1).

    Bilinear values never leave the range of the surrounding samples, so the
    samples of every cell touching the rectangle bound it.
    """
    w, h = hf.shape
    ox, oz = hf.origin
    x0, z0, x1, z1 = rect
    i0 = int(np.clip(np.floor((x0 - ox) / hf.spacing), 0, w - 1))
    i1 = int(np.clip(np.ceil((x1 - ox) / hf.spacing), 0, w - 1))
    j0 = int(np.clip(np.floor((z0 - oz) / hf.spacing), 0, h - 1))
    j1 = int(np.clip(np.ceil((z1 - oz) / hf.spacing), 0, h - 1))
    block = hf.source.data[j0:j1 + 1, i0:i1 + 1] * hf.vertical_scale
    return float(block.min()), float(block.max())


def normal_at(hf: HeightField, x, z):
    """Surface normal from central differences of ``height_at``."""
    e = hf.spacing * 0.5
    dx = (height_at(hf, np.asarray(x) + e, z) - height_at(hf, np.asarray(x) - e, z)) / (2 * e)
    dz = (height_at(hf, x, np.asarray(z) + e) - height_at(hf, x, np.asarray(z) - e)) / (2 * e)
    return normalize(np.stack([-dx, np.ones_like(dx), -dz], axis=-1))


@dataclass
class TerrainMaterial:
    textures: list  # four Texture objects
    coverage: RgbaMap
    color_map: RgbaMap
    parallax_scale: float = 0.04
    parallax_bias: float = -0.02
    parallax_iterations: int = 3
    tiling: tuple = (32.0, 32.0, 32.0, 32.0)
    shininess: float = 16.0
    specular: float = 0.05

    def __post_init__(self):
        if len(self.textures) != 4:
            raise ValueError(f"terrain material needs exactly 4 textures, got {len(self.textures)}")
        if self.parallax_iterations < 1:
            raise ValueError("parallax iterations must be >= 1")
        if np.isscalar(self.tiling):
            self.tiling = (float(self.tiling),) * 4
        self.tiling = tuple(float(t) for t in self.tiling)


def splat_weights(mat: TerrainMaterial, uv) -> np.ndarray:
    """Coverage RGBA at ``uv`` renormalised to sum to one; zero coverage gives (1,0,0,0)."""
    uv = np.asarray(uv, dtype=float)
    c = np.clip(bilinear(mat.coverage.data, uv[..., 0], uv[..., 1], "clamp"), 0.0, 1.0)
    s = c[..., 0] + c[..., 1] + c[..., 2] + c[..., 3]
    pos = s > 0.0
    out = np.where(pos[..., None], c / np.where(pos, s, 1.0)[..., None], 0.0)
    out[..., 0] = np.where(pos, out[..., 0], 1.0)
    return out


def splat_height(mat: TerrainMaterial, weights, tex_uv) -> np.ndarray:
    """Weighted per-texture height at tiled coordinates ``tex_uv``."""
    tex_uv = np.asarray(tex_uv, dtype=float)
    h = np.zeros(tex_uv.shape[:-1])
    for k, tex in enumerate(mat.textures):
        if tex.height is not None:
            h = h + weights[..., k] * sample_height(tex, tex_uv * (mat.tiling[k] / mat.tiling[0]))
    return h


def splat_color(mat: TerrainMaterial, uv, tex_uv=None, weights=None) -> np.ndarray:
    """Blend the four textures by coverage, then tint by the colour map.

    ``uv`` addresses the map images over the whole terrain; ``tex_uv`` is the
    tiled lookup coordinate in units of texture 0's tiling (defaults to
    ``uv * tiling[0]``), which is where a parallax offset is applied.
    """
    uv = np.asarray(uv, dtype=float)
    if tex_uv is None:
        tex_uv = uv * mat.tiling[0]
    if weights is None:
        weights = splat_weights(mat, uv)
    rgb = np.zeros(uv.shape[:-1] + (3,))
    for k, tex in enumerate(mat.textures):
        rgb = rgb + weights[..., k, None] * sample_bilinear(tex, tex_uv * (mat.tiling[k] / mat.tiling[0]))[..., :3]
    tint = bilinear(mat.color_map.data, uv[..., 0], uv[..., 1], "clamp")[..., :3]
    return np.clip(rgb * tint, 0.0, 1.0)
