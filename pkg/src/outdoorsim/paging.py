"""Paged instanced geometry: density-map placement, LOD classes, page culling.

Instances of a page are a pure function of (seed, layer index, page
coordinates), so unloaded pages keep nothing in memory and reload to the
same list.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .assets import GrayMap
from .mathutil import normalize
from .meshes import MeshPrototype
from .render.lighting import Material, vertex_light
from .rng import substream


class LOD(IntEnum):
    BATCH = 0
    WIND = 1
    IMPOSTOR = 2
    GRASS = 3
    CULLED = 4


LOD_NAMES = {LOD.BATCH: "batch", LOD.WIND: "wind", LOD.IMPOSTOR: "impostor", LOD.GRASS: "grass", LOD.CULLED: "culled"}


@dataclass(frozen=True)
class PagedLayer:
    name: str
    meshes: tuple  # MeshPrototype per mesh id
    density: GrayMap
    extent: tuple  # world (x0, z0, x1, z1) covered by the density map
    instances_per_texel: float = 1.0
    scale_range: tuple = (0.8, 1.2)
    lod: tuple = (100.0, 200.0, 500.0)  # (batch_end, wind_end, impostor_end) or (grass_end,)
    page_size: float = 100.0
    grass: bool = False

    def __post_init__(self):
        if not self.meshes:
            raise ValueError(f"layer {self.name!r} has no meshes")
        lo, hi = self.scale_range
        if not 0 < lo <= hi:
            raise ValueError(f"layer {self.name!r}: need 0 < scale min <= max, got {self.scale_range}")
        if self.grass:
            if len(self.lod) != 1 or not self.lod[0] > 0:
                raise ValueError(f"grass layer {self.name!r} takes one positive threshold")
        elif len(self.lod) != 3 or not 0 < self.lod[0] < self.lod[1] < self.lod[2]:
            raise ValueError(f"layer {self.name!r}: need 0 < batch_end < wind_end < impostor_end, got {self.lod}")
        if not self.page_size > 0:
            raise ValueError("page size must be > 0")
        if self.instances_per_texel < 0:
            raise ValueError("instances per texel must be >= 0")
        x0, z0, x1, z1 = self.extent
        if not (x1 > x0 and z1 > z0):
            raise ValueError(f"layer {self.name!r}: empty extent {self.extent}")

    @property
    def max_distance(self) -> float:
        return self.lod[-1]

    @property
    def pages(self):
        x0, z0, x1, z1 = self.extent
        return math.ceil((x1 - x0) / self.page_size), math.ceil((z1 - z0) / self.page_size)

    @property
    def texel_size(self):
        x0, z0, x1, z1 = self.extent
        return (x1 - x0) / self.density.width, (z1 - z0) / self.density.height

    def page_rect(self, px: int, pz: int):
        x0, z0, x1, z1 = self.extent
        return (x0 + px * self.page_size, z0 + pz * self.page_size,
                min(x0 + (px + 1) * self.page_size, x1), min(z0 + (pz + 1) * self.page_size, z1))

    def max_radius(self) -> float:
        return max(m.radius for m in self.meshes) * self.scale_range[1]

    def max_height(self) -> float:
        return max(m.height for m in self.meshes) * self.scale_range[1]


@dataclass
class InstanceSet:
    """Column arrays of instances; ``page`` is the home page (px, pz) per row."""
    page: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    mesh: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    position: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    yaw: np.ndarray = field(default_factory=lambda: np.zeros(0))
    scale: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self):
        return len(self.mesh)

    @staticmethod
    def concat(sets) -> "InstanceSet":
        sets = list(sets)
        if not sets:
            return InstanceSet()
        return InstanceSet(
            np.concatenate([s.page for s in sets]),
            np.concatenate([s.mesh for s in sets]),
            np.concatenate([s.position for s in sets]),
            np.concatenate([s.yaw for s in sets]),
            np.concatenate([s.scale for s in sets]),
        )

    def subset(self, mask) -> "InstanceSet":
        return InstanceSet(self.page[mask], self.mesh[mask], self.position[mask], self.yaw[mask], self.scale[mask])

    def digest(self) -> str:
        h = hashlib.sha256()
        for a in (self.page, self.mesh, self.position, self.yaw, self.scale):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()


def _texel_pages(layer: PagedLayer):
    """Home page column of each texel column and page row of each texel row."""
    x0, z0, _, _ = layer.extent
    sx, sz = layer.texel_size
    cx = (np.arange(layer.density.width) + 0.5) * sx
    cz = (np.arange(layer.density.height) + 0.5) * sz
    return np.floor(cx / layer.page_size).astype(np.int64), np.floor(cz / layer.page_size).astype(np.int64)


def place_page(layer: PagedLayer, layer_index: int, seed: int, px: int, pz: int, ground) -> InstanceSet:
    """Instances whose texel centre falls in page (px, pz).

    Each texel with expected count e = density * instances_per_texel gets
    floor(e) instances plus one more with probability frac(e).
    """
    col_page, row_page = _texel_pages(layer)
    cols = np.nonzero(col_page == px)[0]
    rows = np.nonzero(row_page == pz)[0]
    if len(cols) == 0 or len(rows) == 0:
        return InstanceSet()
    rng = substream(seed, "paging", layer_index, px, pz)
    e = layer.density.data[np.ix_(rows, cols)] * layer.instances_per_texel
    base = np.floor(e)
    u = rng.random(e.shape)
    counts = (base + (u < e - base)).astype(np.int64).ravel()
    total = int(counts.sum())
    if total == 0:
        return InstanceSet()
    ti = np.repeat(np.tile(cols, len(rows)), counts)
    tj = np.repeat(np.repeat(rows, len(cols)), counts)
    r = rng.random((total, 5))
    x0, z0, _, _ = layer.extent
    sx, sz = layer.texel_size
    x = x0 + (ti + r[:, 0]) * sx
    z = z0 + (tj + r[:, 1]) * sz
    y = np.asarray(ground(x, z), dtype=float)
    lo, hi = layer.scale_range
    mesh = np.minimum((r[:, 4] * len(layer.meshes)).astype(np.int64), len(layer.meshes) - 1)
    return InstanceSet(
        np.tile(np.array([[px, pz]], dtype=np.int64), (total, 1)),
        mesh,
        np.stack([x, y, z], axis=-1),
        2 * math.pi * r[:, 2],
        lo + (hi - lo) * r[:, 3],
    )


def place_instances(layer: PagedLayer, layer_index: int, seed: int, ground) -> InstanceSet:
    """All instances of a layer, pages in (px, pz) order."""
    npx, npz = layer.pages
    return InstanceSet.concat(place_page(layer, layer_index, seed, px, pz, ground) for px in range(npx) for pz in range(npz))


def classify_lod(layer: PagedLayer, distance):
    """LOD class by horizontal distance; boundaries go to the more detailed class."""
    d = np.asarray(distance, dtype=float)
    if layer.grass:
        return np.where(d <= layer.lod[0], LOD.GRASS, LOD.CULLED).astype(np.int64)
    b, w, i = layer.lod
    return np.select([d <= b, d <= w, d <= i], [LOD.BATCH, LOD.WIND, LOD.IMPOSTOR], LOD.CULLED).astype(np.int64)


def horizontal_distance(points, camera_position):
    p = np.asarray(points, dtype=float)
    return np.hypot(p[..., 0] - camera_position[0], p[..., 2] - camera_position[2])


def instance_spheres(layer: PagedLayer, inst: InstanceSet):
    """Bounding spheres (centre, radius) of placed instances."""
    h = np.array([m.height for m in layer.meshes])[inst.mesh] * inst.scale
    r = np.array([m.radius for m in layer.meshes])[inst.mesh] * inst.scale
    c = inst.position.copy()
    c[:, 1] += h / 2.0
    return c, r


def spheres_in_frustum(planes, centres, radii):
    inside = np.ones(len(radii), dtype=bool)
    for nx, ny, nz, d in planes:
        inside &= nx * centres[:, 0] + ny * centres[:, 1] + nz * centres[:, 2] + d >= -radii
    return inside


def classify_instances(layer: PagedLayer, inst: InstanceSet, camera, planes):
    """LOD class per instance, with frustum-rejected instances marked culled."""
    lod = classify_lod(layer, horizontal_distance(inst.position, camera.position))
    c, r = instance_spheres(layer, inst)
    return np.where(spheres_in_frustum(planes, c, r), lod, LOD.CULLED)


def page_bounds(layer: PagedLayer, ground_range, px: int, pz: int):
    """Conservative AABB of everything a page can hold.

    Horizontal: page rect grown by one texel (jitter) and the largest
    instance radius. Vertical: the ground range under the page grown the
    same way.
    """
    rx0, rz0, rx1, rz1 = layer.page_rect(px, pz)
    sx, sz = layer.texel_size
    pad = layer.max_radius()
    glo, ghi = ground_range
    return (np.array([rx0 - sx - pad, glo - pad, rz0 - sz - pad]),
            np.array([rx1 + sx + pad, ghi + layer.max_height() + pad, rz1 + sz + pad]))


def aabb_in_frustum(planes, lo, hi) -> bool:
    for nx, ny, nz, d in planes:
        px = hi[0] if nx >= 0 else lo[0]
        py = hi[1] if ny >= 0 else lo[1]
        pz = hi[2] if nz >= 0 else lo[2]
        if nx * px + ny * py + nz * pz + d < 0.0:
            return False
    return True


def rect_distance(rect, x, z) -> float:
    """Horizontal distance from (x, z) to the nearest point of rect."""
    x0, z0, x1, z1 = rect
    dx = max(x0 - x, 0.0, x - x1)
    dz = max(z0 - z, 0.0, z - z1)
    return math.hypot(dx, dz)


class PagedGeometry:
    """Loads and unloads pages of several layers around a moving camera."""

    def __init__(self, layers, seed: int, ground, ground_range_fn=None):
        self.layers = list(layers)
        self.seed = seed
        self.ground = ground
        self.loaded: dict = {}
        self._ground_ranges = {}
        self.ground_range_fn = ground_range_fn

    def _ground_range(self, li, px, pz):
        key = (li, px, pz)
        if key not in self._ground_ranges:
            layer = self.layers[li]
            rx0, rz0, rx1, rz1 = layer.page_rect(px, pz)
            sx, sz = layer.texel_size
            rect = (rx0 - sx, rz0 - sz, rx1 + sx, rz1 + sz)
            if self.ground_range_fn is not None:
                self._ground_ranges[key] = self.ground_range_fn(rect)
            else:
                gx = np.linspace(rect[0], rect[2], 33)
                gz = np.linspace(rect[1], rect[3], 33)
                h = np.asarray(self.ground(*np.meshgrid(gx, gz)))
                self._ground_ranges[key] = (float(h.min()), float(h.max()))
        return self._ground_ranges[key]

    def visible_pages(self, li: int, camera, planes):
        layer = self.layers[li]
        npx, npz = layer.pages
        sx, sz = layer.texel_size
        pad = layer.max_radius()
        out = []
        for px in range(npx):
            for pz in range(npz):
                rx0, rz0, rx1, rz1 = layer.page_rect(px, pz)
                grown = (rx0 - sx - pad, rz0 - sz - pad, rx1 + sx + pad, rz1 + sz + pad)
                if rect_distance(grown, camera.position[0], camera.position[2]) > layer.max_distance + pad:
                    continue
                lo, hi = page_bounds(layer, self._ground_range(li, px, pz), px, pz)
                if aabb_in_frustum(planes, lo, hi):
                    out.append((px, pz))
        return out

    def update(self, camera, width: int, height: int):
        """Load newly visible pages and drop the rest; returns (loaded, unloaded) keys."""
        planes = camera.frustum_planes(width, height)
        want = set()
        for li in range(len(self.layers)):
            want.update((li, px, pz) for px, pz in self.visible_pages(li, camera, planes))
        added = sorted(want - set(self.loaded))
        dropped = sorted(set(self.loaded) - want)
        for k in dropped:
            del self.loaded[k]
        for li, px, pz in added:
            self.loaded[(li, px, pz)] = place_page(self.layers[li], li, self.seed, px, pz, self.ground)
        return added, dropped

    def visible_instances(self, camera, width: int, height: int):
        """Per layer: (instances, lod) for loaded instances that are not culled."""
        self.update(camera, width, height)
        planes = camera.frustum_planes(width, height)
        out = []
        for li, layer in enumerate(self.layers):
            keys = sorted(k for k in self.loaded if k[0] == li)
            inst = InstanceSet.concat(self.loaded[k] for k in keys)
            lod = classify_instances(layer, inst, camera, planes)
            keep = lod != LOD.CULLED
            out.append((inst.subset(keep), lod[keep]))
        return out


def brute_force_visible(layer: PagedLayer, layer_index: int, seed: int, ground, camera, width: int, height: int):
    """Reference: place every instance, then frustum + distance test each one."""
    inst = place_instances(layer, layer_index, seed, ground)
    lod = classify_instances(layer, inst, camera, camera.frustum_planes(width, height))
    keep = lod != LOD.CULLED
    return inst.subset(keep), lod[keep]


# -- wind and impostors ----------------------------------------------------------

def instance_phase(position):
    """Deterministic per-instance sway phase from the ground position."""
    p = np.asarray(position, dtype=float)
    return np.mod(p[..., 0] * 0.37 + p[..., 2] * 0.71, 2 * math.pi)


def wind_sway(vertices, weights, wind, t: float, phase=0.0, gain: float = 0.02, omega: float = 1.7):
    """Offset weight * |wind| * gain * sin(omega t + phase) along the wind direction."""
    v = np.asarray(vertices, dtype=float)
    w = np.asarray(weights, dtype=float)
    s = gain * np.sin(omega * t + np.asarray(phase, dtype=float))
    # wind * s equals |wind| * s along the unit wind direction
    off = w * s
    out = v.copy()
    out[..., 0] += off * wind[0]
    out[..., 2] += off * wind[1]
    return out


def transform_instances(proto: MeshPrototype, inst: InstanceSet, idx, sway_wind=None, t: float = 0.0):
    """World positions and normals of a prototype instanced at rows ``idx``.

    Returns arrays of shape (len(idx), V, 3).
    """
    yaw = inst.yaw[idx][:, None]
    sc = inst.scale[idx][:, None]
    c, s = np.cos(yaw), np.sin(yaw)
    p = proto.positions
    n = proto.normals
    # rotation about +Y by yaw
    px = c * p[None, :, 0] + s * p[None, :, 2]
    pz = -s * p[None, :, 0] + c * p[None, :, 2]
    pos = np.stack([px * sc, p[None, :, 1] * sc, pz * sc], axis=-1) + inst.position[idx][:, None, :]
    nx = c * n[None, :, 0] + s * n[None, :, 2]
    nz = -s * n[None, :, 0] + c * n[None, :, 2]
    nrm = np.stack([nx, np.broadcast_to(n[None, :, 1], nx.shape), nz], axis=-1)
    if sway_wind is not None:
        ph = instance_phase(inst.position[idx])[:, None]
        pos = wind_sway(pos, proto.sway[None, :] * sc, sway_wind, t, ph)
    return pos, nrm


def impostor_normal(position, camera_position):
    """Upright normal blended half way toward the horizontal direction to the camera."""
    p = np.asarray(position, dtype=float)
    d = np.asarray(camera_position, dtype=float) - p
    h = np.stack([d[..., 0], np.zeros_like(d[..., 0]), d[..., 2]], axis=-1)
    ln = np.sqrt(h[..., 0] ** 2 + h[..., 2] ** 2)[..., None]
    h = np.where(ln > 0, h / np.where(ln > 0, ln, 1.0), 0.0)
    up = np.zeros_like(h)
    up[..., 1] = 1.0
    return normalize(0.5 * up + 0.5 * h)


@dataclass
class ImpostorQuads:
    corners: np.ndarray  # (N, 4, 3): bottom-left, bottom-right, top-right, top-left as seen from the camera
    color: np.ndarray  # (N, 3) flat lit colour


def impostor_billboard(proto: MeshPrototype, inst: InstanceSet, idx, camera_position, lights, material=Material(specular=0.0)):
    """Camera-facing vertical quads sized to the prototype bounds times scale.

    The flat colour is the prototype's average albedo lit by the per-vertex
    model at the quad centre with ``impostor_normal``.
    """
    pos = inst.position[idx]
    sc = inst.scale[idx]
    w = proto.width * sc
    h = proto.height * sc
    cam = np.asarray(camera_position, dtype=float)
    d = cam - pos
    ln = np.hypot(d[:, 0], d[:, 2])
    safe = np.where(ln > 0, ln, 1.0)
    tx = np.where(ln > 0, d[:, 0] / safe, 0.0)
    tz = np.where(ln > 0, d[:, 2] / safe, 1.0)
    # right = up x toward-camera, so corners run counter-clockwise seen from the camera
    rx, rz = tz, -tx
    half = (w / 2.0)[:, None]
    right = np.stack([rx, np.zeros_like(rx), rz], axis=-1) * half
    upv = np.zeros((len(pos), 3))
    upv[:, 1] = h
    corners = np.stack([pos - right, pos + right, pos + right + upv, pos - right + upv], axis=1)
    centre = pos + upv / 2.0
    normal = impostor_normal(pos, cam)
    albedo = np.broadcast_to(proto.average_albedo(), centre.shape)
    color = vertex_light(centre, normal, albedo, lights, cam, material)
    return ImpostorQuads(corners, color)


def triangle_budget(layer: PagedLayer, lod, inst: InstanceSet) -> int:
    """Rendered triangles: full meshes for Batch/Wind/Grass, two per impostor."""
    tri = np.array([m.triangle_count for m in layer.meshes])[inst.mesh]
    full = (lod == LOD.BATCH) | (lod == LOD.WIND) | (lod == LOD.GRASS)
    return int(tri[full].sum() + 2 * np.count_nonzero(lod == LOD.IMPOSTOR))


def format_instances(layer_sets) -> list:
    """Dump lines ``page_x page_z mesh_id x y z yaw scale lod``, sorted."""
    lines = []
    for inst, lod in layer_sets:
        for k in range(len(inst)):
            x, y, z = inst.position[k]
            lines.append((int(inst.page[k, 0]), int(inst.page[k, 1]), int(inst.mesh[k]), float(x), float(z),
                          f"{inst.page[k, 0]} {inst.page[k, 1]} {inst.mesh[k]} {x:.4f} {y:.4f} {z:.4f} "
                          f"{inst.yaw[k]:.6f} {inst.scale[k]:.6f} {LOD_NAMES[LOD(int(lod[k]))]}"))
    lines.sort()
    return [l[-1] for l in lines]
