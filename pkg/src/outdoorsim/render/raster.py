"""Fixed-point triangle rasterizer with deferred attribute resolve.

Vertices are snapped to 1/256 pixel. Coverage uses integer edge functions
with the top-left fill rule, so pixels on shared edges belong to exactly
one triangle. Each pixel keeps the nearest fragment; depth ties go to the
batch name, then the triangle index, so the order batches are submitted in
never changes the result. Rows are processed in fixed tiles that may run
on several threads; every tile owns its pixels and only uses exact
arithmetic, so the output does not depend on the thread count.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

SUBPIXEL = 256
HALF = SUBPIXEL // 2
GUARD = 16.0  # guard band, in multiples of the half screen
TILE_ROWS = 16


@dataclass
class DrawBatch:
    """A triangle list with per-vertex attributes and a pixel shader.

    ``shade(attrs)`` receives a dict of interpolated attributes, each of
    shape (n, k), and returns (n, 3) linear radiance. The default shader
    passes through the ``color`` attribute.
    """
    name: str
    positions: np.ndarray  # (V, 3) world
    triangles: np.ndarray  # (T, 3), counter-clockwise when seen from the front
    attrs: dict = field(default_factory=dict)
    shade: Callable | None = None
    cull: bool = True

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        self.attrs = {k: np.asarray(v, dtype=float).reshape(len(self.positions), -1) for k, v in self.attrs.items()}


def _clip_planes(f: float, aspect: float, near: float):
    kx = f / aspect
    return np.array([
        [0.0, 0.0, -1.0, -near],
        [-kx, 0.0, -GUARD, 0.0],
        [kx, 0.0, -GUARD, 0.0],
        [0.0, -f, -GUARD, 0.0],
        [0.0, f, -GUARD, 0.0],
    ])


def _clip_polygon(poly, planes):
    """Sutherland-Hodgman in view space; rows are [x, y, z, attrs...]."""
    for a, b, c, d in planes:
        if len(poly) == 0:
            break
        out = []
        n = len(poly)
        dist = [a * p[0] + b * p[1] + c * p[2] + d for p in poly]
        for i in range(n):
            p, q = poly[i], poly[(i + 1) % n]
            dp, dq = dist[i], dist[(i + 1) % n]
            if dp >= 0.0:
                out.append(p)
            if (dp >= 0.0) != (dq >= 0.0):
                t = dp / (dp - dq)
                out.append(p + (q - p) * t)
        poly = out
    return poly


@dataclass
class Prepared:
    """Screen-space triangles of one batch after clipping and culling."""
    verts: np.ndarray  # (V, 3 + k): view xyz then attributes
    tris: np.ndarray  # (T, 3) into verts, ordered so the snapped area is positive
    X: np.ndarray  # (T, 3) int64 fixed-point screen x
    Y: np.ndarray
    invw: np.ndarray  # (T, 3) 1 / view depth
    attr_slices: dict


def prepare_batch(batch: DrawBatch, camera, width: int, height: int) -> Prepared:
    names = sorted(batch.attrs)
    slices, col = {}, 3
    for k in names:
        n = batch.attrs[k].shape[1]
        slices[k] = slice(col, col + n)
        col += n
    view = camera.to_view(batch.positions)
    verts = np.concatenate([view] + [batch.attrs[k] for k in names], axis=1) if names else view
    f = camera.focal()
    aspect = width / height
    planes = _clip_planes(f, aspect, camera.near)
    tris = batch.triangles
    dist = np.stack([a * view[:, 0] + b * view[:, 1] + c * view[:, 2] + d for a, b, c, d in planes], axis=1)
    td = dist[tris]  # (T, 3, 5)
    outside = np.any(np.all(td < 0.0, axis=1), axis=1)
    beyond = np.all(-view[tris][:, :, 2] > camera.far, axis=1)
    inside = np.all(td >= 0.0, axis=(1, 2))
    keep = tris[inside & ~beyond]
    straddle = np.nonzero(~inside & ~outside & ~beyond)[0]
    extra_v, extra_t = [], []
    base = len(verts)
    for t in straddle:
        poly = _clip_polygon([verts[i] for i in tris[t]], planes)
        if len(poly) < 3:
            continue
        idx = list(range(base, base + len(poly)))
        extra_v.extend(poly)
        base += len(poly)
        for j in range(1, len(poly) - 1):
            extra_t.append((idx[0], idx[j], idx[j + 1]))
    if extra_v:
        verts = np.concatenate([verts, np.array(extra_v)])
        keep = np.concatenate([keep, np.array(extra_t, dtype=np.int64)])
    depth = -verts[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = (verts[:, 0] * (f / aspect) / depth + 1.0) * (0.5 * width)
        sy = (1.0 - verts[:, 1] * f / depth) * (0.5 * height)
    used = np.unique(keep) if len(keep) else np.zeros(0, dtype=np.int64)
    Xv = np.zeros(len(verts), dtype=np.int64)
    Yv = np.zeros(len(verts), dtype=np.int64)
    Xv[used] = np.rint(sx[used] * SUBPIXEL).astype(np.int64)
    Yv[used] = np.rint(sy[used] * SUBPIXEL).astype(np.int64)
    X, Y = Xv[keep], Yv[keep]
    area = (X[:, 1] - X[:, 0]) * (Y[:, 2] - Y[:, 0]) - (Y[:, 1] - Y[:, 0]) * (X[:, 2] - X[:, 0])
    # counter-clockwise in the world reads as negative area with y pointing down
    front = area < 0
    sel = front | (~front & (area != 0) & (not batch.cull))
    keep, X, Y, front = keep[sel], X[sel], Y[sel], front[sel]
    keep = keep.copy()
    keep[front] = keep[front][:, [0, 2, 1]]
    X = Xv[keep]
    Y = Yv[keep]
    return Prepared(verts, keep, X, Y, 1.0 / depth[keep], slices)


@dataclass
class Fragments:
    """Winning fragment per covered pixel."""
    pixel: np.ndarray  # flat index y * width + x
    depth: np.ndarray
    batch: np.ndarray  # index into the batch list
    tri: np.ndarray  # triangle index within the prepared batch
    bary: np.ndarray  # (n, 3) perspective-correct weights


def _top_left(ax, ay, bx, by):
    return ((ay == by) & (bx > ax)) | (by < ay)


def _raster_rows(T, y0: int, y1: int, width: int):
    X, Y, invw, rank, bidx, tidx = T
    ymin = -((HALF - Y.min(axis=1)) // SUBPIXEL)
    ymax = (Y.max(axis=1) - HALF) // SUBPIXEL
    m = (ymax >= y0) & (ymin < y1)
    xmin = np.maximum(-((HALF - X.min(axis=1)) // SUBPIXEL), 0)
    xmax = np.minimum((X.max(axis=1) - HALF) // SUBPIXEL, width - 1)
    m &= xmax >= xmin
    if not np.any(m):
        return None
    sel = np.nonzero(m)[0]
    ya = np.maximum(ymin[sel], y0)
    yb = np.minimum(ymax[sel], y1 - 1)
    xa, xb = xmin[sel], xmax[sel]
    w = xb - xa + 1
    h = yb - ya + 1
    ok = h > 0
    sel, ya, xa, w, h = sel[ok], ya[ok], xa[ok], w[ok], h[ok]
    counts = w * h
    total = int(counts.sum())
    if total == 0:
        return None
    t = np.repeat(np.arange(len(sel)), counts)
    start = np.cumsum(counts) - counts
    off = np.arange(total, dtype=np.int64) - start[t]
    wt = w[t]
    px = xa[t] + off % wt
    py = ya[t] + off // wt
    g = sel[t]
    cx = px * SUBPIXEL + HALF
    cy = py * SUBPIXEL + HALF
    x0, x1, x2 = X[g, 0], X[g, 1], X[g, 2]
    yv0, yv1, yv2 = Y[g, 0], Y[g, 1], Y[g, 2]
    e0 = (x2 - x1) * (cy - yv1) - (yv2 - yv1) * (cx - x1)
    e1 = (x0 - x2) * (cy - yv2) - (yv0 - yv2) * (cx - x2)
    e2 = (x1 - x0) * (cy - yv0) - (yv1 - yv0) * (cx - x0)
    b0 = np.where(_top_left(x1, yv1, x2, yv2), 0, 1)
    b1 = np.where(_top_left(x2, yv2, x0, yv0), 0, 1)
    b2 = np.where(_top_left(x0, yv0, x1, yv1), 0, 1)
    inside = (e0 >= b0) & (e1 >= b1) & (e2 >= b2)
    if not np.any(inside):
        return None
    g = g[inside]
    e = np.stack([e0[inside], e1[inside], e2[inside]], axis=1).astype(float)
    pix = py[inside] * width + px[inside]
    iw = invw[g]
    pw = e * iw
    s = pw[:, 0] + pw[:, 1] + pw[:, 2]
    depth = e[:, 0] + e[:, 1] + e[:, 2]
    depth = depth / s  # area / sum(e_i / w_i) == 1 / sum(lambda_i / w_i)
    order = np.lexsort((tidx[g], rank[g], depth, pix))
    pix_s = pix[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = pix_s[1:] != pix_s[:-1]
    win = order[first]
    return pix[win], depth[win], g[win], pw[win] / s[win, None]


def rasterize(batches, camera, width: int, height: int, threads: int = 1):
    """Rasterize all batches and return (prepared batches, winning fragments)."""
    prepared = [prepare_batch(b, camera, width, height) for b in batches]
    ranks = {name: r for r, name in enumerate(sorted(b.name for b in batches))}
    if len(ranks) != len(batches):
        raise ValueError("draw batch names must be unique")
    parts = [(p.X, p.Y, p.invw, np.full(len(p.tris), ranks[b.name]), np.full(len(p.tris), i), np.arange(len(p.tris)))
             for i, (b, p) in enumerate(zip(batches, prepared))]
    T = tuple(np.concatenate([q[k] for q in parts]) if parts else np.zeros(0) for k in range(6))
    X, Y, invw, rank, bidx, tidx = T
    if len(X) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return prepared, Fragments(empty, np.zeros(0), empty, empty, np.zeros((0, 3)))
    bounds = [(y, min(y + TILE_ROWS, height)) for y in range(0, height, TILE_ROWS)]
    T = (X, Y, invw, rank, bidx, tidx)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(lambda r: _raster_rows(T, r[0], r[1], width), bounds))
    else:
        results = [_raster_rows(T, a, b, width) for a, b in bounds]
    results = [r for r in results if r is not None]
    if not results:
        empty = np.zeros(0, dtype=np.int64)
        return prepared, Fragments(empty, np.zeros(0), empty, empty, np.zeros((0, 3)))
    pix = np.concatenate([r[0] for r in results])
    depth = np.concatenate([r[1] for r in results])
    g = np.concatenate([r[2] for r in results])
    bary = np.concatenate([r[3] for r in results])
    return prepared, Fragments(pix, depth, bidx[g], tidx[g], bary)


def interpolate(prep: Prepared, tri, bary, name: str):
    """Perspective-correct attribute ``name`` for fragments of one batch."""
    sl = prep.attr_slices[name]
    v = prep.tris[tri]
    a0 = prep.verts[v[:, 0], sl]
    a1 = prep.verts[v[:, 1], sl]
    a2 = prep.verts[v[:, 2], sl]
    # lerp form keeps constant attributes exact
    return a0 + (a1 - a0) * bary[:, 1:2] + (a2 - a0) * bary[:, 2:3]


def shade_fragments(batches, prepared, frags: Fragments, width: int, height: int, background):
    """Composite shaded fragments over ``background`` (H, W, 3); returns (rgb, depth)."""
    rgb = np.array(background, dtype=float, copy=True).reshape(-1, 3)
    depth = np.full(width * height, np.inf)
    for i, (b, p) in enumerate(zip(batches, prepared)):
        m = frags.batch == i
        if not np.any(m):
            continue
        tri, bary = frags.tri[m], frags.bary[m]
        attrs = {k: interpolate(p, tri, bary, k) for k in p.attr_slices}
        if b.shade is None:
            col = attrs["color"][:, :3]
        else:
            col = b.shade(attrs)
        rgb[frags.pixel[m]] = col
        depth[frags.pixel[m]] = frags.depth[m]
    return rgb.reshape(height, width, 3), depth.reshape(height, width)
