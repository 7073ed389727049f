"""Frame assembly: sky background, opaque batches, particle pass, tone map, digest."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .raster import rasterize, shade_fragments

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1


@dataclass
class Framebuffer:
    width: int
    height: int
    hdr: np.ndarray  # (H, W, 3) linear radiance >= 0
    depth: np.ndarray  # (H, W) view depth, inf where empty

    @classmethod
    def empty(cls, width: int, height: int) -> "Framebuffer":
        if width < 1 or height < 1:
            raise ValueError(f"framebuffer needs positive size, got {width}x{height}")
        return cls(width, height, np.zeros((height, width, 3)), np.full((height, width), np.inf))


def tone_map(hdr, exposure: float = 1.0) -> np.ndarray:
    """Reinhard x*e / (1 + x*e) per channel, then 8-bit round half up."""
    if not exposure > 0:
        raise ValueError("exposure must be > 0")
    x = np.maximum(np.asarray(hdr, dtype=float), 0.0) * exposure
    v = x / (1.0 + x)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & MASK64
    return h


def frame_digest(ldr) -> str:
    return f"{fnv1a64(np.ascontiguousarray(ldr).tobytes()):016x}"


def render_opaque(batches, camera, width: int, height: int, background, threads: int = 1) -> Framebuffer:
    """Sky ``background`` (H, W, 3) overdrawn by the depth-resolved batches."""
    prepared, frags = rasterize(batches, camera, width, height, threads)
    rgb, depth = shade_fragments(batches, prepared, frags, width, height, background)
    return Framebuffer(width, height, np.maximum(rgb, 0.0), depth)


def composite_particles(fb: Framebuffer, camera, positions, sizes, rgba, emissive, light_rgb, emissive_gain: float = 6.0):
    """Alpha-blend screen-aligned square billboards, already sorted back to front.

    Billboards are depth tested against the opaque pass but do not write
    depth. A billboard smaller than a pixel covers one pixel with its alpha
    scaled by the covered fraction.
    """
    n = len(positions)
    if n == 0:
        return fb
    W, H = fb.width, fb.height
    view = camera.to_view(positions)
    d = -view[:, 2]
    f = camera.focal()
    ok = d > camera.near
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = (view[:, 0] * (f * H / W) / d + 1.0) * (0.5 * W)
        sy = (1.0 - view[:, 1] * f / d) * (0.5 * H)
        hs = 0.5 * sizes * f / d * (0.5 * H)
    hs_eff = np.where(ok, np.maximum(hs, 0.5), 0.0)
    cover = np.where(hs < 0.5, (2.0 * np.where(ok, hs, 0.0)) ** 2, 1.0)
    x0 = np.ceil(sx - hs_eff - 0.5)
    x1 = np.ceil(sx + hs_eff - 0.5) - 1
    y0 = np.ceil(sy - hs_eff - 0.5)
    y1 = np.ceil(sy + hs_eff - 0.5) - 1
    x0 = np.where(ok, np.clip(x0, 0, W), 0).astype(np.int64)
    x1 = np.where(ok, np.clip(x1, -1, W - 1), -1).astype(np.int64)
    y0 = np.where(ok, np.clip(y0, 0, H), 0).astype(np.int64)
    y1 = np.where(ok, np.clip(y1, -1, H - 1), -1).astype(np.int64)
    w = np.maximum(x1 - x0 + 1, 0)
    h = np.maximum(y1 - y0 + 1, 0)
    counts = w * h
    total = int(counts.sum())
    if total == 0:
        return fb
    k = np.repeat(np.arange(n), counts)
    start = np.cumsum(counts) - counts
    off = np.arange(total) - start[k]
    px = x0[k] + off % w[k]
    py = y0[k] + off // w[k]
    pix = py * W + px
    depth = fb.depth.reshape(-1)
    vis = d[k] < depth[pix]
    k, pix = k[vis], pix[vis]
    if len(k) == 0:
        return fb
    col = np.where(emissive[:, None], rgba[:, :3] * emissive_gain, rgba[:, :3] * np.asarray(light_rgb))
    alpha = np.clip(rgba[:, 3] * cover, 0.0, 1.0)
    # composite in passes: pass r blends the r-th billboard (back to front) of every pixel
    order = np.lexsort((k, pix))
    k, pix = k[order], pix[order]
    first = np.ones(len(pix), dtype=bool)
    first[1:] = pix[1:] != pix[:-1]
    group_start = np.maximum.accumulate(np.where(first, np.arange(len(pix)), 0))
    rank = np.arange(len(pix)) - group_start
    img = fb.hdr.reshape(-1, 3).copy()
    for r in range(int(rank.max()) + 1):
        m = rank == r
        kk, pp = k[m], pix[m]
        a = alpha[kk][:, None]
        img[pp] = img[pp] * (1.0 - a) + col[kk] * a
    fb.hdr = img.reshape(H, W, 3)
    return fb
