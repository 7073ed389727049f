"""Generate the bundled demo scene: a bay with a wooded peninsula.

Writes maps and textures under src/outdoorsim/demo/maps. The output is a
pure function of the constants below, so rerunning reproduces the shipped
files byte for byte.
"""
from pathlib import Path

import numpy as np

from outdoorsim.assets import save_graymap, save_rgbamap
from outdoorsim.mathutil import smoothstep

OUT = Path(__file__).resolve().parents[1] / "src" / "outdoorsim" / "demo" / "maps"
SIZE = 129
VSCALE = 140.0
SEA = 20.0  # water base level in metres
SEED = 20100621


def fbm(shape, rng, octaves=5):
    """Sum of upsampled white-noise octaves in [0, 1]."""
    h, w = shape
    out = np.zeros(shape)
    amp, total = 1.0, 0.0
    for o in range(octaves):
        n = 2 ** (o + 2) + 1
        g = rng.random((n, n))
        y = np.linspace(0, n - 1, h)
        x = np.linspace(0, n - 1, w)
        y0 = np.minimum(np.floor(y).astype(int), n - 2)
        x0 = np.minimum(np.floor(x).astype(int), n - 2)
        fy = smoothstep(0.0, 1.0, y - y0)[:, None]
        fx = smoothstep(0.0, 1.0, x - x0)[None, :]
        a = g[y0][:, x0]
        b = g[y0][:, x0 + 1]
        c = g[y0 + 1][:, x0]
        d = g[y0 + 1][:, x0 + 1]
        out += amp * ((a + (b - a) * fx) + ((c + (d - c) * fx) - (a + (b - a) * fx)) * fy)
        total += amp
        amp *= 0.5
    return out / total


def elevation(rng):
    v, u = np.meshgrid(np.linspace(0, 1, SIZE), np.linspace(0, 1, SIZE), indexing="ij")
    hills = 70.0 * (1.0 - v) ** 1.3
    bay = 45.0 * np.exp(-((u - 0.42) / 0.2) ** 2 - ((v - 0.85) / 0.38) ** 2)
    spit = 40.0 * np.exp(-((u - 0.8) / 0.08) ** 2) * (1.0 - smoothstep(0.55, 0.95, v))
    noise = 16.0 * (fbm((SIZE, SIZE), rng) - 0.5)
    e = hills - bay + spit + noise - 12.0
    return np.clip((e + SEA) / VSCALE, 0.0, 1.0)


def slope(h):
    gz, gx = np.gradient(h * VSCALE, 8.0)
    return np.hypot(gx, gz)


def coverage(h, rng):
    e = h * VSCALE - SEA
    s = slope(h)
    sand = 1.0 - smoothstep(1.0, 5.0, e)
    rock = smoothstep(0.25, 0.5, s) + smoothstep(45.0, 60.0, e) * 0.6
    dirt = np.clip(fbm(h.shape, rng, 4) * 2.0 - 1.1, 0.0, 1.0)
    grass = np.clip(1.0 - sand - rock - dirt, 0.0, 1.0)
    return np.clip(np.stack([grass, sand, rock, dirt], axis=-1), 0.0, 1.0)


def color_map(h, rng):
    n = fbm(h.shape, rng, 4)
    tint = 0.85 + 0.15 * n
    return np.stack([tint * 1.0, tint * 0.98, tint * 0.95], axis=-1)


def density(h, rng, n=64):
    idx = np.linspace(0, SIZE - 1, n).round().astype(int)
    hs = h[np.ix_(idx, idx)]
    e = hs * VSCALE - SEA
    s = slope(h)[np.ix_(idx, idx)]
    clump = fbm((n, n), rng, 3)
    d = smoothstep(4.0, 10.0, e) * (1.0 - smoothstep(0.3, 0.5, s)) * smoothstep(0.35, 0.6, clump)
    return np.clip(d, 0.0, 1.0)


def texture(base, rng, contrast, scale=32):
    n = fbm((scale, scale), rng, 3)
    # tile seamlessly by mirroring the noise
    n = (n + n[::-1, :] + n[:, ::-1] + n[::-1, ::-1]) / 4.0
    rgb = np.clip(np.asarray(base)[None, None, :] * (1.0 + contrast * (n[..., None] - 0.5) * 2.0), 0.0, 1.0)
    return rgb, np.clip((n - n.min()) / (np.ptp(n) or 1.0), 0.0, 1.0)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    h = elevation(rng)
    save_graymap(OUT / "height.pgm", h, depth=16)
    save_rgbamap(OUT / "coverage.ppm", coverage(h, rng))
    save_rgbamap(OUT / "color.ppm", color_map(h, rng))
    save_graymap(OUT / "trees_density.pgm", density(h, rng))
    save_graymap(OUT / "grass_density.pgm", density(h, rng) * 0.8)
    looks = {"grass": ((0.32, 0.50, 0.20), 0.25), "sand": ((0.80, 0.74, 0.55), 0.12),
             "rock": ((0.50, 0.48, 0.45), 0.35), "dirt": ((0.45, 0.34, 0.22), 0.3)}
    for name, (base, contrast) in looks.items():
        rgb, height = texture(base, rng, contrast)
        save_rgbamap(OUT / f"{name}.ppm", rgb)
        save_graymap(OUT / f"{name}.height.pgm", height)
    below = np.mean(h * VSCALE < SEA)
    print(f"wrote {OUT}; {below:.0%} of the heightmap lies under the sea level")


if __name__ == "__main__":
    main()
