"""Ocean surface: Gerstner wave bank, grid geometries and water shading.

Waves use deep-water dispersion ``omega = sqrt(g k)``. The bank's global
amplitude multiplier and heading follow the wind; sun or moon drive the
specular glint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .mathutil import cross3, dot3, normalize

GRAVITY = 9.81
CALM_MULTIPLIER = 0.15
ROUGH_WIND = 20.0


@dataclass(frozen=True)
class WaveBank:
    amplitude: tuple
    wavelength: tuple
    direction: tuple  # unit (dx, dz) per wave, before heading rotation
    phase: tuple
    steepness: tuple
    multiplier: float = 1.0
    rotation: float = 0.0  # radians added to every base direction

    def __post_init__(self):
        n = len(self.amplitude)
        if not all(len(f) == n for f in (self.wavelength, self.direction, self.phase, self.steepness)):
            raise ValueError("wave bank fields must have equal length")
        for s in self.steepness:
            if not 0.0 <= s <= 1.0:
                raise ValueError(f"wave steepness out of [0,1]: {s}")
        if any(w <= 0 for w in self.wavelength):
            raise ValueError("wavelengths must be > 0")
        if self.crest_bound() > 1.0 + 1e-12:
            raise ValueError(f"wave bank self-intersects: sum(Q*A*k) = {self.crest_bound():.4f} > 1")

    @property
    def size(self) -> int:
        return len(self.amplitude)

    def k(self) -> np.ndarray:
        return 2.0 * math.pi / np.asarray(self.wavelength, dtype=float)

    def omega(self) -> np.ndarray:
        return np.sqrt(GRAVITY * self.k())

    def effective_amplitude(self) -> np.ndarray:
        return np.asarray(self.amplitude, dtype=float) * self.multiplier

    def directions(self) -> np.ndarray:
        d = np.asarray(self.direction, dtype=float).reshape(-1, 2)
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        return np.stack([d[:, 0] * c - d[:, 1] * s, d[:, 0] * s + d[:, 1] * c], axis=-1)

    def crest_bound(self) -> float:
        """Sum of Q_i * A_i * k_i with the current multiplier; <= 1 means no loops."""
        return float(np.sum(np.asarray(self.steepness) * self.effective_amplitude() * self.k()))


def default_wave_bank() -> WaveBank:
    return WaveBank(
        amplitude=(0.55, 0.35, 0.22, 0.12),
        wavelength=(42.0, 23.0, 13.0, 7.0),
        direction=((1.0, 0.0), (0.9563, 0.2924), (0.8660, -0.5), (0.6, 0.8)),
        phase=(0.0, 1.3, 2.1, 4.0),
        steepness=(0.6, 0.5, 0.45, 0.4),
    )


def surface_height(bank: WaveBank, x, z, t):
    """Gerstner displacement (dx, dy, dz) and analytic unit normal at rest point (x, z).

    Horizontal: -sum Q A d sin(theta); vertical: sum A cos(theta), with
    theta = k (d . p) - omega t + phase.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    shape = np.broadcast(x, z).shape
    dx = np.zeros(shape)
    dy = np.zeros(shape)
    dz = np.zeros(shape)
    # tangent accumulators for d/dx and d/dz of the displaced point
    txx = np.ones(shape)
    txy = np.zeros(shape)
    txz = np.zeros(shape)
    tzx = np.zeros(shape)
    tzy = np.zeros(shape)
    tzz = np.ones(shape)
    amp = bank.effective_amplitude()
    k = bank.k()
    w = bank.omega()
    dirs = bank.directions()
    for i in range(bank.size):
        a = amp[i]
        if a == 0.0:
            continue
        q = bank.steepness[i]
        ddx, ddz = dirs[i]
        theta = k[i] * (ddx * x + ddz * z) - w[i] * t + bank.phase[i]
        s = np.sin(theta)
        c = np.cos(theta)
        dx -= q * a * ddx * s
        dz -= q * a * ddz * s
        dy += a * c
        qak = q * a * k[i]
        ak = a * k[i]
        txx -= qak * ddx * ddx * c
        txy -= ak * ddx * s
        txz -= qak * ddx * ddz * c
        tzx -= qak * ddx * ddz * c
        tzy -= ak * ddz * s
        tzz -= qak * ddz * ddz * c
    tx = np.stack([txx, txy, txz], axis=-1)
    tz = np.stack([tzx, tzy, tzz], axis=-1)
    normal = normalize(cross3(tz, tx))
    return np.stack([dx, dy, dz], axis=-1), normal


def wind_multiplier(wind_speed: float) -> float:
    """0.15 at calm, 1.0 from 20 m/s, linear between."""
    s = min(max(wind_speed, 0.0), ROUGH_WIND)
    return CALM_MULTIPLIER + (1.0 - CALM_MULTIPLIER) * (s / ROUGH_WIND)


def _wrap_angle(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


def update_weather_on_water(bank: WaveBank, wind_velocity, dt: float, amp_tau: float = 30.0, turn_tau: float = 60.0) -> WaveBank:
    """Relax the amplitude multiplier toward the wind mapping and turn the
    primary wave toward the wind heading."""
    if dt < 0:
        raise ValueError("negative time step")
    wx, wz = wind_velocity
    speed = math.hypot(wx, wz)
    target = wind_multiplier(speed)
    k_amp = -math.expm1(-dt / amp_tau) if math.isfinite(dt) else 1.0
    m = bank.multiplier + (target - bank.multiplier) * k_amp
    if k_amp >= 1.0 or abs(target - m) < 1e-12:
        m = target
    rot = bank.rotation
    if speed > 0.0:
        d0 = bank.direction[0]
        heading = math.atan2(d0[1], d0[0]) + bank.rotation
        err = _wrap_angle(math.atan2(wz, wx) - heading)
        k_turn = -math.expm1(-dt / turn_tau) if math.isfinite(dt) else 1.0
        rot = _wrap_angle(bank.rotation + err * k_turn)
    # the multiplier never exceeds 1, so a valid base bank stays valid
    return replace(bank, multiplier=m, rotation=rot)


class WaterCoupling:
    """Runs the weather/sky-to-water updates on a cadence that scales with
    the clock's time scale (every ``interval`` real seconds)."""

    def __init__(self, interval: float = 0.25, time_scale: float = 1.0):
        self.interval_game = interval * time_scale
        self.pending = 0.0

    def step(self, bank: WaveBank, wind_velocity, game_dt: float) -> WaveBank:
        self.pending += game_dt
        if self.pending >= self.interval_game:
            bank = update_weather_on_water(bank, wind_velocity, self.pending)
            self.pending = 0.0
        return bank


# -- grids -----------------------------------------------------------------------

@dataclass(frozen=True)
class WaterGrid:
    kind: str = "projected"  # projected | simple | radial
    resolution: int = 48
    base_level: float = 0.0
    rect: tuple = (-500.0, -500.0, 500.0, 500.0)  # simple grid (x0, z0, x1, z1)
    radius: float = 2000.0  # radial grid
    rings: int = 24

    def __post_init__(self):
        if self.kind not in ("projected", "simple", "radial"):
            raise ValueError(f"unknown water grid kind {self.kind!r}")
        if self.resolution < 8:
            raise ValueError("water grid resolution must be >= 8")


@dataclass
class WaterMesh:
    positions: np.ndarray
    triangles: np.ndarray
    kind: str


def _grid_tris(nx, nz):
    i, j = np.meshgrid(np.arange(nx - 1), np.arange(nz - 1))
    a = (j * nx + i).ravel()
    b, c = a + 1, a + nx
    d = c + 1
    t = np.empty((len(a) * 2, 3), dtype=np.int64)
    t[0::2] = np.stack([a, c, b], axis=1)
    t[1::2] = np.stack([b, c, d], axis=1)
    return t


def simple_grid(grid: WaterGrid, rect=None) -> WaterMesh:
    x0, z0, x1, z1 = rect or grid.rect
    n = grid.resolution + 1
    xs = np.linspace(x0, x1, n)
    zs = np.linspace(z0, z1, n)
    X, Z = np.meshgrid(xs, zs)
    pos = np.stack([X, np.full_like(X, grid.base_level), Z], axis=-1).reshape(-1, 3)
    return WaterMesh(pos, _grid_tris(n, n), "simple")


def radial_grid(grid: WaterGrid, center_xz) -> WaterMesh:
    seg = grid.resolution
    cx, cz = center_xz
    # ring radii grow geometrically so detail concentrates near the camera
    r = grid.radius * (np.geomspace(1.0, 101.0, grid.rings) - 1.0) / 100.0
    r = r[1:]
    ang = 2 * math.pi * np.arange(seg) / seg
    pts = [np.array([[cx, grid.base_level, cz]])]
    for rr in r:
        pts.append(np.stack([cx + rr * np.cos(ang), np.full(seg, grid.base_level), cz - rr * np.sin(ang)], axis=-1))
    pos = np.concatenate(pts)
    tris = []
    for s in range(seg):
        tris.append((0, 1 + s, 1 + (s + 1) % seg))
    for ring in range(len(r) - 1):
        o0 = 1 + ring * seg
        o1 = o0 + seg
        for s in range(seg):
            s1 = (s + 1) % seg
            tris.append((o0 + s, o1 + s, o1 + s1))
            tris.append((o0 + s, o1 + s1, o0 + s1))
    return WaterMesh(pos, np.array(tris, dtype=np.int64), "radial")


def projected_grid(grid: WaterGrid, camera, aspect: float, margin: float = 1.05) -> WaterMesh:
    """Screen-uniform grid unprojected onto y = base level.

    Rays that miss the plane, or hit it beyond the far plane, are clamped
    to the horizon band at horizontal distance ``far`` from the camera.
    """
    cam = np.asarray(camera.position, dtype=float)
    h = cam[1] - grid.base_level
    if h == 0.0:
        half = camera.far
        return simple_grid(grid, (cam[0] - half, cam[2] - half, cam[0] + half, cam[2] + half))
    n = grid.resolution + 1
    f = camera.focal()
    nd = np.linspace(-margin, margin, n)
    NX, NY = np.meshgrid(nd, nd[::-1])
    r = camera.rotation
    vx, vy = NX * aspect / f, NY / f
    d = np.stack([r[0, 0] * vx + r[0, 1] * vy - r[0, 2], r[1, 0] * vx + r[1, 1] * vy - r[1, 2],
                  r[2, 0] * vx + r[2, 1] * vy - r[2, 2]], axis=-1)
    d = normalize(d)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (grid.base_level - cam[1]) / d[..., 1]
    hit = (t > 0) & (t <= camera.far)
    hx, hz = d[..., 0], d[..., 2]
    hl = np.hypot(hx, hz)
    fwd = camera.forward
    fl = math.hypot(fwd[0], fwd[2]) or 1.0
    hx = np.where(hl > 1e-9, hx / np.where(hl > 1e-9, hl, 1.0), fwd[0] / fl)
    hz = np.where(hl > 1e-9, hz / np.where(hl > 1e-9, hl, 1.0), fwd[2] / fl)
    tt = np.where(hit, t, 0.0)
    px = np.where(hit, cam[0] + d[..., 0] * tt, cam[0] + hx * camera.far)
    pz = np.where(hit, cam[2] + d[..., 2] * tt, cam[2] + hz * camera.far)
    pos = np.stack([px, np.full_like(px, grid.base_level), pz], axis=-1).reshape(-1, 3)
    return WaterMesh(pos, _grid_tris(n, n), "projected")


def build_grid(grid: WaterGrid, camera, aspect: float = 16 / 9) -> WaterMesh:
    if grid.kind == "simple":
        return simple_grid(grid)
    if grid.kind == "radial":
        return radial_grid(grid, (camera.position[0], camera.position[2]))
    return projected_grid(grid, camera, aspect)


# -- shading -----------------------------------------------------------------------

@dataclass(frozen=True)
class WaterShading:
    deep: tuple = (0.01, 0.06, 0.12)
    shallow: tuple = (0.08, 0.32, 0.34)
    depth_falloff: float = 6.0
    foam_threshold: float = 0.7
    foam_range: float = 0.4
    shininess: float = 120.0
    glint_color: tuple = (1.0, 1.0, 1.0)
    glint_intensity: float = 0.0
    light_dir: tuple = (0.0, 1.0, 0.0)

    def __post_init__(self):
        if not self.depth_falloff > 0:
            raise ValueError("depth falloff must be > 0")


def update_caelum_on_water(shading: WaterShading, sky) -> WaterShading:
    """Take the glint light from the sun by day, else the moon scaled by its phase."""
    if sky.sun_elevation > 0.0:
        return replace(shading, glint_color=tuple(float(c) for c in sky.sun_color),
                       glint_intensity=float(sky.sun_intensity), light_dir=tuple(float(v) for v in sky.sun_dir))
    return replace(shading, glint_color=tuple(float(c) for c in sky.moon_color),
                   glint_intensity=float(sky.moon_intensity), light_dir=tuple(float(v) for v in sky.moon_dir))


def reflect(v, n):
    return v - 2.0 * dot3(v, n)[..., None] * n


def shade_water(params: WaterShading, normal, depth, view, crest, ambient, diffuse_lights=(), sky_fn=None):
    """Water radiance.

    ``view`` points from the surface to the eye; ``crest`` is the vertical
    wave displacement; ``diffuse_lights`` is a sequence of (direction,
    colour * intensity) pairs.
    """
    normal = np.asarray(normal, dtype=float)
    view = np.asarray(view, dtype=float)
    depth = np.maximum(np.asarray(depth, dtype=float), 0.0)
    mix = (1.0 - np.exp(-depth / params.depth_falloff))[..., None]
    shallow = np.asarray(params.shallow)
    deep = np.asarray(params.deep)
    base = shallow + (deep - shallow) * mix
    light = np.broadcast_to(np.asarray(ambient, dtype=float), base.shape).copy()
    for ldir, lc in diffuse_lights:
        light = light + np.maximum(dot3(normal, np.asarray(ldir))[..., None], 0.0) * np.asarray(lc)
    crest = np.asarray(crest, dtype=float)
    foam = np.where(crest > params.foam_threshold, np.clip((crest - params.foam_threshold) / params.foam_range, 0.0, 1.0), 0.0)
    rgb = (base * (1.0 - foam[..., None]) + foam[..., None]) * light
    if sky_fn is not None:
        ndv = np.clip(dot3(normal, view), 0.0, 1.0)
        fres = (0.02 + 0.98 * (1.0 - ndv) ** 5)[..., None]
        refl = reflect(-view, normal)
        refl[..., 1] = np.abs(refl[..., 1])
        rgb = rgb * (1.0 - fres) + sky_fn(normalize(refl)) * fres
    if params.glint_intensity > 0.0:
        L = np.asarray(params.light_dir, dtype=float)
        R = reflect(-L, normal)
        rv = np.maximum(dot3(R, view), 0.0)
        spec = (rv ** params.shininess) * (dot3(normal, L) > 0.0)
        rgb = rgb + spec[..., None] * (np.asarray(params.glint_color) * params.glint_intensity)
    return rgb


def bank_to_dict(bank: WaveBank) -> dict:
    return {
        "amplitude": list(bank.amplitude),
        "wavelength": list(bank.wavelength),
        "direction": [list(d) for d in bank.direction],
        "phase": list(bank.phase),
        "steepness": list(bank.steepness),
        "multiplier": bank.multiplier,
        "rotation": bank.rotation,
    }


def bank_from_dict(d: dict) -> WaveBank:
    return WaveBank(tuple(d["amplitude"]), tuple(d["wavelength"]), tuple(tuple(x) for x in d["direction"]),
                    tuple(d["phase"]), tuple(d["steepness"]), d["multiplier"], d["rotation"])
