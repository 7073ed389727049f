"""Stochastic weather: wind relaxation, layered clouds, condition fading,
Markov preset transitions and lightning with delayed, attenuated thunder."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

PRECIP_KINDS = ("none", "rain", "hail", "snow")
SPEED_OF_SOUND = 343.0
THUNDER_REF_DISTANCE = 50.0


@dataclass(frozen=True)
class PrecipitationDesc:
    kind: str = "none"
    intensity: float = 0.0
    fall_speed: float = 0.0
    tilt: float = 0.0

    def __post_init__(self):
        if self.kind not in PRECIP_KINDS:
            raise ValueError(f"unknown precipitation kind {self.kind!r}")
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError(f"precipitation intensity out of [0,1]: {self.intensity}")
        if self.kind == "none" and self.intensity != 0.0:
            raise ValueError("precipitation kind 'none' requires zero intensity")


@dataclass(frozen=True)
class WeatherCondition:
    name: str
    cloud_coverage: tuple
    precipitation: PrecipitationDesc = field(default_factory=PrecipitationDesc)
    wind_speed: tuple = (0.0, 4.0)  # target speed drawn uniformly in this range
    humidity: float = 0.3
    lightning_rate: float = 0.0  # strikes per game minute

    def __post_init__(self):
        for c in self.cloud_coverage:
            if not 0.0 <= c <= 1.0:
                raise ValueError(f"{self.name}: cloud coverage out of [0,1]: {c}")
        if not 0.0 <= self.humidity <= 1.0:
            raise ValueError(f"{self.name}: humidity out of [0,1]")
        lo, hi = self.wind_speed
        if not 0.0 <= lo <= hi:
            raise ValueError(f"{self.name}: wind speed range must satisfy 0 <= min <= max")
        if self.lightning_rate < 0:
            raise ValueError(f"{self.name}: lightning rate must be >= 0")

    @property
    def stormy(self) -> bool:
        return self.lightning_rate > 0.0


def default_presets() -> dict:
    return {
        "clear": WeatherCondition("clear", (0.1, 0.05, 0.0), PrecipitationDesc(), (0.0, 4.0), 0.3),
        "overcast": WeatherCondition("overcast", (0.7, 0.6, 0.4), PrecipitationDesc(), (3.0, 8.0), 0.6),
        "rain": WeatherCondition("rain", (0.9, 0.8, 0.6), PrecipitationDesc("rain", 0.6, 7.0), (4.0, 10.0), 0.85),
        "storm": WeatherCondition(
            "storm", (1.0, 0.95, 0.8), PrecipitationDesc("rain", 1.0, 9.0), (10.0, 22.0), 0.95, 6.0
        ),
        "snow": WeatherCondition("snow", (0.85, 0.8, 0.6), PrecipitationDesc("snow", 0.7, 1.2), (1.0, 5.0), 0.8),
    }


DEFAULT_ORDER = ("clear", "overcast", "rain", "storm", "snow")
DEFAULT_MATRIX = (
    (0.50, 0.30, 0.10, 0.05, 0.05),
    (0.25, 0.35, 0.20, 0.10, 0.10),
    (0.10, 0.35, 0.35, 0.15, 0.05),
    (0.05, 0.30, 0.40, 0.20, 0.05),
    (0.10, 0.40, 0.05, 0.00, 0.45),
)


@dataclass
class WeatherConfig:
    presets: dict = field(default_factory=default_presets)
    order: tuple = DEFAULT_ORDER
    matrix: tuple = DEFAULT_MATRIX  # row = from, column = to, at humidity 1
    snow_enabled: bool = False
    min_wet_probability: float = 0.01
    fade_range: tuple = (30.0, 120.0)  # game seconds
    hold_range: tuple = (300.0, 1200.0)
    initial: str = "clear"
    seed: int | None = None
    max_wind: float = 30.0
    wind_tau: float = 20.0
    layer_altitudes: tuple = (800.0, 2000.0, 5000.0)
    layer_speeds: tuple = (1.0, 0.6, 0.3)
    cloud_fade_rate: float = 1.0 / 120.0  # coverage units per game second
    uv_per_meter: float = 1.0 / 2000.0
    lightning_annulus: tuple = (300.0, 3000.0)
    flash_duration: float = 0.1

    def __post_init__(self):
        names = self.active_names()
        for n in names:
            if n not in self.presets:
                raise ValueError(f"weather matrix names unknown preset {n!r}")
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (len(self.order), len(self.order)):
            raise ValueError("weather transition matrix must be square over the preset order")
        if np.any(m < 0) or not np.allclose(m.sum(axis=1), 1.0, atol=1e-9):
            raise ValueError("weather transition matrix rows must be non-negative and sum to 1")
        if self.initial not in names:
            raise ValueError(f"initial weather {self.initial!r} is not an active preset")
        if not 0 <= self.min_wet_probability <= 1:
            raise ValueError("min_wet_probability must lie in [0,1]")

    def active_names(self) -> tuple:
        return tuple(n for n in self.order if self.snow_enabled or n != "snow")

    def is_wet(self, name: str) -> bool:
        return self.presets[name].precipitation.kind != "none"


# -- wind ----------------------------------------------------------------------

@dataclass(frozen=True)
class WindState:
    velocity: tuple = (0.0, 0.0)  # horizontal (x, z) m/s
    target: tuple = (0.0, 0.0)
    tau: float = 20.0
    max_speed: float = 30.0

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


def _clamp_speed(v, vmax):
    s = math.hypot(*v)
    if s > vmax:
        return (v[0] * vmax / s, v[1] * vmax / s)
    return v


def step_wind(w: WindState, dt: float, rng=None) -> WindState:
    if dt < 0:
        raise ValueError("negative time step")
    k = -math.expm1(-dt / w.tau) if math.isfinite(dt) else 1.0
    if k >= 1.0:
        v = w.target
    else:
        v = (w.velocity[0] + (w.target[0] - w.velocity[0]) * k, w.velocity[1] + (w.target[1] - w.velocity[1]) * k)
    return replace(w, velocity=_clamp_speed(v, w.max_speed))


def draw_wind_target(cond: WeatherCondition, previous: tuple, rng, max_speed: float) -> tuple:
    """New target: speed uniform in the preset range, heading near the old one."""
    lo, hi = cond.wind_speed
    speed = min(lo + (hi - lo) * rng.random(), max_speed)
    heading = math.atan2(previous[1], previous[0]) if previous != (0.0, 0.0) else 2 * math.pi * rng.random()
    heading += math.radians(30.0) * rng.standard_normal()
    return (speed * math.cos(heading), speed * math.sin(heading))


# -- clouds --------------------------------------------------------------------

@dataclass(frozen=True)
class CloudLayer:
    altitude: float
    coverage: float = 0.0
    offset: tuple = (0.0, 0.0)
    speed: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"cloud coverage out of [0,1]: {self.coverage}")


def step_clouds(layers, wind: WindState, dt: float, targets=None, fade_rate=1.0 / 120.0, uv_per_meter=1.0 / 2000.0):
    """Advect layer offsets with the wind and move coverage toward ``targets``."""
    if dt < 0:
        raise ValueError("negative time step")
    out = []
    for i, layer in enumerate(layers):
        f = layer.speed * dt * uv_per_meter
        off = (layer.offset[0] + wind.velocity[0] * f, layer.offset[1] + wind.velocity[1] * f)
        cov = layer.coverage
        if targets is not None:
            tgt = targets[i]
            step = fade_rate * dt
            cov = tgt if abs(tgt - cov) <= step else cov + math.copysign(step, tgt - cov)
        out.append(replace(layer, offset=off, coverage=min(max(cov, 0.0), 1.0)))
    return out


def _hash_noise(ix, iz, seed):
    h = (ix * 374761393 + iz * 668265263 + seed * 2147483647) & 0xFFFFFFFF
    h = ((h ^ (h >> 13)) * 1274126177) & 0xFFFFFFFF
    return ((h ^ (h >> 16)) & 0xFFFF) / 65535.0


def value_noise(u, v, seed: int):
    """Smooth lattice noise in [0, 1], deterministic for a seed."""
    iu = np.floor(u).astype(np.int64)
    iv = np.floor(v).astype(np.int64)
    fu = u - iu
    fv = v - iv
    fu = fu * fu * (3 - 2 * fu)
    fv = fv * fv * (3 - 2 * fv)
    a = _hash_noise(iu, iv, seed)
    b = _hash_noise(iu + 1, iv, seed)
    c = _hash_noise(iu, iv + 1, seed)
    d = _hash_noise(iu + 1, iv + 1, seed)
    top = a + (b - a) * fu
    bot = c + (d - c) * fu
    return top + (bot - top) * fv


def cloud_opacity(layers, dirs, uv_per_meter=1.0 / 2000.0) -> np.ndarray:
    """Combined opacity of all layers along view directions (zero at or below the horizon)."""
    dirs = np.asarray(dirs, dtype=float)
    y = dirs[..., 1]
    clear = np.ones(dirs.shape[:-1])
    up = y > 0.02
    ys = np.where(up, y, 1.0)
    for layer in layers:
        if layer.coverage <= 0.0:
            continue
        t = layer.altitude / ys
        u = dirs[..., 0] * t * uv_per_meter * 4.0 + layer.offset[0] * 4.0
        v = dirs[..., 2] * t * uv_per_meter * 4.0 + layer.offset[1] * 4.0
        n = 0.55 * value_noise(u, v, layer.seed) + 0.3 * value_noise(u * 2.1, v * 2.1, layer.seed + 1)
        n = n + 0.15 * value_noise(u * 4.3, v * 4.3, layer.seed + 2)
        edge = 1.0 - layer.coverage
        dens = np.clip((n - edge * 0.9) / 0.25, 0.0, 1.0) * min(1.0, layer.coverage * 1.5)
        fade = np.clip((y - 0.02) / 0.15, 0.0, 1.0)
        clear = clear * (1.0 - np.where(up, dens * fade, 0.0))
    return 1.0 - clear


# -- conditions ----------------------------------------------------------------

def _lerp(a, b, s):
    return a + (b - a) * s


def fade_condition(a: WeatherCondition, b: WeatherCondition, s: float) -> WeatherCondition:
    """Blend two conditions; numeric fields interpolate, discrete ones switch at s = 0.5.

    Precipitation keeps whichever kind is not 'none' while any intensity
    remains, so the result never pairs kind 'none' with rain falling.
    """
    s = min(max(float(s), 0.0), 1.0)
    if s == 0.0:
        return a
    if s == 1.0:
        return b
    pa, pb = a.precipitation, b.precipitation
    intensity = _lerp(pa.intensity, pb.intensity, s)
    kind = pa.kind if s < 0.5 else pb.kind
    if kind == "none" and intensity > 0.0:
        kind = pb.kind if pa.kind == "none" else pa.kind
    if kind == "none":
        intensity = 0.0
    precip = PrecipitationDesc(kind, min(max(intensity, 0.0), 1.0), _lerp(pa.fall_speed, pb.fall_speed, s), _lerp(pa.tilt, pb.tilt, s))
    n = max(len(a.cloud_coverage), len(b.cloud_coverage))
    ca = tuple(a.cloud_coverage) + (0.0,) * (n - len(a.cloud_coverage))
    cb = tuple(b.cloud_coverage) + (0.0,) * (n - len(b.cloud_coverage))
    return WeatherCondition(
        name=a.name if s < 0.5 else b.name,
        cloud_coverage=tuple(min(max(_lerp(x, y, s), 0.0), 1.0) for x, y in zip(ca, cb)),
        precipitation=precip,
        wind_speed=(_lerp(a.wind_speed[0], b.wind_speed[0], s), _lerp(a.wind_speed[1], b.wind_speed[1], s)),
        humidity=min(max(_lerp(a.humidity, b.humidity, s), 0.0), 1.0),
        lightning_rate=_lerp(a.lightning_rate, b.lightning_rate, s),
    )


def transition_matrix(cfg: WeatherConfig, humidity: float) -> tuple:
    """(names, row-stochastic matrix) biased by humidity.

    A wet target j with configured probability m > 0 gets
    ``pmin + humidity * (m - pmin)``; dry targets share the remaining mass
    in proportion to their configured weights.
    """
    names = cfg.active_names()
    wet = tuple(cfg.is_wet(n) for n in names)
    m, _ = _biased_matrix(names, cfg.order, tuple(map(tuple, cfg.matrix)), wet, cfg.min_wet_probability,
                            min(max(float(humidity), 0.0), 1.0))
    return names, m.copy()


@lru_cache(maxsize=256)
def _biased_matrix(names, order, matrix, wet, pmin, h):
    idx = [order.index(n) for n in names]
    base = np.asarray(matrix, dtype=float)[np.ix_(idx, idx)]
    base = base / base.sum(axis=1, keepdims=True)
    wet = np.array(wet)
    out = np.zeros_like(base)
    for i in range(len(names)):
        row = base[i]
        w = np.where(wet & (row > 0.0), pmin + h * (row - pmin), 0.0)
        dry_mass = 1.0 - w.sum()
        dry = np.where(wet, 0.0, row)
        out[i] = w + (dry / dry.sum() * dry_mass if dry.sum() > 0 else 0.0)
    out.flags.writeable = False
    cum = np.cumsum(out, axis=1)
    cum.flags.writeable = False
    return out, cum


def next_condition(cfg: WeatherConfig, current: str, humidity: float, rng):
    """Markov draw of the next preset name and a fade duration in game seconds."""
    names = cfg.active_names()
    wet = tuple(cfg.is_wet(n) for n in names)
    _, cum = _biased_matrix(names, cfg.order, tuple(map(tuple, cfg.matrix)), wet, cfg.min_wet_probability,
                            min(max(float(humidity), 0.0), 1.0))
    u = rng.random()
    j = int(np.searchsorted(cum[names.index(current)], u, side="right"))
    j = min(j, len(names) - 1)
    lo, hi = cfg.fade_range
    return names[j], lo + (hi - lo) * rng.random()


# -- lightning -----------------------------------------------------------------

@dataclass(frozen=True)
class ThunderEvent:
    position: tuple
    strike_time: float
    audible_time: float
    gain: float


def thunder_for_strike(position, camera_position, strike_time: float) -> ThunderEvent:
    p = tuple(float(v) for v in position)
    d = math.dist(p, tuple(float(v) for v in camera_position))
    gain = min(1.0, THUNDER_REF_DISTANCE / d) if d > 0.0 else 1.0
    return ThunderEvent(p, strike_time, strike_time + d / SPEED_OF_SOUND, gain)


def spawn_lightning(condition: WeatherCondition, camera_position, rng, game_time: float, dt: float,
                    annulus=(300.0, 3000.0), ground=None) -> list:
    """Poisson strikes during ``[game_time, game_time + dt)``, sorted by strike time.

    ``ground(x, z)`` gives strike altitude; defaults to sea level.
    """
    if condition.lightning_rate <= 0.0 or dt <= 0.0:
        return []
    n = int(rng.poisson(condition.lightning_rate / 60.0 * dt))
    if n == 0:
        return []
    draws = rng.random((n, 3))
    r0, r1 = annulus
    events = []
    cx, cy, cz = (float(v) for v in camera_position)
    for ut, ur, ua in draws:
        t = game_time + ut * dt
        r = math.sqrt(r0 * r0 + ur * (r1 * r1 - r0 * r0))
        a = 2.0 * math.pi * ua
        x, z = cx + r * math.cos(a), cz + r * math.sin(a)
        y = float(ground(x, z)) if ground is not None else 0.0
        events.append(thunder_for_strike((x, y, z), camera_position, t))
    events.sort(key=lambda e: e.strike_time)
    return events


def format_event(e: ThunderEvent) -> str:
    x, y, z = e.position
    return f"{e.strike_time:.6f} {e.audible_time:.6f} {x:.3f} {y:.3f} {z:.3f} {e.gain:.6f}"


# -- precipitation volume -------------------------------------------------------

@dataclass(frozen=True)
class Box:
    center: tuple
    half_extent: tuple

    @property
    def min(self):
        return tuple(c - h for c, h in zip(self.center, self.half_extent))

    @property
    def max(self):
        return tuple(c + h for c, h in zip(self.center, self.half_extent))


def precipitation_volume(camera_position, node_bounds=None, half_extent=40.0, ceiling=60.0) -> Box:
    """Emitter box that follows the camera, centred ``ceiling`` metres above it.

    When the bounds of the scene node under the camera are given, the box
    centre is clamped into that node's horizontal footprint.
    """
    x, y, z = (float(v) for v in camera_position)
    if node_bounds is not None:
        lo, hi = node_bounds
        x = min(max(x, lo[0]), hi[0])
        z = min(max(z, lo[2]), hi[2])
    return Box((x, y + ceiling, z), (half_extent, half_extent, half_extent))


def rain_tilt(wind_speed: float, fall_speed: float) -> float:
    return math.atan2(wind_speed, fall_speed)


# -- whole weather simulation ---------------------------------------------------

@dataclass
class WeatherState:
    source: str
    target: str
    fade_progress: float
    fade_duration: float
    hold_remaining: float
    humidity: float
    wind: WindState
    layers: list
    condition: WeatherCondition
    time: float = 0.0
    last_strike: float = -math.inf
    events: list = field(default_factory=list)

    @property
    def precipitation(self) -> PrecipitationDesc:
        p = self.condition.precipitation
        return replace(p, tilt=rain_tilt(self.wind.speed, p.fall_speed) if p.kind != "none" else 0.0)

    def flash(self, game_time: float, window: float) -> bool:
        return game_time - self.last_strike < window


def initial_weather(cfg: WeatherConfig, rng, preset: str | None = None, time: float = 0.0) -> WeatherState:
    name = preset or cfg.initial
    if name not in cfg.active_names():
        raise ValueError(f"unknown or inactive weather preset {name!r}")
    cond = cfg.presets[name]
    target = draw_wind_target(cond, (0.0, 0.0), rng, cfg.max_wind)
    wind = WindState(target, target, cfg.wind_tau, cfg.max_wind)
    layers = [
        CloudLayer(alt, cond.cloud_coverage[i] if i < len(cond.cloud_coverage) else 0.0, (0.0, 0.0), spd, 17 + 31 * i)
        for i, (alt, spd) in enumerate(zip(cfg.layer_altitudes, cfg.layer_speeds))
    ]
    lo, hi = cfg.hold_range
    return WeatherState(name, name, 1.0, 0.0, lo + (hi - lo) * rng.random(), cond.humidity, wind, layers, cond, time)


def step_weather(cfg: WeatherConfig, st: WeatherState, dt: float, rng, camera_position=(0.0, 0.0, 0.0), ground=None) -> list:
    """Advance ``st`` in place by ``dt`` game seconds; returns new thunder events."""
    if dt < 0:
        raise ValueError("negative time step")
    if st.fade_progress < 1.0:
        st.fade_progress = min(1.0, st.fade_progress + (dt / st.fade_duration if st.fade_duration > 0 else 1.0))
        st.condition = fade_condition(cfg.presets[st.source], cfg.presets[st.target], st.fade_progress)
        if st.fade_progress >= 1.0:
            st.source = st.target
            lo, hi = cfg.hold_range
            st.hold_remaining = lo + (hi - lo) * rng.random()
    else:
        st.hold_remaining -= dt
        if st.hold_remaining <= 0.0:
            st.humidity = min(max(st.condition.humidity + 0.1 * rng.standard_normal(), 0.0), 1.0)
            nxt, fade = next_condition(cfg, st.source, st.humidity, rng)
            st.target, st.fade_duration, st.fade_progress = nxt, fade, 0.0
            tw = draw_wind_target(cfg.presets[nxt], st.wind.target, rng, cfg.max_wind)
            st.wind = replace(st.wind, target=tw)
    st.wind = step_wind(st.wind, dt)
    st.layers = step_clouds(st.layers, st.wind, dt, st.condition.cloud_coverage, cfg.cloud_fade_rate, cfg.uv_per_meter)
    new = spawn_lightning(st.condition, camera_position, rng, st.time, dt, cfg.lightning_annulus, ground)
    if new:
        st.last_strike = new[-1].strike_time
        st.events.extend(new)
    st.time += dt
    return new


def weather_to_dict(st: WeatherState) -> dict:
    c = st.condition
    return {
        "source": st.source,
        "target": st.target,
        "fade_progress": st.fade_progress,
        "fade_duration": st.fade_duration,
        "hold_remaining": st.hold_remaining,
        "humidity": st.humidity,
        "wind": [list(st.wind.velocity), list(st.wind.target), st.wind.tau, st.wind.max_speed],
        "layers": [[l.altitude, l.coverage, list(l.offset), l.speed, l.seed] for l in st.layers],
        "condition": [c.name, list(c.cloud_coverage), [c.precipitation.kind, c.precipitation.intensity,
                      c.precipitation.fall_speed, c.precipitation.tilt], list(c.wind_speed), c.humidity,
                      c.lightning_rate],
        "time": st.time,
        "last_strike": st.last_strike if math.isfinite(st.last_strike) else None,
        "events": [[list(e.position), e.strike_time, e.audible_time, e.gain] for e in st.events],
    }


def weather_from_dict(d: dict) -> WeatherState:
    name, cov, p, ws, hum, rate = d["condition"]
    cond = WeatherCondition(name, tuple(cov), PrecipitationDesc(*p), tuple(ws), hum, rate)
    v, t, tau, vmax = d["wind"]
    return WeatherState(
        source=d["source"],
        target=d["target"],
        fade_progress=d["fade_progress"],
        fade_duration=d["fade_duration"],
        hold_remaining=d["hold_remaining"],
        humidity=d["humidity"],
        wind=WindState(tuple(v), tuple(t), tau, vmax),
        layers=[CloudLayer(a, c, tuple(o), s, sd) for a, c, o, s, sd in d["layers"]],
        condition=cond,
        time=d["time"],
        last_strike=-math.inf if d["last_strike"] is None else d["last_strike"],
        events=[ThunderEvent(tuple(p), ts, ta, g) for p, ts, ta, g in d["events"]],
    )
