"""Day-night cycle: low-precision sun/moon ephemeris, sidereal starfield,
ambient light schedule and hemispherical skydome shading.

Angles returned to callers are radians; azimuth is measured from north
clockwise toward east. The ephemeris series are the usual truncated
almanac expressions (about 0.01 deg for the sun, a few tenths of a degree
for the moon), which is plenty for lighting.
"""
from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .mathutil import dot3, quat_from_matrix, smoothstep

J2000 = 2451545.0
SIDEREAL_DEG_PER_DAY = 360.98564736629
SUN_ANGULAR_RADIUS = math.radians(0.27)
MOON_ANGULAR_RADIUS = math.radians(0.27)


# -- time --------------------------------------------------------------------

def julian_day(date, time=None) -> float:
    """Julian Day (UT) for a Gregorian calendar date and time of day.

    ``date`` may be a ``datetime.datetime``, a ``datetime.date`` or a
    ``(year, month, day)`` tuple; ``time`` a ``datetime.time`` or
    ``(hour, minute[, second])``.
    """
    if isinstance(date, _dt.datetime):
        if time is None:
            time = date.time()
        date = date.date()
    if isinstance(date, tuple):
        date = _dt.date(*date)  # raises ValueError for impossible dates
    if time is None:
        hours = 0.0
    elif isinstance(time, _dt.time):
        hours = time.hour + time.minute / 60 + (time.second + time.microsecond * 1e-6) / 3600
    else:
        h, m, *s = time
        if not (0 <= h < 24 and 0 <= m < 60 and (not s or 0 <= s[0] < 60)):
            raise ValueError(f"invalid time of day {time!r}")
        hours = h + m / 60 + (s[0] if s else 0) / 3600
    y, mo, d = date.year, date.month, date.day
    if mo <= 2:
        y -= 1
        mo += 12
    a = y // 100
    b = 2 - a + a // 4
    return math.floor(365.25 * (y + 4716)) + math.floor(30.6001 * (mo + 1)) + d + b - 1524.5 + hours / 24.0


def gmst_deg(jd: float) -> float:
    d = jd - J2000
    t = d / 36525.0
    return (280.46061837 + SIDEREAL_DEG_PER_DAY * d + 0.000387933 * t * t - t * t * t / 38710000.0) % 360.0


# -- ephemeris ---------------------------------------------------------------

def _obliquity(jd):
    return math.radians(23.439 - 0.0000004 * (jd - J2000))


def sun_ecliptic(jd: float):
    """Apparent ecliptic longitude of the sun (rad)."""
    n = jd - J2000
    L = 280.460 + 0.9856474 * n
    g = math.radians(357.528 + 0.9856003 * n)
    lam = L + 1.915 * math.sin(g) + 0.020 * math.sin(2 * g)
    return math.radians(lam % 360.0)


def sun_equatorial(jd: float):
    lam = sun_ecliptic(jd)
    eps = _obliquity(jd)
    ra = math.atan2(math.cos(eps) * math.sin(lam), math.cos(lam))
    dec = math.asin(math.sin(eps) * math.sin(lam))
    return ra, dec


def moon_ecliptic(jd: float):
    """Geocentric ecliptic longitude, latitude and horizontal parallax (rad)."""
    t = (jd - J2000) / 36525.0

    def s(a, b):
        return math.sin(math.radians(a + b * t))

    def c(a, b):
        return math.cos(math.radians(a + b * t))

    lam = (
        218.32 + 481267.881 * t
        + 6.29 * s(135.0, 477198.87) - 1.27 * s(259.3, -413335.36)
        + 0.66 * s(235.7, 890534.22) + 0.21 * s(269.9, 954397.74)
        - 0.19 * s(357.5, 35999.05) - 0.11 * s(186.5, 966404.03)
    )
    beta = (
        5.13 * s(93.3, 483202.02) + 0.28 * s(228.2, 960400.89)
        - 0.28 * s(318.3, 6003.15) - 0.17 * s(217.6, -407332.21)
    )
    par = (
        0.9508 + 0.0518 * c(135.0, 477198.87) + 0.0095 * c(259.3, -413335.36)
        + 0.0078 * c(235.7, 890534.22) + 0.0028 * c(269.9, 954397.74)
    )
    return math.radians(lam % 360.0), math.radians(beta), math.radians(par)


def moon_equatorial(jd: float):
    lam, beta, _ = moon_ecliptic(jd)
    eps = _obliquity(jd)
    ra = math.atan2(math.sin(lam) * math.cos(eps) - math.tan(beta) * math.sin(eps), math.cos(lam))
    dec = math.asin(math.sin(beta) * math.cos(eps) + math.cos(beta) * math.sin(eps) * math.sin(lam))
    return ra, dec


def equatorial_to_world_matrix(jd: float, lat_deg: float, lon_deg: float) -> np.ndarray:
    """Rotation taking equatorial unit vectors (x to the equinox, z to the
    north celestial pole) into the local world frame (x east, y up, z south)."""
    theta = math.radians(gmst_deg(jd) + lon_deg)
    phi = math.radians(lat_deg)
    st, ct = math.sin(theta), math.cos(theta)
    sp, cp = math.sin(phi), math.cos(phi)
    return np.array(
        [
            [-st, ct, 0.0],
            [cp * ct, cp * st, sp],
            [sp * ct, sp * st, -cp],
        ]
    )


def _radec_vector(ra, dec):
    return np.array([math.cos(dec) * math.cos(ra), math.cos(dec) * math.sin(ra), math.sin(dec)])


def _horizontal(world_dir):
    x, y, z = world_dir
    el = math.asin(max(-1.0, min(1.0, y)))
    az = math.atan2(x, -z) % (2 * math.pi)
    return az, el


def sun_position(jd: float, lat_deg: float, lon_deg: float):
    """(azimuth, elevation) of the sun in radians, geometric (no refraction)."""
    m = equatorial_to_world_matrix(jd, lat_deg, lon_deg)
    return _horizontal(m @ _radec_vector(*sun_equatorial(jd)))


def moon_phase(jd: float) -> float:
    """Fraction of the synodic cycle: 0 new, 0.5 full."""
    lam_m = moon_ecliptic(jd)[0]
    lam_s = sun_ecliptic(jd)
    return ((lam_m - lam_s) % (2 * math.pi)) / (2 * math.pi)


def moon_position(jd: float, lat_deg: float, lon_deg: float):
    """(azimuth, topocentric elevation, phase) of the moon."""
    m = equatorial_to_world_matrix(jd, lat_deg, lon_deg)
    az, el = _horizontal(m @ _radec_vector(*moon_equatorial(jd)))
    par = moon_ecliptic(jd)[2]
    el = el - math.asin(math.sin(par) * math.cos(el))
    return az, el, moon_phase(jd)


def illuminated_fraction(phase: float) -> float:
    return 0.5 * (1.0 - math.cos(2 * math.pi * phase))


def starfield_rotation(jd: float, lat_deg: float, lon_deg: float) -> np.ndarray:
    """Quaternion (w, x, y, z) of the equatorial-to-world rotation."""
    return quat_from_matrix(equatorial_to_world_matrix(jd, lat_deg, lon_deg))


# -- star catalog --------------------------------------------------------------

@dataclass(frozen=True)
class StarCatalog:
    ra: np.ndarray  # rad
    dec: np.ndarray  # rad
    magnitude: np.ndarray
    names: tuple

    @property
    def vectors(self) -> np.ndarray:
        cd = np.cos(self.dec)
        return np.stack([cd * np.cos(self.ra), cd * np.sin(self.ra), np.sin(self.dec)], axis=-1)

    @property
    def brightness(self) -> np.ndarray:
        return 2.512 ** (-self.magnitude)

    def index(self, name: str) -> int:
        return self.names.index(name)


def parse_star_catalog(text: str) -> StarCatalog:
    ra, dec, mag, names = [], [], [], []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 3:
            raise ValueError(f"star catalog line {n}: expected 'ra_deg dec_deg vmag [name]'")
        ra.append(math.radians(float(parts[0])))
        dec.append(math.radians(float(parts[1])))
        mag.append(float(parts[2]))
        names.append(parts[3] if len(parts) > 3 else f"star{n}")
    return StarCatalog(np.array(ra), np.array(dec), np.array(mag), tuple(names))


@lru_cache(maxsize=1)
def default_catalog() -> StarCatalog:
    return parse_star_catalog(resources.files("outdoorsim").joinpath("data/stars.txt").read_text())


# -- sky state -----------------------------------------------------------------

@dataclass
class SkyConfig:
    latitude: float = 0.0
    longitude: float = 0.0
    night_ambient: tuple = (0.02, 0.03, 0.08)
    day_ambient: tuple = (1.0, 0.97, 0.84)
    night_below: float = math.radians(-10.0)
    day_above: float = math.radians(15.0)
    sun_intensity: float = 2.5
    moon_intensity: float = 0.12
    star_gain: float = 1.5
    star_radius: float = math.radians(0.3)

    def __post_init__(self):
        if not -90 <= self.latitude <= 90:
            raise ValueError(f"latitude out of range: {self.latitude}")
        if not -180 <= self.longitude <= 180:
            raise ValueError(f"longitude out of range: {self.longitude}")
        if not self.night_below < self.day_above:
            raise ValueError("sky thresholds need night_below < day_above")


@dataclass
class SkyState:
    jd: float
    sun_dir: np.ndarray
    sun_azimuth: float
    sun_elevation: float
    moon_dir: np.ndarray
    moon_elevation: float
    moon_phase: float
    star_rotation: np.ndarray  # quaternion
    star_matrix: np.ndarray
    ambient: np.ndarray
    sun_color: np.ndarray
    sun_intensity: float
    moon_color: np.ndarray
    moon_intensity: float
    stars_visible: bool
    config: SkyConfig = field(repr=False, default_factory=SkyConfig)


def ambient_color(cfg: SkyConfig, sun_elevation) -> np.ndarray:
    t = smoothstep(cfg.night_below, cfg.day_above, sun_elevation)
    night = np.asarray(cfg.night_ambient, dtype=float)
    day = np.asarray(cfg.day_ambient, dtype=float)
    return night + (day - night) * np.asarray(t)[..., None]


def sun_color(elevation: float) -> np.ndarray:
    """Reddened near the horizon, near white when high."""
    low = np.array([1.0, 0.45, 0.2])
    high = np.array([1.0, 0.97, 0.9])
    return low + (high - low) * float(smoothstep(0.0, math.radians(25.0), elevation))


def compute_sky_state(cfg: SkyConfig, jd: float) -> SkyState:
    m = equatorial_to_world_matrix(jd, cfg.latitude, cfg.longitude)
    sun_dir = m @ _radec_vector(*sun_equatorial(jd))
    sun_dir = sun_dir / np.linalg.norm(sun_dir)
    s_az, s_el = _horizontal(sun_dir)
    m_az, m_el, phase = moon_position(jd, cfg.latitude, cfg.longitude)
    ce = math.cos(m_el)
    moon_dir = np.array([math.sin(m_az) * ce, math.sin(m_el), -math.cos(m_az) * ce])
    s_int = cfg.sun_intensity * float(smoothstep(math.radians(-2.0), math.radians(6.0), s_el))
    # moon key light only once the sun is down
    m_int = 0.0
    if s_el < 0.0:
        m_int = cfg.moon_intensity * illuminated_fraction(phase) * float(smoothstep(-0.02, 0.1, m_el))
    return SkyState(
        jd=jd,
        sun_dir=sun_dir,
        sun_azimuth=s_az,
        sun_elevation=s_el,
        moon_dir=moon_dir,
        moon_elevation=m_el,
        moon_phase=phase,
        star_rotation=quat_from_matrix(m),
        star_matrix=m,
        ambient=ambient_color(cfg, s_el),
        sun_color=sun_color(s_el),
        sun_intensity=s_int,
        moon_color=np.array([0.75, 0.8, 1.0]),
        moon_intensity=m_int,
        stars_visible=s_el < cfg.night_below,
        config=cfg,
    )


ZENITH_TINT = np.array([0.25, 0.5, 1.4])
HORIZON_TINT = np.array([0.9, 1.05, 1.3])
HALO_COS = math.cos(math.radians(20.0))


def shade_skydome(state: SkyState, dirs, catalog: StarCatalog | None = None) -> np.ndarray:
    """Background radiance for unit view directions ``dirs`` (..., 3)."""
    dirs = np.asarray(dirs, dtype=float)
    amb = state.ambient
    zenith = amb * ZENITH_TINT
    horizon = amb * HORIZON_TINT
    g = np.sqrt(np.clip(dirs[..., 1], 0.0, 1.0))[..., None]
    rgb = horizon + (zenith - horizon) * g

    above = dirs[..., 1] > 0.0
    cos_sun = dot3(dirs, state.sun_dir)
    if state.sun_intensity > 0.0:
        halo = np.clip((cos_sun - HALO_COS) / (1.0 - HALO_COS), 0.0, 1.0) ** 2
        rgb = rgb + (0.35 * state.sun_intensity * halo)[..., None] * state.sun_color
    disc = above & (cos_sun >= math.cos(SUN_ANGULAR_RADIUS)) & (state.sun_elevation > -SUN_ANGULAR_RADIUS)
    sun_rgb = np.minimum(state.sun_color * 20.0 * max(state.sun_intensity, 0.05), 20.0)
    rgb = np.where(disc[..., None], sun_rgb, rgb)

    cos_moon = dot3(dirs, state.moon_dir)
    mdisc = above & (cos_moon >= math.cos(MOON_ANGULAR_RADIUS)) & ~disc
    lit = 0.15 + 0.85 * illuminated_fraction(state.moon_phase)
    rgb = np.where(mdisc[..., None], state.moon_color * (1.5 * lit), rgb)

    if state.stars_visible:
        cat = catalog or default_catalog()
        sv = cat.vectors
        m = state.star_matrix
        world = np.stack([sv @ m[0], sv @ m[1], sv @ m[2]], axis=-1)
        bright = cat.brightness * state.config.star_gain
        cos_r = math.cos(state.config.star_radius)
        star = np.zeros(dirs.shape[:-1])
        for k in np.nonzero(world[:, 1] > 0.0)[0]:
            hit = dot3(dirs, world[k]) >= cos_r
            star = np.where(hit & (star < bright[k]), bright[k], star)
        rgb = rgb + (star * above)[..., None] * np.array([0.95, 0.95, 1.0])
    return rgb
