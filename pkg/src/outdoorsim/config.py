"""Scene files: a TOML tree of nested blocks, validated into ``SceneConfig``.

Every block and key is optional; an empty file is a valid scene (no
terrain, no water, no paged layers, one static camera). Relative paths
resolve against the scene file's directory.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from datetime import date, datetime, time
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .mathutil import quat_from_yaw_pitch


class ConfigError(ValueError):
    """Invalid scene description; the message names the offending field."""


@dataclass(frozen=True)
class TerrainConfig:
    heightmap: Path
    coverage: Path | None = None
    color_map: Path | None = None
    textures: tuple = ()
    spacing: float = 4.0
    vertical_scale: float = 100.0
    origin: tuple | None = None  # world (x, z) of sample (0, 0); None centres the map
    tiling: tuple = (32.0, 32.0, 32.0, 32.0)
    parallax_scale: float = 0.04
    parallax_bias: float = -0.02
    parallax_iterations: int = 3
    shininess: float = 16.0
    specular: float = 0.05


@dataclass(frozen=True)
class WaterConfig:
    enabled: bool = False
    grid: str = "projected"
    resolution: int = 48
    base_level: float = 0.0
    rect: tuple = (-500.0, -500.0, 500.0, 500.0)
    radius: float = 2000.0
    rings: int = 24
    waves: dict | None = None
    deep: tuple = (0.01, 0.06, 0.12)
    shallow: tuple = (0.08, 0.32, 0.34)
    depth_falloff: float = 6.0
    foam_threshold: float = 0.7
    shininess: float = 120.0


@dataclass(frozen=True)
class WeatherBlock:
    initial: str = "clear"
    seed: int = 1
    snow: bool = False


@dataclass(frozen=True)
class LayerConfig:
    name: str
    meshes: tuple
    density: Path
    instances_per_texel: float = 1.0
    scale: tuple = (0.8, 1.2)
    lod: tuple = (100.0, 200.0, 500.0)
    page_size: float = 128.0
    grass: bool = False


@dataclass(frozen=True)
class KeyConfig:
    time: float
    position: tuple
    orientation: tuple  # (w, x, y, z)


@dataclass(frozen=True)
class CameraConfig:
    fov_y: float = math.radians(60.0)
    near: float = 0.5
    far: float = 4000.0
    keys: tuple = (KeyConfig(0.0, (0.0, 50.0, 0.0), (1.0, 0.0, 0.0, 0.0)),)


@dataclass(frozen=True)
class RenderConfig:
    width: int = 320
    height: int = 180
    fps: float = 24.0
    exposure: float = 1.0


@dataclass(frozen=True)
class SceneConfig:
    path: Path | None = None
    latitude: float = 0.0
    longitude: float = 0.0
    start: datetime = datetime(2000, 1, 1, 12, 0)
    start_is_utc: bool = False
    time_scale: float = 1.0
    terrain: TerrainConfig | None = None
    water: WaterConfig = field(default_factory=WaterConfig)
    weather: WeatherBlock = field(default_factory=WeatherBlock)
    layers: tuple = ()
    camera: CameraConfig = field(default_factory=CameraConfig)
    render: RenderConfig = field(default_factory=RenderConfig)


# -- field readers ---------------------------------------------------------------

def _num(block, key, name, default, lo=None, hi=None, lo_open=False, integer=False):
    v = block.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{name}: expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{name}: must be finite")
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(f"{name}: must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"{name}: must be <= {hi}, got {v}")
    return int(v) if integer else float(v)


def _vec(block, key, name, n, default=None):
    v = block.get(key, default)
    if v is None:
        return None
    if not isinstance(v, (list, tuple)) or len(v) != n or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise ConfigError(f"{name}: expected {n} numbers, got {v!r}")
    return tuple(float(x) for x in v)


def _bool(block, key, name, default):
    v = block.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"{name}: expected true or false, got {v!r}")
    return v


def _str(block, key, name, default):
    v = block.get(key, default)
    if not isinstance(v, str):
        raise ConfigError(f"{name}: expected a string, got {v!r}")
    return v


def _file(block, key, name, base: Path, required=True):
    v = block.get(key)
    if v is None:
        if required:
            raise ConfigError(f"{name}: missing")
        return None
    if not isinstance(v, str):
        raise ConfigError(f"{name}: expected a file path, got {v!r}")
    p = (base / v) if not Path(v).is_absolute() else Path(v)
    if not p.is_file():
        raise ConfigError(f"{name}: file not found: {p}")
    return p


def _table(block, key, name):
    v = block.get(key, {})
    if not isinstance(v, dict):
        raise ConfigError(f"{name}: expected a table")
    return v


def _check_keys(block, allowed, name):
    extra = sorted(set(block) - set(allowed))
    if extra:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(extra)}")


def parse_start(text: str, name: str = "calendar.start") -> datetime:
    for fmt in ("%Y-%m-%d %H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d"):
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            continue
    raise ConfigError(f"{name}: expected 'YYYY-MM-DD HH:MM', got {text!r}")


def _start(cal, name):
    v = cal.get("start", datetime(2000, 1, 1, 12, 0))
    if isinstance(v, datetime):
        return v.replace(tzinfo=None)
    if isinstance(v, date):
        return datetime.combine(v, time(0, 0))
    if isinstance(v, str):
        return parse_start(v, name)
    raise ConfigError(f"{name}: expected a date-time, got {v!r}")


def _terrain(t, base):
    _check_keys(t, {"heightmap", "coverage", "color_map", "textures", "spacing", "vertical_scale", "origin", "tiling",
                    "parallax_scale", "parallax_bias", "parallax_iterations", "shininess", "specular"}, "terrain")
    tex = t.get("textures", [])
    if not isinstance(tex, list):
        raise ConfigError("terrain.textures: expected a list of 4 paths")
    if tex and len(tex) != 4:
        raise ConfigError(f"terrain.textures: expected exactly 4 textures, got {len(tex)}")
    textures = tuple(_file({"p": v}, "p", f"terrain.textures[{i}]", base) for i, v in enumerate(tex))
    tiling = t.get("tiling", 32.0)
    if isinstance(tiling, (int, float)) and not isinstance(tiling, bool):
        tiling = (float(tiling),) * 4
    else:
        tiling = _vec(t, "tiling", "terrain.tiling", 4)
    if any(x <= 0 for x in tiling):
        raise ConfigError("terrain.tiling: must be > 0")
    return TerrainConfig(
        heightmap=_file(t, "heightmap", "terrain.heightmap", base),
        coverage=_file(t, "coverage", "terrain.coverage", base, required=False),
        color_map=_file(t, "color_map", "terrain.color_map", base, required=False),
        textures=textures,
        spacing=_num(t, "spacing", "terrain.spacing", 4.0, lo=0, lo_open=True),
        vertical_scale=_num(t, "vertical_scale", "terrain.vertical_scale", 100.0, lo=0),
        origin=_vec(t, "origin", "terrain.origin", 2),
        tiling=tiling,
        parallax_scale=_num(t, "parallax_scale", "terrain.parallax_scale", 0.04),
        parallax_bias=_num(t, "parallax_bias", "terrain.parallax_bias", -0.02),
        parallax_iterations=_num(t, "parallax_iterations", "terrain.parallax_iterations", 3, lo=1, integer=True),
        shininess=_num(t, "shininess", "terrain.shininess", 16.0, lo=0),
        specular=_num(t, "specular", "terrain.specular", 0.05, lo=0),
    )


def _water(w):
    _check_keys(w, {"enabled", "grid", "resolution", "base_level", "rect", "radius", "rings", "waves", "deep", "shallow",
                    "depth_falloff", "foam_threshold", "shininess"}, "water")
    grid = _str(w, "grid", "water.grid", "projected")
    if grid not in ("projected", "simple", "radial"):
        raise ConfigError(f"water.grid: expected projected, simple or radial, got {grid!r}")
    waves = w.get("waves")
    if waves is not None:
        if not isinstance(waves, dict):
            raise ConfigError("water.waves: expected a table")
        _check_keys(waves, {"amplitude", "wavelength", "direction", "phase", "steepness"}, "water.waves")
        for k in ("amplitude", "wavelength", "direction", "phase", "steepness"):
            if k not in waves or not isinstance(waves[k], list):
                raise ConfigError(f"water.waves.{k}: expected a list")
    return WaterConfig(
        enabled=_bool(w, "enabled", "water.enabled", bool(w)),
        grid=grid,
        resolution=_num(w, "resolution", "water.resolution", 48, lo=8, integer=True),
        base_level=_num(w, "base_level", "water.base_level", 0.0),
        rect=_vec(w, "rect", "water.rect", 4, (-500.0, -500.0, 500.0, 500.0)),
        radius=_num(w, "radius", "water.radius", 2000.0, lo=0, lo_open=True),
        rings=_num(w, "rings", "water.rings", 24, lo=2, integer=True),
        waves=waves,
        deep=_vec(w, "deep", "water.deep", 3, (0.01, 0.06, 0.12)),
        shallow=_vec(w, "shallow", "water.shallow", 3, (0.08, 0.32, 0.34)),
        depth_falloff=_num(w, "depth_falloff", "water.depth_falloff", 6.0, lo=0, lo_open=True),
        foam_threshold=_num(w, "foam_threshold", "water.foam_threshold", 0.7),
        shininess=_num(w, "shininess", "water.shininess", 120.0, lo=0),
    )


def _layer(lb, i, base):
    name = f"paging.layers[{i}]"
    if not isinstance(lb, dict):
        raise ConfigError(f"{name}: expected a table")
    _check_keys(lb, {"name", "meshes", "density", "instances_per_texel", "scale", "lod", "page_size", "grass"}, name)
    meshes = lb.get("meshes")
    if not isinstance(meshes, list) or not meshes or not all(isinstance(m, str) for m in meshes):
        raise ConfigError(f"{name}.meshes: expected a non-empty list of mesh names")
    grass = _bool(lb, "grass", f"{name}.grass", False)
    lod = lb.get("lod", [60.0] if grass else [100.0, 200.0, 500.0])
    if not isinstance(lod, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in lod):
        raise ConfigError(f"{name}.lod: expected a list of distances")
    lod = tuple(float(x) for x in lod)
    if grass:
        if len(lod) != 1 or lod[0] <= 0:
            raise ConfigError(f"{name}.lod: grass layers take one positive distance, got {list(lod)}")
    else:
        if len(lod) != 3:
            raise ConfigError(f"{name}.lod: expected (batch_end, wind_end, impostor_end), got {list(lod)}")
        if not 0 < lod[0] < lod[1] < lod[2]:
            raise ConfigError(f"{name}.lod: thresholds must be strictly increasing and positive, got {list(lod)}")
    scale = _vec(lb, "scale", f"{name}.scale", 2, (0.8, 1.2))
    if not 0 < scale[0] <= scale[1]:
        raise ConfigError(f"{name}.scale: need 0 < min <= max, got {list(scale)}")
    return LayerConfig(
        name=_str(lb, "name", f"{name}.name", f"layer{i}"),
        meshes=tuple(meshes),
        density=_file(lb, "density", f"{name}.density", base),
        instances_per_texel=_num(lb, "instances_per_texel", f"{name}.instances_per_texel", 1.0, lo=0),
        scale=scale,
        lod=lod,
        page_size=_num(lb, "page_size", f"{name}.page_size", 128.0, lo=0, lo_open=True),
        grass=grass,
    )


def _key(k, i):
    name = f"camera.keys[{i}]"
    if not isinstance(k, dict):
        raise ConfigError(f"{name}: expected a table")
    _check_keys(k, {"time", "position", "orientation", "heading", "pitch"}, name)
    pos = _vec(k, "position", f"{name}.position", 3)
    if pos is None:
        raise ConfigError(f"{name}.position: missing")
    if "orientation" in k:
        q = _vec(k, "orientation", f"{name}.orientation", 4)
        if math.sqrt(sum(x * x for x in q)) == 0.0:
            raise ConfigError(f"{name}.orientation: zero quaternion")
    else:
        # heading is a compass bearing (clockwise from north); yaw turns the other way
        heading = math.radians(_num(k, "heading", f"{name}.heading", 0.0))
        pitch = math.radians(_num(k, "pitch", f"{name}.pitch", 0.0, lo=-90, hi=90))
        q = tuple(float(x) for x in quat_from_yaw_pitch(-heading, pitch))
    return KeyConfig(_num(k, "time", f"{name}.time", 0.0, lo=0), pos, q)


def parse_scene(data: dict, base: Path, path: Path | None = None) -> SceneConfig:
    _check_keys(data, {"location", "calendar", "time_scale", "terrain", "water", "weather", "paging", "camera", "render"}, "scene")
    loc = _table(data, "location", "location")
    _check_keys(loc, {"latitude", "longitude"}, "location")
    cal = _table(data, "calendar", "calendar")
    _check_keys(cal, {"start", "utc"}, "calendar")
    wb = _table(data, "weather", "weather")
    _check_keys(wb, {"initial", "seed", "snow"}, "weather")
    weather = WeatherBlock(
        initial=_str(wb, "initial", "weather.initial", "clear"),
        seed=_num(wb, "seed", "weather.seed", 1, lo=0, integer=True),
        snow=_bool(wb, "snow", "weather.snow", False),
    )
    known = {"clear", "overcast", "rain", "storm"} | ({"snow"} if weather.snow else set())
    if weather.initial not in known:
        raise ConfigError(f"weather.initial: unknown preset {weather.initial!r}; expected one of {sorted(known)}")
    pg = _table(data, "paging", "paging")
    _check_keys(pg, {"layers"}, "paging")
    layers = pg.get("layers", [])
    if not isinstance(layers, list):
        raise ConfigError("paging.layers: expected an array of tables")
    cam = _table(data, "camera", "camera")
    _check_keys(cam, {"fov", "near", "far", "keys"}, "camera")
    near = _num(cam, "near", "camera.near", 0.5, lo=0, lo_open=True)
    far = _num(cam, "far", "camera.far", 4000.0)
    if not far > near:
        raise ConfigError(f"camera.far: must exceed camera.near ({near}), got {far}")
    fov = _num(cam, "fov", "camera.fov", 60.0, lo=0, lo_open=True)
    if fov >= 180.0:
        raise ConfigError(f"camera.fov: must be < 180 degrees, got {fov}")
    keys = cam.get("keys")
    if keys is None:
        keys = CameraConfig().keys
    elif not isinstance(keys, list) or not keys:
        raise ConfigError("camera.keys: expected a non-empty array of keyframes")
    else:
        keys = tuple(_key(k, i) for i, k in enumerate(keys))
    rb = _table(data, "render", "render")
    _check_keys(rb, {"width", "height", "fps", "exposure"}, "render")
    terrain = _table(data, "terrain", "terrain")
    if layers and not terrain:
        raise ConfigError("paging.layers: paged layers need a terrain block to ground instances")
    return SceneConfig(
        path=path,
        latitude=_num(loc, "latitude", "location.latitude", 0.0, lo=-90, hi=90),
        longitude=_num(loc, "longitude", "location.longitude", 0.0, lo=-180, hi=180),
        start=_start(cal, "calendar.start"),
        start_is_utc=_bool(cal, "utc", "calendar.utc", False),
        time_scale=_num(data, "time_scale", "time_scale", 1.0, lo=0, lo_open=True),
        terrain=_terrain(terrain, base) if terrain else None,
        water=_water(_table(data, "water", "water")),
        weather=weather,
        layers=tuple(_layer(lb, i, base) for i, lb in enumerate(layers)),
        camera=CameraConfig(math.radians(fov), near, far, keys),
        render=RenderConfig(
            width=_num(rb, "width", "render.width", 320, lo=1, integer=True),
            height=_num(rb, "height", "render.height", 180, lo=1, integer=True),
            fps=_num(rb, "fps", "render.fps", 24.0, lo=0, lo_open=True),
            exposure=_num(rb, "exposure", "render.exposure", 1.0, lo=0, lo_open=True),
        ),
    )


def load_scene(path) -> SceneConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise ConfigError(f"scene file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read scene file {path}: {exc.strerror}") from None
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{path}: not UTF-8 text ({exc.reason})") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: parse error: {exc}") from None
    return parse_scene(data, path.parent, path)
