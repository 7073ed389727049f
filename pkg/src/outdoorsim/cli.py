"""Command-line entry point.

Exit codes: 0 success, 1 invalid scene/flags/state, 2 file system failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .assets import MapFormatError, encode_ppm
from .config import ConfigError, load_scene, parse_start
from .paging import format_instances
from .render.frame import frame_digest
from .state import StateError, load_state, save_state
from .weather import format_event
from .world import World

MODES = ("render", "validate", "dump-events", "dump-instances")
EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunSpec:
    scene: Path
    out: Path | None = None
    frames: int = 1
    fps: float | None = None
    seed: int | None = None
    width: int | None = None
    height: int | None = None
    start: str | None = None
    time_scale: float | None = None
    weather: str | None = None
    save_state: Path | None = None
    load_state: Path | None = None
    mode: str = "render"
    threads: int = 1

    def __post_init__(self):
        if self.mode not in MODES:
            raise UsageError(f"--mode: expected one of {', '.join(MODES)}, got {self.mode!r}")
        if self.frames < 1 and self.mode != "validate":
            raise UsageError(f"--frames: must be >= 1, got {self.frames}")
        if self.fps is not None and not self.fps > 0:
            raise UsageError(f"--fps: must be > 0, got {self.fps}")
        if self.threads < 1:
            raise UsageError(f"--threads: must be >= 1, got {self.threads}")
        for name in ("width", "height"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise UsageError(f"--{name}: must be >= 1, got {v}")
        if self.time_scale is not None and not self.time_scale > 0:
            raise UsageError(f"--time-scale: must be > 0, got {self.time_scale}")
        if self.seed is not None and self.seed < 0:
            raise UsageError(f"--seed: must be >= 0, got {self.seed}")
        if self.mode in ("render", "dump-events", "dump-instances") and self.out is None:
            raise UsageError(f"--out is required in {self.mode} mode")


def apply_overrides(cfg, spec: RunSpec):
    """Fold command-line overrides into the scene configuration."""
    if spec.seed is not None:
        cfg = replace(cfg, weather=replace(cfg.weather, seed=spec.seed))
    if spec.weather is not None:
        known = {"clear", "overcast", "rain", "storm"} | ({"snow"} if cfg.weather.snow else set())
        if spec.weather not in known:
            raise ConfigError(f"--weather: unknown preset {spec.weather!r}; expected one of {sorted(known)}")
        cfg = replace(cfg, weather=replace(cfg.weather, initial=spec.weather))
    if spec.start is not None:
        cfg = replace(cfg, start=parse_start(spec.start, "--start"))
    if spec.time_scale is not None:
        cfg = replace(cfg, time_scale=spec.time_scale)
    render = cfg.render
    if spec.width is not None:
        render = replace(render, width=spec.width)
    if spec.height is not None:
        render = replace(render, height=spec.height)
    if spec.fps is not None:
        render = replace(render, fps=spec.fps)
    return replace(cfg, render=render)


def _write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _lines(lines) -> bytes:
    return "".join(f"{l}\n" for l in lines).encode("ascii")


def run(spec: RunSpec, log=print) -> int:
    if not spec.scene.is_file():
        log(f"error: scene file not found: {spec.scene}")
        return EXIT_IO
    try:
        cfg = apply_overrides(load_scene(spec.scene), spec)
        world = World(cfg)
        if spec.load_state is not None:
            load_state(world, spec.load_state.read_bytes())
    except (ConfigError, MapFormatError, StateError, ValueError) as exc:
        log(f"error: {exc}")
        return EXIT_INVALID
    except OSError as exc:
        log(f"error: {exc.filename or ''}: {exc.strerror}")
        return EXIT_IO

    if spec.mode == "validate":
        log(f"ok: {spec.scene} ({len(world.layers)} paged layer(s), weather {world.weather.target}, seed {world.seed})")
        return EXIT_OK

    dt = 1.0 / cfg.render.fps
    try:
        if spec.mode == "dump-instances":
            for _ in range(spec.frames - 1):
                world.step(dt)
            cam = world.camera()
            per_layer = world.paged.visible_instances(cam, cfg.render.width, cfg.render.height)
            for layer, sets in zip(world.layers, per_layer):
                _write(spec.out / f"instances_{layer.name}.txt", _lines(format_instances([sets])))
        else:
            events, digests = [], []
            for _ in range(spec.frames):
                events.extend(world.step(dt))
                if spec.mode == "render":
                    _, ldr = world.render(threads=spec.threads)
                    name = f"frame_{world.frame:06d}"
                    _write(spec.out / f"{name}.ppm", encode_ppm(ldr))
                    digests.append(f"{name} {frame_digest(ldr)}")
            _write(spec.out / "events.log", _lines(format_event(e) for e in events))
            if spec.mode == "render":
                _write(spec.out / "digests.txt", _lines(digests))
        if spec.save_state is not None:
            _write(spec.save_state, save_state(world))
    except OSError as exc:
        log(f"error: {exc.filename or ''}: {exc.strerror}")
        return EXIT_IO
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="outdoorsim", description="Simulate and render outdoor scenes.")
    p.add_argument("--scene", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--fps", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--start", help='"YYYY-MM-DD HH:MM"')
    p.add_argument("--time-scale", type=float)
    p.add_argument("--weather")
    p.add_argument("--save-state", type=Path)
    p.add_argument("--load-state", type=Path)
    p.add_argument("--mode", default="render", choices=MODES)
    p.add_argument("--threads", type=int, default=1)
    return p


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        spec = RunSpec(**vars(ns))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(spec, log=lambda m: print(m, file=sys.stderr if m.startswith("error") else sys.stdout))
