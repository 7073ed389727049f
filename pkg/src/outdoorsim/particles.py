"""Particle systems: box/point emitters, gravity and wind forces, lifetimes.

Integration is semi-implicit Euler (velocity first, then position). Each
system owns its random generator so systems can be stepped independently.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .rng import substream


@dataclass(frozen=True)
class ParticleDesc:
    name: str = "particles"
    emitter: str = "box"  # box | point
    center: tuple = (0.0, 0.0, 0.0)
    half_extent: tuple = (0.0, 0.0, 0.0)
    rate: float = 0.0  # particles per second
    velocity: tuple = (0.0, 0.0, 0.0)
    velocity_jitter: float = 0.0
    lifetime: float = 1.0
    size: float = 0.1
    color: tuple = (1.0, 1.0, 1.0, 1.0)
    gravity: tuple = (0.0, 0.0, 0.0)
    wind_coupling: float = 0.0
    capacity: int = 1000
    duration: float = math.inf  # emission stops after this many seconds
    kill_on_ground: bool = False
    emissive: bool = False

    def __post_init__(self):
        if self.emitter not in ("box", "point"):
            raise ValueError(f"unknown emitter kind {self.emitter!r}")
        if self.rate < 0 or self.lifetime <= 0 or self.capacity < 1:
            raise ValueError(f"{self.name}: rate >= 0, lifetime > 0 and capacity >= 1 required")
        if not 0.0 <= self.wind_coupling <= 1.0:
            raise ValueError(f"{self.name}: wind coupling must lie in [0,1]")


@dataclass
class ParticleSystem:
    id: int
    desc: ParticleDesc
    rng: np.random.Generator
    position: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    age: np.ndarray = field(default_factory=lambda: np.zeros(0))
    accumulator: float = 0.0
    elapsed: float = 0.0

    @property
    def live_count(self) -> int:
        return len(self.age)

    @property
    def finished(self) -> bool:
        return self.elapsed >= self.desc.duration and self.live_count == 0

    def move_emitter(self, center, half_extent=None):
        kw = {"center": tuple(float(c) for c in center)}
        if half_extent is not None:
            kw["half_extent"] = tuple(float(h) for h in half_extent)
        self.desc = replace(self.desc, **kw)

    def emit(self, n: int) -> None:
        """Spawn ``n`` particles, recycling the oldest when the pool is full."""
        if n <= 0:
            return
        d = self.desc
        n_keep = min(n, d.capacity)
        u = self.rng.random((n, 6))[-n_keep:]
        c = np.asarray(d.center, dtype=float)
        if d.emitter == "box":
            pos = c + (u[:, :3] * 2.0 - 1.0) * np.asarray(d.half_extent, dtype=float)
        else:
            pos = np.repeat(c[None, :], n_keep, axis=0)
        vel = np.asarray(d.velocity, dtype=float) + (u[:, 3:] * 2.0 - 1.0) * d.velocity_jitter
        self.position = np.concatenate([self.position, pos])
        self.velocity = np.concatenate([self.velocity, vel])
        self.age = np.concatenate([self.age, np.zeros(n_keep)])
        over = self.live_count - d.capacity
        if over > 0:
            # pool order is oldest first
            self.position = self.position[over:]
            self.velocity = self.velocity[over:]
            self.age = self.age[over:]


def step_particles(sys: ParticleSystem, dt: float, wind=(0.0, 0.0), ground=None) -> ParticleSystem:
    """Age, cull, integrate and emit, in that order. ``wind`` is horizontal (x, z)."""
    if dt < 0:
        raise ValueError("negative time step")
    d = sys.desc
    sys.age = sys.age + dt
    alive = sys.age <= d.lifetime
    if d.kill_on_ground and ground is not None and sys.live_count:
        alive &= sys.position[:, 1] > ground(sys.position[:, 0], sys.position[:, 2])
    if not np.all(alive):
        sys.position, sys.velocity, sys.age = sys.position[alive], sys.velocity[alive], sys.age[alive]
    accel = np.asarray(d.gravity, dtype=float) + np.array([wind[0], 0.0, wind[1]]) * d.wind_coupling
    sys.velocity = sys.velocity + accel * dt
    sys.position = sys.position + sys.velocity * dt
    if sys.elapsed < d.duration:
        active = min(dt, d.duration - sys.elapsed)
        sys.accumulator += d.rate * active
        n = int(math.floor(sys.accumulator))
        sys.accumulator -= n
        sys.emit(n)
    sys.elapsed += dt
    return sys


@dataclass(frozen=True)
class Billboard:
    position: tuple
    size: float
    color: tuple
    emissive: bool = False


def snapshot_billboards(sys: ParticleSystem, camera) -> list:
    """Camera-facing quads for live particles, farthest first (stable on ties)."""
    if sys.live_count == 0:
        return []
    diff = sys.position - np.asarray(camera.position, dtype=float)
    dist2 = diff[:, 0] ** 2 + diff[:, 1] ** 2 + diff[:, 2] ** 2
    order = np.argsort(-dist2, kind="stable")
    col = tuple(float(c) for c in sys.desc.color)
    return [Billboard(tuple(float(v) for v in sys.position[i]), sys.desc.size, col, sys.desc.emissive) for i in order]


class ParticleManager:
    """Ordered registry of particle systems with unique, never reused ids."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.systems: dict[int, ParticleSystem] = {}
        self.next_id = 1

    def create_system(self, desc: ParticleDesc) -> int:
        sid = self.next_id
        self.next_id += 1
        self.systems[sid] = ParticleSystem(sid, desc, substream(self.seed, "particles", sid))
        return sid

    def destroy_system(self, sid: int) -> None:
        if sid not in self.systems:
            raise KeyError(f"unknown particle system id {sid}")
        del self.systems[sid]

    def __len__(self):
        return len(self.systems)

    def step(self, dt: float, wind=(0.0, 0.0), ground=None) -> None:
        for sid in list(self.systems):
            s = step_particles(self.systems[sid], dt, wind, ground)
            if s.finished:
                del self.systems[sid]

    def billboard_arrays(self, camera):
        """All live particles as arrays (position, size, rgba, emissive), back to front.

        Ties in distance keep system-id then pool order.
        """
        pos, size, col, emi = [], [], [], []
        for s in self.systems.values():
            n = s.live_count
            if n == 0:
                continue
            pos.append(s.position)
            size.append(np.full(n, s.desc.size))
            col.append(np.broadcast_to(np.asarray(s.desc.color, dtype=float), (n, 4)))
            emi.append(np.full(n, s.desc.emissive))
        if not pos:
            return np.zeros((0, 3)), np.zeros(0), np.zeros((0, 4)), np.zeros(0, dtype=bool)
        pos = np.concatenate(pos)
        d = pos - np.asarray(camera.position, dtype=float)
        dist2 = d[:, 0] ** 2 + d[:, 1] ** 2 + d[:, 2] ** 2
        order = np.argsort(-dist2, kind="stable")
        return pos[order], np.concatenate(size)[order], np.concatenate(col)[order], np.concatenate(emi)[order]

    def get_state(self) -> dict:
        out = {"seed": self.seed, "next_id": self.next_id, "systems": []}
        for sid, s in self.systems.items():
            out["systems"].append(
                {
                    "id": sid,
                    "desc": _desc_to_dict(s.desc),
                    "rng": s.rng.bit_generator.state,
                    "position": s.position.tolist(),
                    "velocity": s.velocity.tolist(),
                    "age": s.age.tolist(),
                    "accumulator": s.accumulator,
                    "elapsed": s.elapsed,
                }
            )
        return out

    @classmethod
    def from_state(cls, st: dict) -> "ParticleManager":
        m = cls(st["seed"])
        m.next_id = st["next_id"]
        for e in st["systems"]:
            rng = substream(m.seed, "particles", e["id"])
            rng.bit_generator.state = e["rng"]
            m.systems[e["id"]] = ParticleSystem(
                e["id"],
                _desc_from_dict(e["desc"]),
                rng,
                np.array(e["position"], dtype=float).reshape(-1, 3),
                np.array(e["velocity"], dtype=float).reshape(-1, 3),
                np.array(e["age"], dtype=float),
                e["accumulator"],
                e["elapsed"],
            )
        return m


def _desc_to_dict(d: ParticleDesc) -> dict:
    out = asdict(d)
    out["duration"] = None if math.isinf(d.duration) else d.duration
    return out


def _desc_from_dict(d: dict) -> ParticleDesc:
    d = dict(d)
    d["duration"] = math.inf if d["duration"] is None else d["duration"]
    for k in ("center", "half_extent", "velocity", "color", "gravity"):
        d[k] = tuple(d[k])
    return ParticleDesc(**d)


def precipitation_desc(kind: str, intensity: float, fall_speed: float, wind, box) -> ParticleDesc:
    """Particle template for rain, hail or snow falling through ``box``."""
    look = {
        "rain": ((0.7, 0.75, 0.85, 0.35), 0.06),
        "hail": ((0.9, 0.9, 0.95, 0.8), 0.08),
        "snow": ((1.0, 1.0, 1.0, 0.85), 0.12),
    }[kind]
    # launch with the wind already included so the streak tilt is atan2(|wind|, fall)
    vel = (float(wind[0]), -float(fall_speed), float(wind[1]))
    return ParticleDesc(
        name=f"precip-{kind}",
        emitter="box",
        center=box.center,
        half_extent=box.half_extent,
        rate=1500.0 * intensity,
        velocity=vel,
        velocity_jitter=0.0,
        lifetime=(2.0 * box.half_extent[1] + 100.0) / max(fall_speed, 0.5),
        size=look[1],
        color=look[0],
        gravity=(0.0, 0.0, 0.0),
        wind_coupling=0.0,
        capacity=4000,
        kill_on_ground=True,
    )


def lightning_desc(position, top: float = 600.0) -> ParticleDesc:
    """Short bright column of particles from the strike point to the cloud base."""
    x, y, z = position
    mid = (y + top) / 2.0
    return ParticleDesc(
        name="lightning",
        emitter="box",
        center=(x, mid, z),
        half_extent=(3.0, (top - y) / 2.0, 3.0),
        rate=3000.0,
        lifetime=0.2,
        size=14.0,
        color=(0.85, 0.9, 1.0, 1.0),
        capacity=600,
        duration=0.15,
        emissive=True,
    )
