"""Named random substreams derived from one 64-bit scene seed.

Every consumer (weather, placement, particles, ...) draws from its own
``numpy.random.Generator`` so the order in which modules are evaluated
cannot perturb another module's sequence.
"""
from __future__ import annotations

import zlib

import numpy as np


def stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def substream(seed: int, name: str, *path: int) -> np.random.Generator:
    """Independent generator for ``(seed, name, *path)``."""
    ss = np.random.SeedSequence(seed & 0xFFFFFFFFFFFFFFFF, spawn_key=(stream_key(name), *path))
    return np.random.Generator(np.random.PCG64(ss))


class RngStreams:
    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def get(self, name: str) -> np.random.Generator:
        g = self._streams.get(name)
        if g is None:
            g = self._streams[name] = substream(self.seed, name)
        return g

    def __getitem__(self, name: str) -> np.random.Generator:
        return self.get(name)

    def get_state(self) -> dict:
        return {name: g.bit_generator.state for name, g in sorted(self._streams.items())}

    def set_state(self, state: dict) -> None:
        self._streams = {}
        for name, st in state.items():
            g = substream(self.seed, name)
            g.bit_generator.state = st
            self._streams[name] = g
