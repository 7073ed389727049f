"""Whole-simulation snapshots.

Layout (little-endian): ``b"TSIM"``, u16 format version, u32 payload
length, UTF-8 JSON payload, u32 CRC-32 of the payload. JSON keeps floats
exact because Python writes the shortest repr that round-trips.
"""
from __future__ import annotations

import hashlib
import json
import struct
import zlib

MAGIC = b"TSIM"
VERSION = 1
_HEADER = struct.Struct("<4sHI")
_CRC = struct.Struct("<I")


class StateError(ValueError):
    pass


def _canonical(state: dict) -> bytes:
    return json.dumps(state, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


def encode_state(state: dict) -> bytes:
    payload = _canonical(state)
    return _HEADER.pack(MAGIC, VERSION, len(payload)) + payload + _CRC.pack(zlib.crc32(payload))


def decode_state(data: bytes) -> dict:
    if len(data) < _HEADER.size:
        raise StateError(f"truncated state stream: {len(data)} bytes, header needs {_HEADER.size}")
    magic, version, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise StateError(f"not a state stream: bad magic {magic!r} (version check failed)")
    if version != VERSION:
        raise StateError(f"unsupported state version {version}, expected {VERSION}")
    end = _HEADER.size + length
    if len(data) < end + _CRC.size:
        raise StateError(f"truncated state stream: {len(data)} bytes, expected {end + _CRC.size}")
    payload = data[_HEADER.size:end]
    (crc,) = _CRC.unpack_from(data, end)
    if crc != zlib.crc32(payload):
        raise StateError("state stream checksum mismatch")
    return json.loads(payload.decode("utf-8"))


def save_state(world) -> bytes:
    return encode_state(world.get_state())


def load_state(world, data: bytes):
    """Overwrite the dynamic state of ``world`` (built from the same scene)."""
    world.set_state(decode_state(data))
    return world


def state_digest(world) -> str:
    return hashlib.sha256(_canonical(world.get_state())).hexdigest()
