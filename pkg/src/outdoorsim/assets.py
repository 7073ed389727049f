"""Netpbm map I/O and filtered texture sampling.

Gray maps are binary PGM (P5, 8 or 16 bit, big-endian samples). Colour maps
are binary PPM (P6); an RGBA map takes its alpha from a sibling
``<stem>.alpha.pgm`` when one exists. Frames are written as 8-bit P6.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MapFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GrayMap:
    data: np.ndarray  # (H, W) float in [0, 1]
    depth: int = 8

    def __post_init__(self):
        h, w = self.data.shape
        if w < 2 or h < 2:
            raise MapFormatError(f"map must be at least 2x2, got {w}x{h}")
        if self.depth not in (8, 16):
            raise MapFormatError(f"bit depth must be 8 or 16, got {self.depth}")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class RgbaMap:
    data: np.ndarray  # (H, W, 4) float in [0, 1]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class Texture:
    pixels: RgbaMap
    height: GrayMap | None = None
    wrap: str = "repeat"

    def __post_init__(self):
        if self.wrap not in ("repeat", "clamp"):
            raise ValueError(f"unknown wrap mode {self.wrap!r}")
        if self.height is not None and self.height.data.shape != self.pixels.data.shape[:2]:
            raise ValueError("height channel must match texture dimensions")


# -- decoding ----------------------------------------------------------------

def _read_header(buf: bytes, magic: bytes, path):
    if not buf.startswith(magic):
        raise MapFormatError(f"{path}: expected {magic.decode()} header, got {buf[:2]!r}")
    fields, pos = [], 2
    while len(fields) < 3:
        while pos < len(buf) and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and buf[pos : pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise MapFormatError(f"{path}: malformed header")
        fields.append(int(buf[start:pos]))
    if pos >= len(buf) or not buf[pos : pos + 1].isspace():
        raise MapFormatError(f"{path}: malformed header")
    w, h, maxval = fields
    if maxval == 255:
        depth = 8
    elif maxval == 65535:
        depth = 16
    else:
        raise MapFormatError(f"{path}: bit depth must be 8 or 16 (maxval {maxval})")
    if w < 2 or h < 2:
        raise MapFormatError(f"{path}: dimension below 2 ({w}x{h})")
    return w, h, depth, pos + 1


def _decode(buf, offset, w, h, channels, depth, path):
    nbytes = w * h * channels * (depth // 8)
    payload = buf[offset : offset + nbytes]
    if len(payload) != nbytes:
        raise MapFormatError(f"{path}: truncated payload, expected {nbytes} bytes, got {len(payload)}")
    dtype = np.dtype(">u2") if depth == 16 else np.uint8
    raw = np.frombuffer(payload, dtype=dtype).astype(float)
    return (raw / float(2**depth - 1)).reshape(h, w, channels) if channels > 1 else (raw / float(2**depth - 1)).reshape(h, w)


def load_graymap(path) -> GrayMap:
    buf = Path(path).read_bytes()
    w, h, depth, off = _read_header(buf, b"P5", path)
    return GrayMap(_decode(buf, off, w, h, 1, depth, path), depth)


def alpha_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.name[: -len(p.suffix)] + ".alpha.pgm") if p.suffix else p.with_name(p.name + ".alpha.pgm")


def load_rgbamap(path, alpha=None) -> RgbaMap:
    buf = Path(path).read_bytes()
    w, h, depth, off = _read_header(buf, b"P6", path)
    rgb = _decode(buf, off, w, h, 3, depth, path)
    alpha = alpha_path(path) if alpha is None else Path(alpha)
    if alpha.exists():
        a = load_graymap(alpha).data
        if a.shape != (h, w):
            raise MapFormatError(f"{alpha}: alpha size {a.shape[::-1]} does not match {w}x{h}")
    else:
        a = np.ones((h, w))
    return RgbaMap(np.concatenate([rgb, a[..., None]], axis=-1))


def load_texture(path, wrap="repeat") -> Texture:
    """RGB texture plus optional ``<stem>.height.pgm`` parallax channel."""
    p = Path(path)
    pixels = load_rgbamap(p)
    hp = p.with_name(p.stem + ".height.pgm")
    height = load_graymap(hp) if hp.exists() else None
    return Texture(pixels, height, wrap)


# -- encoding ----------------------------------------------------------------

def quantize(values, depth=8) -> np.ndarray:
    """[0, 1] floats to integer codes, rounding half up."""
    top = 2**depth - 1
    q = np.floor(np.clip(np.asarray(values, dtype=float), 0.0, 1.0) * top + 0.5)
    return q.astype(np.uint16 if depth == 16 else np.uint8)


def encode_graymap(samples, depth=8) -> bytes:
    samples = np.asarray(samples)
    h, w = samples.shape
    q = quantize(samples, depth)
    body = q.astype(">u2").tobytes() if depth == 16 else q.tobytes()
    return b"P5\n%d %d\n%d\n" % (w, h, 2**depth - 1) + body


def save_graymap(path, samples, depth=8) -> None:
    Path(path).write_bytes(encode_graymap(samples, depth))


def encode_ppm(image) -> bytes:
    image = np.asarray(image)
    if image.dtype != np.uint8:
        image = quantize(image)
    h, w = image.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(image[..., :3]).tobytes()


def write_frame(image, path) -> None:
    """Write an 8-bit P6 frame, rows top to bottom.

    ``image`` is either uint8 (already tone mapped) or floats in [0, 1].
    """
    data = encode_ppm(image)
    try:
        with open(path, "wb") as f:
            f.write(data)
    except OSError as exc:
        raise OSError(f"cannot write frame {os.fspath(path)}: {exc.strerror}") from exc


def save_rgbamap(path, rgba) -> None:
    rgba = np.asarray(rgba, dtype=float)
    Path(path).write_bytes(encode_ppm(rgba[..., :3]))
    if rgba.shape[-1] == 4:
        save_graymap(alpha_path(path), rgba[..., 3])


# -- sampling ----------------------------------------------------------------

def _wrap_index(i, n, wrap):
    if wrap == "repeat":
        return np.mod(i, n)
    return np.clip(i, 0, n - 1)


def bilinear(data: np.ndarray, u, v, wrap="repeat"):
    """Bilinear lookup in an (H, W[, C]) array at unit-square coordinates.

    Texel centres sit at ((i + 0.5) / W, (j + 0.5) / H); ``u`` runs along
    columns and ``v`` along rows.
    """
    h, w = data.shape[:2]
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if wrap == "repeat":
        u = u - np.floor(u)
        v = v - np.floor(v)
    else:
        u = np.clip(u, 0.0, 1.0)
        v = np.clip(v, 0.0, 1.0)
    x = u * w - 0.5
    y = v * h - 0.5
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    xa, xb = _wrap_index(x0, w, wrap), _wrap_index(x0 + 1, w, wrap)
    ya, yb = _wrap_index(y0, h, wrap), _wrap_index(y0 + 1, h, wrap)
    if data.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    a, b = data[ya, xa], data[ya, xb]
    c, d = data[yb, xa], data[yb, xb]
    top = a + (b - a) * fx
    bot = c + (d - c) * fx
    return top + (bot - top) * fy


def sample_bilinear(tex: Texture, uv) -> np.ndarray:
    uv = np.asarray(uv, dtype=float)
    return bilinear(tex.pixels.data, uv[..., 0], uv[..., 1], tex.wrap)


def sample_height(tex: Texture, uv) -> np.ndarray:
    if tex.height is None:
        return np.zeros(np.shape(uv)[:-1])
    uv = np.asarray(uv, dtype=float)
    return bilinear(tex.height.data, uv[..., 0], uv[..., 1], tex.wrap)
