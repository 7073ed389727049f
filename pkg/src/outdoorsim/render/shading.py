"""Per-pixel terrain shading: iterated parallax offset, splatting, lighting."""
from __future__ import annotations

import numpy as np

from ..mathutil import cross3, dot3, normalize
from ..terrain import TerrainMaterial, splat_color, splat_height, splat_weights
from .lighting import DirectionalLight, LightSet, Material, vertex_light

MIN_VIEW_Z = 0.05  # grazing views clamp here so the offset stays bounded


def parallax_uv(uv, height_fn, view_ts, scale: float, bias: float, iterations: int):
    """Repeat ``iterations`` times: uv += (h(uv) * scale + bias) * view.xy / view.z.

    ``height_fn(uv)`` returns heights in [0, 1] and is re-sampled each pass.
    """
    if iterations < 1:
        raise ValueError("parallax needs at least one iteration")
    uv = np.array(uv, dtype=float, copy=True)
    v = np.asarray(view_ts, dtype=float)
    vz = v[..., 2]
    if np.any(vz <= 0.0):
        raise ValueError("tangent-space view must have z > 0")
    dx = v[..., 0] / vz
    dy = v[..., 1] / vz
    for _ in range(iterations):
        off = np.asarray(height_fn(uv)) * scale + bias
        uv[..., 0] = uv[..., 0] + off * dx
        uv[..., 1] = uv[..., 1] + off * dy
    return uv


def terrain_frame(normal):
    """Tangent (along +u = +X) and bitangent (along +v = +Z) orthogonal to ``normal``."""
    n = np.asarray(normal, dtype=float)
    ex = np.zeros_like(n)
    ex[..., 0] = 1.0
    t = normalize(ex - dot3(n, ex)[..., None] * n)
    b = cross3(t, n)
    return t, b


def tangent_view(normal, view):
    t, b = terrain_frame(normal)
    return np.stack([dot3(view, t), dot3(view, b), dot3(view, normal)], axis=-1)


def shade_terrain_pixel(mat: TerrainMaterial, uv, normal, lights: LightSet, eye, position):
    """Parallax-shifted splat colour lit per pixel with the four-term model."""
    uv = np.asarray(uv, dtype=float)
    normal = normalize(np.asarray(normal, dtype=float))
    position = np.asarray(position, dtype=float)
    view = normalize(np.asarray(eye, dtype=float) - position)
    weights = splat_weights(mat, uv)
    tex_uv = uv * mat.tiling[0]
    if mat.parallax_scale != 0.0 or mat.parallax_bias != 0.0:
        vts = tangent_view(normal, view)
        vts[..., 2] = np.maximum(vts[..., 2], MIN_VIEW_Z)
        tex_uv = parallax_uv(tex_uv, lambda q: splat_height(mat, weights, q), vts,
                             mat.parallax_scale, mat.parallax_bias, mat.parallax_iterations)
    albedo = splat_color(mat, uv, tex_uv, weights)
    return vertex_light(position, normal, albedo, lights, eye, Material(shininess=mat.shininess, specular=mat.specular))


def sun_direction(azimuth: float, elevation: float) -> np.ndarray:
    ce = np.cos(elevation)
    return np.array([np.sin(azimuth) * ce, np.sin(elevation), -np.cos(azimuth) * ce])


def terrain_sun_gradient(mat: TerrainMaterial, uv, normal, ambient, sun_azimuth: float, sun_elevation: float,
                         sun_color, sun_intensity: float, eye, position):
    """d(radiance)/d(sun elevation) of ``shade_terrain_pixel`` lit by ambient plus one sun.

    The sun colour and intensity are held fixed; only its direction moves.
    """
    uv = np.asarray(uv, dtype=float)
    normal = normalize(np.asarray(normal, dtype=float))
    position = np.asarray(position, dtype=float)
    view = normalize(np.asarray(eye, dtype=float) - position)
    # albedo does not depend on the sun, so reuse the unlit colour
    flat = LightSet(ambient=(1.0, 1.0, 1.0), lights=())
    albedo = shade_terrain_pixel(mat, uv, normal, flat, eye, position)
    L = sun_direction(sun_azimuth, sun_elevation)
    ce, se = np.cos(sun_elevation), np.sin(sun_elevation)
    dL = np.array([-np.sin(sun_azimuth) * se, ce, np.cos(sun_azimuth) * se])
    ci = np.asarray(sun_color, dtype=float) * sun_intensity
    ndl = dot3(normal, L)
    dndl = dot3(normal, dL)
    grad = np.where(ndl > 0.0, dndl, 0.0)[..., None] * albedo * ci
    if mat.specular:
        r = 2.0 * ndl[..., None] * normal - L
        dr = 2.0 * dndl[..., None] * normal - dL
        rv = dot3(r, view)
        drv = dot3(dr, view)
        sh = mat.shininess
        lobe = np.where((ndl > 0.0) & (rv > 0.0), sh * np.maximum(rv, 0.0) ** (sh - 1.0) * drv, 0.0)
        grad = grad + mat.specular * lobe[..., None] * ci
    return grad


def sun_lightset(ambient, azimuth, elevation, color, intensity) -> LightSet:
    return LightSet(tuple(float(a) for a in ambient),
                    (DirectionalLight(tuple(float(v) for v in sun_direction(azimuth, elevation)), tuple(color), intensity),))
