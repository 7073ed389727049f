"""Four-component per-vertex lighting: emissive, ambient, diffuse, specular."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mathutil import dot3, normalize


@dataclass(frozen=True)
class DirectionalLight:
    direction: tuple  # unit vector pointing toward the light
    color: tuple = (1.0, 1.0, 1.0)
    intensity: float = 1.0

    def __post_init__(self):
        n = float(np.sqrt(np.dot(self.direction, self.direction)))
        if abs(n - 1.0) > 1e-6:
            raise ValueError(f"light direction must be unit length, |d| = {n}")
        if self.intensity < 0:
            raise ValueError("light intensity must be >= 0")


@dataclass(frozen=True)
class LightSet:
    ambient: tuple = (0.0, 0.0, 0.0)
    lights: tuple = ()


@dataclass(frozen=True)
class Material:
    emissive: tuple = (0.0, 0.0, 0.0)
    shininess: float = 16.0
    specular: float = 1.0  # scale on the specular lobe; 1 is the bare model


def vertex_light(position, normal, albedo, lights: LightSet, eye, material: Material = Material()):
    """E + A*M + sum_l [max(N.L,0) M C I + ks max(R.V,0)^sh C I], clamped below at 0.

    ``eye`` is the viewer position; the specular lobe is only lit on the
    side of the surface that faces the light.
    """
    position = np.asarray(position, dtype=float)
    normal = np.asarray(normal, dtype=float)
    albedo = np.asarray(albedo, dtype=float)
    view = normalize(np.asarray(eye, dtype=float) - position)
    shape = np.broadcast_shapes(position.shape, normal.shape, albedo.shape)
    out = np.broadcast_to(np.asarray(material.emissive, dtype=float) + np.asarray(lights.ambient, dtype=float) * albedo, shape).copy()
    for light in lights.lights:
        ci = np.asarray(light.color, dtype=float) * light.intensity
        if not np.any(ci):
            continue
        L = np.asarray(light.direction, dtype=float)
        ndl = dot3(normal, L)
        out += np.maximum(ndl, 0.0)[..., None] * albedo * ci
        if material.specular:
            r = 2.0 * ndl[..., None] * normal - L
            rv = np.maximum(dot3(r, view), 0.0)
            out += (material.specular * np.where(ndl > 0.0, rv ** material.shininess, 0.0))[..., None] * ci
    return np.maximum(out, 0.0)


def sky_lights(sky) -> LightSet:
    """Ambient plus sun and moon from a sky state; lights at zero intensity are dropped."""
    ls = []
    if sky.sun_intensity > 0.0:
        ls.append(DirectionalLight(tuple(float(v) for v in sky.sun_dir), tuple(float(c) for c in sky.sun_color), float(sky.sun_intensity)))
    if sky.moon_intensity > 0.0:
        ls.append(DirectionalLight(tuple(float(v) for v in sky.moon_dir), tuple(float(c) for c in sky.moon_color), float(sky.moon_intensity)))
    return LightSet(tuple(float(a) for a in sky.ambient), tuple(ls))
