import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from outdoorsim.camera import Camera
from outdoorsim.config import load_scene
from outdoorsim.mathutil import normalize, quat_from_yaw_pitch
from outdoorsim.render.frame import fnv1a64, frame_digest, render_opaque, tone_map
from outdoorsim.render.lighting import DirectionalLight, LightSet, Material, vertex_light
from outdoorsim.render.raster import DrawBatch, rasterize
from outdoorsim.render.shading import (parallax_uv, shade_terrain_pixel, sun_lightset, terrain_sun_gradient)
from outdoorsim.world import World

from conftest import write_scene

W, H = 64, 48


def cam_at(pos=(0.0, 0.0, 0.0), yaw=0.0, pitch=0.0, far=1000.0):
    return Camera(np.array(pos, dtype=float), quat_from_yaw_pitch(yaw, pitch), far=far)


def bg():
    return np.zeros((H, W, 3))


def quad(z, x0, x1, y0, y1, color, name):
    p = [[x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z]]
    return DrawBatch(name, p, [[0, 1, 2], [0, 2, 3]], {"color": [color] * 4})


# -- rasterizer ----------------------------------------------------------------------

def test_full_screen_triangle_constant_color():
    c = (0.2, 0.5, 0.7)
    tri = DrawBatch("t", [[-100, -100, -5], [300, -100, -5], [-100, 300, -5]], [[0, 1, 2]], {"color": [c] * 3})
    fb = render_opaque([tri], cam_at(), W, H, bg())
    assert np.array_equal(fb.hdr, np.broadcast_to(c, (H, W, 3)))


def test_nearer_wins():
    near = quad(-5.0, -3, 1, -3, 3, (1.0, 0.0, 0.0), "near")
    far = quad(-8.0, -1, 6, -4, 4, (0.0, 1.0, 0.0), "far")
    fb = render_opaque([far, near], cam_at(), W, H, bg())
    _, frags_near = rasterize([near], cam_at(), W, H)
    _, frags_far = rasterize([far], cam_at(), W, H)
    both = np.intersect1d(frags_near.pixel, frags_far.pixel)
    assert len(both) > 100
    assert np.all(fb.hdr.reshape(-1, 3)[both] == [1.0, 0.0, 0.0])
    only_far = np.setdiff1d(frags_far.pixel, frags_near.pixel)
    assert np.all(fb.hdr.reshape(-1, 3)[only_far] == [0.0, 1.0, 0.0])


def test_back_faces_culled():
    tri = DrawBatch("t", [[-1, -1, -5], [-1, 1, -5], [1, -1, -5]], [[0, 1, 2]], {"color": [(1, 1, 1)] * 3})
    _, f = rasterize([tri], cam_at(), W, H)
    assert len(f.pixel) == 0


@given(st.lists(st.floats(-3, 3), min_size=8, max_size=8))
def test_shared_edge_covered_once(v):
    pts = np.array([[v[0], v[1], -5.0], [v[2], v[3], -5.0], [v[4], v[5], -6.0], [v[6], v[7], -4.0]])
    cam = cam_at()
    sx, sy, _ = cam.project(cam.to_view(pts), W, H)

    def side(k):
        return (sx[1] - sx[0]) * (sy[k] - sy[0]) - (sy[1] - sy[0]) * (sx[k] - sx[0])
    # the two triangles tile without overlap only when they lie on opposite sides of edge ab
    assume(side(2) * side(3) < 0)
    pix = []
    for k, tri in enumerate(([0, 1, 2], [1, 0, 3])):
        batch = DrawBatch(f"t{k}", pts, [tri], {"color": np.ones((4, 3))}, cull=False)
        pix.append(rasterize([batch], cam, W, H)[1].pixel)
    assert len(np.intersect1d(pix[0], pix[1])) == 0


def test_split_quad_is_watertight():
    rng = np.random.default_rng(0)
    for _ in range(20):
        # corners on a circle at one depth form a convex quad in screen space too
        ang = np.sort(rng.uniform(0, 2 * math.pi, 4))
        r, z = rng.uniform(0.5, 3.0), rng.uniform(-9, -3)
        p = np.stack([r * np.cos(ang) + rng.uniform(-1, 1), r * np.sin(ang), np.full(4, z)], axis=1)
        whole = DrawBatch("q", p, [[0, 1, 2], [0, 2, 3]], {"color": np.ones((4, 3))}, cull=False)
        f = rasterize([whole], cam_at(), W, H)[1]
        t1 = rasterize([DrawBatch("a", p, [[0, 1, 2]], {"color": np.ones((4, 3))}, cull=False)], cam_at(), W, H)[1]
        t2 = rasterize([DrawBatch("b", p, [[0, 2, 3]], {"color": np.ones((4, 3))}, cull=False)], cam_at(), W, H)[1]
        assert len(np.intersect1d(t1.pixel, t2.pixel)) == 0
        assert np.array_equal(np.sort(np.concatenate([t1.pixel, t2.pixel])), np.sort(f.pixel))


# -- lighting ------------------------------------------------------------------------

def test_vertex_light_examples():
    up = np.array([0.0, 1.0, 0.0])
    light = LightSet((0, 0, 0), (DirectionalLight((0.0, 1.0, 0.0)),))
    out = vertex_light(np.zeros(3), up, np.ones(3), light, np.array([5.0, 0.0, 0.0]), Material(specular=0.0))
    assert np.array_equal(out, [1.0, 1.0, 1.0])
    under = LightSet((0, 0, 0), (DirectionalLight((0.0, -1.0, 0.0)),))
    assert np.array_equal(vertex_light(np.zeros(3), up, np.ones(3), under, np.array([0.0, 5.0, 0.0])), [0, 0, 0])
    # R = V: light at 45 deg in the x-y plane, viewer at the mirror direction
    s = math.sqrt(0.5)
    tilted = LightSet((0, 0, 0), (DirectionalLight((s, s, 0.0), (0.3, 0.6, 0.9), 2.0),))
    spec = vertex_light(np.zeros(3), up, np.zeros(3), tilted, np.array([-s, s, 0.0]) * 10, Material(shininess=77.0))
    assert np.allclose(spec, [0.6, 1.2, 1.8], atol=1e-12)


@given(st.integers(0, 10 ** 6))
def test_zero_light_is_black(seed):
    rng = np.random.default_rng(seed)
    n = normalize(rng.normal(size=(20, 3)))
    out = vertex_light(rng.normal(size=(20, 3)), n, rng.uniform(size=(20, 3)), LightSet(), rng.normal(size=3) * 9)
    assert np.all(out == 0.0)
    dead = LightSet((0, 0, 0), (DirectionalLight(tuple(normalize(rng.normal(size=3))), (1, 1, 1), 0.0),))
    assert np.all(vertex_light(np.zeros((20, 3)), n, np.ones((20, 3)), dead, np.ones(3)) == 0.0)


# -- parallax ------------------------------------------------------------------------

def test_parallax_zero_height():
    uv = np.array([[0.3, 0.7], [1.5, -2.0]])
    v = normalize(np.array([[0.5, 0.2, 0.6], [-0.9, 0.1, 0.2]]))
    out = parallax_uv(uv, lambda q: np.zeros(q.shape[:-1]), v, 0.04, 0.0, 5)
    assert np.array_equal(out, uv)


def test_parallax_normal_incidence():
    uv = np.array([0.3, 0.7])
    out = parallax_uv(uv, lambda q: np.ones(q.shape[:-1]) * 0.8, np.array([0.0, 0.0, 1.0]), 0.04, -0.02, 4)
    assert np.array_equal(out, uv)


def test_parallax_hand_example():
    out = parallax_uv(np.array([0.25, 0.5]), lambda q: np.ones(q.shape[:-1]), np.array([0.6, 0.0, 0.8]), 0.04, 0.0, 1)
    assert abs(out[0] - 0.28) < 1e-9 and abs(out[1] - 0.5) < 1e-9


def test_parallax_monotone_in_obliquity():
    def h(q):
        return np.clip(q[..., 0], 0.0, 1.0)  # increasing ramp in u
    angles = np.linspace(0.0, 1.4, 30)
    us = [parallax_uv(np.array([0.4, 0.4]), h, np.array([math.sin(a), 0.0, math.cos(a)]), 0.04, 0.0, 3)[0]
          for a in angles]
    assert np.all(np.diff(us) >= 0.0)


def test_parallax_guards():
    with pytest.raises(ValueError):
        parallax_uv(np.zeros(2), lambda q: 0.0, np.array([0.0, 0.0, 1.0]), 0.04, 0.0, 0)
    with pytest.raises(ValueError):
        parallax_uv(np.zeros(2), lambda q: 0.0, np.array([0.0, 0.6, -0.8]), 0.04, 0.0, 1)


# -- tone map and digest -------------------------------------------------------------

def test_tone_map_examples():
    assert tone_map(np.zeros(3)).tolist() == [0, 0, 0]
    assert tone_map(np.array([1.0]))[0] == 128  # 0.5 * 255 = 127.5 rounds up
    assert tone_map(np.array([0.25]), 4.0)[0] == 128
    x = np.sort(np.random.default_rng(0).exponential(2.0, 2000))
    assert np.all(np.diff(tone_map(x).astype(int)) >= 0)
    with pytest.raises(ValueError):
        tone_map(x, 0.0)


def test_fnv_reference_vectors():
    # published FNV-1a 64 test vectors
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8
    assert frame_digest(np.frombuffer(b"a", dtype=np.uint8)) == "af63dc4c8601ec8c"


# -- perspective-correct interpolation vs a ray tracer -------------------------------

def checker(u, v):
    c = (np.floor(u) + np.floor(v)) % 2
    return np.where(c[..., None] > 0, [0.9, 0.9, 0.9], [0.1, 0.1, 0.1])


def test_checkerboard_matches_ray_tracer():
    w, h = 160, 120
    cam = cam_at((0.3, 2.0, 0.0), yaw=0.2, pitch=-0.35, far=500.0)
    x0, x1, z0, z1 = -40.0, 40.0, -120.0, -1.0
    p = np.array([[x0, 0, z1], [x1, 0, z1], [x1, 0, z0], [x0, 0, z0]])
    uv = p[:, [0, 2]] / 2.0
    ground = DrawBatch("ground", p, [[0, 1, 2], [0, 2, 3]], {"uv": uv}, lambda a: checker(a["uv"][:, 0], a["uv"][:, 1]))
    back = np.full((h, w, 3), 0.5)
    got = tone_map(render_opaque([ground], cam, w, h, back).hdr).astype(float)

    rays = cam.pixel_rays(w, h)
    t = np.where(rays[..., 1] < 0, -cam.position[1] / np.where(rays[..., 1] < 0, rays[..., 1], -1.0), np.inf)
    hit = cam.position + rays * np.where(np.isfinite(t), t, 0.0)[..., None]
    inside = np.isfinite(t) & (hit[..., 0] >= x0) & (hit[..., 0] <= x1) & (hit[..., 2] >= z0) & (hit[..., 2] <= z1)
    ref = np.where(inside[..., None], checker(hit[..., 0] / 2.0, hit[..., 2] / 2.0), back)
    want = tone_map(ref).astype(float)
    assert np.mean(np.abs(got - want)) <= 2.0


# -- order independence and threads --------------------------------------------------

def three_objects():
    return [
        quad(-6.0, -3, 1, -2, 2, (1.0, 0.2, 0.2), "a"),
        quad(-6.0, -1, 3, -1, 3, (0.2, 1.0, 0.2), "b"),  # same depth as a: tie broken by name
        DrawBatch("c", [[-4, -3, -9], [4, -3, -3], [0, 4, -6]], [[0, 1, 2]], {"color": [(0.2, 0.2, 1.0)] * 3}),
    ]


def test_opaque_permutation_invariant():
    cam = cam_at()
    digests = set()
    for perm in itertools.permutations(three_objects()):
        fb = render_opaque(list(perm), cam, W, H, bg())
        digests.add(frame_digest(tone_map(fb.hdr)))
    assert len(digests) == 1


def test_threads_identical():
    cam = cam_at()
    rng = np.random.default_rng(4)
    pts = np.concatenate([rng.uniform(-6, 6, (300, 2)), rng.uniform(-20, -3, (300, 1))], axis=1)
    batch = DrawBatch("soup", pts, np.arange(300).reshape(-1, 3), {"color": rng.uniform(size=(300, 3))}, cull=False)
    a = render_opaque([batch], cam, 97, 61, np.zeros((61, 97, 3)), threads=1)
    b = render_opaque([batch], cam, 97, 61, np.zeros((61, 97, 3)), threads=4)
    assert np.array_equal(a.hdr, b.hdr) and np.array_equal(a.depth, b.depth)


def test_duplicate_batch_names_rejected():
    q = quad(-5.0, -1, 1, -1, 1, (1, 1, 1), "same")
    with pytest.raises(ValueError):
        rasterize([q, q], cam_at(), W, H)


# -- terrain shading -----------------------------------------------------------------

@pytest.fixture(scope="module")
def demo_world(demo_path):
    return World(load_scene(demo_path))


def test_sun_gradient_matches_finite_difference(demo_world):
    mat = demo_world.material
    rng = np.random.default_rng(7)
    amb = (0.2, 0.2, 0.25)
    color, inten = (1.0, 0.95, 0.85), 1.3
    for _ in range(10):
        uv = rng.uniform(0.05, 0.95, 2)
        n = normalize(np.array([rng.normal(0, 0.3), 1.0, rng.normal(0, 0.3)]))
        pos = np.array([rng.uniform(-300, 300), 30.0, rng.uniform(-300, 300)])
        eye = pos + normalize(np.array([rng.normal(), 0.8, rng.normal()])) * 80.0
        az, el = rng.uniform(0, 2 * math.pi), rng.uniform(0.15, 1.2)
        g = terrain_sun_gradient(mat, uv, n, amb, az, el, color, inten, eye, pos)
        e = 1e-5

        def f(x):
            return shade_terrain_pixel(mat, uv, n, sun_lightset(amb, az, x, color, inten), eye, pos)
        fd = (f(el + e) - f(el - e)) / (2 * e)
        assert np.max(np.abs(g - fd)) < 1e-3


def test_terrain_linear_in_sun_without_specular(demo_world):
    from dataclasses import replace
    mat = replace(demo_world.material, specular=0.0)
    uv, n = np.array([0.4, 0.6]), np.array([0.0, 1.0, 0.0])
    pos, eye = np.array([0.0, 30.0, 0.0]), np.array([20.0, 60.0, 40.0])
    one = shade_terrain_pixel(mat, uv, n, sun_lightset((0, 0, 0), 1.0, 0.7, (1, 1, 1), 1.0), eye, pos)
    two = shade_terrain_pixel(mat, uv, n, sun_lightset((0, 0, 0), 1.0, 0.7, (1, 1, 1), 2.5), eye, pos)
    assert np.allclose(two, 2.5 * one, rtol=1e-12)


def test_terrain_zero_parallax_is_splat_only(demo_world):
    from dataclasses import replace
    from outdoorsim.terrain import splat_color
    mat = replace(demo_world.material, parallax_scale=0.0, parallax_bias=0.0)
    uv = np.array([[0.3, 0.3], [0.7, 0.1]])
    n = np.array([[0.0, 1.0, 0.0]] * 2)
    pos = np.array([[0.0, 25.0, 0.0]] * 2)
    out = shade_terrain_pixel(mat, uv, n, LightSet((1.0, 1.0, 1.0)), np.array([50.0, 40.0, 50.0]), pos)
    assert np.allclose(out, splat_color(mat, uv), atol=1e-15)


# -- whole frames --------------------------------------------------------------------

def test_empty_world_is_skydome(tmp_path):
    w = World(load_scene(write_scene(tmp_path, '[camera]\n[[camera.keys]]\ntime = 0.0\nposition = [0.0, 5.0, 0.0]\npitch = 10.0\n')))
    fb, _ = w.render(48, 32)
    cam = w.camera()
    assert np.array_equal(fb.hdr, w.sky_radiance(w.lit_sky(), cam.pixel_rays(48, 32)))
    assert np.all(np.isinf(fb.depth))


def test_water_pass_is_local(demo_world):
    w, h = 96, 54
    with_water, _ = demo_world.render(w, h, water=True)
    without, _ = demo_world.render(w, h, water=False)
    diff = np.any(with_water.hdr != without.hdr, axis=-1)
    assert diff.any()
    cam = demo_world.camera()
    rays = cam.pixel_rays(w, h)
    crosses = (cam.position[1] - demo_world.water_grid.base_level) * rays[..., 1] < 0
    assert not np.any(diff & ~crosses)


def test_world_render_deterministic(demo_world):
    a = demo_world.render(80, 45, threads=1)[1]
    b = demo_world.render(80, 45, threads=3)[1]
    assert frame_digest(a) == frame_digest(b)
    n = len(demo_world.build_batches(demo_world.camera(), 80, 45, demo_world.lit_sky(),
                                     demo_world.lights_for(demo_world.lit_sky())))
    c = demo_world.render(80, 45, batch_order=list(reversed(range(n))))[1]
    assert frame_digest(a) == frame_digest(c)
