import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from outdoorsim.assets import GrayMap, RgbaMap, Texture
from outdoorsim.terrain import (HeightField, TerrainMaterial, build_mesh, height_at, height_range, splat_color,
                                splat_weights, vertex_normals)


def hf_from(samples, spacing=1.0, vscale=1.0, origin=(0.0, 0.0)):
    return HeightField(GrayMap(np.asarray(samples, dtype=float)), spacing, vscale, origin)


def test_flat_2x2():
    m = build_mesh(hf_from(np.zeros((2, 2))))
    assert m.vertex_count == 4 and m.triangle_count == 2
    assert np.all(m.positions[:, 1] == 0)


def test_3x3_counts_and_layout():
    hf = hf_from(np.zeros((3, 3)), spacing=5.0, origin=(10.0, -4.0))
    m = build_mesh(hf)
    assert m.vertex_count == 9 and m.triangle_count == 8
    # vertex (i, j) = (origin + i*spacing, h, origin + j*spacing); uv = (i/(W-1), j/(H-1))
    k = 1 * 3 + 2  # j=1, i=2
    assert np.array_equal(m.positions[k], [20.0, 0.0, 1.0])
    assert np.array_equal(m.uvs[k], [1.0, 0.5])


def test_vertical_scale_endpoint():
    m = build_mesh(hf_from(np.ones((2, 2)), vscale=50.0))
    assert np.all(m.positions[:, 1] == 50.0)


def test_counter_clockwise_from_above():
    m = build_mesh(hf_from(np.random.default_rng(0).random((5, 4)) * 0.1))
    p, t = m.positions, m.triangles
    n = np.cross(p[t[:, 1]] - p[t[:, 0]], p[t[:, 2]] - p[t[:, 0]])
    assert np.all(n[:, 1] > 0)


def test_flat_normals_up():
    m = build_mesh(hf_from(np.full((4, 4), 0.3)))
    assert np.allclose(m.normals, [0, 1, 0], atol=0)


def test_east_slope_normal():
    # height rises 1 m per metre eastwards (+x): plane normal is (-1, 1, 0)/sqrt(2)
    i = np.arange(5, dtype=float)
    samples = np.tile(i / 4.0, (5, 1))
    m = build_mesh(hf_from(samples, spacing=1.0, vscale=4.0))
    assert np.allclose(m.normals, np.array([-1.0, 1.0, 0.0]) / np.sqrt(2), atol=1e-12)


def test_normals_unit_upward_and_deterministic():
    hf = hf_from(np.random.default_rng(1).random((9, 7)), spacing=2.0, vscale=30.0)
    m = build_mesh(hf)
    assert np.allclose(np.linalg.norm(m.normals, axis=1), 1.0, atol=1e-6)
    assert np.all(m.normals[:, 1] > 0)
    again = vertex_normals(build_mesh(hf))
    assert np.array_equal(again.normals, m.normals)
    assert build_mesh(hf).positions.tobytes() == m.positions.tobytes()


def test_degenerate_faces_skipped():
    hf = hf_from(np.zeros((3, 3)))
    m = build_mesh(hf)
    m.triangles = np.vstack([m.triangles, [[0, 0, 1]]])
    assert np.allclose(vertex_normals(m).normals, [0, 1, 0])


# -- height queries --------------------------------------------------------------

def test_height_at_vertices_midpoint_and_clamp():
    hf = hf_from([[0.0, 1.0], [0.0, 1.0]], spacing=2.0, vscale=10.0)
    assert height_at(hf, 2.0, 0.0) == 10.0
    assert height_at(hf, 1.0, 1.0) == 5.0
    assert height_at(hf, 50.0, 1.0) == 10.0
    assert height_at(hf, -50.0, -50.0) == 0.0


def _triangle_interp(mesh, hf, x, z):
    """Barycentric height over the mesh triangle containing (x, z)."""
    p = mesh.positions
    for t in mesh.triangles:
        a, b, c = p[t[0]], p[t[1]], p[t[2]]
        m = np.array([[b[0] - a[0], c[0] - a[0]], [b[2] - a[2], c[2] - a[2]]])
        l1, l2 = np.linalg.solve(m, [x - a[0], z - a[2]])
        if l1 >= -1e-12 and l2 >= -1e-12 and l1 + l2 <= 1 + 1e-12:
            return a[1] + l1 * (b[1] - a[1]) + l2 * (c[1] - a[1])
    raise AssertionError("point outside mesh")


@given(st.floats(0, 3), st.floats(0, 2))
def test_height_at_vs_mesh_triangles(x, z):
    samples = np.random.default_rng(2).random((3, 4))
    hf = hf_from(samples, vscale=20.0)
    mesh = build_mesh(hf)
    tri = _triangle_interp(mesh, hf, x, z)
    i0, j0 = min(int(x), 2), min(int(z), 1)
    tx, tz = x - i0, z - j0
    s = samples * 20.0
    twist = s[j0, i0] - s[j0, i0 + 1] - s[j0 + 1, i0] + s[j0 + 1, i0 + 1]
    # bilinear minus the planar split is the twist term of the triangle's corner
    w = tx * tz if tx + tz <= 1 else (1 - tx) * (1 - tz)
    assert abs(height_at(hf, x, z) - (tri + twist * w)) < 1e-9


@given(st.integers(0, 3), st.floats(0, 2))
def test_height_at_exact_on_grid_lines(i, z):
    hf = hf_from(np.random.default_rng(3).random((3, 4)), vscale=20.0)
    assert abs(height_at(hf, float(i), z) - _triangle_interp(build_mesh(hf), hf, float(i), z)) < 1e-9


@given(st.floats(-5, 40), st.floats(-5, 40), st.floats(0, 30), st.floats(0, 30))
def test_height_range_bounds_queries(x0, z0, w, h):
    hf = hf_from(np.random.default_rng(4).random((9, 9)), spacing=4.0, vscale=10.0)
    lo, hi = height_range(hf, (x0, z0, x0 + w, z0 + h))
    xs = np.linspace(x0, x0 + w, 13)
    zs = np.linspace(z0, z0 + h, 13)
    v = height_at(hf, xs[:, None], zs[None, :])
    assert lo <= v.min() + 1e-12 and v.max() <= hi + 1e-12


def test_heightfield_invariants():
    with pytest.raises(ValueError):
        hf_from(np.zeros((2, 2)), spacing=0.0)
    with pytest.raises(ValueError):
        hf_from(np.zeros((2, 2)), vscale=-1.0)


# -- splatting ------------------------------------------------------------------

def solid(rgb):
    return Texture(RgbaMap(np.tile(np.array([*rgb, 1.0]), (2, 2, 1))))


def material(coverage, color=(1.0, 1.0, 1.0), textures=None):
    cov = RgbaMap(np.tile(np.asarray(coverage, dtype=float), (2, 2, 1)))
    cm = RgbaMap(np.tile(np.array([*color, 1.0]), (2, 2, 1)))
    textures = textures or [solid((1, 0, 0)), solid((0, 1, 0)), solid((0, 0, 1)), solid((1, 1, 1))]
    return TerrainMaterial(textures, cov, cm)


@pytest.mark.parametrize("cov, want", [
    ((1, 0, 0, 0), (1, 0, 0, 0)),
    ((0.5, 0.5, 0, 0), (0.5, 0.5, 0, 0)),
    ((0.2, 0.2, 0.2, 0.2), (0.25, 0.25, 0.25, 0.25)),
    ((0, 0, 0, 0), (1, 0, 0, 0)),
])
def test_splat_weights_examples(cov, want):
    assert np.array_equal(splat_weights(material(cov), np.array([0.3, 0.6])), want)


def test_splat_color_examples():
    uv = np.array([0.4, 0.4])
    assert np.array_equal(splat_color(material((1, 0, 0, 0)), uv), [1, 0, 0])
    assert np.array_equal(splat_color(material((0.5, 0.5, 0, 0)), uv), [0.5, 0.5, 0])
    assert np.array_equal(splat_color(material((0.3, 0.1, 0.4, 0.2), color=(0, 0, 0)), uv), [0, 0, 0])


@given(arrays(float, 4, elements=st.floats(0, 1)), st.floats(-3, 3), st.floats(-3, 3))
def test_splat_weights_in_simplex(cov, u, v):
    w = splat_weights(material(cov), np.array([u, v]))
    assert np.all((w >= 0) & (w <= 1))
    assert abs(w.sum() - 1.0) < 1e-12


def test_material_requires_four_textures():
    with pytest.raises(ValueError):
        TerrainMaterial([solid((1, 1, 1))] * 3, RgbaMap(np.ones((2, 2, 4))), RgbaMap(np.ones((2, 2, 4))))
