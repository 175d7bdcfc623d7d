import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cached_mesh
from dodstab.mesh import RampGeometry, build_mesh
from dodstab.quadrature import (
    box_rule,
    face_rule,
    gauss_legendre_1d,
    polygon_rule,
    segment_rule,
    triangle_rule,
)


def green_moment(poly, a, b):
    """int_P x^a y^b dA = 1/(a+1) oint x^(a+1) y^b dy, each edge done exactly.

    Along an edge both coordinates are linear in s, so the edge integral is a
    polynomial in s integrated here by expanding with numpy's polynomial tools.
    """
    poly = np.asarray(poly, dtype=float)
    total = 0.0
    for k in range(len(poly)):
        p, q = poly[k], poly[(k + 1) % len(poly)]
        x = np.polynomial.Polynomial([p[0], q[0] - p[0]])
        y = np.polynomial.Polynomial([p[1], q[1] - p[1]])
        integrand = x ** (a + 1) * y**b * (q[1] - p[1])
        anti = integrand.integ()
        total += anti(1.0) - anti(0.0)
    return total / (a + 1)


def test_gauss_legendre_examples():
    x, w = gauss_legendre_1d(1)
    assert x[0] == 0.0 and w[0] == 2.0
    x, w = gauss_legendre_1d(2)
    np.testing.assert_allclose(np.sort(x), [-1 / math.sqrt(3), 1 / math.sqrt(3)], rtol=1e-15)
    np.testing.assert_allclose(w, [1.0, 1.0], rtol=1e-15)
    x, w = gauss_legendre_1d(5)
    assert np.dot(w, x**8) == pytest.approx(2.0 / 9.0, abs=1e-14)


@pytest.mark.parametrize("n", [0, 21])
def test_gauss_legendre_range(n):
    with pytest.raises(ValueError):
        gauss_legendre_1d(n)


@pytest.mark.parametrize("n", range(1, 21))
def test_gauss_legendre_exactness(n):
    x, w = gauss_legendre_1d(n)
    for k in range(2 * n):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert np.dot(w, x**k) == pytest.approx(exact, abs=1e-13)


def test_segment_rules():
    r = segment_rule((0.0, 0.0), (1.0, 0.0), 1)
    assert r.integrate(lambda p: p[:, 0]) == pytest.approx(0.5, abs=1e-15)
    r = segment_rule((0.2, 0.3), (0.7, 0.3), 0)
    assert len(r.weights) == 1
    np.testing.assert_allclose(r.points[0], (0.45, 0.3))
    assert r.weights[0] == pytest.approx(0.5, abs=1e-15)


def test_ramp_face_moment():
    # 45 degree segment (t, t), t in [a, b]: int x^2 y^2 ds = sqrt(2) (b^5 - a^5) / 5
    a, b = 0.1, 0.35

    class F:
        endpoints = np.array([(a, a), (b, b)])

    r = face_rule(F, 4)
    val = r.integrate(lambda p: p[:, 0] ** 2 * p[:, 1] ** 2)
    assert val == pytest.approx(math.sqrt(2.0) * (b**5 - a**5) / 5.0, rel=1e-12)
    assert np.all(np.abs(r.points[:, 0] - r.points[:, 1]) < 1e-15)


def test_polygon_rule_examples():
    r = polygon_rule([(0, 0), (1, 0), (1, 1), (0, 1)], 3)
    assert r.integrate(lambda p: np.ones(len(p))) == pytest.approx(1.0, abs=1e-14)
    assert r.integrate(lambda p: p[:, 0]) == pytest.approx(0.5, abs=1e-14)
    pent = [(0.25, 0.0), (0.26, 0.0), (0.5, 0.24), (0.5, 0.25), (0.25, 0.25)]
    assert polygon_rule(pent, 0).weights.sum() == pytest.approx(0.0337, abs=1e-15)
    tri = polygon_rule([(0, 0), (1, 0), (0, 1)], 2)
    assert tri.integrate(lambda p: p[:, 0] * p[:, 1]) == pytest.approx(1.0 / 24.0, abs=1e-14)


def test_polygon_rule_rejects_bad_polygons():
    with pytest.raises(ValueError):
        polygon_rule([(0, 0), (0, 1), (1, 1), (1, 0)], 2)  # clockwise
    with pytest.raises(ValueError):
        polygon_rule([(0, 0), (1, 1), (1, 0), (0, 1)], 2)  # self-intersecting


def test_green_oracle_self_check():
    assert green_moment([(0, 0), (1, 0), (0, 1)], 1, 1) == pytest.approx(1 / 24, abs=1e-16)
    assert green_moment([(0, 0), (2, 0), (2, 3), (0, 3)], 2, 0) == pytest.approx(8.0, rel=1e-15)


def mesher_polygons():
    polys = []
    for N, g, x0 in [(7, 45.0, 0.2001), (11, 25.0, 0.2001), (9, 63.0, 0.31)]:
        mesh = build_mesh(N, RampGeometry.from_degrees(g, x0))
        polys += [c.polygon for c in mesh.cells if c.kind != 0]
    return polys


@pytest.mark.parametrize("d", range(0, 9))
def test_polygon_moments_match_green(d):
    for poly in mesher_polygons():
        r = polygon_rule(poly, d)
        assert r.weights.min() > 0.0
        assert r.weights.sum() == pytest.approx(green_moment(poly, 0, 0), rel=1e-13)
        for a in range(d + 1):
            for b in range(d + 1 - a):
                exact = green_moment(poly, a, b)
                got = r.integrate(lambda p: p[:, 0] ** a * p[:, 1] ** b)
                assert got == pytest.approx(exact, rel=1e-11)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=3, max_size=3),
    st.integers(0, 8),
)
def test_triangle_rule_property(verts, d):
    tri = np.array(verts)
    e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
    area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    if area < 1e-3:
        return
    r = triangle_rule(tri, d)
    assert r.weights.min() > 0.0
    if e1[0] * e2[1] - e1[1] * e2[0] < 0:
        tri = tri[::-1]
    for a in range(d + 1):
        b = d - a
        exact = green_moment(tri, a, b)
        got = r.integrate(lambda p: p[:, 0] ** a * p[:, 1] ** b)
        assert got == pytest.approx(exact, rel=1e-11, abs=1e-13)


def test_box_rule_exact():
    r = box_rule((0.2, 0.1), (0.5, 0.3), 5)
    got = r.integrate(lambda p: p[:, 0] ** 3 * p[:, 1] ** 2)
    exact = (0.5**4 - 0.2**4) / 4 * (0.3**3 - 0.1**3) / 3
    assert got == pytest.approx(exact, rel=1e-14)


def test_mesh_cut_cells_have_positive_rules():
    mesh = cached_mesh(20, 45.0)
    for c in mesh.cells:
        if c.kind != 0:
            r = polygon_rule(c.local, 8)
            assert r.weights.min() > 0.0
            assert r.weights.sum() == pytest.approx(c.area, rel=1e-13)
