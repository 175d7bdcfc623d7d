import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import beta45, cached_mesh
from dodstab.mesh import (
    CellKind,
    FaceKind,
    MeshError,
    RampGeometry,
    build_mesh,
    clip_cell_to_halfplane,
    find_stabilized_cells,
    polygon_area,
)
from dodstab.solver import default_beta

RAMP_026 = RampGeometry.from_degrees(45.0, 0.26)


def shoelace(poly):
    # independent of polygon_area: explicit cross-product sum
    s = 0.0
    for k in range(len(poly)):
        (x0, y0), (x1, y1) = poly[k], poly[(k + 1) % len(poly)]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def test_clip_untouched_square_is_full():
    poly = clip_cell_to_halfplane(((0.0, 0.0), (0.25, 0.25)), RAMP_026)
    np.testing.assert_allclose(poly, [(0, 0), (0.25, 0), (0.25, 0.25), (0, 0.25)])


def test_clip_pentagon():
    poly = clip_cell_to_halfplane(((0.25, 0.0), (0.5, 0.25)), RAMP_026)
    expected = [(0.25, 0.0), (0.26, 0.0), (0.5, 0.24), (0.5, 0.25), (0.25, 0.25)]
    np.testing.assert_allclose(poly, expected, atol=1e-15)
    assert shoelace(poly) == pytest.approx(0.0625 - 0.5 * 0.24**2, abs=1e-15)
    assert shoelace(poly) == pytest.approx(0.0337, abs=1e-15)


def test_clip_triangle():
    poly = clip_cell_to_halfplane(((0.5, 0.0), (0.75, 0.25)), RAMP_026)
    np.testing.assert_allclose(poly, [(0.5, 0.24), (0.51, 0.25), (0.5, 0.25)], atol=1e-15)
    assert shoelace(poly) == pytest.approx(5e-5, rel=1e-12)


def test_clip_below_line_is_empty():
    assert clip_cell_to_halfplane(((0.75, 0.0), (1.0, 0.25)), RAMP_026) == []


def test_clip_rejects_degenerate_box():
    with pytest.raises(ValueError):
        clip_cell_to_halfplane(((0.0, 0.0), (0.0, 0.25)), RAMP_026)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0.05, 85.0),
    st.floats(0.01, 0.99),
    st.floats(-0.5, 1.5),
    st.floats(-0.5, 1.5),
    st.floats(0.01, 0.5),
)
def test_clip_is_ccw_and_inside(gamma, x0, ax, ay, size):
    ramp = RampGeometry.from_degrees(gamma, x0)
    poly = np.array(clip_cell_to_halfplane(((ax, ay), (ax + size, ay + size)), ramp))
    if not len(poly):
        return
    assert 3 <= len(poly) <= 5
    assert polygon_area(poly) > 0.0
    assert polygon_area(poly) <= size**2 * (1 + 1e-10)  # global-coordinate shoelace roundoff
    assert np.all(ramp.signed_distance(poly) >= -1e-12 * size)
    assert np.all(poly >= np.array([ax, ay]) - 1e-12)
    assert np.all(poly <= np.array([ax, ay]) + size + 1e-12)


@pytest.mark.parametrize(
    "gamma, expected, tol",
    [
        (45.0, 1.0 - 0.5 * 0.7999**2, 1e-12),
        (25.0, 1.0 - 0.5 * 0.7999 * 0.7999 * math.tan(math.radians(25.0)), 1e-12),
    ],
)
def test_mesh_area_sum(gamma, expected, tol):
    mesh = cached_mesh(4, gamma)
    assert mesh.areas.sum() == pytest.approx(expected, abs=tol)


def test_mesh_area_examples():
    assert cached_mesh(4, 45.0).areas.sum() == pytest.approx(0.680079995, abs=1e-12)
    # the rounded figure 0.850815 is 4e-6 off its own formula; the formula wins
    assert cached_mesh(4, 25.0).areas.sum() == pytest.approx(0.8508188516715, abs=1e-12)


def test_ramp_below_grid_gives_full_cells():
    mesh = build_mesh(4, RampGeometry.from_degrees(45.0, 1.5))
    assert mesh.n_cells == 16
    assert np.all(mesh.kinds == CellKind.FULL)
    assert len(mesh.ramp_faces()) == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 24), st.floats(10.0, 80.0), st.floats(0.05, 0.95))
def test_partition_property(N, gamma, x0):
    ramp = RampGeometry.from_degrees(gamma, x0)
    try:
        mesh = build_mesh(N, ramp)
    except MeshError:
        return
    assert mesh.areas.sum() == pytest.approx(ramp.domain_area(), abs=1e-12)
    for c in mesh.cells:
        assert c.area == pytest.approx(shoelace(c.polygon), abs=1e-15)
        if c.kind == CellKind.FULL:
            assert c.area == pytest.approx(mesh.h**2, rel=1e-14)
        else:
            assert len(c.local) == int(c.kind)


def test_build_mesh_rejects_line_through_node():
    with pytest.raises(MeshError):
        build_mesh(4, RampGeometry.from_degrees(45.0, 0.25))


def test_build_mesh_rejects_small_N():
    with pytest.raises(ValueError):
        build_mesh(1, RampGeometry())


def test_ramp_geometry_validation():
    with pytest.raises(ValueError):
        RampGeometry(x0=0.2, gamma=0.0)
    with pytest.raises(ValueError):
        RampGeometry(x0=-0.1, gamma=0.5)


@pytest.mark.parametrize("N, gamma", [(10, 45.0), (20, 45.0), (20, 25.0), (13, 33.0)])
def test_face_invariants(N, gamma):
    mesh = cached_mesh(N, gamma)
    ramp = mesh.ramp
    beta = default_beta(ramp)
    for f in mesh.faces:
        assert f.length >= 1e-14 * mesh.h
        a, b = f.endpoints
        assert math.dist(a, b) == pytest.approx(f.length, rel=1e-12)
        assert np.linalg.norm(f.normal) == pytest.approx(1.0, abs=1e-15)
        if f.kind == FaceKind.EXT_RAMP:
            assert np.all(np.abs(f.endpoints[:, 1] - ramp.line_y(f.endpoints[:, 0])) <= 1e-12)
            assert abs(beta @ f.normal) <= 1e-14 * np.linalg.norm(beta)
        if f.kind == FaceKind.INTERIOR:
            E1, E2 = f.cells
            i1, i2 = mesh.cells[E1].bg_index, mesh.cells[E2].bg_index
            assert i1 < i2  # lexicographic orientation
            step = np.subtract(i2, i1)
            np.testing.assert_array_equal(f.normal, step)


@pytest.mark.parametrize("N, gamma", [(10, 45.0), (20, 25.0)])
def test_cell_boundaries_close(N, gamma):
    # the faces of each cell add up to a closed loop: sum of |e| n_out = 0
    mesh = cached_mesh(N, gamma)
    acc = np.zeros((mesh.n_cells, 2))
    for f in mesh.faces:
        for c in f.cells:
            acc[c] += f.length * mesh.outward_normal(f.id, c)
    assert np.abs(acc).max() <= 1e-14


def test_mesh_graph_connected():
    mesh = cached_mesh(20, 25.0)
    seen = {0}
    stack = [0]
    while stack:
        c = stack.pop()
        for fid in mesh.cell_faces[c]:
            for nb in mesh.faces[fid].cells:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
    assert len(seen) == mesh.n_cells


def test_pattern_example_triangle():
    # single triangle cut cell of the 4x4 mesh with the ramp at x0 = 0.26
    mesh = build_mesh(4, RAMP_026)
    patterns = find_stabilized_cells(mesh, beta45())
    tri = [p for p in patterns if mesh.cells[p.cut_cell].bg_index == (2, 0)]
    assert len(tri) == 1
    pt = tri[0]
    np.testing.assert_allclose(
        mesh.cells[pt.cut_cell].polygon, [(0.5, 0.24), (0.51, 0.25), (0.5, 0.25)], atol=1e-15
    )
    e_in, e_out = mesh.faces[pt.e_in], mesh.faces[pt.e_out]
    assert e_in.normal[1] == 0.0  # vertical
    assert e_out.normal[0] == 0.0  # horizontal
    assert pt.inflow_integral == pytest.approx(math.sqrt(2.0) * 0.01, rel=1e-12)
    assert pt.inflow_integral == pytest.approx(0.0141421, abs=1e-7)


def test_patterns_empty_without_triangles():
    mesh = build_mesh(4, RampGeometry.from_degrees(45.0, 1.5))
    assert find_stabilized_cells(mesh, beta45()) == []


def test_patterns_45_degree_neighbors():
    mesh = cached_mesh(20, 45.0)
    patterns = find_stabilized_cells(mesh, default_beta(mesh.ramp))
    assert len(patterns) == int(np.sum(mesh.kinds == CellKind.CUT3))
    for pt in patterns:
        i, j = mesh.cells[pt.cut_cell].bg_index
        assert mesh.cells[pt.E_in].bg_index == (i - 1, j)
        assert mesh.cells[pt.E_out].bg_index == (i, j + 1)
        assert len({pt.E_in, pt.E_out, pt.cut_cell}) == 3


@pytest.mark.parametrize("N, gamma", [(20, 25.0), (40, 25.0), (40, 45.0)])
def test_pattern_invariants(N, gamma):
    mesh = cached_mesh(N, gamma)
    beta = default_beta(mesh.ramp)
    for pt in find_stabilized_cells(mesh, beta):
        c = pt.cut_cell
        assert beta @ mesh.outward_normal(pt.e_in, c) < 0.0
        assert beta @ mesh.outward_normal(pt.e_out, c) >= 0.0
        kinds = {mesh.faces[f].kind for f in mesh.cell_faces[c]}
        assert FaceKind.EXT_RAMP in kinds
        assert pt.inflow_integral == pytest.approx(
            pt.inflow_speed * mesh.faces[pt.e_in].length, rel=1e-14
        )


def test_pattern_rejects_non_parallel_velocity():
    mesh = cached_mesh(10, 45.0)
    with pytest.raises(MeshError):
        find_stabilized_cells(mesh, np.array([1.0, -1.0]))


def test_dump_lists_every_cell_and_face():
    mesh = cached_mesh(4, 45.0)
    lines = mesh.dump().splitlines()
    assert sum(l.startswith("cell ") for l in lines) == mesh.n_cells
    assert sum(l.startswith("face ") for l in lines) == mesh.n_faces
