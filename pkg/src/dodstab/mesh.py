"""Cut-cell mesh of the unit square with a planar ramp removed.

The kept region is the half-plane above the line through ``(x0, 0)`` with
slope ``tan(gamma)``. Each background square is clipped against that
half-plane (single-plane Sutherland-Hodgman) and the faces of the clipped
cells are classified as interior, Cartesian boundary or ramp boundary.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

NODE_TOL = 1e-12
FACE_TOL = 1e-14


class CellKind(enum.IntEnum):
    FULL = 0
    CUT3 = 3
    CUT4 = 4
    CUT5 = 5


class FaceKind(enum.IntEnum):
    INTERIOR = 0
    EXT_CARTESIAN = 1
    EXT_RAMP = 2


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class RampGeometry:
    """Ramp foot ``x0`` on the bottom edge and inclination ``gamma`` (radians)."""

    x0: float = 0.2001
    gamma: float = math.pi / 4

    def __post_init__(self):
        if not 0.0 < self.gamma < math.pi / 2:
            raise ValueError(f"ramp angle must lie in (0, pi/2), got {self.gamma}")
        if self.x0 <= 0.0:
            raise ValueError(f"ramp foot must be positive, got {self.x0}")

    @classmethod
    def from_degrees(cls, gamma_deg: float, x0: float = 0.2001) -> "RampGeometry":
        return cls(x0=x0, gamma=math.radians(gamma_deg))

    @property
    def tangent(self) -> np.ndarray:
        return np.array([math.cos(self.gamma), math.sin(self.gamma)])

    @property
    def normal(self) -> np.ndarray:
        """Unit normal pointing out of the fluid region (into the ramp)."""
        return np.array([math.sin(self.gamma), -math.cos(self.gamma)])

    def signed_distance(self, pts) -> np.ndarray:
        # equals the ramp-frame coordinate y_hat; kept side is >= 0
        pts = np.asarray(pts, dtype=float)
        return -math.sin(self.gamma) * (pts[..., 0] - self.x0) + math.cos(self.gamma) * pts[..., 1]

    def line_y(self, x):
        return math.tan(self.gamma) * (x - self.x0)

    def line_x(self, y):
        return self.x0 + y / math.tan(self.gamma)

    def domain_area(self) -> float:
        """Exact area of the kept part of (0,1)^2."""
        t = math.tan(self.gamma)
        if self.x0 >= 1.0:
            return 1.0
        y_right = t * (1.0 - self.x0)
        if y_right <= 1.0:
            return 1.0 - 0.5 * (1.0 - self.x0) * y_right
        x_top = self.line_x(1.0)
        # region below the line: triangle up to y=1 plus rectangle to the right
        return 1.0 - (0.5 * (x_top - self.x0) * 1.0 + (1.0 - x_top) * 1.0)


def polygon_area(poly) -> float:
    poly = np.asarray(poly, dtype=float)
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def clip_square(lo, size: float, ramp: RampGeometry, tol: float = 0.0):
    """Clip the square ``[lo, lo + size]^2`` to the kept half-plane.

    Returns ``(pivot, local, on_line)``: a corner ``pivot`` of the square, the
    CCW vertices relative to it and flags for vertices on the ramp line.
    Vertices within ``tol`` of the line are treated as lying on it.

    Working relative to a corner keeps tiny cut cells accurate: a square with
    one kept corner uses that corner as pivot, and both cut points are offsets
    ``d / cos`` and ``d / sin`` from it, where ``d`` is its distance to the line.
    The ramp edge then has the line's direction to machine precision however
    small the triangle is. An empty ``local`` array means nothing is kept.
    """
    lo = np.asarray(lo, dtype=float)
    if size <= 0.0:
        raise ValueError("square must have positive side length")
    offs = np.array([(0.0, 0.0), (size, 0.0), (size, size), (0.0, size)])
    d = ramp.signed_distance(lo + offs)
    d = np.where(np.abs(d) <= tol, 0.0, d)
    kept = d >= 0.0
    k_piv = int(np.flatnonzero(kept)[0]) if kept.sum() == 1 else 0
    pivot = lo + offs[k_piv]
    loc = offs - offs[k_piv]
    grad = np.array([-math.sin(ramp.gamma), math.cos(ramp.gamma)])

    def crossing(a, b):
        # walk from the corner closer to the line along the (axis-aligned) edge
        if abs(d[b]) < abs(d[a]):
            a, b = b, a
        e = (loc[b] - loc[a]) / size
        return loc[a] - e * (d[a] / float(e @ grad))

    out, flags = [], []
    for k in range(4):
        a = k - 1 if k else 3
        if kept[k]:
            if not kept[a] and d[k] != 0.0:
                out.append(crossing(a, k))
                flags.append(True)
            out.append(loc[k])
            flags.append(d[k] == 0.0)
        elif kept[a] and d[a] != 0.0:
            out.append(crossing(a, k))
            flags.append(True)
    local = np.array(out, dtype=float).reshape(-1, 2)
    if len(local) < 3 or polygon_area(local) <= 0.0:
        return pivot, np.zeros((0, 2)), ()
    return pivot, local, tuple(flags)


def clip_cell_to_halfplane(square, ramp: RampGeometry, tol: float = 0.0):
    """Clip the square ``((xa, ya), (xb, yb))`` to the kept half-plane.

    Returns the CCW vertex list in global coordinates, empty if nothing of
    the square is kept.
    """
    (xa, ya), (xb, yb) = square
    if not (xb > xa and yb > ya):
        raise ValueError("square must have positive side length")
    if not math.isclose(xb - xa, yb - ya, rel_tol=1e-12):
        raise ValueError("only squares are supported")
    pivot, local, _ = clip_square((xa, ya), xb - xa, ramp, tol)
    return [tuple(pivot + v) for v in local]


@dataclass(frozen=True)
class Cell:
    """Clipped cell; ``local`` holds the vertices relative to ``pivot``."""

    id: int
    bg_index: tuple
    pivot: np.ndarray
    local: np.ndarray
    area: float
    kind: CellKind
    on_line: tuple = ()

    @property
    def polygon(self) -> np.ndarray:
        return self.pivot + self.local


@dataclass(frozen=True)
class Face:
    """Face geometry is stored relative to the pivot of cell ``frame``.

    ``frame`` is the smaller adjacent cell, so face points are accurate in
    the coordinates where that cell's basis is evaluated.
    """

    id: int
    frame: int
    local: np.ndarray  # endpoints relative to the frame cell's pivot
    length: float
    normal: np.ndarray
    kind: FaceKind
    cells: tuple  # (E1, E2) for interior faces, (E,) for boundary faces
    pivot: np.ndarray = field(repr=False, default=None)

    @property
    def endpoints(self) -> np.ndarray:
        return self.pivot + self.local


@dataclass(frozen=True)
class StabilizationPattern:
    cut_cell: int
    e_in: int
    e_out: int
    E_in: int
    E_out: int
    inflow_integral: float
    outflow_speed: float  # <beta, n_cut> on e_out
    inflow_speed: float  # |<beta, n_cut>| on e_in


@dataclass
class CutCellMesh:
    N: int
    ramp: RampGeometry
    cells: list
    faces: list
    index: dict = field(repr=False)

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def __post_init__(self):
        self.areas = np.array([c.area for c in self.cells])
        self.kinds = np.array([int(c.kind) for c in self.cells])
        self.face_kinds = np.array([int(f.kind) for f in self.faces])
        self.face_normals = np.array([f.normal for f in self.faces]).reshape(-1, 2)
        self.face_lengths = np.array([f.length for f in self.faces])
        self.pivots = np.array([c.pivot for c in self.cells]).reshape(-1, 2)
        self.face_frame = np.array([f.frame for f in self.faces], dtype=int)
        self.face_local = np.array([f.local for f in self.faces]).reshape(-1, 2, 2)
        self.face_p0 = np.array([f.endpoints[0] for f in self.faces]).reshape(-1, 2)
        self.face_p1 = np.array([f.endpoints[1] for f in self.faces]).reshape(-1, 2)
        fc = np.full((len(self.faces), 2), -1, dtype=int)
        for f in self.faces:
            fc[f.id, : len(f.cells)] = f.cells
        self.face_cells = fc
        cf = [[] for _ in self.cells]
        for f in self.faces:
            for c in f.cells:
                cf[c].append(f.id)
        self.cell_faces = [tuple(v) for v in cf]

    def interior_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_kinds == FaceKind.INTERIOR)

    def boundary_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_kinds == FaceKind.EXT_CARTESIAN)

    def ramp_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_kinds == FaceKind.EXT_RAMP)

    def outward_normal(self, face_id: int, cell_id: int) -> np.ndarray:
        f = self.faces[face_id]
        if f.kind == FaceKind.INTERIOR and f.cells[1] == cell_id:
            return -f.normal
        return f.normal

    def boundary_cells(self) -> np.ndarray:
        """Cells touching the Cartesian part of the boundary."""
        return np.unique(self.face_cells[self.boundary_faces(), 0])

    def dump(self) -> str:
        """Plain-text listing of cells and faces, for debugging."""
        lines = [f"mesh N={self.N} x0={self.ramp.x0!r} gamma={self.ramp.gamma!r}"]
        for c in self.cells:
            verts = " ".join(f"({x:.17g},{y:.17g})" for x, y in c.polygon)
            lines.append(
                f"cell {c.id} bg={c.bg_index[0]},{c.bg_index[1]} kind={c.kind.name} "
                f"area={c.area:.17g} vertices={verts}"
            )
        for f in self.faces:
            (ax, ay), (bx, by) = f.endpoints
            lines.append(
                f"face {f.id} kind={f.kind.name} cells={','.join(map(str, f.cells))} "
                f"p0=({ax:.17g},{ay:.17g}) p1=({bx:.17g},{by:.17g}) "
                f"normal=({f.normal[0]:.17g},{f.normal[1]:.17g})"
            )
        return "\n".join(lines) + "\n"


def _check_nodes(N: int, ramp: RampGeometry):
    h = 1.0 / N
    g = np.arange(N + 1) * h
    X, Y = np.meshgrid(g, g, indexing="ij")
    d = np.abs(ramp.signed_distance(np.stack([X, Y], axis=-1)))
    if d.min() < NODE_TOL * h:
        i, j = np.unravel_index(np.argmin(d), d.shape)
        raise MeshError(
            f"ramp line passes within {d.min():.3e} of grid node ({i}, {j}); perturb x0"
        )


def _edges_by_side(cell: Cell, h: float) -> dict:
    """Map 'left'/'right'/'bottom'/'top'/'ramp' to lists of local edges."""
    # vertices relative to the square's lower-left corner; the square's own
    # coordinates are exact here because cut points move along one axis only
    i, j = cell.bg_index
    shift = cell.pivot - np.array([i * h, j * h])
    shift = np.where(np.abs(shift) > 0.5 * h, h, 0.0)
    rel = cell.local + shift
    sides = {"left": [], "right": [], "bottom": [], "top": [], "ramp": []}
    m = len(rel)
    for k in range(m):
        n = (k + 1) % m
        p, q = rel[k], rel[n]
        edge = (cell.local[k], cell.local[n])
        if cell.on_line[k] and cell.on_line[n]:
            sides["ramp"].append(edge)
        elif p[0] == q[0] == h:
            sides["right"].append(edge)
        elif p[1] == q[1] == h:
            sides["top"].append(edge)
        elif p[0] == q[0] == 0.0:
            sides["left"].append(edge)
        elif p[1] == q[1] == 0.0:
            sides["bottom"].append(edge)
        else:
            raise MeshError(f"unclassifiable edge {p}-{q} in cell {cell.bg_index}")
    return sides


def build_mesh(N: int, ramp: RampGeometry) -> CutCellMesh:
    if N < 2:
        raise ValueError("N must be at least 2")
    _check_nodes(N, ramp)
    h = 1.0 / N

    cells, index = [], {}
    for i in range(N):
        for j in range(N):
            pivot, local, flags = clip_square((i * h, j * h), h, ramp)
            if not len(local):
                continue
            full = not any(flags) and len(local) == 4
            kind = CellKind.FULL if full else CellKind(len(local))
            cid = len(cells)
            cells.append(Cell(cid, (i, j), pivot, local, polygon_area(local), kind, flags))
            index[(i, j)] = cid
    sides = [_edges_by_side(c, h) for c in cells]

    faces = []

    def add_face(edge, frame, normal, kind, owners):
        p, q = edge
        length = math.hypot(q[0] - p[0], q[1] - p[1])
        if length < FACE_TOL * h:
            return
        faces.append(
            Face(len(faces), frame, np.array([p, q], dtype=float), length,
                 np.asarray(normal, dtype=float), kind, tuple(owners), cells[frame].pivot)
        )

    def one(c, side):
        edges = sides[c.id][side]
        if len(edges) > 1:
            raise MeshError(f"cell {c.bg_index} has several {side} edges")
        return edges[0] if edges else None

    for c in cells:
        i, j = c.bg_index
        for edge in sides[c.id]["ramp"]:
            add_face(edge, c.id, ramp.normal, FaceKind.EXT_RAMP, (c.id,))
        for side, opposite, step, normal, last in (
            ("right", "left", (1, 0), (1.0, 0.0), i == N - 1),
            ("top", "bottom", (0, 1), (0.0, 1.0), j == N - 1),
        ):
            edge = one(c, side)
            if edge is None:
                continue
            nb = index.get((i + step[0], j + step[1]))
            if nb is not None:
                other = one(cells[nb], opposite)
                if other is None:
                    raise MeshError(f"cell {c.bg_index} has an unmatched {side} edge")
                l0 = math.dist(*edge)
                l1 = math.dist(*other)
                if abs(l0 - l1) > 1e-12 * h:
                    raise MeshError(f"{side} edge of cell {c.bg_index} does not match its neighbor")
                frame, fe = (nb, other) if cells[nb].area < c.area else (c.id, edge)
                add_face(fe, frame, normal, FaceKind.INTERIOR, (c.id, nb))
            elif last:
                add_face(edge, c.id, normal, FaceKind.EXT_CARTESIAN, (c.id,))
            else:
                raise MeshError(f"cell {c.bg_index} has an unmatched {side} edge")
        for side, step, normal, first in (
            ("left", (-1, 0), (-1.0, 0.0), i == 0),
            ("bottom", (0, -1), (0.0, -1.0), j == 0),
        ):
            edge = one(c, side)
            if edge is None:
                continue
            if first:
                add_face(edge, c.id, normal, FaceKind.EXT_CARTESIAN, (c.id,))
            elif (i + step[0], j + step[1]) not in index:
                raise MeshError(f"cell {c.bg_index} has an unmatched {side} edge")

    return CutCellMesh(N, ramp, cells, faces, index)


def find_stabilized_cells(mesh: CutCellMesh, beta) -> list:
    """One pattern per triangular cut cell: its inflow/outflow edge and neighbors."""
    beta = np.asarray(beta, dtype=float)
    patterns = []
    for c in mesh.cells:
        if c.kind != CellKind.CUT3:
            continue
        inflow, outflow = [], []
        for fid in mesh.cell_faces[c.id]:
            f = mesh.faces[fid]
            if f.kind == FaceKind.EXT_RAMP:
                continue
            bn = float(beta @ mesh.outward_normal(fid, c.id))
            (inflow if bn < 0.0 else outflow).append((fid, bn))
        if len(inflow) != 1 or len(outflow) != 1:
            raise MeshError(
                f"triangular cut cell {c.id} has {len(inflow)} inflow and "
                f"{len(outflow)} outflow edges; velocity must be parallel to the ramp"
            )
        (fin, bin_), (fout, bout) = inflow[0], outflow[0]
        if mesh.faces[fin].kind != FaceKind.INTERIOR or mesh.faces[fout].kind != FaceKind.INTERIOR:
            raise MeshError(f"triangular cut cell {c.id} touches the Cartesian boundary")

        def other(fid):
            a, b = mesh.faces[fid].cells
            return b if a == c.id else a

        patterns.append(
            StabilizationPattern(
                cut_cell=c.id, e_in=fin, e_out=fout, E_in=other(fin), E_out=other(fout),
                inflow_integral=-bin_ * mesh.faces[fin].length,
                outflow_speed=bout, inflow_speed=-bin_,
            )
        )
    return patterns
