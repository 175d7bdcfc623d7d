"""Broken polynomial space on the cut-cell mesh.

Every cell carries a scaled tensor-Legendre basis of total degree <= p on an
anchor box. The basis is defined on all of R^2, so evaluating a cell's
polynomial outside the cell is the extension operator.

Anchor boxes: Full cells use their background square (where the basis is
orthonormal up to the factor h^2); cut cells use the bounding box of their
polygon, which keeps mass matrices of tiny corner triangles well conditioned.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import CellKind, CutCellMesh
from .quadrature import _npoints, box_rule, gauss_legendre_1d, polygon_rule


def modes(p: int) -> list:
    """Exponent pairs (a, b) with a + b <= p, grouped by total degree."""
    return [(k - b, b) for k in range(p + 1) for b in range(k + 1)]


def n_dofs(p: int) -> int:
    return (p + 1) * (p + 2) // 2


def _legendre(x: np.ndarray, p: int):
    # values and derivatives of P_0..P_p, stacked on a trailing axis
    P = [np.ones_like(x), x]
    dP = [np.zeros_like(x), np.ones_like(x)]
    for k in range(1, p):
        P.append(((2 * k + 1) * x * P[k] - k * P[k - 1]) / (k + 1))
        dP.append(dP[k - 1] + (2 * k + 1) * P[k])
    return np.stack(P[: p + 1], axis=-1), np.stack(dP[: p + 1], axis=-1)


class Basis:
    """Modal basis of degree ``p`` for every cell of ``mesh``."""

    def __init__(self, mesh: CutCellMesh, p: int, anchor: str = "bbox"):
        if p < 0:
            raise ValueError("degree must be non-negative")
        if anchor not in ("bbox", "background"):
            raise ValueError(f"unknown anchor {anchor!r}")
        self.mesh = mesh
        self.p = p
        self.n_dof = n_dofs(p)
        self.anchor = anchor
        self.modes = np.array(modes(p))
        self.scale = np.sqrt((2 * self.modes[:, 0] + 1) * (2 * self.modes[:, 1] + 1))
        h = mesh.h
        # anchor boxes are stored relative to each cell's pivot
        lo = np.empty((mesh.n_cells, 2))
        hi = np.empty((mesh.n_cells, 2))
        for c in mesh.cells:
            if c.kind == CellKind.FULL or anchor == "background":
                i, j = c.bg_index
                lo[c.id] = np.array([i * h, j * h]) - c.pivot
                hi[c.id] = lo[c.id] + h
            else:
                lo[c.id] = c.local.min(axis=0)
                hi[c.id] = c.local.max(axis=0)
        self.pivot = mesh.pivots
        self.center = 0.5 * (lo + hi)
        self.half = 0.5 * (hi - lo)

    def _local(self, cells, x, local):
        cells = np.asarray(cells)
        x = np.asarray(x, dtype=float)
        c = self.center[cells]
        if not local:
            c = c + self.pivot[cells]
        hw = self.half[cells]
        # broadcast cell data against the point axes of x
        extra = x.ndim - 1 - cells.ndim
        c = c.reshape(c.shape[:-1] + (1,) * extra + (2,))
        hw = hw.reshape(hw.shape[:-1] + (1,) * extra + (2,))
        return (x - c) / hw, hw

    def eval(self, cells, x, local: bool = False) -> np.ndarray:
        """Basis values, shape ``x.shape[:-1] + (n_dof,)``.

        ``cells`` is an int or an array broadcasting against the leading
        axes of ``x``. With ``local=True`` the points are given relative to
        the cell's pivot, which avoids cancellation on tiny cells.
        """
        xi, _ = self._local(cells, x, local)
        Px, _ = _legendre(xi[..., 0], self.p)
        Py, _ = _legendre(xi[..., 1], self.p)
        a, b = self.modes[:, 0], self.modes[:, 1]
        return self.scale * Px[..., a] * Py[..., b]

    def grad(self, cells, x, local: bool = False) -> np.ndarray:
        """Basis gradients, shape ``x.shape[:-1] + (n_dof, 2)``."""
        xi, hw = self._local(cells, x, local)
        Px, dPx = _legendre(xi[..., 0], self.p)
        Py, dPy = _legendre(xi[..., 1], self.p)
        a, b = self.modes[:, 0], self.modes[:, 1]
        gx = self.scale * dPx[..., a] * Py[..., b] / hw[..., 0:1]
        gy = self.scale * Px[..., a] * dPy[..., b] / hw[..., 1:2]
        return np.stack([gx, gy], axis=-1)


@dataclass
class VolumeRules:
    """Cell quadrature grouped by point count.

    ``groups[k] = (cells, local_pts, pts, wts)`` with points relative to each
    cell's pivot and in global coordinates.
    """

    groups: list
    degree: int

    def cell_rule(self, cell_id: int):
        for cells, _, pts, wts in self.groups:
            k = np.searchsorted(cells, cell_id)
            if k < len(cells) and cells[k] == cell_id:
                return pts[k], wts[k]
        raise IndexError(cell_id)


def volume_rules(mesh: CutCellMesh, degree: int) -> VolumeRules:
    h = mesh.h
    groups = []
    full = np.flatnonzero(mesh.kinds == CellKind.FULL)
    if len(full):
        ref = box_rule((0.0, 0.0), (h, h), degree)
        loc = np.broadcast_to(ref.points, (len(full),) + ref.points.shape).copy()
        wts = np.broadcast_to(ref.weights, (len(full), len(ref.weights))).copy()
        groups.append((full, loc, mesh.pivots[full][:, None, :] + loc, wts))
    for kind in (CellKind.CUT3, CellKind.CUT4, CellKind.CUT5):
        ids = np.flatnonzero(mesh.kinds == kind)
        if not len(ids):
            continue
        rules = [polygon_rule(mesh.cells[c].local, degree) for c in ids]
        loc = np.array([r.points for r in rules])
        wts = np.array([r.weights for r in rules])
        groups.append((ids, loc, mesh.pivots[ids][:, None, :] + loc, wts))
    return VolumeRules(groups, degree)


@dataclass
class FacePoints:
    """Gauss-Legendre points on every face.

    ``local`` is relative to the pivot of the face's frame cell, ``points`` is
    global; both have shape (nf, nq, 2) and ``weights`` (nf, nq).
    """

    local: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    frame: np.ndarray

    def eval(self, basis: Basis, cells, faces=None, grad: bool = False) -> np.ndarray:
        """Basis of ``cells[k]`` at the points of ``faces[k]``.

        The frame cell is evaluated from the local points.
        """
        faces = np.arange(len(self.frame)) if faces is None else np.asarray(faces)
        cells = np.asarray(cells)
        fn = basis.grad if grad else basis.eval
        own = fn(cells, self.local[faces], local=True)
        other = fn(cells, self.points[faces])
        mask = (self.frame[faces] == cells).reshape((-1,) + (1,) * (own.ndim - 1))
        return np.where(mask, own, other)


def face_points(mesh: CutCellMesh, degree: int) -> FacePoints:
    x, w = gauss_legendre_1d(_npoints(degree))
    s = 0.5 * (1.0 + x)
    a, b = mesh.face_local[:, 0], mesh.face_local[:, 1]
    loc = a[:, None, :] * (1.0 - s)[None, :, None] + b[:, None, :] * s[None, :, None]
    pts = mesh.pivots[mesh.face_frame][:, None, :] + loc
    wts = 0.5 * mesh.face_lengths[:, None] * w[None, :]
    return FacePoints(loc, pts, wts, mesh.face_frame)


class MassMatrices:
    """Per-cell mass matrices with precomputed Cholesky-based inverses."""

    def __init__(self, basis: Basis, rules: VolumeRules):
        if rules.degree < 2 * basis.p:
            raise ValueError("mass quadrature must be exact for degree 2p")
        nc, nd = basis.mesh.n_cells, basis.n_dof
        M = np.empty((nc, nd, nd))
        for cells, loc, _, wts in rules.groups:
            phi = basis.eval(cells[:, None], loc, local=True)
            M[cells] = np.einsum("cq,cqi,cqj->cij", wts, phi, phi)
        self.matrices = M
        try:
            L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError as err:
            raise np.linalg.LinAlgError("singular cell mass matrix") from err
        eye = np.broadcast_to(np.eye(nd), M.shape)
        Linv = np.linalg.solve(L, eye)
        self.cholesky = L
        self.inverses = np.einsum("cki,ckj->cij", Linv, Linv)

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        return np.einsum("cij,cj->ci", self.matrices, coeffs)

    def apply_inverse(self, residual: np.ndarray) -> np.ndarray:
        return np.einsum("cij,cj->ci", self.inverses, residual)

    def condition_numbers(self) -> np.ndarray:
        ev = np.linalg.eigvalsh(self.matrices)
        return ev[:, -1] / ev[:, 0]


def assemble_mass(basis: Basis, degree: int | None = None) -> MassMatrices:
    degree = 2 * basis.p + 2 if degree is None else degree
    return MassMatrices(basis, volume_rules(basis.mesh, degree))


@dataclass
class DGFunction:
    """Element of the broken space: one coefficient row per cell."""

    basis: Basis
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        expected = (self.basis.mesh.n_cells, self.basis.n_dof)
        if self.coeffs.shape != expected:
            raise ValueError(f"coefficient shape {self.coeffs.shape} != {expected}")

    def _check(self, cell_id):
        if not 0 <= cell_id < self.basis.mesh.n_cells:
            raise IndexError(f"invalid cell id {cell_id}")

    def eval(self, cell_id: int, x) -> np.ndarray:
        """Value of the polynomial of ``cell_id`` at ``x`` (anywhere in R^2)."""
        self._check(cell_id)
        return self.basis.eval(cell_id, x) @ self.coeffs[cell_id]

    def eval_grad(self, cell_id: int, x) -> np.ndarray:
        self._check(cell_id)
        return np.einsum("...kd,k->...d", self.basis.grad(cell_id, x), self.coeffs[cell_id])


def project(f, basis: Basis, mass: MassMatrices, rules: VolumeRules | None = None) -> DGFunction:
    """Cell-wise L2 projection of the vectorized field ``f(points)``."""
    if rules is None:
        rules = volume_rules(basis.mesh, 2 * basis.p + 2)
    rhs = np.zeros((basis.mesh.n_cells, basis.n_dof))
    for cells, loc, pts, wts in rules.groups:
        phi = basis.eval(cells[:, None], loc, local=True)
        rhs[cells] = np.einsum("cq,cq,cqi->ci", wts, f(pts), phi)
    return DGFunction(basis, mass.apply_inverse(rhs))
