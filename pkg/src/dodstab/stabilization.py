"""Domain-of-dependence penalty for triangular cut cells.

For each triangular cut cell ``E_cut`` with inflow neighbor ``E_in`` and
outflow neighbor ``E_out``, with ``d = ext_{E_in}(u) - u_cut``:

    J0(u, w) = eta * int_{e_out} d * <beta, [w]> ds
    J1(u, w) = eta * int_{E_cut} d * <beta, ext_{E_in}(grad w) - grad w_cut> dx

``eta = 1 - capacity(omega=1/(2p+1))`` depends on the time step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .advection import AdvectionOperator
from .mesh import StabilizationPattern
from .quadrature import polygon_rule


def capacity(pattern: StabilizationPattern, area: float, dt: float, omega: float) -> float:
    """Fraction of one step's inflow a cut cell can hold, capped at 1."""
    if dt <= 0.0:
        raise ValueError("time step must be positive")
    if pattern.inflow_integral <= 0.0:
        raise ValueError(f"cut cell {pattern.cut_cell} has no inflow")
    return min(omega * area / (dt * pattern.inflow_integral), 1.0)


@dataclass
class QuadraticDecomposition:
    """Non-negative pieces of ``a_upw(u,u) + J(u,u)`` for compactly supported ``u``."""

    total: float  # the form itself, evaluated directly
    plain_jumps: float  # jumps on faces untouched by stabilization
    weighted_jumps: float  # (1 - eta) times jumps on e_in and e_out
    extended_jumps: float  # eta/2 int_{e_out} b (u_in - u_out)^2

    @property
    def pieces_sum(self) -> float:
        return self.plain_jumps + self.weighted_jumps + self.extended_jumps


class DoDStabilization:
    def __init__(self, op: AdvectionOperator, patterns: list, omega: float | None = None):
        basis = op.basis
        mesh = op.mesh
        self.op = op
        self.basis = basis
        self.patterns = list(patterns)
        self.omega = 1.0 / (2 * basis.p + 1) if omega is None else float(omega)
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")
        beta = op.beta
        n = len(self.patterns)
        self.E_in = np.array([pt.E_in for pt in self.patterns], dtype=int)
        self.E_cut = np.array([pt.cut_cell for pt in self.patterns], dtype=int)
        self.E_out = np.array([pt.E_out for pt in self.patterns], dtype=int)
        self.areas = mesh.areas[self.E_cut] if n else np.zeros(0)
        self.eta = np.zeros(n)
        self.dt = None
        if not n:
            return

        e_out = np.array([pt.e_out for pt in self.patterns])
        fp = op.face_rule
        self.b_out = np.array([pt.outflow_speed for pt in self.patterns])
        self.f_w = fp.weights[e_out]
        self.f_in = fp.eval(basis, self.E_in, e_out)
        self.f_cut = fp.eval(basis, self.E_cut, e_out)
        self.f_out = fp.eval(basis, self.E_out, e_out)

        # E_cut quadrature: local points for the cut basis, global for E_in's
        rules = [polygon_rule(mesh.cells[c].local, op.degree) for c in self.E_cut]
        loc = np.array([r.points for r in rules])
        vpts = mesh.pivots[self.E_cut][:, None, :] + loc
        self.v_w = np.array([r.weights for r in rules])
        self.v_in = basis.eval(self.E_in[:, None], vpts)
        self.v_cut = basis.eval(self.E_cut[:, None], loc, local=True)
        self.g_in = basis.grad(self.E_in[:, None], vpts) @ beta
        self.g_cut = basis.grad(self.E_cut[:, None], loc, local=True) @ beta

        # positions of e_in / e_out among the operator's interior faces
        pos = {f: k for k, f in enumerate(op.int_faces)}
        self.k_in = np.array([pos[pt.e_in] for pt in self.patterns])
        self.k_out = np.array([pos[pt.e_out] for pt in self.patterns])

    def capacities(self, dt: float, omega: float | None = None) -> np.ndarray:
        omega = self.omega if omega is None else omega
        return np.array([capacity(pt, a, dt, omega) for pt, a in zip(self.patterns, self.areas)])

    def set_dt(self, dt: float) -> np.ndarray:
        self.dt = dt
        self.eta = 1.0 - self.capacities(dt) if self.patterns else np.zeros(0)
        return self.eta

    def _active(self):
        return np.flatnonzero(self.eta > 0.0)

    # -- matrix-free -------------------------------------------------------
    def apply_J0(self, u: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        u = np.asarray(u, dtype=float).reshape(self.op.shape)
        out = np.zeros(self.op.shape) if out is None else out
        k = self._active()
        if not len(k):
            return out
        d = (np.einsum("pqi,pi->pq", self.f_in[k], u[self.E_in[k]])
             - np.einsum("pqi,pi->pq", self.f_cut[k], u[self.E_cut[k]]))
        val = (self.eta[k] * self.b_out[k])[:, None] * self.f_w[k] * d
        np.add.at(out, self.E_cut[k], np.einsum("pq,pqi->pi", val, self.f_cut[k]))
        np.add.at(out, self.E_out[k], -np.einsum("pq,pqi->pi", val, self.f_out[k]))
        return out

    def apply_J1(self, u: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        u = np.asarray(u, dtype=float).reshape(self.op.shape)
        out = np.zeros(self.op.shape) if out is None else out
        k = self._active()
        if not len(k):
            return out
        d = (np.einsum("pqi,pi->pq", self.v_in[k], u[self.E_in[k]])
             - np.einsum("pqi,pi->pq", self.v_cut[k], u[self.E_cut[k]]))
        val = self.eta[k][:, None] * self.v_w[k] * d
        np.add.at(out, self.E_in[k], np.einsum("pq,pqi->pi", val, self.g_in[k]))
        np.add.at(out, self.E_cut[k], -np.einsum("pq,pqi->pi", val, self.g_cut[k]))
        return out

    def apply(self, u: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        out = self.apply_J0(u, out)
        return self.apply_J1(u, out)

    # -- assembly ------------------------------------------------------------
    def factors(self) -> tuple:
        """Sparse ``(P, Q)`` with ``J = P @ Q`` for the current ``eta``.

        ``Q`` maps coefficients to the differences ``ext_{E_in}(u) - u_cut`` at
        the quadrature points of ``e_out`` and ``E_cut``; ``P`` integrates them
        against the test functions. Applying ``P @ (Q @ u)`` cancels at the
        level of point values, which keeps constant states steady to roundoff
        where the product matrix would lose digits on tiny cells.
        """
        nd = self.basis.n_dof
        n = self.op.shape[0] * nd
        k = self._active()
        if not len(k):
            return sp.csr_matrix((n, 0)), sp.csr_matrix((0, n))
        eta = self.eta[k][:, None]
        Ein, Ecut, Eout = self.E_in[k], self.E_cut[k], self.E_out[k]
        nf, nv = self.f_w.shape[1], self.v_w.shape[1]
        m = len(k)
        rf = np.arange(m * nf).reshape(m, nf)  # J0 point rows
        rv = m * nf + np.arange(m * nv).reshape(m, nv)  # J1 point rows
        n_pts = m * (nf + nv)

        def point_block(rows, cells, vals, sign):
            # rows (m, q), vals (m, q, nd): coefficient -> point values
            cols = cells[:, None, None] * nd + np.arange(nd)[None, None, :]
            r, c = np.broadcast_arrays(rows[:, :, None], cols)
            return r.ravel(), c.ravel(), (sign * vals).ravel()

        q_parts = [
            point_block(rf, Ein, self.f_in[k], 1.0),
            point_block(rf, Ecut, self.f_cut[k], -1.0),
            point_block(rv, Ein, self.v_in[k], 1.0),
            point_block(rv, Ecut, self.v_cut[k], -1.0),
        ]
        wf = eta * self.b_out[k][:, None] * self.f_w[k]
        wv = eta * self.v_w[k]
        p_parts = [
            point_block(rf, Ecut, wf[:, :, None] * self.f_cut[k], 1.0),
            point_block(rf, Eout, wf[:, :, None] * self.f_out[k], -1.0),
            point_block(rv, Ein, wv[:, :, None] * self.g_in[k], 1.0),
            point_block(rv, Ecut, wv[:, :, None] * self.g_cut[k], -1.0),
        ]

        def gather(parts):
            return (np.concatenate([q[0] for q in parts]), np.concatenate([q[1] for q in parts]),
                    np.concatenate([q[2] for q in parts]))

        qr, qc, qv = gather(q_parts)
        pr, pc, pv = gather(p_parts)
        Q = sp.csr_matrix((qv, (qr, qc)), shape=(n_pts, n))
        P = sp.csr_matrix((pv, (pc, pr)), shape=(n, n_pts))
        return P, Q

    def assemble(self) -> sp.csr_matrix:
        """Sparse ``J`` for the current ``eta``; patterns with eta = 0 are dropped."""
        P, Q = self.factors()
        return (P @ Q).tocsr()

    # -- energy identities -----------------------------------------------------
    def stabilized_quadratic_form(self, u: np.ndarray) -> QuadraticDecomposition:
        op = self.op
        op.check_support(u)
        u = np.asarray(u, dtype=float).reshape(op.shape)
        total = float(np.sum(u * (op.apply_aupw(u) + self.apply(u))))

        jumps = op.face_jumps_sq(u)
        weight = np.ones_like(jumps)
        if self.patterns:
            weight[self.k_in] = 0.0
            weight[self.k_out] = 0.0
        plain = float(np.sum(weight * jumps))
        if not self.patterns:
            return QuadraticDecomposition(total, plain, 0.0, 0.0)
        one_minus = 1.0 - self.eta
        weighted = float(np.sum(one_minus * (jumps[self.k_in] + jumps[self.k_out])))
        d = (np.einsum("pqi,pi->pq", self.f_in, u[self.E_in])
             - np.einsum("pqi,pi->pq", self.f_out, u[self.E_out]))
        extended = float(np.sum(0.5 * self.eta * self.b_out * np.sum(self.f_w * d**2, axis=1)))
        return QuadraticDecomposition(total, plain, weighted, extended)
