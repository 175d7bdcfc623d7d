"""Wiring of mesh, space, operators and time stepping into runnable problems."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .advection import AdvectionOperator
from .mesh import CutCellMesh, RampGeometry, build_mesh, find_stabilized_cells
from .space import Basis, DGFunction, MassMatrices, project, volume_rules
from .stabilization import DoDStabilization
from .timestep import Scheme, StepInfo, compute_dt, integrate, n_steps, scheme_for_degree
from .verification import ErrorNorms, RampFrame, SineWave


class Discretization:
    """Semi-discrete system ``M u' = -(A + J(dt)) u - l(t)``."""

    def __init__(self, mesh: CutCellMesh, p: int, beta, boundary=None,
                 stabilize: bool = True, omega: float | None = None, anchor: str = "bbox"):
        self.mesh = mesh
        self.p = p
        self.beta = np.asarray(beta, dtype=float)
        self.basis = Basis(mesh, p, anchor=anchor)
        self.rules = volume_rules(mesh, 2 * p + 2)
        self.mass = MassMatrices(self.basis, self.rules)
        self.op = AdvectionOperator(self.basis, self.beta, boundary)
        self.patterns = find_stabilized_cells(mesh, self.beta)
        self.stab = DoDStabilization(self.op, self.patterns, omega) if stabilize else None
        nc, nd = mesh.n_cells, self.basis.n_dof
        self.shape = (nc, nd)
        self._A = None
        self._Minv = None
        self._basis_integrals = None

    @property
    def boundary(self):
        return self.op.boundary

    @property
    def A(self) -> sp.csr_matrix:
        if self._A is None:
            self._A = self.op.assemble()
        return self._A

    @property
    def Minv(self) -> sp.csr_matrix:
        if self._Minv is None:
            self._Minv = sp.block_diag(list(self.mass.inverses), format="csr")
        return self._Minv

    def set_dt(self, dt: float):
        if self.stab is not None:
            self.stab.set_dt(dt)

    def spatial_matrix(self, dt: float | None = None) -> sp.csr_matrix:
        """``A + J`` for the step size ``dt`` (J omitted when unstabilized)."""
        if self.stab is None:
            return self.A
        if dt is not None:
            self.set_dt(dt)
        return (self.A + self.stab.assemble()).tocsr()

    def apply_spatial(self, u: np.ndarray) -> np.ndarray:
        """Matrix-free ``a_upw(u, .) + J(u, .)`` with the current ``eta``."""
        out = self.op.apply_aupw(u)
        if self.stab is not None:
            self.stab.apply(u, out)
        return out

    def matrix_free_rhs(self, dt: float):
        self.set_dt(dt)

        def rhs(t, u):
            r = self.apply_spatial(u)
            self.op.apply_lh(t, r)
            return -self.mass.apply_inverse(r).ravel()

        return rhs

    def make_rhs(self, dt: float):
        """Assembled right-hand side ``u -> M^-1 (-(A+J) u - l(t))`` on flat vectors.

        ``J`` is applied in its factored form, see ``DoDStabilization.factors``.
        """
        L = -(self.Minv @ self.A).tocsr()
        terms = [L]
        if self.stab is not None:
            self.set_dt(dt)
            P, Q = self.stab.factors()
            if P.shape[1]:
                LP = -(self.Minv @ P).tocsr()
                terms = [L, (LP, Q.tocsr())]
        if self.boundary is None or not len(self.op.inflow):
            G, g, pts = None, None, None
        else:
            G = -(self.Minv @ self.op.inflow_matrix()).tocsr()
            g, pts = self.boundary, self.op.inflow_pts

        def rhs(t, u):
            out = L @ u
            if len(terms) > 1:
                LP, Q = terms[1]
                out += LP @ (Q @ u)
            if G is not None:
                out += G @ g(pts, t).ravel()
            return out

        return rhs

    def project(self, f) -> np.ndarray:
        return project(f, self.basis, self.mass, self.rules).coeffs

    def as_function(self, u: np.ndarray) -> DGFunction:
        return DGFunction(self.basis, np.asarray(u).reshape(self.shape))

    def l2_norm(self, u: np.ndarray) -> float:
        u = np.asarray(u).reshape(self.shape)
        return math.sqrt(max(float(np.sum(u * self.mass.apply(u))), 0.0))

    def total_mass(self, u: np.ndarray) -> float:
        # basis mode 0 is the constant 1, so int u = (M u)_0 per cell
        u = np.asarray(u).reshape(self.shape)
        return float(np.sum(self.mass.apply(u)[:, 0]))


@dataclass
class RunResult:
    discretization: Discretization
    u: np.ndarray
    u0: np.ndarray
    dt: float
    steps: int
    scheme: Scheme
    log: list = field(default_factory=list)  # (step, t, l2, mass)
    l1_error: float = float("nan")
    linf_error: float = float("nan")
    max_abs: float = float("nan")
    max_abs0: float = float("nan")


def default_beta(ramp: RampGeometry, speed: float = 2.0) -> np.ndarray:
    return RampFrame.of(ramp).velocity(speed)


def run(N: int, p: int, gamma_deg: float = 45.0, x0: float = 0.2001, T: float = 0.3,
        cfl: float = 0.4, stabilize: bool = True, omega: float | None = None,
        initial=None, boundary=None, exact=None, scheme: Scheme | None = None,
        monitor: bool = True, norms: bool = True, matrix_free: bool = False) -> RunResult:
    """Advance the ramp problem to ``T``.

    By default the smooth sine wave is used for initial data, inflow data and
    error measurement; ``initial``/``boundary``/``exact`` override that.
    """
    ramp = RampGeometry.from_degrees(gamma_deg, x0)
    mesh = build_mesh(N, ramp)
    beta = default_beta(ramp)
    wave = SineWave(RampFrame.of(ramp))
    initial = wave if initial is None else initial
    boundary = (exact or wave) if boundary is None else boundary
    exact = initial if exact is None else exact
    disc = Discretization(mesh, p, beta, boundary=boundary, stabilize=stabilize, omega=omega)
    dt = compute_dt(p, mesh.h, float(np.linalg.norm(beta)), cfl)
    scheme = scheme_for_degree(p) if scheme is None else scheme

    u0 = disc.project(lambda x: initial(x, 0.0)).ravel()
    log = []

    def callback(info: StepInfo):
        log.append((info.step, info.t, disc.l2_norm(info.u), disc.total_mass(info.u)))

    make_rhs = disc.matrix_free_rhs if matrix_free else disc.make_rhs
    u = integrate(make_rhs, u0, T, dt, scheme, callback if monitor else None)
    res = RunResult(disc, u.reshape(disc.shape), u0.reshape(disc.shape), dt,
                    max(len(log) - 1, 0) if monitor else n_steps(T, dt), scheme, log)
    if norms:
        en = ErrorNorms(disc.basis)
        res.l1_error = en.l1(res.u, exact, T)
        res.linf_error = en.linf(res.u, exact, T)
        res.max_abs = en.max_abs(res.u)
        res.max_abs0 = en.max_abs(res.u0)
    return res
