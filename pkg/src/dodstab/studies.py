"""Convergence, stability and small-cell studies shared by the CLI and tests."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import RampGeometry, build_mesh
from .solver import Discretization, default_beta, run
from .timestep import BlowUpError, Scheme, compute_dt
from .verification import Bump, ConvergenceTable, Constant, RampFrame, energy_growth

# acceptance thresholds
L1_MARGIN = 0.8  # least-squares L1 order >= p + 0.8
LINF_MARGIN = 0.4  # least-squares Linf order >= p + 0.4
FORM_TOL = 1e-10  # a(u,u) + J(u,u) >= -FORM_TOL |u|^2, min eig >= -FORM_TOL
IDENTITY_TOL = 1e-12
ENERGY_TOL = 1e-10
MASS_TOL = 1e-12
CONSTANT_TOL = 1e-11

# compactly supported bump: touches the ramp, stays clear of the Cartesian
# boundary, and its numerical wake does not reach the outflow boundary
BUMP_CENTER = (0.2, 0.08)
BUMP_RADIUS = 0.12
BUMP_T = 0.1


def discretization(N: int, p: int, gamma_deg: float = 45.0, x0: float = 0.2001,
                   stabilize: bool = True, omega: float | None = None, boundary=None,
                   cfl: float = 0.4):
    """Discretization of the ramp problem with ``eta`` set for the CFL step."""
    ramp = RampGeometry.from_degrees(gamma_deg, x0)
    beta = default_beta(ramp)
    disc = Discretization(build_mesh(N, ramp), p, beta, boundary=boundary,
                          stabilize=stabilize, omega=omega)
    dt = compute_dt(p, disc.mesh.h, float(np.linalg.norm(beta)), cfl)
    disc.set_dt(dt)
    return disc, dt


def random_compact_support(disc: Discretization, rng: np.random.Generator) -> np.ndarray:
    """Random coefficients vanishing on cells that touch the Cartesian boundary."""
    u = rng.standard_normal(disc.shape)
    u[disc.mesh.boundary_cells()] = 0.0
    return u


def interior_dofs(disc: Discretization) -> np.ndarray:
    nd = disc.basis.n_dof
    keep = np.ones(disc.mesh.n_cells, dtype=bool)
    keep[disc.mesh.boundary_cells()] = False
    cells = np.flatnonzero(keep)
    return (cells[:, None] * nd + np.arange(nd)).ravel()


@dataclass
class FormSample:
    """Energy identities for one random compactly supported ``u``."""

    l2_sq: float
    form: float  # a_upw(u,u) + J(u,u)
    aupw: float
    jump_sum: float
    pieces: float  # plain + weighted + extended jumps

    @property
    def ratio(self) -> float:
        return self.form / self.l2_sq

    @property
    def jump_error(self) -> float:
        return abs(self.aupw - self.jump_sum) / max(abs(self.jump_sum), 1e-300)

    @property
    def decomposition_error(self) -> float:
        return abs(self.form - self.pieces) / max(abs(self.pieces), 1e-300)


def form_samples(disc: Discretization, n: int, seed: int = 0) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        u = random_compact_support(disc, rng)
        aupw = disc.op.quadratic_form_aupw(u)
        jumps = disc.op.jump_sum(u)
        if disc.stab is not None:
            dec = disc.stab.stabilized_quadratic_form(u)
            form, pieces = dec.total, dec.pieces_sum
        else:
            form, pieces = aupw, jumps
        out.append(FormSample(disc.l2_norm(u) ** 2, form, aupw, jumps, pieces))
    return out


def min_symmetric_eigenvalue(disc: Discretization, dt: float) -> float:
    """Smallest eigenvalue of (K + K^T)/2 restricted to interior cells, K = A + J."""
    idx = interior_dofs(disc)
    K = disc.spatial_matrix(dt)[idx][:, idx].toarray()
    return float(np.linalg.eigvalsh(0.5 * (K + K.T))[0])


def stabilization_mean_test(disc: Discretization, u: np.ndarray) -> tuple:
    """``J(u, 1)`` and the size of the terms it sums, for a machine-precision check."""
    r = disc.stab.apply(u)
    terms = np.abs(disc.stab.apply_J0(u)[:, 0]).sum() + np.abs(disc.stab.apply_J1(u)[:, 0]).sum()
    return float(r[:, 0].sum()), float(terms)


@dataclass
class BumpResult:
    growth: float  # max_n |u^n| / |u^0| - 1
    mass_drift: float  # max_n |mass^n - mass^0| / |mass^0|
    log: list


def bump_run(N: int, p: int, gamma_deg: float = 45.0, x0: float = 0.2001, T: float = BUMP_T,
             cfl: float = 0.4, stabilize: bool = True, omega: float | None = None,
             scheme: Scheme | None = None) -> BumpResult:
    """Transport the compact bump; raises ``ValueError`` if its support would
    reach the Cartesian boundary before ``T`` (the energy premise fails)."""
    ramp = RampGeometry.from_degrees(gamma_deg, x0)
    bump = Bump(RampFrame.of(ramp), center_hat=BUMP_CENTER, radius=BUMP_RADIUS)
    if bump.support_clearance(T) <= 0.0:
        raise ValueError(f"bump support reaches the Cartesian boundary before T={T}")
    res = run(N, p, gamma_deg, x0, T, cfl, stabilize, omega, initial=bump,
              boundary=Constant(0.0), exact=bump, scheme=scheme, norms=False)
    mass = np.array([r[3] for r in res.log])
    drift = float(np.max(np.abs(mass - mass[0])) / abs(mass[0]))
    return BumpResult(energy_growth(res.log), drift, res.log)


def constant_run(N: int, p: int, gamma_deg: float = 45.0, x0: float = 0.2001, T: float = 0.3,
                 value: float = 1.7, cfl: float = 0.4, stabilize: bool = True) -> float:
    """Max-norm deviation from ``value`` after advecting the constant state."""
    c = Constant(value)
    res = run(N, p, gamma_deg, x0, T, cfl, stabilize, initial=c, boundary=c, exact=c,
              monitor=False)
    return res.linf_error


def convergence_study(p: int, Ns, gamma_deg: float = 45.0, x0: float = 0.2001, T: float = 0.3,
                      cfl: float = 0.4, stabilize: bool = True, omega: float | None = None,
                      on_row=None) -> ConvergenceTable:
    table = ConvergenceTable()
    for N in Ns:
        res = run(N, p, gamma_deg, x0, T, cfl, stabilize, omega, monitor=False)
        table.add(N, res.dt, res.l1_error, res.linf_error)
        if on_row is not None:
            on_row(N, res)
    return table


def convergence_verdict(table: ConvergenceTable, p: int) -> dict:
    (_, l1), (_, linf) = table.orders()
    return {
        "l1_slope": l1,
        "linf_slope": linf,
        "l1_pass": bool(l1 >= p + L1_MARGIN),
        "linf_pass": bool(linf >= p + LINF_MARGIN),
    }


@dataclass
class SmallCellDemo:
    off_blew_up: bool
    off_step: int | None
    on_max: float
    on_max0: float

    @property
    def on_pass(self) -> bool:
        return self.on_max <= 1.01 * self.on_max0 + 1e-8


def small_cell_demo(N: int = 20, p: int = 1, gamma_deg: float = 45.0, x0: float = 0.2001,
                    T: float = 0.3, cfl: float = 0.4) -> SmallCellDemo:
    try:
        run(N, p, gamma_deg, x0, T, cfl, stabilize=False, monitor=False, norms=False)
        blew, step = False, None
    except BlowUpError as err:
        blew, step = True, err.step
    res = run(N, p, gamma_deg, x0, T, cfl, stabilize=True, monitor=False)
    return SmallCellDemo(blew, step, res.max_abs, res.max_abs0)
