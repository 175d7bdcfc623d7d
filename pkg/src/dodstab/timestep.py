"""Explicit Runge-Kutta time stepping and the CFL time-step rule."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

BLOWUP_LIMIT = 1e10


class Scheme(enum.Enum):
    SSP1 = "ssp1"
    SSP2 = "ssp2"
    SSP3 = "ssp3"
    SSP4 = "ssp4"  # ten-stage, fourth order (Ketcheson's SSPRK(10,4))
    RK4 = "rk4"

    @property
    def order(self) -> int:
        return {"ssp1": 1, "ssp2": 2, "ssp3": 3, "ssp4": 4, "rk4": 4}[self.value]


def scheme_for_degree(p: int) -> Scheme:
    """Time order p+1: SSP2, SSP3, then the ten-stage SSP4 for p >= 3."""
    return {0: Scheme.SSP1, 1: Scheme.SSP2, 2: Scheme.SSP3}.get(p, Scheme.SSP4)


# Shu-Osher form: y_{k+1} = sum_l alpha[k][l] y_l + dt * beta[k][l] L(y_l)
SHU_OSHER = {
    Scheme.SSP1: ([[1.0]], [[1.0]], [0.0]),
    Scheme.SSP2: ([[1.0], [0.5, 0.5]], [[1.0], [0.0, 0.5]], [0.0, 1.0]),
    Scheme.SSP3: (
        [[1.0], [0.75, 0.25], [1.0 / 3.0, 0.0, 2.0 / 3.0]],
        [[1.0], [0.0, 0.25], [0.0, 0.0, 2.0 / 3.0]],
        [0.0, 1.0, 0.5],
    ),
}


class BlowUpError(RuntimeError):
    def __init__(self, step: int, t: float, value: float):
        super().__init__(f"solution blew up at step {step} (t={t:.6g}, max |u| = {value:.3e})")
        self.step = step
        self.t = t
        self.value = value


def compute_dt(p: int, h: float, beta_norm: float, cfl: float = 0.4) -> float:
    """Largest step allowed by dt <= cfl / (2p+1) * h / |beta|."""
    if h <= 0.0 or beta_norm <= 0.0:
        raise ValueError("h and |beta| must be positive")
    return cfl / (2 * p + 1) * h / beta_norm


def step(rhs, u: np.ndarray, t: float, dt: float, scheme: Scheme) -> np.ndarray:
    """Advance ``u' = rhs(t, u)`` by one step."""
    if scheme is Scheme.RK4:
        k1 = rhs(t, u)
        k2 = rhs(t + 0.5 * dt, u + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, u + 0.5 * dt * k2)
        k4 = rhs(t + dt, u + dt * k3)
        return u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if scheme is Scheme.SSP4:
        return _ssp104(rhs, u, t, dt)
    alpha, beta, c = SHU_OSHER[scheme]
    stages, values = [u], []
    for k in range(len(alpha)):
        values.append(rhs(t + c[k] * dt, stages[k]))
        y = np.zeros_like(u)
        for l in range(k + 1):
            if alpha[k][l]:
                y += alpha[k][l] * stages[l]
            if beta[k][l]:
                y += (beta[k][l] * dt) * values[l]
        stages.append(y)
    return stages[-1]


def _ssp104(rhs, u, t, dt):
    # low-storage form; every stage is a forward Euler step of size dt/6
    q1 = u.copy()
    q2 = u.copy()
    tq = t
    for _ in range(5):
        q1 = q1 + (dt / 6.0) * rhs(tq, q1)
        tq += dt / 6.0
    q2 = q2 / 25.0 + 9.0 / 25.0 * q1
    q1 = 15.0 * q2 - 5.0 * q1
    tq = t + dt / 3.0
    for _ in range(4):
        q1 = q1 + (dt / 6.0) * rhs(tq, q1)
        tq += dt / 6.0
    return q2 + 0.6 * q1 + (dt / 10.0) * rhs(t + dt, q1)


@dataclass
class StepInfo:
    step: int
    t: float
    u: np.ndarray


def step_sizes(T: float, dt: float) -> list:
    """Uniform steps of ``dt``, the last one clipped so they sum to ``T``."""
    if dt <= 0.0:
        raise ValueError("time step must be positive")
    if T < 0.0:
        raise ValueError("final time must be non-negative")
    if T == 0.0:
        return []
    n_full = int(math.floor(T / dt * (1.0 + 1e-12)))
    if n_full == 0:
        return [T]
    rest = T - n_full * dt
    # a roundoff-sized remainder is dropped; integrate() reports t = T at the end
    return [dt] * n_full + ([rest] if rest > 1e-12 * dt else [])


def n_steps(T: float, dt: float) -> int:
    return len(step_sizes(T, dt))


def integrate(make_rhs, u0: np.ndarray, T: float, dt: float, scheme: Scheme,
              callback=None, blowup_limit: float = BLOWUP_LIMIT) -> np.ndarray:
    """Uniform steps of ``dt``, last one clipped so the steps sum to ``T``.

    ``make_rhs(dt)`` returns the right-hand side for a given step size so that
    step-size dependent operators can be rebuilt for the clipped step.
    ``callback(StepInfo)`` runs after the initial state and after every step.
    """
    steps = step_sizes(T, dt)
    u = np.array(u0, dtype=float, copy=True)
    t = 0.0
    if callback is not None:
        callback(StepInfo(0, t, u))
    rhs, current = None, None
    for n, h in enumerate(steps, start=1):
        if h != current:
            rhs, current = make_rhs(h), h
        u = step(rhs, u, t, h, scheme)
        t = T if n == len(steps) else t + h
        m = np.max(np.abs(u)) if u.size else 0.0
        if not np.isfinite(m) or m > blowup_limit:
            raise BlowUpError(n, t, float(m))
        if callback is not None:
            callback(StepInfo(n, t, u))
    return u
