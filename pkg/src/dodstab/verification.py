"""Exact solutions, discrete error norms and convergence orders."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import RampGeometry
from .space import Basis, face_points, volume_rules

SPEED = 2.0


@dataclass(frozen=True)
class RampFrame:
    """Rotation by -gamma after shifting the ramp foot to the origin."""

    gamma: float
    x0: float = 0.2001

    @classmethod
    def of(cls, ramp: RampGeometry) -> "RampFrame":
        return cls(ramp.gamma, ramp.x0)

    def to_hat(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        c, s = math.cos(self.gamma), math.sin(self.gamma)
        dx = pts[..., 0] - self.x0
        return np.stack([c * dx + s * pts[..., 1], -s * dx + c * pts[..., 1]], axis=-1)

    def from_hat(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        c, s = math.cos(self.gamma), math.sin(self.gamma)
        x = c * pts[..., 0] - s * pts[..., 1] + self.x0
        y = s * pts[..., 0] + c * pts[..., 1]
        return np.stack([x, y], axis=-1)

    def velocity(self, speed: float = SPEED) -> np.ndarray:
        return speed * np.array([math.cos(self.gamma), math.sin(self.gamma)])


@dataclass(frozen=True)
class SineWave:
    """u(x, t) = sin(sqrt(2) pi (x_hat - speed t) / (1 - x0))."""

    frame: RampFrame
    speed: float = SPEED

    def __call__(self, pts, t: float = 0.0) -> np.ndarray:
        xh = self.frame.to_hat(pts)[..., 0]
        return np.sin(math.sqrt(2.0) * math.pi * (xh - self.speed * t) / (1.0 - self.frame.x0))


@dataclass(frozen=True)
class Bump:
    """Transported C-infinity bump, compactly supported in a disk."""

    frame: RampFrame
    center_hat: tuple = (0.3, 0.12)
    radius: float = 0.15
    speed: float = SPEED

    def __call__(self, pts, t: float = 0.0) -> np.ndarray:
        ph = self.frame.to_hat(pts)
        r2 = ((ph[..., 0] - self.center_hat[0] - self.speed * t) ** 2
              + (ph[..., 1] - self.center_hat[1]) ** 2) / self.radius**2
        out = np.zeros_like(r2)
        inside = r2 < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
        return out

    def support_clearance(self, T: float) -> float:
        """Distance from the support to the Cartesian boundary over [0, T]."""
        c0 = self.frame.from_hat(np.array(self.center_hat))
        c1 = self.frame.from_hat(np.array(self.center_hat) + np.array([self.speed * T, 0.0]))
        lo = np.minimum(c0, c1) - self.radius
        hi = np.maximum(c0, c1) + self.radius
        return float(min(lo.min(), (1.0 - hi).min()))


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __call__(self, pts, t: float = 0.0) -> np.ndarray:
        return np.full(np.asarray(pts).shape[:-1], float(self.value))


class ErrorNorms:
    """L1 by quadrature; Linf over volume points, face points and vertices."""

    def __init__(self, basis: Basis, degree: int | None = None):
        mesh = basis.mesh
        self.basis = basis
        self.degree = 2 * basis.p + 4 if degree is None else degree
        self.vol = []
        for cells, loc, pts, wts in volume_rules(mesh, self.degree).groups:
            self.vol.append((cells, pts, wts, basis.eval(cells[:, None], loc, local=True)))
        fp = face_points(mesh, self.degree)
        self.face_samples = []
        for side in (0, 1):
            faces = np.flatnonzero(mesh.face_cells[:, side] >= 0)
            cells = mesh.face_cells[faces, side]
            self.face_samples.append((cells, fp.points[faces], fp.eval(basis, cells, faces)))
        vcells = np.concatenate([np.full(len(c.local), c.id) for c in mesh.cells])
        vloc = np.concatenate([c.local for c in mesh.cells])
        vpts = np.concatenate([c.polygon for c in mesh.cells])
        self.vertex_samples = (vcells, vpts, basis.eval(vcells, vloc, local=True))

    def l1(self, coeffs: np.ndarray, exact, t: float) -> float:
        total = 0.0
        for cells, pts, wts, phi in self.vol:
            uh = np.einsum("cqi,ci->cq", phi, coeffs[cells])
            total += float(np.sum(wts * np.abs(uh - exact(pts, t))))
        return total

    def linf(self, coeffs: np.ndarray, exact, t: float) -> float:
        return float(np.max(np.abs(self.sample(coeffs) - self._exact_samples(exact, t))))

    def max_abs(self, coeffs: np.ndarray) -> float:
        return float(np.max(np.abs(self.sample(coeffs))))

    def sample(self, coeffs: np.ndarray) -> np.ndarray:
        vals = [np.einsum("cqi,ci->cq", phi, coeffs[cells]).ravel() for cells, _, _, phi in self.vol]
        vals += [np.einsum("fqi,fi->fq", phi, coeffs[cells]).ravel() for cells, _, phi in self.face_samples]
        vc, _, vphi = self.vertex_samples
        vals.append(np.einsum("vi,vi->v", vphi, coeffs[vc]))
        return np.concatenate(vals)

    def _exact_samples(self, exact, t):
        vals = [exact(pts, t).ravel() for _, pts, _, _ in self.vol]
        vals += [exact(pts, t).ravel() for _, pts, _ in self.face_samples]
        vals.append(exact(self.vertex_samples[1], t))
        return np.concatenate(vals)


def eoc(errors, hs) -> tuple:
    """Pairwise orders log(e_{k-1}/e_k)/log(h_{k-1}/h_k) and the least-squares slope."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(hs, dtype=float)
    if e.shape != h.shape or len(e) < 1:
        raise ValueError("errors and mesh sizes must be non-empty and equally long")
    if np.any(e <= 0.0) or np.any(h <= 0.0):
        raise ValueError("errors and mesh sizes must be positive")
    pair = list(np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:]))
    slope = float(np.polyfit(np.log(h), np.log(e), 1)[0]) if len(e) >= 2 else float("nan")
    return pair, slope


CONVERGENCE_HEADER = ["N", "h", "dt", "l1_error", "l1_eoc", "linf_error", "linf_eoc"]
ENERGY_HEADER = ["step", "t", "l2_norm", "mass"]


@dataclass
class ConvergenceTable:
    rows: list = field(default_factory=list)  # (N, h, dt, l1, linf)

    def add(self, N: int, dt: float, l1: float, linf: float):
        self.rows.append((N, 1.0 / N, dt, l1, linf))

    def orders(self):
        h = [r[1] for r in self.rows]
        return eoc([r[3] for r in self.rows], h), eoc([r[4] for r in self.rows], h)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CONVERGENCE_HEADER)
        (l1p, _), (lip, _) = self.orders()
        for k, (N, h, dt, l1, li) in enumerate(self.rows):
            a = "" if k == 0 else f"{l1p[k - 1]:.6f}"
            b = "" if k == 0 else f"{lip[k - 1]:.6f}"
            w.writerow([N, repr(h), repr(dt), f"{l1:.12e}", a, f"{li:.12e}", b])
        return buf.getvalue()


def energy_csv(log) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ENERGY_HEADER)
    for n, t, l2, m in log:
        w.writerow([n, repr(t), f"{l2:.17e}", f"{m:.17e}"])
    return buf.getvalue()


def energy_growth(log) -> float:
    """max_n ||u(t_n)|| / ||u(0)|| - 1 (0 for an all-zero run)."""
    norms = np.array([r[2] for r in log])
    if norms[0] == 0.0:
        return 0.0 if np.all(norms == 0.0) else float("inf")
    return float(norms.max() / norms[0] - 1.0)
