"""Quadrature rules on segments, boxes and convex cut polygons.

Polygon rules fan-triangulate from the vertex centroid and use a collapsed
(Duffy) Gauss-Jacobi x Gauss-Legendre product rule on every sub-triangle,
so weights stay positive and points stay inside for any degree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

MAX_POINTS = 20


@dataclass(frozen=True)
class QuadRule:
    points: np.ndarray  # (n, 2)
    weights: np.ndarray  # (n,)
    exact_degree: int

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.points)))


def _npoints(degree: int) -> int:
    return max(1, math.ceil((degree + 1) / 2))


@lru_cache(maxsize=None)
def gauss_legendre_1d(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1]; exact up to degree 2n-1."""
    if not 1 <= n <= MAX_POINTS:
        raise ValueError(f"point count must be in [1, {MAX_POINTS}], got {n}")
    x, w = leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=None)
def _unit_triangle(degree: int):
    # reference rule on the square (u, v) in [0,1]^2 of the collapsed map
    # x = (1-u) P0 + u (1-v) P1 + u v P2, Jacobian u * 2|T|
    n = _npoints(degree)
    if n > MAX_POINTS:
        raise ValueError(f"degree {degree} too high")
    xu, wu = roots_jacobi(n, 0.0, 1.0)
    u = 0.5 * (1.0 + xu)
    wu = wu / 4.0
    xv, wv = gauss_legendre_1d(n)
    v = 0.5 * (1.0 + xv)
    wv = 0.5 * wv
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    # barycentric weights of P0, P1, P2
    bary = np.stack([1.0 - U, U * (1.0 - V), U * V], axis=-1).reshape(-1, 3)
    return bary, W.ravel()


def triangle_rule(tri, degree: int) -> QuadRule:
    tri = np.asarray(tri, dtype=float)
    bary, w = _unit_triangle(degree)
    e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
    two_area = abs(e1[0] * e2[1] - e1[1] * e2[0])
    return QuadRule(bary @ tri, w * two_area, degree)


def segment_rule(p, q, degree: int) -> QuadRule:
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    x, w = gauss_legendre_1d(_npoints(degree))
    length = float(np.hypot(*(q - p)))
    s = 0.5 * (1.0 + x)
    pts = p[None, :] * (1.0 - s)[:, None] + q[None, :] * s[:, None]
    return QuadRule(pts, 0.5 * length * w, degree)


def face_rule(face, degree: int) -> QuadRule:
    """Gauss-Legendre rule along a mesh face (anything with ``endpoints``)."""
    p, q = face.endpoints
    return segment_rule(p, q, degree)


def box_rule(lo, hi, degree: int) -> QuadRule:
    x, w = gauss_legendre_1d(_npoints(degree))
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    X, Y = np.meshgrid(mid[0] + half[0] * x, mid[1] + half[1] * x, indexing="ij")
    W = np.outer(w, w) * half[0] * half[1]
    return QuadRule(np.stack([X.ravel(), Y.ravel()], axis=-1), W.ravel(), degree)


def _is_simple_ccw(poly: np.ndarray) -> bool:
    m = len(poly)
    d = np.roll(poly, -1, axis=0) - poly
    cross = d[:, 0] * np.roll(d, -1, axis=0)[:, 1] - d[:, 1] * np.roll(d, -1, axis=0)[:, 0]
    return m >= 3 and bool(np.all(cross > 0.0))


def polygon_rule(polygon, degree: int) -> QuadRule:
    """Rule for a convex CCW polygon via a centroid fan."""
    poly = np.asarray(polygon, dtype=float)
    if not _is_simple_ccw(poly):
        raise ValueError("polygon must be convex, simple and counterclockwise")
    c = poly.mean(axis=0)
    pts, wts = [], []
    for k in range(len(poly)):
        r = triangle_rule([c, poly[k], poly[(k + 1) % len(poly)]], degree)
        pts.append(r.points)
        wts.append(r.weights)
    return QuadRule(np.concatenate(pts), np.concatenate(wts), degree)

