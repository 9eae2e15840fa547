"""Quadrature over convex polytopes given as half-space systems.

The polytope {y : A y <= b} is triangulated (vertex enumeration plus a
Delaunay split of the vertex set) and each simplex gets a collapsed
Gauss-Jacobi product rule.  Integrands that are smooth on the polytope
converge spectrally in the per-axis order.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import optimize, special
from scipy.spatial import Delaunay, HalfspaceIntersection

__all__ = ["polytope_rule", "polytope_simplices", "simplex_rule"]

_JACOBI: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def _jacobi01(n, alpha):
    key = (n, alpha)
    if key not in _JACOBI:
        x, w = special.roots_jacobi(n, alpha, 0.0)
        _JACOBI[key] = ((1.0 + x) / 2.0, w / 2.0 ** (alpha + 1))
    return _JACOBI[key]


def _reference_simplex(d, n):
    """Nodes (barycentric, shape (P, d+1)) and weights on the unit simplex scaled by d!."""
    grids = [_jacobi01(n, d - 1 - i) for i in range(d)]
    mesh = np.meshgrid(*[g[0] for g in grids], indexing="ij")
    wmesh = np.meshgrid(*[g[1] for g in grids], indexing="ij")
    u = [m.ravel() for m in mesh]
    w = np.ones_like(u[0])
    for wm in wmesh:
        w = w * wm.ravel()
    lam = np.empty((u[0].size, d + 1))
    rest = np.ones_like(u[0])
    for i in range(d):
        lam[:, i + 1] = rest * u[i]
        rest = rest * (1.0 - u[i])
    lam[:, 0] = rest
    return lam, w


_REF: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def simplex_rule(vertices, n):
    """Points and weights for a d-simplex given by (d+1, d) vertices."""
    v = np.asarray(vertices, dtype=float)
    d = v.shape[1]
    key = (d, n)
    if key not in _REF:
        _REF[key] = _reference_simplex(d, n)
    lam, w = _REF[key]
    jac = abs(np.linalg.det(v[1:] - v[0]))
    return lam @ v, w * jac


def _interior_point(A, b):
    norms = np.linalg.norm(A, axis=1)
    d = A.shape[1]
    c = np.zeros(d + 1)
    c[-1] = -1.0
    res = optimize.linprog(
        c,
        A_ub=np.hstack([A, norms[:, None]]),
        b_ub=b,
        bounds=[(None, None)] * d + [(0, None)],
        method="highs",
    )
    if res.status != 0:
        return None, 0.0
    return res.x[:-1], res.x[-1]


def polytope_simplices(A, b, min_radius=1e-9):
    """Non-degenerate simplices (each (d+1, d) vertices) tiling {y : A y <= b}."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    trivial = np.linalg.norm(A, axis=1) < 1e-14
    if np.any(b[trivial] < 0):
        return []
    A, b = A[~trivial], b[~trivial]
    x0, r = _interior_point(A, b)
    if x0 is None or r < min_radius:
        return []
    hs = HalfspaceIntersection(np.hstack([A, -b[:, None]]), x0)
    # merge numerically duplicated vertices
    verts = np.unique(np.round(hs.intersections, 12), axis=0)
    tri = Delaunay(verts, qhull_options="Qbb Qc Qz Q12")
    out = []
    for simp in tri.simplices:
        vv = verts[simp]
        if abs(np.linalg.det(vv[1:] - vv[0])) >= 1e-14:
            out.append(vv)
    return out


def polytope_rule(A, b, n, min_radius=1e-9):
    """Quadrature nodes/weights on {y : A y <= b}.  Empty or flat sets give no nodes."""
    d = np.asarray(A).shape[1]
    simplices = polytope_simplices(A, b, min_radius)
    if not simplices:
        return np.zeros((0, d)), np.zeros(0)
    rules = [simplex_rule(vv, n) for vv in simplices]
    return np.vstack([p for p, _ in rules]), np.concatenate([w for _, w in rules])


def polytope_volume(A, b):
    pts, w = polytope_rule(A, b, 1)
    return float(w.sum()) if w.size else 0.0


def factorial(d):
    return math.factorial(d)
