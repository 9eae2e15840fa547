"""Optimal input density at O(gamma^2), its one- and two-symbol marginals, and correlators.

All densities are with respect to d^2c = d(Re c) d(Im c); unit power P = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .information import ChannelParams, diagonalSum

__all__ = [
    "SymbolSequence",
    "Density",
    "p0LogDensity",
    "poptDensity",
    "marginalD1",
    "marginalDensity",
    "pairD",
    "pairDensity",
    "condDensity",
    "pairCorrelator",
    "correlatorMatrix",
]


@dataclass
class SymbolSequence:
    M: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (2 * self.M + 1,):
            raise ValueError("sequence length must be 2M+1")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("non-finite symbol")

    def __getitem__(self, k):
        return self.coeffs[k + self.M]


class Density(NamedTuple):
    value: float
    bracket: float   # the O(gamma^2) correction inside the braces
    valid: bool      # False where 1 + bracket < 0


def _vals(JI):
    return getattr(JI, "values", JI)


def _coeffs(seq):
    return seq.coeffs if isinstance(seq, SymbolSequence) else np.asarray(seq, dtype=complex)


def p0LogDensity(seq) -> float:
    c = _coeffs(seq)
    return float(-len(c) * math.log(math.pi) - np.sum(np.abs(c) ** 2))


def _contract(T, c):
    cb = np.conj(c)
    return np.einsum("abcd,a,b,c,d->", T, c, c, cb, cb, optimize=True)


def poptDensity(seq, JI, params: ChannelParams) -> Density:
    c = _coeffs(seq)
    T = _vals(JI)
    n = len(c)
    g2 = params.gammaTilde**2
    jsum = diagonalSum(T).real
    corr = _contract(T, c).real + jsum * (1.0 - 2.0 / n * float(np.sum(np.abs(c) ** 2)))
    br = g2 * corr
    val = math.exp(p0LogDensity(c)) * (1.0 + br)
    return Density(val, br, 1.0 + br >= 0.0)


def _row_sum(T, q, M):
    """sum_r J^{r,q;r,q} + J^{r,q;q,r} + J^{q,r;r,q} + J^{q,r;q,r}."""
    i = q + M
    return (T[:, i, :, i].trace() + T[:, i, i, :].trace() + T[i, :, :, i].trace() + T[i, :, i, :].trace()).real


def marginalD1(q: int, x, JI, M: int):
    """Radial polynomial correction for the one-symbol marginal."""
    T = _vals(JI)
    if abs(q) > M:
        raise ValueError("q out of range")
    x = np.asarray(x, dtype=float)
    n = 2 * M + 1
    jsig = diagonalSum(T).real / n
    i = q + M
    quad = 2.0 * jsig - _row_sum(T, q, M)
    return (1.0 - x**2) * quad + T[i, i, i, i].real * (x**4 - 4.0 * x**2 + 2.0)


def marginalDensity(q, c, JI, params: ChannelParams):
    """P_opt[C_q] at complex c (array ok); returns values only."""
    c = np.asarray(c, dtype=complex)
    x = np.abs(c)
    d1 = marginalD1(q, x, JI, params.M)
    return np.exp(-(x**2)) / math.pi * (1.0 + params.gammaTilde**2 * d1)


def pairD(i, j, x, y, JI, M):
    """Two-symbol coupling polynomial D^{i,j}(x, y); i != j."""
    if i == j:
        raise ValueError("pairD needs distinct indices")
    T = _vals(JI)
    a, b = i + M, j + M
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    xb, yb = np.conj(x), np.conj(y)
    ax, ay = np.abs(x) ** 2, np.abs(y) ** 2
    J = lambda p, q_, r, s: T[p, q_, r, s]
    out = J(a, a, b, b) * x**2 * yb**2 + J(b, b, a, a) * xb**2 * y**2
    out = out + (ax - 1) * (ay - 1) * (J(a, b, a, b) + J(a, b, b, a) + J(b, a, a, b) + J(b, a, b, a))
    out = out + x * yb * ((J(a, a, a, b) + J(a, a, b, a)) * (ax - 2) + (J(a, b, b, b) + J(b, a, b, b)) * (ay - 2))
    out = out + y * xb * ((J(a, b, a, a) + J(b, a, a, a)) * (ax - 2) + (J(b, b, a, b) + J(b, b, b, a)) * (ay - 2))
    s_xy = (T[a, :, b, :].trace() + T[a, :, :, b].trace() + T[:, a, b, :].trace() + T[:, a, :, b].trace())
    s_yx = (T[b, :, a, :].trace() + T[b, :, :, a].trace() + T[:, b, a, :].trace() + T[:, b, :, a].trace())
    out = out + x * yb * s_xy + xb * y * s_yx
    return out.real


def pairDensity(i, j, ci, cj, JI, params: ChannelParams):
    M = params.M
    g2 = params.gammaTilde**2
    pi = marginalDensity(i, ci, JI, params)
    pj = marginalDensity(j, cj, JI, params)
    return pi * pj * (1.0 + g2 * pairD(i, j, ci, cj, JI, M))


def condDensity(i, j, ci, cj, JI, params: ChannelParams):
    """P_opt[C_i | C_j = cj]."""
    return marginalDensity(i, ci, JI, params) * (1.0 + params.gammaTilde**2 * pairD(i, j, ci, cj, JI, params.M))


def pairCorrelator(k, m, JI, params: ChannelParams) -> complex:
    """<C_k conj(C_m)> under P_opt."""
    T = _vals(JI)
    M = params.M
    n = 2 * M + 1
    g2 = params.gammaTilde**2
    a, b = k + M, m + M
    diag = (1.0 - g2 * 2.0 / n * diagonalSum(T).real) if k == m else 0.0
    off = T[:, b, :, a].trace() + T[:, b, a, :].trace() + T[b, :, :, a].trace() + T[b, :, a, :].trace()
    return complex(diag + g2 * off)


def correlatorMatrix(JI, params: ChannelParams) -> np.ndarray:
    idx = range(-params.M, params.M + 1)
    return np.array([[pairCorrelator(k, m, JI, params) for m in idx] for k in idx])
