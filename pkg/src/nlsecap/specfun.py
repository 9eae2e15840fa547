"""Complex special functions used by the coupling-coefficient integrals.

All functions accept numpy arrays and broadcast.  Nothing here allocates
per-element Python objects, so they are safe to call on large grids.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate

__all__ = [
    "sinc",
    "calG",
    "calG1",
    "calG2",
    "calG3",
    "expdd",
    "fresnelE",
    "fresnelEtilde",
    "fresnelE_quad",
    "fresnelE_gl",
    "SALZER_TERMS",
    "SALZER_BMAX",
]

SERIES_X = 0.5          # Taylor branch for calG / calG1
SERIES_DD = 0.25        # Taylor branch for calG2 / calG3 (scaled arguments)
SALZER_TERMS = 12
SALZER_BMAX = 15.0
_AMAX = 1.0e3


def sinc(x):
    """sin(x)/x with the removable point filled in."""
    x = np.asarray(x, dtype=float)
    return np.sinc(x / np.pi)


def _series(x, shift, nterms=24):
    # -i * sum_k (-ix)^k / (k! (k+shift))
    z = -1j * np.asarray(x, dtype=complex)
    term = np.ones_like(z)
    acc = term / shift
    for k in range(1, nterms):
        term = term * z / k
        acc = acc + term / (k + shift)
    return -1j * acc


def calG(x):
    """-i * int_0^1 exp(-i z x) dz."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < SERIES_X
    out[small] = _series(x[small], 1)
    xb = x[~small]
    out[~small] = (np.cos(xb) - 1.0) / xb - 1j * (np.sin(xb) - xb) / xb - 1j
    return out[()] if out.ndim == 0 else out


def calG1(x):
    """-i * int_0^1 z exp(-i z x) dz."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape, dtype=complex)
    small = np.abs(x) < SERIES_X
    out[small] = _series(x[small], 2)
    xb = x[~small]
    c, s = np.cos(xb), np.sin(xb)
    out[~small] = (c - 1.0) / xb + (xb - s) / xb**2 + 1j * (1.0 - c - xb * s) / xb**2
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------
# divided differences of exp, used for the singular neighbourhoods of G2/G3
# --------------------------------------------------------------------------

def _dd_series(nodes, nterms=32):
    """exp[x0..xk] by Taylor expansion about the node centroid."""
    k = len(nodes) - 1
    c = sum(nodes) / len(nodes)
    d = [x - c for x in nodes]
    # complete homogeneous polynomials h_j(d) via the product recurrence
    h = [np.ones_like(c)] + [np.zeros_like(c) for _ in range(nterms - 1)]
    for di in d:
        for j in range(1, nterms):
            h[j] = h[j] + di * h[j - 1]
    acc = np.zeros_like(c)
    for j in range(nterms):
        acc = acc + h[j] / math.factorial(j + k)
    return np.exp(c) * acc


def expdd(*nodes, threshold=1.0):
    """Divided difference exp[x0, ..., xk] for complex node arrays.

    Nodes may coincide.  When every pairwise gap is below ``threshold``
    the Taylor form is used, otherwise the standard recursion divides by
    the widest gap so cancellation stays bounded.
    """
    nodes = np.broadcast_arrays(*[np.asarray(x, dtype=complex) for x in nodes])
    shape = nodes[0].shape
    flat = [x.ravel() for x in nodes]
    out = _expdd_flat(flat, threshold)
    return out.reshape(shape)[()] if shape == () else out.reshape(shape)


def _expdd_flat(nodes, threshold):
    n = len(nodes)
    if n == 1:
        return np.exp(nodes[0])
    size = nodes[0].size
    out = np.empty(size, dtype=complex)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    gaps = np.stack([np.abs(nodes[i] - nodes[j]) for i, j in pairs])
    best = np.argmax(gaps, axis=0)
    widest = gaps[best, np.arange(size)]
    small = widest < threshold
    if small.any():
        out[small] = _dd_series([x[small] for x in nodes])
    for p, (i, j) in enumerate(pairs):
        sel = (~small) & (best == p)
        if not sel.any():
            continue
        sub = [x[sel] for x in nodes]
        without_i = [x for q, x in enumerate(sub) if q != i]
        without_j = [x for q, x in enumerate(sub) if q != j]
        out[sel] = (_expdd_flat(without_i, threshold) - _expdd_flat(without_j, threshold)) / (
            sub[j] - sub[i]
        )
    return out


def calG2(a, b, betaTilde):
    """int_0^1 dz1 int_0^z1 dz2 exp(4 i bt (z1 a + z2 b))."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    u = 4.0 * betaTilde * a
    v = 4.0 * betaTilde * b
    w = u + v
    out = np.empty(a.shape, dtype=complex)
    sing = (np.abs(u) < SERIES_DD) | (np.abs(v) < SERIES_DD) | (np.abs(w) < SERIES_DD)
    g = ~sing
    if g.any():
        ug, vg, wg = u[g], v[g], w[g]
        # closed form, written in the scaled variables
        out[g] = -((np.exp(1j * wg) - 1.0) / wg - (np.exp(1j * ug) - 1.0) / ug) / vg
    if sing.any():
        zero = np.zeros(int(sing.sum()), dtype=complex)
        out[sing] = expdd(zero, 1j * u[sing], 1j * w[sing])
    return out[()] if out.ndim == 0 else out


def calG3(a, b, betaTilde):
    """int_0^1 int_0^1 min(z1, z2) exp(4 i bt (z1 a + z2 b))."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    u = 4.0 * betaTilde * a
    v = 4.0 * betaTilde * b
    w = u + v
    out = np.empty(a.shape, dtype=complex)
    sing = (np.abs(u) < SERIES_DD) | (np.abs(v) < SERIES_DD) | (np.abs(w) < SERIES_DD)
    g = ~sing
    if g.any():
        ug, vg, wg = u[g], v[g], w[g]
        num = (
            np.exp(1j * wg) * (1j * ug * vg * wg - ug**2 - ug * vg - vg**2)
            + wg * (ug * np.exp(1j * ug) + vg * np.exp(1j * vg))
            - ug * vg
        )
        out[g] = 1j * num / (ug**2 * vg**2 * wg)
    if sing.any():
        us, ws, vs = 1j * u[sing], 1j * w[sing], 1j * v[sing]
        zero = np.zeros_like(us)
        out[sing] = expdd(zero, us, ws, ws) + expdd(zero, vs, ws, ws)
    return out[()] if out.ndim == 0 else out


# --------------------------------------------------------------------------
# window integral E(a, b) = int_{-1/2}^{1/2} exp(i b y^2 + i a y) dy
# --------------------------------------------------------------------------

def _shc(z):
    """sinh(z)/z, entire."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(z) < 1e-3
    zs = z[small]
    out[small] = 1.0 + zs * zs / 6.0 + zs**4 / 120.0
    zb = z[~small]
    out[~small] = np.sinh(zb) / zb
    return out


_OMEGA = np.exp(0.25j * np.pi)


def _salzer(a, b):
    """Salzer-series evaluation for b > 0; a complex, arrays broadcast."""
    sb = np.sqrt(b)
    ia2 = 0.5j * a
    acc = 0.5 * _shc(ia2)  # sinc(a/2)/2
    for n in range(1, SALZER_TERMS + 1):
        wn = (0.5 * n * _OMEGA) * sb
        acc = acc + (0.5 * math.exp(-0.25 * n * n)) * (_shc(ia2 + wn) + _shc(ia2 - wn))
    return acc / math.sqrt(math.pi)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(n):
    if n not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = (0.5 * x, 0.5 * w)
    return _GL_CACHE[n]


def fresnelE_gl(a, b, order=96):
    """E(a, b) by fixed Gauss-Legendre on the window; vectorised fallback."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=complex), np.asarray(b, dtype=float))
    y, w = _gl(order)
    ph = np.exp(1j * (b[..., None] * y**2 + a[..., None] * y))
    return ph @ w


def fresnelE_quad(a, b, epsabs=1e-12):
    """Scalar adaptive Gauss-Kronrod reference for E(a, b)."""
    a = complex(a)
    b = float(b)

    def re(y):
        return (np.exp(1j * (b * y * y + a * y))).real

    def im(y):
        return (np.exp(1j * (b * y * y + a * y))).imag

    lim = 200
    r = integrate.quad(re, -0.5, 0.5, epsabs=epsabs, epsrel=0.0, limit=lim)[0]
    i = integrate.quad(im, -0.5, 0.5, epsabs=epsabs, epsrel=0.0, limit=lim)[0]
    return complex(r, i)


def fresnelE(a, b, method="auto", fallback=True):
    """E(a, b) = int_{-1/2}^{1/2} exp(i b y^2 + i a y) dy.

    ``a`` may be complex, ``b`` is real.  ``method`` is ``"salzer"``,
    ``"quad"`` (Gauss-Legendre, vectorised) or ``"auto"``; auto uses the
    Salzer series inside |b| <= 15 and the Gauss-Legendre rule outside.
    """
    a, b = np.broadcast_arrays(np.asarray(a, dtype=complex), np.asarray(b, dtype=float))
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("fresnelE: non-finite argument")
    if np.any(np.abs(a.real) > _AMAX):
        raise ValueError("fresnelE: |Re a| exceeds 1e3")
    out = np.empty(a.shape, dtype=complex)
    zero = b == 0.0
    out[zero] = np.sinc(a[zero] / (2.0 * np.pi))
    inside = np.abs(b) <= SALZER_BMAX
    if method == "salzer" and not fallback and np.any(~inside & ~zero):
        raise ValueError("fresnelE: Salzer path requested outside |b| <= 15")
    use_s = ~zero & inside if method in ("auto", "salzer") else np.zeros(a.shape, bool)
    use_q = ~zero & ~use_s
    if use_s.any():
        aa, bb = a[use_s], b[use_s]
        pos = bb > 0
        res = np.empty(aa.shape, dtype=complex)
        res[pos] = _salzer(aa[pos], bb[pos])
        # E(a, -b) = conj(E(conj a, b))
        res[~pos] = np.conj(_salzer(np.conj(aa[~pos]), -bb[~pos]))
        out[use_s] = res
    if use_q.any():
        out[use_q] = fresnelE_gl(a[use_q], b[use_q], order=_gl_order(a[use_q], b[use_q]))
    return out[()] if out.ndim == 0 else out


def _gl_order(a, b):
    span = float(np.max(np.abs(a.real)) / 2 + np.max(np.abs(b)) / 4 + np.max(np.abs(a.imag)) / 2)
    return int(min(512, max(64, 2 * span + 40)))


def fresnelEtilde(a, b, method="auto", fallback=True):
    """int_{-1/2}^{1/2} exp(-i b y^2 - i a y) dy = conj(E(conj a, b))."""
    return np.conj(fresnelE(np.conj(np.asarray(a, dtype=complex)), b, method, fallback))
