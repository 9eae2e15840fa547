"""Independent reference computations used only by the tests."""
from __future__ import annotations

import itertools
import math

import numpy as np


def random_jlike(n, rng):
    """Random tensor with the pair-swap and Hermitian-transpose symmetries."""
    T = rng.standard_normal((n,) * 4) + 1j * rng.standard_normal((n,) * 4)
    T = 0.25 * (T + T.transpose(1, 0, 2, 3) + T.transpose(0, 1, 3, 2) + T.transpose(1, 0, 3, 2))
    return 0.5 * (T + np.conj(T.transpose(2, 3, 0, 1)))


def gaussian_moment(a, b):
    """E[C^a conj(C)^b] for C ~ CN(0, 1)."""
    return float(math.factorial(a)) if a == b else 0.0


def conditional_quartic(T, fixed):
    """E[sum T C C Cbar Cbar | C_k = fixed[k]] with the other symbols i.i.d. CN(0,1).

    Brute force over every index tuple, using per-index moment counting.
    """
    n = T.shape[0]
    total = 0j
    for s in itertools.product(range(n), repeat=4):
        t = T[s]
        if t == 0:
            continue
        val = 1.0 + 0j
        for k in set(s):
            a = (s[0] == k) + (s[1] == k)
            b = (s[2] == k) + (s[3] == k)
            if k in fixed:
                val *= fixed[k] ** a * np.conj(fixed[k]) ** b
            else:
                val *= gaussian_moment(a, b)
        total += t * val
    return total


def popt_bracket_marginal(T, fixed, n):
    """Marginal O(gamma^2) bracket of the joint density given fixed symbols."""
    r = np.arange(n)
    R, S = np.meshgrid(r, r, indexing="ij")
    jsum = (T[R, S, R, S].sum() + T[R, S, S, R].sum()).real
    power = sum(abs(v) ** 2 for v in fixed.values()) + (n - len(fixed))
    return conditional_quartic(T, fixed).real + jsum * (1.0 - 2.0 / n * power)


def product_moment(plain, conj):
    """E[prod C_plain * prod conj(C_conj)] for i.i.d. CN(0,1) symbols."""
    val = 1.0
    for k in set(plain) | set(conj):
        val *= gaussian_moment(plain.count(k), conj.count(k))
        if val == 0.0:
            return 0.0
    return val


def correlator_wick(T, k, m, g2):
    """<C_k conj(C_m)> under the O(gamma^2) optimal density, by moment counting."""
    n = T.shape[0]
    r = np.arange(n)
    R, S = np.meshgrid(r, r, indexing="ij")
    jsum = (T[R, S, R, S].sum() + T[R, S, S, R].sum()).real
    quart = 0j
    for s in itertools.product(range(n), repeat=4):
        quart += T[s] * product_moment([k, s[0], s[1]], [m, s[2], s[3]])
    base = 1.0 if k == m else 0.0
    power = (n + 1.0) if k == m else 0.0
    return base + g2 * (quart + jsum * (base - 2.0 / n * power))


# ---------------------------------------------------------------------------
# quadrature oracles that share no code with the package
# ---------------------------------------------------------------------------

def quad_complex(f, a, b, **kw):
    from scipy import integrate

    re = integrate.quad(lambda x: f(x).real, a, b, **kw)[0]
    im = integrate.quad(lambda x: f(x).imag, a, b, **kw)[0]
    return complex(re, im)


def dblquad_complex(f, a, b, lo, hi, **kw):
    """int_a^b dx int_lo(x)^hi(x) dy f(x, y)."""
    from scipy import integrate

    re = integrate.dblquad(lambda y, x: f(x, y).real, a, b, lo, hi, **kw)[0]
    im = integrate.dblquad(lambda y, x: f(x, y).imag, a, b, lo, hi, **kw)[0]
    return complex(re, im)


def g_oracle(x, power):
    """-i int_0^1 z^power exp(-i z x) dz."""
    return -1j * quad_complex(lambda z: z**power * np.exp(-1j * z * x), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)


def a1_like_cube(n, m, p, k, bt, power, order=40):
    """(i/8) int over [-1,1]^3 with |x1 + x2 - x| < 1 of the phase times G_power(bt (x1-x)(x2-x)).

    With d = x - x1 both x and x2 range over [max(-1, d-1), min(1, d+1)];
    splitting d at 0 makes every limit linear, so a tensor Gauss-Legendre
    rule converges spectrally.
    """
    xg, wg = np.polynomial.legendre.leggauss(order)
    zg, zw = np.polynomial.legendre.leggauss(24)
    zg, zw = 0.5 * (zg + 1), 0.5 * zw
    total = 0j
    for d0, d1 in ((-2.0, 0.0), (0.0, 2.0)):
        d = 0.5 * (d0 + d1) + 0.5 * (d1 - d0) * xg
        wd = 0.5 * (d1 - d0) * wg
        lo, hi = np.maximum(-1.0, d - 1.0), np.minimum(1.0, d + 1.0)
        half = 0.5 * (hi - lo)
        y = 0.5 * (hi + lo)[:, None] + half[:, None] * xg          # nodes for x and for x2
        wy = half[:, None] * wg
        D = d[:, None, None]
        X = y[:, :, None]
        X2 = y[:, None, :]
        X1 = X - D
        W = wd[:, None, None] * wy[:, :, None] * wy[:, None, :]
        u = bt * (X1 - X) * (X2 - X)
        G = -1j * np.tensordot(np.exp(-1j * u[..., None] * zg) * zg**power, zw, axes=([-1], [0]))
        ph = np.exp(1j * np.pi * (X1 * (n - p) + X2 * (m - p) - X * (k - p)))
        total += np.sum(W * ph * G)
    return complex(0.125j * total)


def sinc_product_integral(shifts, T=2000.0):
    """int prod_j sinc(t - shift_j) dt with a long trapezoid (band limit len(shifts)*pi)."""
    h = 1.0 / len(shifts) * 0.9
    t = np.arange(-T, T + h / 2, h)
    prod = np.ones_like(t)
    for s in shifts:
        prod *= np.sinc(t - s)
    return float(h * prod.sum())
