import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nlsecap.distribution import (
    SymbolSequence,
    correlatorMatrix,
    marginalD1,
    marginalDensity,
    p0LogDensity,
    pairCorrelator,
    pairD,
    pairDensity,
    poptDensity,
)
from nlsecap.information import ChannelParams

from oracles import correlator_wick, popt_bracket_marginal, random_jlike

finite = dict(allow_nan=False, allow_infinity=False)
cplx = st.complex_numbers(max_magnitude=2.5, **finite)
seeds = st.integers(0, 2**32 - 1)


def _polar(f, rmax=9.0):
    """int f(c) d^2c for smooth f; Gauss-Legendre in r, uniform in angle."""
    r, wr = np.polynomial.legendre.leggauss(120)
    r = 0.5 * rmax * (r + 1)
    wr = 0.5 * rmax * wr
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    c = r[:, None] * np.exp(1j * th[None, :])
    return float(np.sum(wr[:, None] * r[:, None] * f(c)) * 2 * np.pi / 64)


def test_sequence_validation_and_indexing():
    s = SymbolSequence(1, [1, 2j, 3])
    assert s[-1] == 1 and s[1] == 3
    with pytest.raises(ValueError):
        SymbolSequence(1, [1, 2])
    with pytest.raises(ValueError):
        SymbolSequence(0, [np.nan])


def test_p0_density():
    c = np.array([0.3 + 0.1j, -1.0])
    assert p0LogDensity(c) == pytest.approx(-2 * math.log(math.pi) - 0.1 - 1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1), seeds, cplx, st.integers(0, 2))
def test_marginal_bracket_matches_moment_counting(M, seed, c, qi):
    n = 2 * M + 1
    q = qi % n - M
    T = random_jlike(n, np.random.default_rng(seed))
    ref = popt_bracket_marginal(T, {q + M: c}, n)
    assert marginalD1(q, abs(c), T, M) == pytest.approx(ref, abs=1e-9 * max(1.0, abs(ref)))


@settings(max_examples=30, deadline=None)
@given(seeds, cplx, cplx)
def test_pair_bracket_matches_moment_counting(seed, x, y):
    M = 1
    T = random_jlike(3, np.random.default_rng(seed))
    i, j = -1, 0
    ref = popt_bracket_marginal(T, {i + M: x, j + M: y}, 3)
    got = marginalD1(i, abs(x), T, M) + marginalD1(j, abs(y), T, M) + pairD(i, j, x, y, T, M)
    assert got == pytest.approx(ref, abs=1e-9 * max(1.0, abs(ref)))


@settings(max_examples=15, deadline=None)
@given(seeds, cplx)
def test_pair_coupling_has_zero_gaussian_mean(seed, y):
    T = random_jlike(3, np.random.default_rng(seed))
    val = _polar(lambda x: np.exp(-np.abs(x) ** 2) / np.pi * pairD(1, 0, x, y, T, 1))
    assert abs(val) < 1e-10


def test_pairD_rejects_equal_indices():
    with pytest.raises(ValueError):
        pairD(0, 0, 1.0, 1.0, np.zeros((3,) * 4), 1)


@pytest.mark.parametrize("seed", [0, 1])
def test_marginal_normalisation(seed):
    T = random_jlike(3, np.random.default_rng(seed)) * 0.2
    p = ChannelParams(1, 0.0, 0.3)
    f = lambda r: 2 * math.pi * r * float(marginalDensity(0, r, T, p))
    assert integrate.quad(f, 0, np.inf, epsabs=1e-13)[0] == pytest.approx(1.0, abs=1e-8)


def test_full_density_normalisation_single_symbol():
    T = random_jlike(1, np.random.default_rng(5)) * 0.3
    p = ChannelParams(0, 0.0, 0.4)
    total = _polar(lambda c: np.vectorize(lambda z: poptDensity([z], T, p).value)(c))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_density_validity_flag():
    T = np.zeros((1,) * 4, complex)
    T[0, 0, 0, 0] = -1.0
    d = poptDensity([3.0], T, ChannelParams(0, 0.0, 0.5))
    assert not d.valid and d.value < 0


def test_pair_density_factorises_at_zero_coupling():
    T = random_jlike(3, np.random.default_rng(2))
    p = ChannelParams(1, 0.0, 0.0)
    assert pairDensity(-1, 1, 0.4, 1j, T, p) == pytest.approx(math.exp(-0.16 - 1) / math.pi**2)


@settings(max_examples=10, deadline=None)
@given(seeds, st.integers(-1, 1), st.integers(-1, 1))
def test_correlator_matches_moment_counting(seed, k, m):
    T = random_jlike(3, np.random.default_rng(seed))
    p = ChannelParams(1, 0.0, 0.2)
    assert pairCorrelator(k, m, T, p) == pytest.approx(correlator_wick(T, k + 1, m + 1, 0.04), abs=1e-12)


def test_correlator_matrix_is_hermitian():
    T = random_jlike(5, np.random.default_rng(3))
    C = correlatorMatrix(T, ChannelParams(2, 0.0, 0.3))
    assert np.allclose(C, C.conj().T, atol=1e-14)
