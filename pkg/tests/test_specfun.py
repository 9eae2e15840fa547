import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsecap import specfun as sf

from oracles import dblquad_complex, g_oracle

finite = dict(allow_nan=False, allow_infinity=False)


def test_sinc_removable_point():
    assert sf.sinc(0.0) == 1.0
    assert sf.sinc(np.pi) == pytest.approx(0.0, abs=1e-16)
    assert sf.sinc(1.3) == pytest.approx(math.sin(1.3) / 1.3, rel=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(-60, 60, **finite))
def test_calG_matches_quadrature(x):
    assert abs(sf.calG(x) - g_oracle(x, 0)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(-60, 60, **finite))
def test_calG1_matches_quadrature(x):
    assert abs(sf.calG1(x) - g_oracle(x, 1)) < 1e-12


@pytest.mark.parametrize("x", [0.0, 1e-9, 0.49999, 0.5, 0.50001])
def test_calG_branch_seam(x):
    assert abs(sf.calG(x) - g_oracle(x, 0)) < 1e-13
    assert abs(sf.calG1(x) - g_oracle(x, 1)) < 1e-13


def test_calG_values_at_zero():
    assert sf.calG(0.0) == pytest.approx(-1j)
    assert sf.calG1(0.0) == pytest.approx(-0.5j)


def _g2_ref(a, b, bt):
    f = lambda z1, z2: np.exp(4j * bt * (z1 * a + z2 * b))
    return dblquad_complex(f, 0.0, 1.0, lambda x: 0.0, lambda x: x, epsabs=1e-12, epsrel=1e-12)


def _g3_ref(a, b, bt):
    f = lambda z1, z2: min(z1, z2) * np.exp(4j * bt * (z1 * a + z2 * b))
    # split along the diagonal so each piece is smooth
    lower = dblquad_complex(f, 0.0, 1.0, lambda x: 0.0, lambda x: x, epsabs=1e-12, epsrel=1e-12)
    upper = dblquad_complex(f, 0.0, 1.0, lambda x: x, lambda x: 1.0, epsabs=1e-12, epsrel=1e-12)
    return lower + upper


@pytest.mark.parametrize(
    "a,b,bt",
    [(1, 2, 1.0), (0.0, 0.0, 1.0), (1.0, -1.0, 1.0), (0.01, 3.0, 2.0), (-2.5, 1.0, 0.7), (0.3, 0.2, 0.1)],
)
def test_calG2_matches_dblquad(a, b, bt):
    assert abs(sf.calG2(a, b, bt) - _g2_ref(a, b, bt)) < 1e-10


@pytest.mark.parametrize(
    "a,b,bt",
    [(2, -1, 1.0), (0.0, 0.0, 1.0), (1.0, -1.0, 1.0), (0.01, 3.0, 2.0), (-2.5, 1.0, 0.7), (0.3, 0.2, 0.1)],
)
def test_calG3_matches_dblquad(a, b, bt):
    assert abs(sf.calG3(a, b, bt) - _g3_ref(a, b, bt)) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3, **finite), st.floats(-3, 3, **finite))
def test_calG2_calG3_near_singular_sets(a, b):
    # exercise the divided-difference branch densely near a=0, b=0, a+b=0
    bt = 0.05
    assert abs(sf.calG2(a, b, bt) - _g2_ref(a, b, bt)) < 1e-10
    assert abs(sf.calG3(a, b, bt) - _g3_ref(a, b, bt)) < 1e-10


def _dd_mp(nodes):
    mp.mp.dps = 40
    xs = [mp.mpc(complex(x)) for x in nodes]
    if len(xs) == 1:
        return mp.exp(xs[0])
    # Lagrange form, valid for distinct nodes; 40 digits absorb the cancellation
    return mp.fsum(
        mp.exp(xs[i]) / mp.fprod([xs[i] - xs[j] for j in range(len(xs)) if j != i]) for i in range(len(xs))
    )


@settings(max_examples=40, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=6, **finite), min_size=2, max_size=4, unique=True))
def test_expdd_distinct_nodes(nodes):
    gaps = [abs(a - b) for i, a in enumerate(nodes) for b in nodes[i + 1 :]]
    if min(gaps) < 1e-2:
        return  # the mp oracle itself loses digits for near-coincident nodes
    ref = complex(_dd_mp(nodes))
    assert abs(sf.expdd(*nodes) - ref) <= 1e-11 * max(1.0, abs(ref))


@pytest.mark.parametrize("x", [0.0, 0.7j, -1.2 + 0.4j])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_expdd_confluent(x, k):
    # exp[x, x, ..., x] with k+1 copies = exp(x) / k!
    val = sf.expdd(*([x] * (k + 1)))
    assert abs(val - np.exp(x) / math.factorial(k)) < 1e-14


def _E_mp(a, b):
    mp.mp.dps = 30
    f = lambda y: mp.exp(1j * (b * y * y + a * y))
    return complex(mp.quad(f, mp.linspace(-0.5, 0.5, 9)))


@settings(max_examples=40, deadline=None)
@given(st.floats(-100, 100, **finite), st.floats(-15, 15, **finite))
def test_fresnelE_salzer_against_mpmath(a, b):
    assert abs(sf.fresnelE(a, b, method="salzer") - _E_mp(a, b)) < 1e-6


@pytest.mark.parametrize("a,b", [(0.0, 0.0), (3.0, 0.0), (2.0 + 1.5j, 4.0), (-7.0 - 0.5j, -9.0), (10.0, 40.0)])
def test_fresnelE_complex_and_large_b(a, b):
    mp.mp.dps = 30
    ref = complex(mp.quad(lambda y: mp.exp(1j * (b * y * y + a * y)), mp.linspace(-0.5, 0.5, 17)))
    assert abs(sf.fresnelE(a, b) - ref) < 1e-10 * max(1.0, abs(ref)) + 1e-7


def test_fresnelE_symmetries():
    rng = np.random.default_rng(0)
    a = rng.uniform(-50, 50, 30) + 1j * rng.uniform(-1, 1, 30)
    b = rng.uniform(0.1, 15, 30)
    E = sf.fresnelE(a, b)
    # E(a, -b) = conj(E(conj a, b)) and E(-a, b) = E(a, b)
    assert np.allclose(sf.fresnelE(a, -b), np.conj(sf.fresnelE(np.conj(a), b)), atol=1e-13)
    assert np.allclose(sf.fresnelE(-a, b), E, atol=1e-12)
    assert np.allclose(sf.fresnelEtilde(a, b), np.conj(sf.fresnelE(np.conj(a), b)), atol=1e-15)


def test_fresnelE_guards():
    with pytest.raises(ValueError):
        sf.fresnelE(np.nan, 1.0)
    with pytest.raises(ValueError):
        sf.fresnelE(2000.0, 1.0)
    with pytest.raises(ValueError):
        sf.fresnelE(1.0, 20.0, method="salzer", fallback=False)


def test_fresnelE_quad_reference_agrees_with_mpmath():
    assert abs(sf.fresnelE_quad(12.0, 7.0) - _E_mp(12.0, 7.0)) < 1e-11
