import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlsecap import envelope as env
from nlsecap.coefficients import (
    A2_zero_beta,
    A2Single,
    A2ViaNine,
    QuadratureSpec,
    Tensor4,
    ToleranceError,
    UnsupportedEnvelope,
    a1,
    a1_tensor,
    a1_zero_beta,
    b1,
    b1_tensor,
    b2,
    b2ViaNine,
    buildTensor,
    load_tensor,
    save_tensor,
    zero_beta_tensors,
)

from oracles import a1_like_cube, sinc_product_integral

idx = st.integers(-2, 2)


# -- first-order tensors ----------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(idx, idx, idx, idx, st.floats(0.05, 5.0))
def test_a1_b1_match_cube_oracle(n, m, p, k, bt):
    assert abs(a1(n, m, p, k, bt) - a1_like_cube(n, m, p, k, bt, 0, order=30)) < 1e-10
    assert abs(b1(n, m, p, k, bt) - a1_like_cube(n, m, p, k, bt, 1, order=30)) < 1e-10


def test_frozen_zero_dispersion_values():
    # int sinc^4 = 2/3; the z-weighted analogue carries an extra factor 1/2
    assert a1(0, 0, 0, 0, 0.0) == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert b1(0, 0, 0, 0, 0.0) == pytest.approx(1.0 / 3.0, abs=1e-12)
    assert A2_zero_beta((0,) * 6) == pytest.approx(11.0 / 40.0, abs=1e-12)
    assert b2(0, 0, 0, 0, 0.0, 0) == pytest.approx(11.0 / 60.0, abs=1e-12)


@pytest.mark.parametrize("t", [(1, 0, 0, 1), (2, -1, 1, 0), (1, 1, 0, 2), (0, 2, -1, 1)])
def test_a1_zero_dispersion_three_routes(t):
    ref = sinc_product_integral([t[0], t[1], t[2], t[3]])
    assert a1_zero_beta(*t) == pytest.approx(ref, abs=1e-6)
    assert a1(*t, 0.0).real == pytest.approx(ref, abs=1e-6)
    assert a1(*t, 1e-7) == pytest.approx(a1(*t, 0.0), abs=1e-6)


@settings(max_examples=20, deadline=None)
@given(idx, idx, idx, idx, st.floats(0.1, 4.0))
def test_a1_pair_swap_symmetry(n, m, p, k, bt):
    assert a1(n, m, p, k, bt) == pytest.approx(a1(m, n, p, k, bt), abs=1e-13)
    assert b1(n, m, p, k, bt) == pytest.approx(b1(m, n, p, k, bt), abs=1e-13)


def test_a1_translation_invariance():
    assert a1(2, 0, 1, 1, 1.5) == pytest.approx(a1(1, -1, 0, 0, 1.5), abs=1e-14)


def test_tensor_audit_and_indexing():
    M = 1
    t = Tensor4(M, a1_tensor(M, 0.7), "A1Like")
    assert t.audit() < 1e-10
    assert t[(1, 0, 0, 1)] == pytest.approx(a1(1, 0, 0, 1, 0.7), abs=1e-14)
    assert Tensor4(M, b1_tensor(M, 0.7), "A1Like").audit() < 1e-10


@pytest.mark.parametrize("kind", [env.RECT, env.gaussian(0.2)], ids=lambda k: k.tag)
def test_zero_dispersion_tensors_non_overlapping(kind):
    # a single slot, so no neighbouring tails enter the six-fold weight
    z = zero_beta_tensors(0, kind)
    N4 = env.momentN(kind, 4)
    N6 = env.momentN(kind, 6)
    assert z["a1"][0, 0, 0, 0].real == pytest.approx(N4, rel=1e-8)
    assert z["b2"][0, 0, 0, 0].real == pytest.approx(N6 / 3.0, rel=1e-8)
    assert z["A2L"][0, 0, 0, 0].real == pytest.approx(N6 / 2.0, rel=1e-8)
    assert np.allclose(z["b1"], 0.5 * z["a1"])


# -- second-order tensors ---------------------------------------------------

def test_A2_and_b2_continuous_at_zero_dispersion():
    assert A2Single(0, 1, 0, 0, 1, 0, 1e-3) == pytest.approx(A2_zero_beta((0, 1, 0, 0, 1, 0)), abs=1e-5)
    assert b2(0, 0, 0, 0, 1e-3, 0) == pytest.approx(11.0 / 60.0, abs=1e-6)


@pytest.mark.parametrize("ms", [(1, 0, -1, 0, 1, 0), (0, 0, 1, 1, 0, 0)])
def test_A2_two_representations(ms):
    gh = A2Single(*ms, 1.0)
    nine = A2ViaNine(*ms, 1.0)
    assert abs(gh - nine) <= 1e-4 * abs(gh)


def test_b2_two_representations():
    gh = b2(1, -1, 0, 0, 1.0, 1)
    nine = b2ViaNine(1, -1, 0, 0, 1.0, 1)
    assert abs(gh - nine) <= 1e-4 * abs(gh)


def test_refinement_check_flags_coarse_rule():
    with pytest.raises(ToleranceError):
        A2Single(1, 0, -1, 0, 1, 0, 3.0, spec=QuadratureSpec(8, 8, 2, 4), check=True)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(legendreOrder=4)
    with pytest.raises(ValueError):
        QuadratureSpec(alphaOrder=2)
    s = QuadratureSpec()
    assert s.refined().legendreOrder == 2 * s.legendreOrder
    assert s.digest() == QuadratureSpec().digest() != s.refined().digest()


def test_dispersive_tensor_requires_sinc():
    with pytest.raises(UnsupportedEnvelope):
        buildTensor("a1", 1.0, 1, envelope=env.RECT)


def test_cache_round_trip(tmp_path):
    t1 = buildTensor("a1", 0.5, 1, cache_dir=tmp_path)
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    t2 = buildTensor("a1", 0.5, 1, cache_dir=tmp_path)
    assert np.array_equal(t1.values, t2.values)
    assert t2.meta["betaTilde"] == 0.5 and t2.symmetryClass == "A1Like"
    p = tmp_path / "copy.csv"
    save_tensor(t1, p)
    assert np.array_equal(load_tensor(p).values, t1.values)


def test_load_rejects_headerless_file(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("s1,s2,s3,s4,re,im\n")
    with pytest.raises(ValueError):
        load_tensor(p)
