import math
import warnings

import numpy as np
import pytest

from nlsecap import envelope as env
from nlsecap.channel_sim import (
    CorrelatorReport,
    FieldState,
    GridTooSmall,
    SimGrid,
    SimulationUnstable,
    _jackknife,
    bandwidth,
    mcCorrelators,
    propagate,
    receive,
    simulateSymbols,
    spectralBroadening,
    synthesizeInput,
)
from nlsecap.condpdf import ChannelKernels
from nlsecap.information import ChannelParams


def _rand(n, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def test_grid_validation():
    with pytest.raises(ValueError):
        SimGrid(nTime=1000)
    with pytest.raises(ValueError):
        SimGrid(timeSpan=-1.0)
    g = SimGrid.default(2, nTime=512)
    assert g.timeSpan == 21.0 and g.dt == pytest.approx(21.0 / 512)
    with pytest.raises(GridTooSmall):
        SimGrid(nTime=512, timeSpan=10.0).check(2)
    with pytest.raises(GridTooSmall):
        SimGrid(nTime=64, timeSpan=21.0).check(2, ChannelParams(2, noiseBandRatio=8.0))


def test_synthesis_samples_the_sinc_train():
    g = SimGrid.default(1, nTime=512)
    c = _rand(3, 0)
    x = synthesizeInput(c, g).samples
    t = g.t
    T = g.timeSpan
    # periodic images of each pulse: sum_j sinc(t - k - jT) over the period
    ref = sum(c[k + 1] * sum(np.sinc(t - k - j * T) for j in range(-2000, 2001)) for k in (-1, 0, 1))
    assert np.abs(x - ref).max() < 5e-3


def test_round_trip_sinc():
    g = SimGrid.default(2, nTime=512)
    c = _rand(5, 1)
    out = receive(synthesizeInput(c, g), ChannelParams(2), g)
    assert np.abs(out - c).max() < 1e-10


def test_round_trip_narrow_gaussian_with_wide_receiver():
    # the brick-wall receiver must pass the whole pulse spectrum for the identity to hold
    kind = env.gaussian(0.125)
    g = SimGrid.default(2, nTime=1024)
    c = _rand(5, 1)
    p = ChannelParams(2, noiseBandRatio=16.0, rxBandRatio=16.0)
    out = receive(synthesizeInput(c, g, kind), p, g, kind)
    assert np.abs(out - c).max() < 1e-6
    narrow = receive(synthesizeInput(c, g, kind), ChannelParams(2), g, kind)
    assert np.abs(narrow - c).max() > 1e-2


def test_dispersion_is_removed_by_the_receiver():
    g = SimGrid.default(1, nTime=256, nSteps=10)
    c = _rand(3, 2)
    out = simulateSymbols(c, ChannelParams(1, 3.0, 0.0), g)
    assert np.abs(out - c).max() < 1e-12


def test_zero_dispersion_step_is_exact_phase_rotation():
    g = SimGrid.default(1, nTime=256, nSteps=7)
    st = synthesizeInput(_rand(3, 3), g)
    out = propagate(st, ChannelParams(1, 0.0, 0.3), g)
    assert np.abs(out.samples - st.samples * np.exp(0.3j * np.abs(st.samples) ** 2)).max() < 1e-12


def test_noiseless_propagation_conserves_energy():
    g = SimGrid.default(1, nTime=512, nSteps=100)
    st = synthesizeInput(_rand(3, 4), g)
    out = propagate(st, ChannelParams(1, 2.0, 0.2), g)
    assert out.energy(g) == pytest.approx(st.energy(g), rel=1e-12)
    assert out.z == 1.0


def test_noise_power_per_symbol():
    g = SimGrid.default(1, nTime=256, nSteps=20)
    p = ChannelParams(1, 0.0, 0.0, 100.0)
    rep = mcCorrelators(np.zeros(3, complex), p, g, nRuns=4000, seed=1)
    var = np.real(np.diag(rep.covCCbar))
    se = np.real(np.diag(rep.covCCbarSE))
    assert np.all(np.abs(var - 0.01) < 4 * se)
    assert np.all(np.abs(rep.covCC) < 4 * (np.abs(rep.covCCSE.real) + np.abs(rep.covCCSE.imag)))


def test_monte_carlo_is_reproducible():
    g = SimGrid.default(1, nTime=256, nSteps=10)
    p = ChannelParams(1, 0.5, 0.1, 100.0)
    c = _rand(3, 5) * 0.5
    a = mcCorrelators(c, p, g, nRuns=60, seed=9, batch=25)
    b = mcCorrelators(c, p, g, nRuns=60, seed=9, batch=25)
    assert np.array_equal(a.covCC, b.covCC) and np.array_equal(a.mean, b.mean)
    with pytest.raises(ValueError):
        mcCorrelators(c, p, g, nRuns=1, seed=0)


def test_report_attaches_analytic_values():
    g = SimGrid.default(1, nTime=256, nSteps=10)
    p = ChannelParams(1, 0.0, 0.05, 100.0)
    rep = mcCorrelators(_rand(3, 6) * 0.5, p, g, nRuns=200, seed=2, kernels=ChannelKernels(0.0, 1))
    z = rep.zscores()
    assert set(z) == {"mean", "covCC", "covCCbar"}
    assert all(v.shape == (3,) or v.shape == (3, 3) for v in z.values())
    assert CorrelatorReport(2, *[np.zeros(1)] * 6).zscores() == {}


def test_jackknife_matches_textbook_error():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((5000, 1)) + 1j * rng.standard_normal((5000, 1))
    _, se = _jackknife(x, lambda s: s.mean(axis=0))
    assert se[0].real == pytest.approx(1 / math.sqrt(5000), rel=0.35)
    assert se[0].imag == pytest.approx(1 / math.sqrt(5000), rel=0.35)


def test_instability_guard():
    g = SimGrid.default(1, nTime=256, nSteps=128)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = ChannelParams(1, 0.0, 0.0, 1e-3)
    with pytest.raises(SimulationUnstable):
        propagate(synthesizeInput(np.array([1, 0, 0j]), g), p, g, noise=1)


def test_single_pulse_bandwidth():
    g = SimGrid(nTime=1024, timeSpan=41.0)
    Wi = bandwidth(synthesizeInput(np.array([1.0 + 0j]), g), g)
    # flat spectrum on |w| < pi: rms width pi / sqrt(3), up to discrete-mode error
    assert Wi == pytest.approx(math.pi / math.sqrt(3), rel=2e-3)


def test_spectral_broadening_first_order():
    g = SimGrid(nTime=1024, timeSpan=41.0, nSteps=400)
    gs = np.array([0.05, 0.1, 0.2])
    res, first = [], []
    for gam in gs:
        Wi, Wf, pred = spectralBroadening(np.array([1.0 + 0j]), ChannelParams(0, 1.0, gam), g)
        res.append(abs(Wf - pred))
        first.append(pred - Wi)
    assert np.polyfit(np.log(gs), np.log(first), 1)[0] == pytest.approx(1.0, abs=1e-6)
    assert np.polyfit(np.log(gs), np.log(res), 1)[0] == pytest.approx(2.0, abs=0.2)
    with pytest.raises(ValueError):
        spectralBroadening(np.array([1.0 + 0j]), ChannelParams(0, 0.0, 0.1), g)


def test_field_state_energy():
    g = SimGrid.default(0, nTime=256)
    st = synthesizeInput(np.array([2.0 + 0j]), g)
    assert isinstance(st, FieldState)
    assert st.energy(g) == pytest.approx(4.0, rel=1e-12)
