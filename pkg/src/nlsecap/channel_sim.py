"""Split-step simulation of the noisy NLS channel and the matched receiver.

The time axis is periodic with period ``timeSpan`` and the field is held
in the frequency domain between steps.  With numpy's FFT sign the linear
step multiplies mode w by exp(i beta w^2 dz), beta = 2*betaTilde/W^2, and
the nonlinear step rotates each sample by gammaTilde*|psi|^2*dz.  For an
odd integer period the sinc basis sits exactly on the in-band modes, so
synthesis followed by projection is the identity to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import envelope as env
from .distribution import SymbolSequence
from .information import ChannelParams

__all__ = [
    "SimGrid",
    "FieldState",
    "CorrelatorReport",
    "GridTooSmall",
    "SimulationUnstable",
    "synthesizeInput",
    "propagate",
    "receive",
    "simulateSymbols",
    "mcCorrelators",
    "spectralBroadening",
    "bandwidth",
]

W = 2.0 * np.pi


class GridTooSmall(ValueError):
    pass


class SimulationUnstable(RuntimeError):
    pass


@dataclass(frozen=True)
class SimGrid:
    nTime: int = 4096
    timeSpan: float = 27.0
    nSteps: int = 2000
    guard: float = 8.0

    @classmethod
    def default(cls, M, **kw):
        kw.setdefault("timeSpan", float(2 * M + 1 + 16))
        return cls(**kw)

    def __post_init__(self):
        if self.nTime < 16 or self.nTime & (self.nTime - 1):
            raise ValueError("nTime must be a power of two")
        if self.timeSpan <= 0 or self.nSteps < 1:
            raise ValueError("timeSpan and nSteps must be positive")

    @property
    def dt(self):
        return self.timeSpan / self.nTime

    @property
    def t(self):
        return self.dt * np.arange(self.nTime)

    @property
    def omega(self):
        return 2.0 * np.pi * np.fft.fftfreq(self.nTime, self.dt)

    def check(self, M, params: ChannelParams | None = None):
        if self.timeSpan < 2 * M + 1 + 2 * self.guard - 1e-9:
            raise GridTooSmall(f"timeSpan {self.timeSpan} < (2M+1) + 2*guard")
        ratio = params.noiseBandRatio if params is not None else 1.0
        if self.nTime / self.timeSpan < ratio:
            raise GridTooSmall("frequency span of the grid is narrower than the noise band")


@dataclass
class FieldState:
    samples: np.ndarray    # (..., nTime) time samples
    z: float = 0.0

    def energy(self, grid: SimGrid):
        return grid.dt * np.sum(np.abs(self.samples) ** 2, axis=-1)


@dataclass
class CorrelatorReport:
    nRuns: int
    mean: np.ndarray
    meanSE: np.ndarray
    covCC: np.ndarray
    covCCSE: np.ndarray
    covCCbar: np.ndarray
    covCCbarSE: np.ndarray
    analytic: dict = field(default_factory=dict)

    def zscores(self):
        """Component-wise (re, im) z-scores against the attached analytic values."""
        out = {}
        for key in ("mean", "covCC", "covCCbar"):
            if key not in self.analytic:
                continue
            mc, se, an = getattr(self, key), getattr(self, key + "SE"), self.analytic[key]
            d = mc - an
            zr = d.real / np.where(se.real > 0, se.real, np.inf)
            zi = d.imag / np.where(se.imag > 0, se.imag, np.inf)
            out[key] = np.maximum(np.abs(zr), np.abs(zi))
        return out


def _spectrum(C, M, grid, envelope):
    w = grid.omega
    k = np.arange(-M, M + 1)
    basis = env.evalFreq(envelope, w)[None, :] * np.exp(-1j * np.outer(k, w))  # (n, N)
    return basis / grid.dt


def synthesizeInput(seq, grid: SimGrid, envelope=env.SINC) -> FieldState:
    """X(t) = sum_k C_k s(t - k) on the periodic grid; accepts (..., 2M+1) arrays."""
    C = seq.coeffs if isinstance(seq, SymbolSequence) else np.asarray(seq, dtype=complex)
    M = (C.shape[-1] - 1) // 2
    grid.check(M)
    F = C @ _spectrum(C, M, grid, envelope)
    return FieldState(np.fft.ifft(F, axis=-1), 0.0)


def _noise_weights(grid, params):
    # per-mode variance weight inside the noise band; half weight on an edge mode
    half = params.noiseBandRatio * np.pi
    aw = np.abs(grid.omega)
    tol = 1e-9 * half
    wgt = np.where(aw < half - tol, 1.0, np.where(aw <= half + tol, 0.5, 0.0))
    return np.sqrt(wgt)


def _rng(noise):
    if noise is None:
        return None
    if isinstance(noise, np.random.Generator):
        return noise
    return np.random.default_rng(noise)


def propagate(state: FieldState, params: ChannelParams, grid: SimGrid, noise=None) -> FieldState:
    """Strang split-step from z=0 to z=1 with band-limited noise after each step.

    noise: None for a noiseless run, else a seed or numpy Generator.
    """
    rng = _rng(noise)
    dz = 1.0 / grid.nSteps
    beta = 2.0 * params.betaTilde / W**2
    w = grid.omega
    half = np.exp(0.5j * beta * w**2 * dz)
    g = params.gammaTilde
    F = np.fft.fft(state.samples, axis=-1)
    e0 = np.sum(np.abs(F) ** 2, axis=-1)
    if rng is not None:
        amp = _noise_weights(grid, params) * math.sqrt(grid.nTime * dz / (params.snr * grid.dt) / 2.0)
        band = np.nonzero(amp)[0]
        amp = amp[band]
    for step in range(grid.nSteps):
        F *= half
        if g != 0.0:
            psi = np.fft.ifft(F, axis=-1)
            psi *= np.exp(1j * g * dz * (psi.real**2 + psi.imag**2))
            F = np.fft.fft(psi, axis=-1)
        F *= half
        if rng is not None:
            shape = F.shape[:-1] + (band.size, 2)
            xi = rng.standard_normal(shape)
            F[..., band] += amp * (xi[..., 0] + 1j * xi[..., 1])
        if step % 64 == 63 and np.any(np.sum(np.abs(F) ** 2, axis=-1) > 10.0 * e0 + 1e-300):
            raise SimulationUnstable("field energy grew more than tenfold")
    return FieldState(np.fft.ifft(F, axis=-1), 1.0)


def receive(state: FieldState, params: ChannelParams, grid: SimGrid, envelope=env.SINC):
    """Brick-wall filter, dispersion removal and projection; returns (..., 2M+1) coefficients."""
    M = params.M
    w = grid.omega
    beta = 2.0 * params.betaTilde / W**2
    F = np.fft.fft(state.samples, axis=-1)
    filt = (np.abs(w) < params.rxBandRatio * np.pi + 1e-12) * np.exp(-1j * beta * w**2)
    k = np.arange(-M, M + 1)
    proj = np.conj(env.evalFreq(envelope, w)[None, :] * np.exp(-1j * np.outer(k, w)))  # (n, N)
    # C_k = (1/T) sum_j conj(s_k(w_j)) * dt * F_j
    return (F * filt) @ proj.T * (grid.dt / grid.timeSpan)


def simulateSymbols(seq, params: ChannelParams, grid: SimGrid, envelope=env.SINC, noise=None):
    st = synthesizeInput(seq, grid, envelope)
    grid.check(params.M, params)
    return receive(propagate(st, params, grid, noise), params, grid, envelope)


def _jackknife(samples, fn, groups=20):
    """Delete-one-group jackknife standard error of fn over axis 0 (re and im separately)."""
    N = samples.shape[0]
    groups = min(groups, N)
    idx = np.array_split(np.arange(N), groups)
    full = fn(samples)
    reps = []
    for g in idx:
        mask = np.ones(N, bool)
        mask[g] = False
        reps.append(fn(samples[mask]))
    reps = np.array(reps)
    m = reps.mean(axis=0)
    f = (groups - 1) / groups
    se_re = np.sqrt(f * np.sum((reps.real - m.real) ** 2, axis=0))
    se_im = np.sqrt(f * np.sum((reps.imag - m.imag) ** 2, axis=0))
    return full, se_re + 1j * se_im


def _cov_cc(X):
    d = X - X.mean(axis=0)
    return d.T @ d / (X.shape[0] - 1)


def _cov_ccbar(X):
    d = X - X.mean(axis=0)
    return d.T @ np.conj(d) / (X.shape[0] - 1)


def mcCorrelators(seq, params: ChannelParams, grid: SimGrid, nRuns, seed, envelope=env.SINC,
                  batch=500, kernels=None) -> CorrelatorReport:
    """Monte-Carlo mean and second moments of the received symbols.

    Realizations are run in fixed batches; batch b uses the b-th child of
    SeedSequence(seed), so results depend only on (seed, nRuns, batch).
    If ``kernels`` is given, analytic predictions are attached.
    """
    if nRuns < 2:
        raise ValueError("need at least two runs")
    C = seq.coeffs if isinstance(seq, SymbolSequence) else np.asarray(seq, dtype=complex)
    nb = -(-nRuns // batch)
    children = np.random.SeedSequence(seed).spawn(nb)
    st = synthesizeInput(C, grid, envelope)
    grid.check(params.M, params)
    out = []
    for b in range(nb):
        m = min(batch, nRuns - b * batch)
        s0 = FieldState(np.broadcast_to(st.samples, (m, grid.nTime)).copy())
        out.append(receive(propagate(s0, params, grid, np.random.default_rng(children[b])), params, grid, envelope))
    X = np.concatenate(out)
    mean, meanSE = _jackknife(X, lambda x: x.mean(axis=0))
    cc, ccSE = _jackknife(X, _cov_cc)
    cb, cbSE = _jackknife(X, _cov_ccbar)
    rep = CorrelatorReport(nRuns, mean, meanSE, cc, ccSE, cb, cbSE)
    if kernels is not None:
        from .condpdf import predictedCov, predictedMean

        covCC, covCCbar = predictedCov(C, kernels, params)
        rep.analytic = {"mean": predictedMean(C, kernels, params), "covCC": covCC, "covCCbar": covCCbar}
    return rep


def bandwidth(state: FieldState, grid: SimGrid):
    """Second-moment bandwidth sqrt(int w^2 |X|^2 / int |X|^2)."""
    P = np.abs(np.fft.fft(state.samples, axis=-1)) ** 2
    return np.sqrt(np.sum(grid.omega**2 * P, axis=-1) / np.sum(P, axis=-1))


def spectralBroadening(seq, params: ChannelParams, grid: SimGrid, envelope=env.SINC):
    """(Wi, Wf, WfFirstOrder): input, split-step output and first-order predicted bandwidths."""
    if params.betaTilde <= 1e-12:
        raise ValueError("spectral broadening estimate needs betaTilde > 0")
    st = synthesizeInput(seq, grid, envelope)
    Wi = float(bandwidth(st, grid))
    out = propagate(st, params, grid, None)
    Wf = float(bandwidth(out, grid))
    lin = propagate(st, ChannelParams(params.M, params.betaTilde, 0.0, params.snr,
                                      params.noiseBandRatio, params.rxBandRatio), grid, None)
    dt = grid.dt
    E = dt * np.sum(np.abs(st.samples) ** 2)
    q_in = dt * np.sum(np.abs(st.samples) ** 4)
    q_lin = dt * np.sum(np.abs(lin.samples) ** 4)
    betaL = 2.0 * params.betaTilde / W**2
    pred = Wi * (1.0 + params.gammaTilde * (q_in - q_lin) / (4.0 * betaL * Wi**2 * E))
    return Wi, Wf, float(pred)
