"""Mutual information at O(gamma^2) and the optimal-vs-Gaussian gap at O(gamma^4).

Entropies are in nats.  With P = T0 = 1 the noise power per symbol is 1/snr.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import envelope as env
from .jtensors import jSigmaZeroBeta, symmetrizedJI

__all__ = [
    "ChannelParams",
    "mutualInfoOpt",
    "zeroBetaMI",
    "miGap",
    "miGapMonteCarlo",
    "condEntropyGaussianInput",
    "outputEntropyGaussianInput",
    "diagonalSum",
]


@dataclass(frozen=True)
class ChannelParams:
    M: int
    betaTilde: float = 0.0
    gammaTilde: float = 0.0
    snr: float = 1000.0
    noiseBandRatio: float = 8.0
    rxBandRatio: float = 1.0

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("M must be non-negative")
        if self.gammaTilde < 0:
            raise ValueError("gammaTilde must be non-negative")
        if self.betaTilde < 0:
            raise ValueError("betaTilde must be non-negative")
        if self.snr <= 0:
            raise ValueError("snr must be positive")
        if self.rxBandRatio < 1:
            raise ValueError("rxBandRatio must be >= 1")
        if self.noiseBandRatio < self.rxBandRatio:
            raise ValueError("noise band must be at least the receiver band")
        if self.snr < 10:
            warnings.warn("snr < 10: leading-order 1/snr expansion is questionable", stacklevel=2)

    @property
    def n(self) -> int:
        return 2 * self.M + 1

    @property
    def noiseVar(self) -> float:
        return 1.0 / self.snr


def diagonalSum(T) -> complex:
    """sum_{r,s} T[r,s;r,s] + T[r,s;s,r]: the Gaussian fourth-moment contraction."""
    T = getattr(T, "values", T)
    n = T.shape[0]
    r = np.arange(n)
    R, S = np.meshgrid(r, r, indexing="ij")
    return complex(T[R, S, R, S].sum() + T[R, S, S, R].sum())


def mutualInfoOpt(params: ChannelParams, jSigma: float) -> float:
    """Total MI of the block, in nats."""
    return params.n * (math.log(params.snr) + params.gammaTilde**2 * jSigma)


def condEntropyGaussianInput(JLambda, params: ChannelParams) -> float:
    # H = n ln(pi e Q L / T0) - g^2 J_Lambda <C C Cbar Cbar>; with P = T0 = 1, QL = 1/snr
    lin = params.n * math.log(math.pi * math.e / params.snr)
    return lin - params.gammaTilde**2 * diagonalSum(JLambda).real


def outputEntropyGaussianInput(J, params: ChannelParams) -> float:
    # input entropy of the unit-power Gaussian plus the mean log-Jacobian
    return params.n * math.log(math.pi * math.e) + params.gammaTilde**2 * diagonalSum(J).real


def zeroBetaMI(envelope: env.EnvelopeKind, params: ChannelParams) -> float:
    """Per-symbol MI at zero dispersion."""
    g2 = params.gammaTilde**2
    if envelope.nonOverlapping:
        N4 = env.momentN(envelope, 4)
        N6 = env.momentN(envelope, 6)
        return math.log(params.snr) - g2 * (22.0 * N6 - 21.0 * N4 * N4) / 3.0
    return math.log(params.snr) + g2 * jSigmaZeroBeta(params.M, envelope)


def miGap(JI, params: ChannelParams) -> float:
    """I[P_opt] - I[P0] at leading order, from the symmetrised J_I."""
    Jt = symmetrizedJI(JI)
    n = Jt.shape[0]
    t1 = np.einsum("abbd,dkak->", Jt, Jt)
    t2 = np.einsum("abcd,cdab->", Jt, Jt)
    tr = np.einsum("abba->", Jt)
    val = 4.0 * t1 + t2 - 4.0 / n * tr * tr
    return float(2.0 * params.gammaTilde**4 * val.real)


def miGapMonteCarlo(JI, params: ChannelParams, nSamples=200_000, seed=0):
    """Same gap from sampled variance of A = J_I C C Cbar Cbar under P0.

    Returns (estimate, standard error).
    """
    T = getattr(JI, "values", JI)
    n = T.shape[0]
    rng = np.random.default_rng(seed)
    C = (rng.standard_normal((nSamples, n)) + 1j * rng.standard_normal((nSamples, n))) / math.sqrt(2.0)
    A = np.einsum("abcd,na,nb,nc,nd->n", T, C, C, np.conj(C), np.conj(C), optimize=True).real
    mean = A.mean()
    var = A.var(ddof=1)
    est = 0.5 * params.gammaTilde**4 * (var - 4.0 / n * mean * mean)
    # delta-method error for the variance part dominates
    se4 = np.std((A - mean) ** 2, ddof=1) / math.sqrt(nSamples)
    return float(est), float(0.5 * params.gammaTilde**4 * se4)
