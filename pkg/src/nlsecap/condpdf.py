"""Conditional statistics of the received symbols given the transmitted ones.

Every quantity here is a contraction of coupling kernels with the input
sequence.  Rather than materialising six-index tensors, ``ChannelKernels``
evaluates those contractions directly: for dispersive channels through the
Gauss-Hermite node set, at zero dispersion through time-domain products.
All methods are batched over a leading axis of sequences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import envelope as env
from .coefficients import (
    DEFAULT_SPEC,
    GHEngine,
    QuadratureSpec,
    _time_grid,
    a1_tensor,
    b1_tensor,
    zero_beta_tensors,
)
from .information import ChannelParams

__all__ = [
    "ChannelKernels",
    "ReceivedSymbols",
    "CondPdfCoeffs",
    "forwardMap",
    "inverseMap",
    "condCoeffs",
    "condLogPdf",
    "predictedMean",
    "predictedCov",
    "jacobianLogDet",
    "jacobianContraction",
]


@dataclass
class ReceivedSymbols:
    """Projected received symbols, length 2M+1."""

    M: int
    coeffs: np.ndarray


@dataclass
class CondPdfCoeffs:
    H1: np.ndarray
    H2: np.ndarray
    F2: np.ndarray
    lambdaCFactor: float

    @property
    def H(self):
        return self.H1 + self.H2

    @property
    def G(self):
        return np.conj(self.H)

    @property
    def F(self):
        return np.eye(self.F2.shape[0]) + self.F2


def _batch(C):
    C = C.coeffs if hasattr(C, "coeffs") else C
    C = np.asarray(C, dtype=complex)
    return (C[None, :], True) if C.ndim == 1 else (C, False)


class ChannelKernels:
    """Kernel contractions for one (betaTilde, M, envelope)."""

    def __init__(self, betaTilde, M, spec: QuadratureSpec = DEFAULT_SPEC, envelope=env.SINC):
        self.betaTilde = float(betaTilde)
        self.M = int(M)
        self.spec = spec
        self.envelope = envelope
        if self.betaTilde == 0.0:
            z = zero_beta_tensors(M, envelope)
            self.a1 = z["a1"]
            self.b1 = z["b1"]
            self._time_setup()
        else:
            if envelope.variant != "sinc":
                raise ValueError("dispersive kernels are available for the sinc envelope only")
            self.a1 = a1_tensor(M, betaTilde, spec.legendreOrder)
            self.b1 = b1_tensor(M, betaTilde, spec.legendreOrder)
            self._engA = GHEngine(betaTilde, M, spec, "A2")
            self._engB = GHEngine(betaTilde, M, spec, "b2")

    # -- zero dispersion -------------------------------------------------
    def _time_setup(self):
        if self.envelope.variant == "rect":
            self._h = 1.0
            self._s = np.eye(2 * self.M + 1)  # one unit-height sample per slot
            return
        self._h, t = _time_grid(self.envelope, self.M)
        self._s = np.stack([env.evalTime(self.envelope, t - m) for m in range(-self.M, self.M + 1)])

    def _X(self, C):
        return C @ self._s  # (S, T)

    # -- contractions ------------------------------------------------------
    def cubic(self, C):
        """sum a1^{k1,k2;k3,k} C C Cbar, shape (S, n)."""
        return np.einsum("abck,sa,sb,sc->sk", self.a1, C, C, np.conj(C), optimize=True)

    def quintic(self, C):
        """sum a2^{m1,m2,m3;m4,m5,k} C C C Cbar Cbar."""
        if self.betaTilde == 0.0:
            X = self._X(C)
            return 0.5 * self._h * (np.abs(X) ** 4 * X) @ self._s.T
        out = np.zeros(C.shape, dtype=complex)
        Cb = np.conj(C)
        w_all = self._engA.w
        for sl, Gp, Gtp, Gm, Gtm in self._engA.blocks():
            w = w_all[sl][:, None, None]
            Xm = Gm @ C.T
            Xp = Gp @ C.T
            Ytm = Gtm @ Cb.T
            Ytp = Gtp @ Cb.T
            f1 = w * Xm * Xm * Xp * Ytm * Ytp          # (P, L, S)
            f2 = w * Xm * Xm * Ytm * Ytp * Ytp
            out += 2.0 * np.einsum("pls,plk->sk", f1, Gtp, optimize=True)
            out -= np.conj(np.einsum("pls,plk->sk", f2, Gp, optimize=True))
        return out

    def bhat(self, C):
        """B[a, b] = sum over the min-weighted kernel with open ends a (unconjugated) and b."""
        if self.betaTilde == 0.0:
            X = self._X(C)
            W = np.abs(X) ** 4
            return self._h / 3.0 * np.einsum("st,at,bt->sab", W, self._s, self._s, optimize=True)
        Cb = np.conj(C)
        n = C.shape[1]
        out = np.zeros((C.shape[0], n, n), dtype=complex)
        w_all = self._engB.w
        for sl, Gp, Gtp, Gm, Gtm in self._engB.blocks():
            w = w_all[sl][:, None, None]
            Xm = Gm @ C.T
            Ytp = Gtp @ Cb.T
            f = w * Xm * Xm * Ytp * Ytp
            out += np.einsum("pls,pla,plb->sab", f, Gp, Gtm, optimize=True)
        return out

    def h2kernel(self, C):
        """Symmetric (S, n, n) kernel of the second-order H coefficient (without gamma^2)."""
        if self.betaTilde == 0.0:
            X = self._X(C)
            W = X**3 * np.conj(X)
            return 2.0 * (2.0 / 3.0) * self._h * np.einsum("st,at,bt->sab", W, self._s, self._s, optimize=True)
        Cb = np.conj(C)
        n = C.shape[1]
        out = np.zeros((C.shape[0], n, n), dtype=complex)
        eng = self._engA
        for sl, Gp, Gtp, Gm, Gtm in eng.blocks():
            w = eng.w[sl][:, None, None]
            z1 = eng.z1[sl][:, None, None]
            z2 = eng.z2[sl][:, None, None]
            Xm = Gm @ C.T
            Xp = Gp @ C.T
            Ytm = Gtm @ Cb.T
            Ytp = Gtp @ Cb.T
            base = w * Xm * Xm * Xp
            t12 = np.einsum("pls,pla,plb->sab", base * z2 * Ytp, Gtm, Gtp, optimize=True)
            out += t12 + t12.transpose(0, 2, 1)
            out += np.einsum("pls,pla,plb->sab", base * z1 * Ytm, Gtp, Gtp, optimize=True)
        return 2.0 * out


def forwardMap(seq, kernels: ChannelKernels, gammaTilde):
    """Noiseless received symbols through second order in gammaTilde."""
    C, single = _batch(seq)
    out = C + 1j * gammaTilde * kernels.cubic(C) - gammaTilde**2 * kernels.quintic(C)
    return out[0] if single else out


def forwardMapParts(seq, kernels: ChannelKernels):
    """(cubic, quintic) so several gammaTilde values can reuse one evaluation."""
    C, single = _batch(seq)
    cu, qu = kernels.cubic(C), kernels.quintic(C)
    return (cu[0], qu[0]) if single else (cu, qu)


def inverseMap(rec, kernels: ChannelKernels, gammaTilde):
    """Two fixed-point sweeps; error O(gamma^3)."""
    R, single = _batch(rec)
    C = R
    for _ in range(2):
        C = R - 1j * gammaTilde * kernels.cubic(C) + gammaTilde**2 * kernels.quintic(C)
    return C[0] if single else C


def condCoeffs(seq, kernels: ChannelKernels, params: ChannelParams) -> CondPdfCoeffs:
    C, _ = _batch(seq)
    c = C[0]
    g = params.gammaTilde
    b1 = kernels.b1
    # H1^{m,k} = -i g sum b1^{k1,k2;k,m} C C
    H1 = -1j * g * np.einsum("abkm,a,b->mk", b1, c, c)
    G1 = np.conj(H1)
    B = kernels.bhat(C)[0]
    F2 = 4.0 * G1 @ H1 - 2.0 * g * g * B
    H2 = g * g * kernels.h2kernel(C)[0]
    lam = float((np.trace(F2) - 2.0 * np.trace(G1 @ H1)).real)
    return CondPdfCoeffs(H1, H2, F2, lam)


def predictedMean(seq, kernels: ChannelKernels, params: ChannelParams):
    """Mean received symbols; keeps the noise-band phase term at O(gamma / snr)."""
    C0 = forwardMap(seq, kernels, params.gammaTilde)
    return C0 * (1.0 + 1j * params.gammaTilde * params.noiseBandRatio / params.snr)


def predictedCov(seq, kernels: ChannelKernels, params: ChannelParams):
    """(covCC, covCCbar): <dC_m dC_k> and <dC_m conj(dC_k)>."""
    co = condCoeffs(seq, kernels, params)
    n = co.F2.shape[0]
    C, _ = _batch(seq)
    B = kernels.bhat(C)[0]
    covCC = -2.0 / params.snr * co.H
    covCCbar = (np.eye(n) + 2.0 * params.gammaTilde**2 * B.T) / params.snr
    return covCC, covCCbar


def condLogPdf(rec, seq, kernels: ChannelKernels, params: ChannelParams, coeffs=None) -> float:
    r = rec.coeffs if hasattr(rec, "coeffs") else np.asarray(rec, dtype=complex)
    co = coeffs if coeffs is not None else condCoeffs(seq, kernels, params)
    d = r - predictedMean(seq, kernels, params)
    db = np.conj(d)
    quad = d @ co.F @ db + d @ co.G @ d + db @ co.H @ db
    n = len(r)
    return float(n * math.log(params.snr / math.pi) + co.lambdaCFactor - params.snr * quad.real)


def jacobianContraction(seq, JTensor, gammaTilde) -> float:
    """gamma^2 sum J C C Cbar Cbar."""
    c = seq.coeffs if hasattr(seq, "coeffs") else np.asarray(seq, dtype=complex)
    T = getattr(JTensor, "values", JTensor)
    v = np.einsum("abcd,a,b,c,d->", T, c, c, np.conj(c), np.conj(c), optimize=True)
    return float(gammaTilde**2 * v.real)


def jacobianLogDet(seq, kernels: ChannelKernels, gammaTilde, step=1e-4):
    """log|det| of the real 2n x 2n Jacobian of the forward map, by central differences.

    Accepts a list of gammaTilde values; the map is evaluated once per
    perturbed point and reused for every gamma.
    """
    c = seq.coeffs if hasattr(seq, "coeffs") else np.asarray(seq, dtype=complex)
    n = len(c)
    dirs = np.concatenate([np.eye(n), 1j * np.eye(n)])      # d/dRe, d/dIm
    pts = np.concatenate([c + step * dirs, c - step * dirs])
    cu, qu = forwardMapParts(pts, kernels)
    gammas = np.atleast_1d(gammaTilde)
    out = []
    for g in gammas:
        F = pts + 1j * g * cu - g * g * qu
        D = (F[: 2 * n] - F[2 * n :]) / (2 * step)          # (2n directions, n outputs)
        Jr = np.concatenate([D.real, D.imag], axis=1).T      # rows: Re/Im outputs
        sign, logdet = np.linalg.slogdet(Jr)
        out.append(logdet)
    out = np.array(out)
    return float(out[0]) if np.ndim(gammaTilde) == 0 else out

