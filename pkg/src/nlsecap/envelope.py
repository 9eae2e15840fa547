"""Pulse envelopes in units T0 = 1, W = 2*pi.

Every envelope is normalised so that the integral of s(t)^2 is one.
Fourier convention: s(w) = int s(t) exp(i w t) dt.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "EnvelopeKind",
    "SINC",
    "RECT",
    "gaussian",
    "parse_envelope",
    "evalTime",
    "evalFreq",
    "momentN",
    "overlap",
    "orthogonalityDefect",
    "parsevalNorm",
]


@dataclass(frozen=True)
class EnvelopeKind:
    variant: str                 # "sinc", "gauss" or "rect"
    tauOverT0: float = 0.125     # only used by "gauss"

    def __post_init__(self):
        if self.variant not in ("sinc", "gauss", "rect"):
            raise ValueError(f"unknown envelope {self.variant!r}")
        if self.variant == "gauss" and not (0.0 < self.tauOverT0 <= 0.5):
            raise ValueError("gaussian tau/T0 must lie in (0, 0.5]")

    @property
    def tag(self) -> str:
        return f"gauss:{self.tauOverT0:g}" if self.variant == "gauss" else self.variant

    @property
    def nonOverlapping(self) -> bool:
        return self.variant != "sinc"


SINC = EnvelopeKind("sinc")
RECT = EnvelopeKind("rect")


def gaussian(tau=0.125) -> EnvelopeKind:
    return EnvelopeKind("gauss", float(tau))


def parse_envelope(text: str) -> EnvelopeKind:
    """'sinc', 'rect' or 'gauss:<tau>' (tau in units of T0)."""
    text = text.strip().lower()
    if text in ("sinc", "rect"):
        return EnvelopeKind(text)
    if text.startswith("gauss"):
        _, _, tau = text.partition(":")
        return gaussian(float(tau) if tau else 0.125)
    raise ValueError(f"cannot parse envelope {text!r}")


def evalTime(kind: EnvelopeKind, t):
    t = np.asarray(t, dtype=float)
    if kind.variant == "sinc":
        return np.sinc(t)
    if kind.variant == "rect":
        return np.where(np.abs(t) < 0.5, 1.0, np.where(np.abs(t) == 0.5, 0.5, 0.0))
    tau = kind.tauOverT0
    return (tau * math.sqrt(math.pi)) ** -0.5 * np.exp(-0.5 * (t / tau) ** 2)


def evalFreq(kind: EnvelopeKind, w):
    """Fourier transform s(w); real and even for all three shapes."""
    w = np.asarray(w, dtype=float)
    if kind.variant == "sinc":
        return np.where(np.abs(w) < np.pi, 1.0, np.where(np.abs(w) == np.pi, 0.5, 0.0))
    if kind.variant == "rect":
        return np.sinc(w / (2.0 * np.pi))
    tau = kind.tauOverT0
    return (tau * math.sqrt(math.pi)) ** -0.5 * tau * math.sqrt(2.0 * math.pi) * np.exp(-0.5 * (w * tau) ** 2)


def _sinc_moment(lam: int, T: float = 1.0e3) -> float:
    # sinc^lam(pi t) is band-limited to lam*pi, so a trapezoid with step
    # below 2/lam is exact on the truncated line; the algebraic tail is
    # added from the mean of sin^lam.
    h = 1.0 / lam
    n = int(round(T / h))
    t = h * np.arange(-n, n + 1)
    body = h * float(np.sum(np.sinc(t) ** lam))
    mean_sin = special.comb(lam, lam // 2) / 2.0**lam
    tail = 2.0 * mean_sin / (math.pi**lam * (lam - 1) * T ** (lam - 1))
    return body + tail


def momentN(kind: EnvelopeKind, lam: int) -> float:
    """N_lambda = int s(t)^lambda dt (T0 = 1)."""
    if lam < 2 or lam % 2:
        raise ValueError("lambda must be even and >= 2")
    if kind.variant == "rect":
        return 1.0
    if kind.variant == "sinc":
        return _sinc_moment(lam)
    tau = kind.tauOverT0
    f = lambda t: float(evalTime(kind, t)) ** lam
    val, _ = integrate.quad(f, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-12, points=None)
    return val


def overlap(kind: EnvelopeKind, k: int, m: int) -> float:
    """int s(t - k) s(t - m) dt."""
    d = float(k - m)
    if kind.variant == "sinc":
        # (1/2pi) int_{-pi}^{pi} exp(i w d) dw on a Gauss-Legendre rule
        x, w = np.polynomial.legendre.leggauss(64 + int(abs(d)))
        return float(np.sum(w * np.cos(np.pi * x * d)) / 2.0)
    if kind.variant == "rect":
        return max(0.0, 1.0 - abs(d))
    f = lambda t: float(evalTime(kind, t - k) * evalTime(kind, t - m))
    c = 0.5 * (k + m)
    val, _ = integrate.quad(f, -np.inf, np.inf, points=None, epsabs=1e-15, epsrel=1e-12) if d == 0 else (
        integrate.quad(f, c - 20, c + 20, points=[c], epsabs=1e-300, epsrel=1e-12, limit=200)
    )
    return val


def orthogonalityDefect(kind: EnvelopeKind, k: int, m: int) -> float:
    return abs(overlap(kind, k, m) - (1.0 if k == m else 0.0))


def parsevalNorm(kind: EnvelopeKind) -> float:
    """(1/2pi) int |s(w)|^2 dw; should be one."""
    if kind.variant == "sinc":
        return 1.0
    f = lambda w: float(evalFreq(kind, w)) ** 2
    if kind.variant == "rect":
        # slowly decaying 1/w^2 tail: integrate on panels, add the tail mean
        W = 2000.0 * math.pi
        edges = np.arange(0.0, W + 1e-9, 2.0 * math.pi)
        body = sum(integrate.quad(f, lo, hi, epsabs=1e-14)[0] for lo, hi in zip(edges[:-1], edges[1:]))
        tail = 2.0 / W  # int_W^inf 4 sin^2(w/2)/w^2 dw ~ 2/W
        return (2.0 * body + 2.0 * tail) / (2.0 * math.pi)
    val, _ = integrate.quad(f, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-12)
    return val / (2.0 * math.pi)
