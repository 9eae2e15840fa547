"""Invariant checks run by ``nlsecap validate``.

The quick set finishes in seconds; the full set adds the slower derived
checks (zero-dispersion capacity constant, special-function accuracy,
mutual-information gap sign).
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from . import envelope as env
from .information import ChannelParams

__all__ = ["CheckResult", "run", "QUICK", "FULL"]


class CheckResult(NamedTuple):
    name: str
    ok: bool
    detail: str


def _orthonormal_sinc():
    e = max(abs(env.overlap(env.SINC, 0, 0) - 1.0), abs(env.overlap(env.SINC, 0, 3)))
    return e < 1e-10, f"max defect {e:.2e}"


def _tensor_symmetry():
    from .coefficients import Tensor4, a1_tensor

    t = Tensor4(1, a1_tensor(1, 0.7, 32), "A1Like")
    e = t.audit()
    return e < 1e-10, f"a1 audit {e:.2e}"


def _forward_identity():
    from .condpdf import ChannelKernels, forwardMap

    K = ChannelKernels(0.0, 1)
    rng = np.random.default_rng(1)
    c = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    e0 = np.abs(forwardMap(c, K, 0.0) - c).max()
    ph = np.exp(0.4j)
    e1 = np.abs(forwardMap(ph * c, K, 0.2) - ph * forwardMap(c, K, 0.2)).max()
    return max(e0, e1) < 1e-12, f"identity {e0:.1e}, phase covariance {e1:.1e}"


def _cond_trivial():
    from .condpdf import ChannelKernels, condCoeffs

    K = ChannelKernels(0.0, 1)
    co = condCoeffs(np.array([0.3, 1j, -0.5]), K, ChannelParams(1, 0.0, 0.0))
    e = max(np.abs(co.H).max(), np.abs(co.F - np.eye(3)).max(), abs(co.lambdaCFactor))
    return e == 0.0, f"max deviation {e:.1e}"


def _roundtrip():
    from .channel_sim import SimGrid, receive, synthesizeInput

    g = SimGrid.default(2, nTime=512)
    rng = np.random.default_rng(2)
    c = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    e = np.abs(receive(synthesizeInput(c, g), ChannelParams(2), g) - c).max()
    return e < 1e-10, f"error {e:.1e}"


def _linear_channel():
    from .channel_sim import SimGrid, simulateSymbols

    g = SimGrid.default(1, nTime=256, nSteps=20)
    c = np.array([1.0, -0.5j, 0.25 + 0.25j])
    e = np.abs(simulateSymbols(c, ChannelParams(1, 2.0, 0.0), g) - c).max()
    return e < 1e-12, f"error {e:.1e}"


def _rect_limit():
    from .information import zeroBetaMI

    p = ChannelParams(0, 0.0, 1.0, 1000.0)
    d = zeroBetaMI(env.RECT, p) - math.log(1000.0)
    return abs(d + 1.0 / 3.0) < 1e-6, f"correction {d:.9f}"


def _popt_gaussian():
    from .distribution import marginalDensity

    T = np.zeros((3,) * 4, complex)
    T[1, 1, 1, 1] = 0.3
    x = np.linspace(0, 3, 7)
    e = np.abs(marginalDensity(0, x, T, ChannelParams(1, 0, 0)) - np.exp(-x * x) / math.pi).max()
    return e == 0.0, f"deviation {e:.1e}"


def _marginal_norm():
    from scipy import integrate

    from .distribution import marginalDensity

    rng = np.random.default_rng(3)
    T = rng.standard_normal((3,) * 4) * 0.2
    T = T + T.transpose(1, 0, 2, 3)
    T = T + T.transpose(0, 1, 3, 2)
    T = T + T.transpose(2, 3, 0, 1)
    p = ChannelParams(1, 0.0, 0.3)
    val = integrate.quad(lambda r: 2 * math.pi * r * float(marginalDensity(0, r, T, p)), 0, np.inf, epsabs=1e-13)[0]
    return abs(val - 1.0) < 1e-8, f"integral {val:.12f}"


def _jsigma_sinc():
    from .jtensors import jSigmaZeroBeta

    v = jSigmaZeroBeta(5)
    return abs(v + 1.26) <= 0.03, f"J_Sigma(M=5) {v:.5f}"


def _fresnel():
    from .specfun import fresnelE, fresnelE_quad

    rng = np.random.default_rng(4)
    a = rng.uniform(-100, 100, 60)
    b = rng.uniform(-15, 15, 60)
    e = max(abs(fresnelE(x, y, method="salzer") - fresnelE_quad(x, y)) for x, y in zip(a, b))
    return e < 1e-6, f"max abs error {e:.2e}"


def _gap_positive():
    from .information import miGap
    from .jtensors import JBundle

    jb = JBundle(0.0, 2)
    g = miGap(jb.JI, ChannelParams(2, 0.0, 0.1))
    return g >= 0.0, f"gap {g:.3e}"


QUICK = [
    ("sinc basis orthonormal", _orthonormal_sinc),
    ("a1 symmetry class", _tensor_symmetry),
    ("forward map identity and phase covariance", _forward_identity),
    ("conditional coefficients at zero nonlinearity", _cond_trivial),
    ("synthesis/projection round trip", _roundtrip),
    ("linear noiseless channel is the identity", _linear_channel),
    ("rectangular per-sample limit", _rect_limit),
    ("zero nonlinearity gives Gaussian marginal", _popt_gaussian),
]
FULL = QUICK + [
    ("marginal normalization", _marginal_norm),
    ("sinc zero-dispersion capacity constant", _jsigma_sinc),
    ("Salzer series accuracy", _fresnel),
    ("mutual-information gap sign", _gap_positive),
]


def run(quick=True):
    out = []
    for name, fn in QUICK if quick else FULL:
        try:
            ok, detail = fn()
        except Exception as e:  # report, do not abort the suite
            ok, detail = False, f"{type(e).__name__}: {e}"
        out.append(CheckResult(name, bool(ok), detail))
    return out
