"""Second-order correction tensors J, J_Lambda, J_I and the scalar J_Sigma."""
from __future__ import annotations

import numpy as np

from . import envelope as env
from .coefficients import (
    DEFAULT_SPEC,
    GHEngine,
    QuadratureSpec,
    Tensor4,
    a1_tensor,
    b1_tensor,
    build_all,
)

__all__ = [
    "buildJ",
    "buildJLambda",
    "JI",
    "jSigma",
    "jSigmaContracted",
    "jSigmaZeroBeta",
    "symmetrizedJI",
    "JBundle",
]


def _a2_bracket(A2L, A2P):
    """Combination of contracted A2 terms entering J, before conjugate closure."""
    return (
        A2P
        - A2L
        - A2L.transpose(1, 0, 2, 3)
        - A2L.transpose(0, 1, 3, 2)
        - A2L.transpose(1, 0, 3, 2)
    )


def buildJ(a1, A2L, A2P):
    """J^{s1 s2; s3 s4} from dense a1 and contracted A2 tensors (arrays or Tensor4)."""
    a1, A2L, A2P = (getattr(x, "values", x) for x in (a1, A2L, A2P))
    t1 = 2.0 * np.einsum("qacr,rbdq->abcd", a1, a1, optimize=True)
    t2 = 2.0 * np.einsum("qbcr,radq->abcd", a1, a1, optimize=True)
    t3 = -np.einsum("abrq,rqcd->abcd", a1, a1, optimize=True)
    B = _a2_bracket(A2L, A2P)
    return t1 + t2 + t3 + B + np.conj(B.transpose(2, 3, 0, 1))


def buildJLambda(b1, b2):
    b1, b2 = (getattr(x, "values", x) for x in (b1, b2))
    return 2.0 * np.einsum("abrq,qrcd->abcd", b1, b1, optimize=True) - 2.0 * b2


def JI(J, JL):
    return getattr(J, "values", J) + getattr(JL, "values", JL)


def _diag_sum(T):
    n = T.shape[0]
    r = np.arange(n)
    R, S = np.meshgrid(r, r, indexing="ij")
    return T[R, S, R, S].sum() + T[R, S, S, R].sum()


def jSigma(JIvals) -> float:
    """J_Sigma = sum_{r,s} (J_I^{rs;rs} + J_I^{rs;sr}) / (2M+1)."""
    T = getattr(JIvals, "values", JIvals)
    val = _diag_sum(T) / T.shape[0]
    return float(val.real)


def symmetrizedJI(JIvals):
    """Symmetrise over the pair swaps and Hermitian transpose."""
    T = getattr(JIvals, "values", JIvals)
    S = 0.25 * (T + T.transpose(1, 0, 2, 3) + T.transpose(0, 1, 3, 2) + T.transpose(1, 0, 3, 2))
    return 0.5 * (S + np.conj(S.transpose(2, 3, 0, 1)))


class JBundle:
    """All tensors for one (betaTilde, M, envelope); built lazily, reused."""

    def __init__(self, betaTilde, M, spec: QuadratureSpec = DEFAULT_SPEC, envelope=env.SINC, cache_dir=None):
        self.betaTilde = float(betaTilde)
        self.M = int(M)
        self.spec = spec
        self.envelope = envelope
        self.tensors = build_all(self.betaTilde, self.M, spec, envelope, cache_dir)

    def _t(self, values, sym):
        return Tensor4(self.M, values, sym, {"betaTilde": self.betaTilde, "M": self.M})

    @property
    def J(self):
        t = self.tensors
        return self._t(buildJ(t["a1"], t["A2L"], t["A2P"]), "JLike")

    @property
    def JLambda(self):
        t = self.tensors
        return self._t(buildJLambda(t["b1"], t["b2"]), "JLike")

    @property
    def JI(self):
        return self._t(JI(self.J, self.JLambda), "JLike")

    @property
    def jSigma(self):
        return jSigma(self.JI)


def jSigmaContracted(betaTilde, M, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """J_Sigma without forming dense A2 or b2 tensors.

    The A2 and b2 parts of the diagonal sum reduce to three scalar
    contractions that the quadrature engine accumulates directly.
    """
    if betaTilde == 0:
        return jSigmaZeroBeta(M)
    n = 2 * M + 1
    a = a1_tensor(M, betaTilde, spec.legendreOrder)
    b = b1_tensor(M, betaTilde, spec.legendreOrder)
    t = 2.0 * np.einsum("qacr,rbdq->abcd", a, a, optimize=True)
    t += 2.0 * np.einsum("qbcr,radq->abcd", a, a, optimize=True)
    t -= np.einsum("abrq,rqcd->abcd", a, a, optimize=True)
    t += 2.0 * np.einsum("abrq,qrcd->abcd", b, b, optimize=True)
    base = _diag_sum(t)
    s = GHEngine(betaTilde, M, spec, "A2").run(sums=["J1", "J2"])["sums"]
    sb = GHEngine(betaTilde, M, spec, "b2").run(sums=["B"])["sums"]
    total = base - 4.0 * (2.0 * s["J1"] + s["J2"]).real - 4.0 * sb["B"]
    return float(total.real) / n


def jSigmaZeroBeta(M, envelope=env.SINC, h=None, T=None) -> float:
    """Zero-dispersion J_Sigma from time-domain kernels.

    With S(t,u) = sum_r s(t-r) s(u-r) and D(t) = S(t,t):
    (2M+1) J_Sigma = 3 int S^4 + 4 int S(t,u)^2 D(t) D(u) - (22/3) int D^3.
    """
    n = 2 * M + 1
    if envelope.variant == "rect":
        return -1.0 / 3.0
    if envelope.variant == "sinc":
        h = 0.25 if h is None else h
        T = 200.0 + M if T is None else T
    else:
        tau = envelope.tauOverT0
        h = tau / 6.0 if h is None else h
        T = M + 10.0 * tau + 1.0 if T is None else T
    k = int(round(T / h))
    t = h * np.arange(-k, k + 1)
    s = np.stack([env.evalTime(envelope, t - r) for r in range(-M, M + 1)])
    D = np.sum(s * s, axis=0)
    S = s.T @ s
    S2 = S * S
    quartic = h * h * np.sum(S2 * S2)
    cross = h * h * (D @ S2 @ D)
    cubic = h * np.sum(D**3)
    return float((3.0 * quartic + 4.0 * cross - 22.0 / 3.0 * cubic) / n)
