"""Rejection samplers for the O(gamma^2) optimal input density.

Every sampler draws complex Gaussian proposals and accepts with the
perturbative bracket divided by a grid-estimated bound.  Work is batched:
each round proposes for all still-pending rows at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distribution import SymbolSequence, marginalD1, pairD
from .information import ChannelParams, diagonalSum

__all__ = [
    "SamplerConfig",
    "SamplerStats",
    "MaxRejectsExceeded",
    "NegativeDensity",
    "sampleMarginal",
    "sampleMarginalBatch",
    "sampleChain",
    "sampleJointSmallM",
    "sampleIndependent",
]

X_CUT = 6.0
SAFETY = 1.1
DEN_FLOOR = 0.5


class MaxRejectsExceeded(RuntimeError):
    pass


class NegativeDensity(RuntimeError):
    pass


@dataclass(frozen=True)
class SamplerConfig:
    chainOrder: str = "chain"          # "independent", "chain" or "joint"
    seed: int = 0
    maxRejects: int = 200
    negativityPolicy: str = "clip"     # "clip" or "abort"
    conditional: str = "pair"          # "pair" or "product"

    def __post_init__(self):
        if self.chainOrder not in ("independent", "chain", "joint"):
            raise ValueError(f"unknown chain order {self.chainOrder!r}")
        if self.negativityPolicy not in ("clip", "abort"):
            raise ValueError(f"unknown negativity policy {self.negativityPolicy!r}")
        if self.conditional not in ("pair", "product"):
            raise ValueError(f"unknown conditional form {self.conditional!r}")
        if self.maxRejects < 1:
            raise ValueError("maxRejects must be positive")


@dataclass
class SamplerStats:
    proposals: int = 0
    accepted: int = 0
    clipped: int = 0          # proposals that landed where the bracket is negative
    boundExceeded: int = 0    # proposals whose ratio exceeded the envelope bound
    extra: dict = field(default_factory=dict)

    @property
    def acceptance(self) -> float:
        return self.accepted / max(1, self.proposals)


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def _accept(ratio_unclipped, bound, rng, cfg, stats):
    neg = ratio_unclipped < 0
    if neg.any():
        if cfg.negativityPolicy == "abort":
            raise NegativeDensity("proposal fell in a region where the perturbative density is negative")
        stats.clipped += int(neg.sum())
    ratio = np.clip(ratio_unclipped, 0.0, None) / bound
    over = ratio > 1.0
    stats.boundExceeded += int(over.sum())
    return rng.random(ratio.shape) < ratio


def _marginal_bound(q, JI, params):
    x = np.linspace(0.0, X_CUT, 601)
    d = marginalD1(q, x, JI, params.M)
    return SAFETY * (1.0 + params.gammaTilde**2 * max(0.0, float(d.max())))


def sampleMarginalBatch(q, n, JI, params: ChannelParams, rng, cfg=SamplerConfig(), stats=None):
    """n independent draws from the one-symbol marginal."""
    stats = stats if stats is not None else SamplerStats()
    g2 = params.gammaTilde**2
    K = _marginal_bound(q, JI, params)
    out = np.empty(n, dtype=complex)
    pending = np.arange(n)
    for _ in range(cfg.maxRejects):
        if pending.size == 0:
            break
        c = _cn(rng, pending.size)
        stats.proposals += pending.size
        r = 1.0 + g2 * marginalD1(q, np.abs(c), JI, params.M)
        ok = _accept(r, K, rng, cfg, stats)
        out[pending[ok]] = c[ok]
        stats.accepted += int(ok.sum())
        pending = pending[~ok]
    if pending.size:
        raise MaxRejectsExceeded(f"{pending.size} marginal draws exceeded {cfg.maxRejects} rounds")
    stats.extra["marginalBound"] = K
    return out


def sampleMarginal(q, JI, params: ChannelParams, rng, cfg=SamplerConfig()) -> complex:
    return complex(sampleMarginalBatch(q, 1, JI, params, rng, cfg)[0])


def sampleIndependent(params: ChannelParams, nSeq, rng):
    return _cn(rng, (nSeq, params.n))


# polar grid used to bound the conditional bracket
_RG = np.linspace(0.0, X_CUT, 49)
_TG = np.linspace(0.0, 2 * np.pi, 48, endpoint=False)
_GRID = (_RG[:, None] * np.exp(1j * _TG[None, :])).ravel()


def _cond_bracket(k, j, c, cprev, JI, params, form="pair"):
    """Acceptance bracket of C_k given C_j = cprev, relative to the Gaussian proposal.

    "pair" divides the O(gamma^2) pair density by the O(gamma^2) marginal of
    the conditioning symbol, so every one- and two-symbol marginal of the
    chain equals its truncated O(gamma^2) form.  "product" is
    (1 + g2 D1_k)(1 + g2 D^{k,j}) with each factor clipped at zero, which
    agrees only through O(gamma^2).  Where the conditioning marginal bracket
    falls below DEN_FLOOR the quotient is meaningless and the linear bracket
    1 + g2 (D1_k + D^{k,j}) is used instead.
    """
    g2 = params.gammaTilde**2
    M = params.M
    dk = marginalD1(k, np.abs(c), JI, M)
    dkj = pairD(k, j, c, cprev, JI, M)
    if form == "product":
        return np.clip(1.0 + g2 * dk, 0.0, None) * np.clip(1.0 + g2 * dkj, 0.0, None)
    dj = marginalD1(j, np.abs(cprev), JI, M)
    den = 1.0 + g2 * dj
    ok = den >= DEN_FLOOR
    pair = (1.0 + g2 * (dj + dk + dkj)) / np.where(ok, den, 1.0)
    return np.where(ok, pair, 1.0 + g2 * (dk + dkj))


def _cond_bounds(k, j, cprev, JI, params, form, chunk=2048):
    out = np.empty(cprev.size)
    for s in range(0, cprev.size, chunk):
        cp = cprev[s : s + chunk]
        vals = _cond_bracket(k, j, _GRID[None, :], cp[:, None], JI, params, form)
        out[s : s + chunk] = vals.max(axis=1)
    return SAFETY * np.maximum(out, 1.0)


def sampleChain(M, JI, params: ChannelParams, cfg=SamplerConfig(), rng=None, nSeq=None, stats=None):
    """Nearest-neighbour chain: C_{-M} from its marginal, then C_k | C_{k-1}.

    Returns a SymbolSequence when nSeq is None, else an (nSeq, 2M+1) array.
    """
    if params.M != M:
        raise ValueError("params.M does not match M")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    stats = stats if stats is not None else SamplerStats()
    single = nSeq is None
    N = 1 if single else int(nSeq)
    n = 2 * M + 1
    out = np.empty((N, n), dtype=complex)
    out[:, 0] = sampleMarginalBatch(-M, N, JI, params, rng, cfg, stats)
    for col in range(1, n):
        k, j = col - M, col - 1 - M
        cprev = out[:, col - 1]
        K = _cond_bounds(k, j, cprev, JI, params, cfg.conditional)
        pending = np.arange(N)
        for _ in range(cfg.maxRejects):
            if pending.size == 0:
                break
            c = _cn(rng, pending.size)
            stats.proposals += pending.size
            r = _cond_bracket(k, j, c, cprev[pending], JI, params, cfg.conditional)
            ok = _accept(r, K[pending], rng, cfg, stats)
            out[pending[ok], col] = c[ok]
            stats.accepted += int(ok.sum())
            pending = pending[~ok]
        if pending.size:
            raise MaxRejectsExceeded(f"{pending.size} chain draws exceeded {cfg.maxRejects} rounds")
    return SymbolSequence(M, out[0]) if single else out


def _joint_bracket(C, JI, params):
    T = getattr(JI, "values", JI)
    n = C.shape[1]
    Cb = np.conj(C)
    quart = np.einsum("abcd,na,nb,nc,nd->n", T, C, C, Cb, Cb, optimize=True).real
    jsum = diagonalSum(T).real
    return 1.0 + params.gammaTilde**2 * (quart + jsum * (1.0 - 2.0 / n * np.sum(np.abs(C) ** 2, axis=1)))


def sampleJointSmallM(M, JI, params: ChannelParams, cfg=SamplerConfig(), rng=None, nSeq=None, stats=None):
    """Exact-joint rejection sampling of the full O(gamma^2) density, M <= 2."""
    if M > 2:
        raise ValueError("joint sampling is limited to M <= 2")
    if params.M != M:
        raise ValueError("params.M does not match M")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    stats = stats if stats is not None else SamplerStats()
    single = nSeq is None
    N = 1 if single else int(nSeq)
    n = 2 * M + 1
    # bound from a large pilot batch of proposals, with the safety margin
    pilot = _cn(np.random.default_rng(cfg.seed ^ 0x5EED), (200_000, n))
    K = SAFETY * max(1.0, float(_joint_bracket(pilot, JI, params).max()))
    stats.extra["jointBound"] = K
    out = np.empty((N, n), dtype=complex)
    pending = np.arange(N)
    for _ in range(cfg.maxRejects):
        if pending.size == 0:
            break
        C = _cn(rng, (pending.size, n))
        stats.proposals += pending.size
        ok = _accept(_joint_bracket(C, JI, params), K, rng, cfg, stats)
        out[pending[ok]] = C[ok]
        stats.accepted += int(ok.sum())
        pending = pending[~ok]
    if pending.size:
        raise MaxRejectsExceeded(f"{pending.size} joint draws exceeded {cfg.maxRejects} rounds")
    return SymbolSequence(M, out[0]) if single else out
