# %% [markdown]
# Sampling from the optimal input distribution
#
# The O(gamma^2) optimal input density is a Gaussian times a polynomial
# bracket. Rejection sampling with a Gaussian proposal draws from it;
# a nearest-neighbour chain couples adjacent symbols.

# %%
import math

import numpy as np

from nlsecap.distribution import correlatorMatrix, marginalDensity
from nlsecap.information import ChannelParams
from nlsecap.jtensors import JBundle
from nlsecap.sampler import SamplerConfig, SamplerStats, sampleChain

M = 1
JI = JBundle(0.0, M).JI
p = ChannelParams(M, 0.0, 0.2)

# %% The marginal density against the Gaussian
x = np.linspace(0, 3, 7)
print(np.c_[x, np.exp(-x * x) / math.pi, marginalDensity(0, x, JI, p)])

# %% Chain samples reproduce the analytic correlators
stats = SamplerStats()
S = sampleChain(M, JI, p, SamplerConfig(seed=1), np.random.default_rng(1), nSeq=20000, stats=stats)
emp = S.T @ S.conj() / len(S)
print("acceptance:", round(stats.acceptance, 3), "clipped:", stats.clipped)
print("empirical <C_k conj C_m>:\n", np.round(emp, 3))
print("analytic:\n", np.round(correlatorMatrix(JI, p), 3))
