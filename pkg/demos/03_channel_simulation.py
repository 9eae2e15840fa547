# %% [markdown]
# Split-step channel versus the perturbative forward map
#
# Noiseless propagation of three sinc pulses, compared with the map
# C -> C + i g cubic(C) - g^2 quintic(C).  The residual falls as g^3.

# %%
import numpy as np

from nlsecap.channel_sim import SimGrid, mcCorrelators, simulateSymbols
from nlsecap.coefficients import QuadratureSpec
from nlsecap.condpdf import ChannelKernels
from nlsecap.information import ChannelParams

M, beta = 1, 1.0
rng = np.random.default_rng(3)
C = (rng.standard_normal(3) + 1j * rng.standard_normal(3)) / np.sqrt(2)
K = ChannelKernels(beta, M, QuadratureSpec(32, 40, 10, 4))
cu, qu = K.cubic(C[None])[0], K.quintic(C[None])[0]

# %% A long periodic box keeps the sinc tails from wrapping around
grid = SimGrid(4096, 201.0, 400, 8.0)
gs = np.array([0.025, 0.05, 0.1, 0.2])
res = [np.abs(simulateSymbols(C, ChannelParams(M, beta, g), grid) - (C + 1j * g * cu - g * g * qu)).max() for g in gs]
print("residuals:", res)
print("log-log slope:", np.polyfit(np.log(gs), np.log(res), 1)[0])

# %% Noisy runs: the received covariance at gamma = 0 is 1/snr per symbol
g2 = SimGrid.default(M, nTime=512, nSteps=100)
rep = mcCorrelators(C, ChannelParams(M, beta, 0.0, 100.0), g2, nRuns=2000, seed=1)
print("variance:", np.diag(rep.covCCbar).real, "+-", np.diag(rep.covCCbarSE).real)
