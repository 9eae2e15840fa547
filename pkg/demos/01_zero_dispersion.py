# %% [markdown]
# Zero-dispersion capacity correction
#
# At betaTilde = 0 the channel rotates each sample by gammaTilde * |X(t)|^2.
# The O(gammaTilde^2) mutual-information correction is gammaTilde^2 * J_Sigma,
# and J_Sigma depends only on the pulse envelope.

# %%
import math

import numpy as np

from nlsecap import envelope as env
from nlsecap.information import ChannelParams, miGap, zeroBetaMI
from nlsecap.jtensors import JBundle, jSigmaZeroBeta

# %% Envelope moments N_lambda = int |s|^lambda dt
for kind in (env.RECT, env.SINC, env.gaussian(0.125)):
    print(kind.tag, "N4 =", round(env.momentN(kind, 4), 6), "N6 =", round(env.momentN(kind, 6), 6))

# %% Rectangular pulses: the correction is exactly -gamma^2 / 3 per symbol
p = ChannelParams(M=0, betaTilde=0.0, gammaTilde=0.2, snr=1000.0)
print("rect correction:", zeroBetaMI(env.RECT, p) - math.log(p.snr), "expected", -0.2**2 / 3)

# %% Sinc pulses: J_Sigma barely depends on the block size
for M in (0, 1, 2, 5):
    print(f"M = {M}: J_Sigma = {jSigmaZeroBeta(M):.5f}")

# %% The gap between the optimal and Gaussian input is O(gamma^4) and non-negative
jb = JBundle(0.0, 2)
for g in (0.05, 0.1, 0.2):
    print(f"gamma = {g}: gap = {miGap(jb.JI, ChannelParams(2, 0.0, g)):.3e}")
