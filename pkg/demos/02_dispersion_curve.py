# %% [markdown]
# J_Sigma versus dispersion
#
# Dispersion spreads each pulse over its neighbours, which dilutes the
# nonlinear penalty. |J_Sigma| is largest at betaTilde = 0 and falls off
# quadratically near zero.  M = 2 keeps this demo under a few minutes;
# the CLI `nlsecap mi-curve --M 5` produces the full curve.

# %%
import numpy as np

from nlsecap.coefficients import QuadratureSpec
from nlsecap.jtensors import jSigmaContracted

spec = QuadratureSpec(32, 40, 10, 4)
betas = [0.0, 0.5, 1.0, 2.0, 5.0]

# %%
curve = [jSigmaContracted(b, 2, spec) for b in betas]
for b, j in zip(betas, curve):
    print(f"betaTilde = {b:4.1f}  J_Sigma = {j:.5f}")

# %% Small-beta behaviour: the linear coefficient of a quadratic fit is tiny
small = [0.0, 0.05, 0.1, 0.2]
c2, c1, c0 = np.polyfit(small, [jSigmaContracted(b, 2, spec) for b in small], 2)
print("fit:", c0, c1, c2)
