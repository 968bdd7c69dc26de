"""
Recovering coefficients from a solver
=====================================

The half-line problem has a closed-form heat content: an erf profile
paired against the specific heat. Sampling it on a log grid and fitting
the expansion basis recovers the boundary coefficients numerically.
"""
import math
import warnings

import numpy as np

from heatcontent import EULER_GAMMA, Profile, build_basis, c_alpha, fit, i_reg
from heatcontent.asymptotics import ExponentCollisionWarning
from heatcontent.solver import halfline_heat_content

t = np.geomspace(1e-6, 1e-2, 40)

for alpha in (0.5, 1.5):
    prof = Profile([1.0], alpha)
    samples = halfline_heat_content(alpha, prof, t)
    result = fit(samples, build_basis(alpha, k_max=2, n_max=1))
    print(f"alpha = {alpha}")
    print(f"  t^{(1 - alpha) / 2:+.2f} coefficient {result.value((1 - alpha) / 2):+.12f}"
          f"   c_alpha = {c_alpha(alpha).real:+.12f}")
    print(f"  constant          {result.value(0.0):+.12f}"
          f"   I_reg   = {i_reg(prof, Profile(1.0)):+.12f}")
    print(f"  condition number {result.condition_number:.2e}")

# At alpha = 1 the boundary and interior exponents collide and logarithms appear.
with warnings.catch_warnings():
    warnings.simplefilter("ignore", ExponentCollisionWarning)
    basis = build_basis(1.0, k_max=2, n_max=1)
prof = Profile([1.0], 1.0)
result = fit(halfline_heat_content(1.0, prof, t), basis)
print("\nalpha = 1")
print(f"  ln t coefficient {result.value(0.0, is_log=True):+.12f}   expected -1/2")
print(f"  constant         {result.value(0.0):+.12f}"
      f"   I_reg + gamma/2 = {i_reg(prof, Profile(1.0)) + EULER_GAMMA / 2:+.12f}")
print(f"  (ln of the smallest t is {math.log(t[0]):.1f}, so the log column dominates)")
