"""
The regularised interior term
=============================

For alpha >= 1 the pairing of r**(-alpha) phi with rho diverges. The
t**0 coefficient of the heat content is instead the finite part: cut the
integral at eps, replace the divergent piece by its analytic
continuation, and the eps dependence drops out.
"""
import numpy as np

from heatcontent import Cutoff, Profile, i_reg, singular_quad

# Pure powers: the finite part of int_0^1 r**(-alpha) dr is 1/(1 - alpha),
# continued through alpha = 1 where it is 0.
for alpha in (0.5, 1.0, 1.5, 1.9):
    print(f"alpha = {alpha}: I_reg = {i_reg(Profile([1.0], alpha), Profile(1.0)):+.15f}")

# Independence of the cut point, for a profile with a smooth cutoff.
phi = Profile([1.0, -0.4, 0.7], 1.5, Cutoff(0.35, 0.8))
rho = Profile([1.0, 0.3, -0.2])
for eps in (0.02, 0.1, 0.3, 0.6):
    print(f"eps = {eps:4}: {i_reg(phi, rho, eps=eps):.15f}")

# The workhorse underneath is Gauss-Jacobi quadrature with weight r**(-alpha).
res = singular_quad(lambda r: np.cos(r), 0.75)
print(f"\nint_0^1 cos(r) r**-0.75 dr = {res.value:.15f} "
      f"(error estimate {res.abs_error_estimate:.1e}, {res.evaluations} evaluations)")
