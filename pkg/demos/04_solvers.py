"""
Three routes to the same heat content
=====================================

A spectral sum over Sturm-Liouville eigenpairs, Crank-Nicolson finite
elements on a graded mesh, and (for the half-line) an exact formula.
"""
import numpy as np

from heatcontent import DIRICHLET, Cutoff, HeatProblem1D, OperatorSpec1D, Profile, robin
from heatcontent.solver import cn_heat_content, eigensystem, spectral_heat_content

# Robin at 0, Dirichlet at 1: the eigenvalues solve a transcendental equation.
op = OperatorSpec1D(b=[0.8], bc_left=robin(0.6), bc_right=DIRICHLET)
es = eigensystem(op, 5)
print("first eigenvalues:", np.round(es.lambdas, 10))

phi = Profile([1.0, 0.3], -0.5, Cutoff(0.5, 0.9))  # r**0.5 near the boundary
rho = Profile([1.0, 0.5])
problem = HeatProblem1D(op, phi, rho)

t = np.geomspace(1e-2, 1.0, 6)
spectral = spectral_heat_content(problem, t)
cn = cn_heat_content(problem, t)
print(f"\n{'t':>8} {'spectral':>18} {'Crank-Nicolson':>18} {'rel diff':>10}")
for ti, a, b in zip(t, spectral.beta, cn.beta):
    print(f"{ti:8.4f} {a:18.12f} {b:18.12f} {abs(a - b) / abs(a):10.2e}")

# Samples round-trip through a lossless CSV.
print("\n" + spectral.to_csv().splitlines()[0], "...", len(spectral), "rows")
