"""
A warped product that reduces to an interval
============================================

On a torus times [0, 1] with metric exp(2 f(r)) dy^2 + dr^2 the choice
phi = r**(-alpha), rho = exp(-f) separates, and the heat content is the
torus volume times an interval heat content. The boundary jets of the
warped geometry predict the interval coefficients.
"""
from heatcontent import WarpedProductSpec, dirichlet_coeffs, run_scenario, warped_jets

spec = WarpedProductSpec(warps=[[0.0, 1.0]], deltas=[0.0], dim=2)  # f(r) = r
jet = warped_jets(spec, 0.5)
print("jet:", {k: v for k, v in jet.to_dict().items() if v})
print("coefficients:", dirichlet_coeffs(jet, 0.5).to_dict())

report = run_scenario("warped-interval-a05")
for c in report.comparisons:
    print(f"{c.term:>10}: fitted {c.fitted:+.10f}  analytic {c.analytic:+.10f}  rel {c.rel_error:.1e}")
