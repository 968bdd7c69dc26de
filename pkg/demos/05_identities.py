"""
Identities checked by simulation
================================

Two exact statements about heat contents, verified with the solvers.

If rho vanishes at the boundary, differentiating in t moves the operator
onto rho: d/dt beta(phi, rho) = -beta(phi, D~ rho).

Factor D1 = A*A and D2 = A A* with A = d/dr + b. Then the Robin problem for
D1 and the Dirichlet problem for D2 are linked by
d/dt beta(phi, rho, D1) = -beta(A phi, A rho, D2).
"""
from heatcontent import run_scenario

for name in ("recursion", "factorized-pair"):
    report = run_scenario(name)
    print(f"{name}: {'pass' if report.passed else 'FAIL'}")
    for c in report.comparisons:
        print(f"  {c.term}: lhs {c.fitted:+.10f}  rhs {c.analytic:+.10f}  rel {c.rel_error:.1e}")
