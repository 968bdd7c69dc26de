"""
Closed-form boundary coefficients
=================================

The heat content of a problem whose initial temperature blows up like
r**(-alpha) at the boundary has a small-time expansion in the powers
t**((1 + k - alpha)/2). Its coefficients are explicit in alpha and in a
handful of boundary numbers collected in a BoundaryJet.
"""
import math

from heatcontent import BoundaryJet, c_alpha, check_relations, dirichlet_coeffs, robin_coeffs

# The leading Dirichlet constant, a ratio of gamma functions.
for alpha in (-0.5, 0.0, 0.5, 1.5):
    print(f"c_alpha({alpha:+.1f}) = {c_alpha(alpha).real:+.12f}")

# At alpha = 0 it reduces to the familiar -2/sqrt(pi) of smooth data.
print("-2/sqrt(pi)    =", -2 / math.sqrt(math.pi))

# A jet bundles the radial Taylor data of phi and rho with curvature terms.
jet = BoundaryJet(phi0=1.0, phi1=0.3, rho0=1.0, rho1=-0.4, rho2=0.3, Laa=0.2, E=0.1)
print("\nDirichlet, alpha = 0.5:", dirichlet_coeffs(jet, 0.5).to_dict())

# Robin data needs Re(alpha) < 1; the b0 term vanishes.
robin_jet = BoundaryJet(phi0=1.0, phi1=0.3, rho0=1.0, rho1=-0.4, S=0.5)
print("Robin,     alpha = -0.5:", robin_coeffs(robin_jet, -0.5).to_dict())

# Everything is analytic in alpha, so complex exponents work too.
print("Dirichlet, alpha = 0.3+0.2j: b0 =", dirichlet_coeffs(jet, 0.3 + 0.2j).b0)

# The constant tables satisfy a web of identities; check them at one alpha.
report = check_relations(0.37)
print(f"\n{len(report.evaluated)} relations at alpha = 0.37, max residual {report.max_residual:.2e}")
