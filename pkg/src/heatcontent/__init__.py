"""Small-time heat content asymptotics for singular initial data.

Modules
-------
specfun        Gamma and error functions
geometry       operators, boundary conditions, profiles and boundary jets
coefficients   closed-form expansion coefficients and relation checks
regularize     regularised interior pairing and singular quadrature
solver         spectral, Crank-Nicolson and half-line heat content
asymptotics    exponent bases and least-squares coefficient extraction
scenario       scenario documents, runs and reports
cli            command-line entry point
"""
from .errors import (
    ConvergenceError, DomainError, HeatContentError, IllConditionedWarning, PoleError, ValidationError,
)
from .specfun import EULER_GAMMA, erf, erfc, gamma
from .geometry import (
    DIRICHLET, BoundaryCondition, BoundaryJet, Cutoff, OperatorSpec1D, Profile, RadialFunction,
    WarpedProductSpec, formal_adjoint, jet_from_profiles, robin, warped_jets,
)
from .coefficients import (
    CoefficientSet, EpsilonTable, c_alpha, check_relations, dirichlet_alpha1, dirichlet_coeffs,
    epsilon_table, robin_coeffs,
)
from .regularize import i_reg, regularized_pairing, singular_quad
from .solver import (
    HeatContentSamples, HeatProblem1D, cn_heat_content, halfline_heat_content, spectral_heat_content,
)
from .asymptotics import ExpansionFit, build_basis, fit
from .scenario import Report, Scenario, load_scenario, run_scenario

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "DomainError", "HeatContentError", "IllConditionedWarning", "PoleError",
    "ValidationError", "EULER_GAMMA", "erf", "erfc", "gamma", "DIRICHLET", "BoundaryCondition",
    "BoundaryJet", "Cutoff", "OperatorSpec1D", "Profile", "RadialFunction", "WarpedProductSpec",
    "formal_adjoint", "jet_from_profiles", "robin", "warped_jets", "CoefficientSet", "EpsilonTable",
    "c_alpha", "check_relations", "dirichlet_alpha1", "dirichlet_coeffs", "epsilon_table",
    "robin_coeffs", "i_reg", "regularized_pairing", "singular_quad", "HeatContentSamples",
    "HeatProblem1D", "cn_heat_content", "halfline_heat_content", "spectral_heat_content",
    "ExpansionFit", "build_basis", "fit", "Report", "Scenario", "load_scenario", "run_scenario",
]
