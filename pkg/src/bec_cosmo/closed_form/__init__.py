"""Closed-form and implicit solutions: branch solutions, appendix integrals, family relations."""

from .appendix import RegionError, Window, appendix_integral, one_real_amplitude
from .elliptic import BranchSolution, EllipticBranch, theta, theta_u, w_of, z_branch
from .families import (
    FamilyKind,
    GammaFamily,
    ImplicitRelation,
    Model,
    UnsupportedClosedForm,
    family_integral,
    hypergeometric_relation,
    i4_closure,
    lambda_coefficient,
    matter_relation,
    omega_sq_law,
    radiation_relation,
    radicand,
    radicand_exponent,
    relation_for,
    stiff_explicit,
)
from .solve import Bound, FamilySolution, radicand_bounds, solve_family

__all__ = [
    "RegionError", "Window", "appendix_integral", "one_real_amplitude",
    "BranchSolution", "EllipticBranch", "theta", "theta_u", "w_of", "z_branch",
    "FamilyKind", "GammaFamily", "ImplicitRelation", "Model", "UnsupportedClosedForm",
    "family_integral", "hypergeometric_relation", "i4_closure", "lambda_coefficient",
    "matter_relation", "omega_sq_law", "radiation_relation", "radicand", "radicand_exponent",
    "relation_for", "stiff_explicit",
    "Bound", "FamilySolution", "radicand_bounds", "solve_family",
]
