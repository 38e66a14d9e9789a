"""Numerical geometry of quasi-minimal biconservative surfaces in neutral 4-space."""

from .errors import NeutralGeomError
from .families import BUILTINS, builtin, generate, parse_family_spec, solve_eta_prime
from .geometry import SemiGeodesicMetric, invariant_L, local_geometry, point_geometry
from .jets import Jet, fd_jet, variables
from .linalg import causal_character, inner4, lightcone_member, solve_normal_frame
from .residuals import ResidualReport, Tolerances, classify, evaluate, lemma4_extract

__all__ = [
    "BUILTINS", "Jet", "NeutralGeomError", "ResidualReport", "SemiGeodesicMetric", "Tolerances",
    "builtin", "causal_character", "classify", "evaluate", "fd_jet", "generate", "inner4",
    "invariant_L", "lemma4_extract", "lightcone_member", "local_geometry", "parse_family_spec",
    "point_geometry", "solve_eta_prime", "solve_normal_frame", "variables",
]
