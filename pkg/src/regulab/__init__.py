"""regulab: a desk-scale numerical laboratory for boundary pointwise regularity
of uniformly elliptic equations F(D^2 u) = f in the plane.

The package provides

* extremal (Pucci-type) operator algebra and an operator catalog,
* analytic test domains with boundary sampling and pointwise Holder
  classification of boundaries and functions,
* a monotone wide-stencil cut-cell finite-difference solver,
* dyadic linear/quadratic jet extraction with empirical decay-rate fits,
* an experiment harness with a command line front end.
"""

from .errors import (
    ConfigurationError,
    GridError,
    InputError,
    InsufficientScalesError,
    NonConvergenceError,
    UnderDeterminedError,
)
from .operators import (
    OperatorSpec,
    SymMatrix,
    catalog_operator,
    check_uniform_ellipticity,
    eval_operator,
    pucci_minus,
    pucci_plus,
    shifted_operator,
    solve_recession_constant,
)
from .geometry import Domain, make_domain, osc_boundary
from .fitting import PolyJet, FitResult, classify_boundary, pointwise_fit
from .grid import Grid, GridFunction, build_grid
from .stencil import DiscreteSystem, discretize
from .solver import comparison_check, solve, solve_barrier
from .campanato import (
    IterationConfig,
    JetTrace,
    RateReport,
    campanato_c1a,
    campanato_c2a,
    modulus_probe,
    rate_fit,
    viscosity_membership,
)
from .normalize import localization_experiment, normalize_problem

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "GridError",
    "InputError",
    "InsufficientScalesError",
    "NonConvergenceError",
    "UnderDeterminedError",
    "OperatorSpec",
    "SymMatrix",
    "catalog_operator",
    "check_uniform_ellipticity",
    "eval_operator",
    "pucci_minus",
    "pucci_plus",
    "shifted_operator",
    "solve_recession_constant",
    "Domain",
    "make_domain",
    "osc_boundary",
    "PolyJet",
    "FitResult",
    "classify_boundary",
    "pointwise_fit",
    "Grid",
    "GridFunction",
    "build_grid",
    "DiscreteSystem",
    "discretize",
    "comparison_check",
    "solve",
    "solve_barrier",
    "IterationConfig",
    "JetTrace",
    "RateReport",
    "campanato_c1a",
    "campanato_c2a",
    "modulus_probe",
    "rate_fit",
    "viscosity_membership",
    "localization_experiment",
    "normalize_problem",
    "__version__",
]
