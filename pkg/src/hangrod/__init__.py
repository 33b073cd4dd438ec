"""Hanging-rod eigenproblem: eps u'''' - (y u')' = lambda u on (0, 1).

Direct collocation eigensolver plus matched boundary-layer series for the
small-bending-stiffness limit, with the machinery (special functions,
adaptive quadrature, a two-point BVP solver) implemented in-package.
"""

from .specfun import SpectralBasis, basis
from .quadrature import QuadratureResult, integrate, integrate_log_singular
from .odesolve import BvpProblem, BvpSolution, solve_bvp, continuation
from .asymptotics import (
    BulkCorrections,
    LayerProfile,
    LambdaSeries,
    CompositeEigenfunction,
    bulk_corrections,
    solve_psi,
    c_infty,
    lambda_series,
    lambda_asymptotic,
    composite_eigenfunction,
    lambda0_large_n,
    validity_threshold,
    nondimensionalize,
)
from .eigensolver import ProblemConfig, EigenSolution, ErrorTable, solve, sweep, fit_slope

__version__ = "0.1.0"

__all__ = [
    "SpectralBasis",
    "basis",
    "QuadratureResult",
    "integrate",
    "integrate_log_singular",
    "BvpProblem",
    "BvpSolution",
    "solve_bvp",
    "continuation",
    "BulkCorrections",
    "LayerProfile",
    "LambdaSeries",
    "CompositeEigenfunction",
    "bulk_corrections",
    "solve_psi",
    "c_infty",
    "lambda_series",
    "lambda_asymptotic",
    "composite_eigenfunction",
    "lambda0_large_n",
    "validity_threshold",
    "nondimensionalize",
    "ProblemConfig",
    "EigenSolution",
    "ErrorTable",
    "solve",
    "sweep",
    "fit_slope",
    "__version__",
]
