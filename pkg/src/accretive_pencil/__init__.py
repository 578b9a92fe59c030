"""Quadratic operator pencils with accretive coefficients.

Tools to factor ``lam^2 I - 2 lam B - C`` into linear factors, check the
accretivity hypotheses behind the factorization, solve the associated
two-point problem in closed form, and run a discretized elliptic example.
"""

from .bvp import BvpProblem, BvpSolution, Forcing, direct_solve, solve_bvp
from .estimators import FactorizedBVPSolver, PencilFactorizer
from .exceptions import (
    ConstraintViolated,
    ExpmOverflow,
    NegativeRealEigenvalue,
    NonConvergence,
    PencilError,
    SearchFailed,
    SingularResolvent,
    SingularSystem,
)
from .matfun import balakrishnan_power, expm, principal_sqrt
from .operator_core import Sector, accretivity_margin, numerical_range, sector_test
from .pencil import Convention, Factorization, PencilSpec, factorize

__version__ = "0.1.0"

__all__ = [
    "BvpProblem",
    "BvpSolution",
    "Forcing",
    "direct_solve",
    "solve_bvp",
    "FactorizedBVPSolver",
    "PencilFactorizer",
    "ConstraintViolated",
    "ExpmOverflow",
    "NegativeRealEigenvalue",
    "NonConvergence",
    "PencilError",
    "SearchFailed",
    "SingularResolvent",
    "SingularSystem",
    "balakrishnan_power",
    "expm",
    "principal_sqrt",
    "Sector",
    "accretivity_margin",
    "numerical_range",
    "sector_test",
    "Convention",
    "Factorization",
    "PencilSpec",
    "factorize",
]
