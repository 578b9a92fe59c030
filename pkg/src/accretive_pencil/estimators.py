"""Estimator-style wrappers (``fit`` / ``predict`` / ``get_params``)."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .bvp import BvpProblem, solve_bvp
from .pencil import Convention, PencilSpec, factorize, ordered_residual, symmetrized_residual

__all__ = ["PencilFactorizer", "FactorizedBVPSolver"]


def _as_pencil(X):
    if isinstance(X, PencilSpec):
        return X
    B, C = X
    return PencilSpec(B, C)


class PencilFactorizer(BaseEstimator):
    """Factor ``lam^2 I - 2 lam B - C`` into ``(lam - Z1)(lam - Z2)``.

    Parameters
    ----------
    convention : {"real_root", "rotated_root"}
    method : {"schur", "denman-beavers"}
        Square-root algorithm.

    Attributes
    ----------
    factorization_ : Factorization
    Z1_, Z2_, S_ : ndarray
    """

    def __init__(self, convention="real_root", method="schur"):
        self.convention = convention
        self.method = method

    def fit(self, X, y=None):
        """``X`` is a :class:`PencilSpec` or a pair ``(B, C)``."""
        self.pencil_ = _as_pencil(X)
        self.factorization_ = factorize(self.pencil_, Convention.parse(self.convention), self.method)
        self.Z1_ = self.factorization_.Z1
        self.Z2_ = self.factorization_.Z2
        self.S_ = self.factorization_.S
        return self

    def predict(self, lams):
        """Ordered factorization residual at each ``lam``."""
        check_is_fitted(self, "factorization_")
        return np.array([ordered_residual(self.factorization_, self.pencil_, lam)
                         for lam in np.atleast_1d(lams)])

    def score(self, lams, y=None):
        """Negative worst symmetrized residual relative to the pencil scale."""
        check_is_fitted(self, "factorization_")
        lams = np.atleast_1d(lams)
        worst = max(symmetrized_residual(self.factorization_, self.pencil_, lam)
                    / (abs(lam) ** 2 + self.pencil_.scale()) for lam in lams)
        return -worst


class FactorizedBVPSolver(BaseEstimator):
    """Closed-form two-point solver with ``fit(problem)`` and ``predict(x)``.

    Parameters
    ----------
    convention : {"real_root", "rotated_root"}
    integration : {"exact-linear", "gauss4"}
    sixth_term : {"derived", "printed", "exponent_only"}
    """

    def __init__(self, convention="real_root", integration="exact-linear", sixth_term="derived"):
        self.convention = convention
        self.integration = integration
        self.sixth_term = sixth_term

    def fit(self, problem, y=None):
        self.problem_ = problem
        self.factorization_ = factorize(problem.pencil, Convention.parse(self.convention))
        self.solution_ = solve_bvp(problem, self.factorization_, self.integration, self.sixth_term)
        return self

    def predict(self, x):
        """Solution values at points ``x`` in [0, 1], shape ``(len(x), n)``."""
        check_is_fitted(self, "solution_")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any((x < 0) | (x > 1)):
            raise ValueError("x must lie in [0, 1]")
        grid = np.union1d(x, [0.0, 1.0])
        p = self.problem_
        prob = BvpProblem(p.pencil, p.u0, p.u1, p.f, grid, p.p_exponent)
        sol = solve_bvp(prob, self.factorization_, self.integration, self.sixth_term)
        return sol.u[np.searchsorted(grid, x)]
