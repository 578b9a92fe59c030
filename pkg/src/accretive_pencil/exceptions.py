"""Exception types raised by the numerical routines."""


class PencilError(Exception):
    """Base class for all package errors."""


class SingularResolvent(PencilError):
    """``lambda I - A`` is numerically singular."""

    def __init__(self, sigma_min, lam=None):
        self.sigma_min = float(sigma_min)
        self.lam = lam
        super().__init__(
            f"resolvent is numerically singular at lambda={lam!r} "
            f"(smallest singular value {self.sigma_min:.3e})"
        )


class NegativeRealEigenvalue(PencilError):
    """The principal square root does not exist (eigenvalue on (-inf, 0])."""

    def __init__(self, eigenvalue):
        self.eigenvalue = complex(eigenvalue)
        super().__init__(
            f"eigenvalue {self.eigenvalue:.6g} lies on the closed negative real axis"
        )


class NonConvergence(PencilError):
    def __init__(self, iterations, residual):
        self.iterations = int(iterations)
        self.residual = float(residual)
        super().__init__(
            f"iteration did not converge after {self.iterations} steps "
            f"(residual {self.residual:.3e})"
        )


class ExpmOverflow(PencilError, OverflowError):
    """Matrix exponential overflowed; carries the scaling diagnostics."""

    def __init__(self, norm, squarings):
        self.norm = float(norm)
        self.squarings = int(squarings)
        super().__init__(
            f"matrix exponential overflowed (1-norm {self.norm:.3e}, "
            f"~{self.squarings} squarings needed)"
        )


class SingularSystem(PencilError):
    def __init__(self, what, sigma_min):
        self.what = what
        self.sigma_min = float(sigma_min)
        super().__init__(f"{what} is singular (smallest singular value {self.sigma_min:.3e})")


class SearchFailed(PencilError):
    pass


class ConstraintViolated(PencilError):
    pass
