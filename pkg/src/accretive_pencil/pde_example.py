"""Second-order elliptic problem on the unit square with a first-order ``B``.

The problem is::

    u_xx - 2 (p0 d_y + p1) u_x + (alpha p0 d_y + alpha p1 + beta) u - gamma u = f

on ``(0, 1)^2`` with ``u(0, y) = u0(y)``, ``u(1, y) = u1(y)`` and
``u(x, 0) = u(x, 1) = 0``.  In ``y`` the operators ``B = p0 d_y + p1`` and
``C = alpha B + beta`` are discretized by centered differences on interior
nodes; the ``x``-problem is then the abstract two-point problem with
``C_abs = gamma I - C``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bvp import BvpProblem, Forcing, solve_bvp
from .exceptions import ConstraintViolated, SearchFailed, SingularSystem
from .matfun import principal_sqrt
from .operator_core import Sector, accretivity_margin, sector_test
from .pencil import Convention, PencilSpec, factor_shift_search, factors_from_root, ordered_residual
from .semigroup import contraction_check

__all__ = [
    "CoefficientFunction",
    "PdeCoefficients",
    "Bounds",
    "ClaimReport",
    "ExampleResult",
    "discretize_b",
    "discretize_c",
    "compute_bounds",
    "verify_claims",
    "adjudicate_convention",
    "assemble_2d",
    "solve_example",
    "manufactured_case",
    "default_coefficients",
]

CLAIM_NOTE = "discrete check on the grid: consistency with the continuous claim, not a proof"
ADJUDICATION_RTOL = 1e-8


@dataclass(frozen=True)
class CoefficientFunction:
    """A real coefficient on [0, 1], either a polynomial or samples.

    ``kind="poly"`` takes ascending coefficients; ``kind="samples"`` takes
    values on a strictly increasing grid covering [0, 1] and interpolates
    linearly.
    """

    kind: str
    coeffs: tuple = ()
    y: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind == "poly":
            if len(self.coeffs) == 0:
                raise ValueError("poly coefficient needs at least one coefficient")
        elif self.kind == "samples":
            y = np.asarray(self.y, dtype=float)
            if y.size < 2 or y.size != len(self.values) or np.any(np.diff(y) <= 0):
                raise ValueError("samples need matching, strictly increasing y and values")
            if y[0] > 0 or y[-1] < 1:
                raise ValueError("sample grid must cover [0, 1]")
        else:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")

    @classmethod
    def constant(cls, c):
        return cls("poly", (float(c),))

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "poly":
            return np.polynomial.polynomial.polyval(y, np.asarray(self.coeffs, dtype=float))
        return np.interp(y, np.asarray(self.y, dtype=float), np.asarray(self.values, dtype=float))

    def to_json(self):
        if self.kind == "poly":
            return {"type": "poly", "coeffs": list(self.coeffs)}
        return {"type": "samples", "y": list(self.y), "values": list(self.values)}

    @classmethod
    def from_json(cls, obj):
        if obj.get("type") == "poly":
            return cls("poly", tuple(float(v) for v in obj["coeffs"]))
        if obj.get("type") == "samples":
            return cls("samples", y=tuple(float(v) for v in obj["y"]),
                       values=tuple(float(v) for v in obj["values"]))
        raise ValueError(f"unknown coefficient type {obj.get('type')!r}")


@dataclass(frozen=True)
class PdeCoefficients:
    """Coefficients of the model problem.

    ``alpha`` and ``beta`` here are PDE coefficients, unrelated to the
    constants of :class:`~accretive_pencil.pencil.ConditionC1Params`.
    ``epsilon=None`` selects ``m0 / (8 M1 (1 + r))``.
    """

    p0: CoefficientFunction
    p1: CoefficientFunction
    alpha: float = 1.0
    beta: complex = 1.0
    r: float = 1.0
    epsilon: float = None
    n_y: int = 64

    def __post_init__(self):
        if self.n_y < 3:
            raise ValueError("n_y must be at least 3")
        if not self.r > 0:
            raise ValueError("r must be positive")
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        object.__setattr__(self, "beta", complex(self.beta))
        object.__setattr__(self, "alpha", float(self.alpha))
        if np.any(self.p0(self.y_full) == 0):
            raise ValueError("p0 vanishes on the grid")

    @property
    def h(self):
        return 1.0 / (self.n_y + 1)

    @property
    def y_full(self):
        """Grid including both endpoints."""
        return np.linspace(0.0, 1.0, self.n_y + 2)

    @property
    def y(self):
        """Interior nodes."""
        return self.y_full[1:-1]

    def with_grid(self, n_y):
        return PdeCoefficients(self.p0, self.p1, self.alpha, self.beta, self.r, self.epsilon, n_y)

    def to_json(self):
        return {
            "p0": self.p0.to_json(),
            "p1": self.p1.to_json(),
            "alpha": self.alpha,
            "beta": [self.beta.real, self.beta.imag],
            "r": self.r,
            "epsilon": self.epsilon,
            "n_y": self.n_y,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            beta = obj.get("beta", [1.0, 0.0])
            beta = complex(beta[0], beta[1]) if isinstance(beta, (list, tuple)) else complex(beta)
            eps = obj.get("epsilon")
            return cls(
                CoefficientFunction.from_json(obj["p0"]),
                CoefficientFunction.from_json(obj["p1"]),
                float(obj.get("alpha", 1.0)),
                beta,
                float(obj.get("r", 1.0)),
                None if eps is None else float(eps),
                int(obj.get("n_y", 64)),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed coefficient object: {exc}") from exc


def default_coefficients(n_y=64):
    """``p0 = 1 + y/2``, ``p1 = 1``, ``alpha = beta = r = 1``, default epsilon."""
    return PdeCoefficients(CoefficientFunction("poly", (1.0, 0.5)), CoefficientFunction.constant(1.0),
                           1.0, 1.0, 1.0, None, n_y)


@dataclass(frozen=True)
class Bounds:
    m0: float
    M1: float
    M2: float
    gamma: float
    epsilon: float

    def to_dict(self):
        return {k: float(v) for k, v in vars(self).items()}


@dataclass
class ClaimReport:
    claim_id: int
    passed: bool
    margin: float
    threshold: float
    grid: int
    values: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def __post_init__(self):
        self.margin = float(self.margin)
        self.threshold = float(self.threshold)
        self.passed = bool(self.passed)
        if self.passed != (self.margin >= self.threshold):
            raise ValueError("ClaimReport pass flag disagrees with its margin")

    def to_dict(self):
        return {
            "claim": self.claim_id,
            "pass": self.passed,
            "margin": self.margin,
            "threshold": self.threshold,
            "n_y": self.grid,
            "values": {k: float(v) for k, v in sorted(self.values.items())},
            "notes": list(self.notes),
        }


# --------------------------------------------------------------------------
# discretization


def _first_difference(n, h):
    return (np.eye(n, k=1) - np.eye(n, k=-1)) / (2 * h)


def discretize_b(c):
    """``B_h = diag(p0) D + diag(p1)`` on interior nodes (Dirichlet at both ends)."""
    y = c.y
    D = _first_difference(c.n_y, c.h)
    return (c.p0(y)[:, None] * D + np.diag(c.p1(y))).astype(complex)


def discretize_c(c):
    """``C_h = alpha B_h + beta I``; commutes with ``B_h`` exactly."""
    return c.alpha * discretize_b(c) + c.beta * np.eye(c.n_y)


def compute_bounds(c):
    """``m0, M1, M2`` from the coefficient samples and the resulting ``gamma``.

    Raises
    ------
    ConstraintViolated
        If ``m0 - epsilon (1 + r) M1 <= 0``.
    """
    y = c.y_full
    h = c.h
    p0, p1 = c.p0(y), c.p1(y)
    dp0 = np.gradient(p0, h, edge_order=2)
    dp1 = np.gradient(p1, h, edge_order=2)
    phi0 = -p0**2
    phi1 = -p0 * (dp0 + 2 * p1)
    phi2 = -(p1**2 + p0 * dp1)
    dphi0 = np.gradient(phi0, h, edge_order=2)
    m0 = float(np.min(p0**2) * (1 - 1e-6))
    M1 = float(np.max(np.abs(phi1 - dphi0)))
    M2 = float(np.max(np.abs(phi2)))
    eps = c.epsilon
    if eps is None:
        eps = m0 / (8 * M1 * (1 + c.r)) if M1 > 0 else 1.0
    if not m0 - eps * (1 + c.r) * M1 > 0:
        raise ConstraintViolated(
            f"m0 - epsilon (1 + r) M1 = {m0 - eps * (1 + c.r) * M1:.3e} is not positive"
        )
    gamma = -((c.r + 1) / (4 * eps) * M1 + M2)
    return Bounds(m0, M1, M2, gamma, eps)


# --------------------------------------------------------------------------
# claims


def _tol(*mats):
    return 1e-10 * max(1.0, max(np.linalg.norm(A, 2) for A in mats))


def verify_claims(c, claim6_eps=1e-3):
    """Check Claims 1-6 on the grid; returns six :class:`ClaimReport`."""
    B = discretize_b(c)
    C = discretize_c(c)
    bounds = compute_bounds(c)
    g = bounds.gamma
    n = c.n_y
    I = np.eye(n)
    B2 = B @ B
    reports = []

    A1 = -B2 - g * I
    omega = float(np.arctan(1 / c.r))
    _, m1 = sector_test(A1, Sector(omega))
    t1 = _tol(A1)
    reports.append(ClaimReport(1, m1 >= -t1, m1, -t1, n, {"omega": omega, "gamma": g}, [CLAIM_NOTE]))

    m2 = accretivity_margin(C)
    t2 = _tol(C)
    reports.append(ClaimReport(2, m2 >= -t2, m2, -t2, n, {}, [CLAIM_NOTE]))

    m3 = accretivity_margin(B)
    t3 = _tol(B)
    reports.append(ClaimReport(3, m3 >= -t3, m3, -t3, n, {}, [CLAIM_NOTE]))

    A4 = -B2 + C - g * I
    m4 = accretivity_margin(A4)
    t4 = _tol(A4)
    reports.append(ClaimReport(4, m4 >= -t4, m4, -t4, n, {}, [CLAIM_NOTE]))

    smin = float(np.linalg.svd(A4, compute_uv=False)[-1])
    t5 = np.nextafter(_tol(A4), np.inf)
    reports.append(ClaimReport(5, smin >= t5, smin, t5, n, {"sigma_min": smin}, [CLAIM_NOTE]))

    reports.append(_claim6(B, A4, n, claim6_eps))
    return reports


def _claim6(B, A4, n, eps):
    # the claim is stated for the literal factors B +- (-Lambda)^{1/2}
    pencil = PencilSpec(B, -B @ B - A4)
    S = principal_sqrt(A4)
    lit = factors_from_root(pencil, S, Convention.REAL_ROOT, A4)
    notes = [CLAIM_NOTE, "factors taken literally as B +- (-Lambda)^{1/2}"]
    try:
        r1, r2 = factor_shift_search(lit, eps)
    except SearchFailed as exc:
        return ClaimReport(6, False, -np.inf, 0.0, n, {}, notes + [str(exc)])
    I = np.eye(n)
    worst = max(contraction_check(lit.Z1 + r1 * I), contraction_check(-lit.Z2 + r2 * I))
    margin = 1.0 + 1e-12 - worst
    return ClaimReport(6, margin >= 0.0, margin, 0.0, n,
                       {"r1": r1, "r2": r2, "eps": eps, "worst_norm": worst}, notes)


# --------------------------------------------------------------------------
# solving


@dataclass
class ExampleResult:
    x: np.ndarray
    y: np.ndarray
    u_formula: np.ndarray
    u_fd: np.ndarray
    convention: str
    adjudication: dict
    bounds: Bounds
    discrepancy: float
    errors: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "convention": self.convention,
            "adjudication": self.adjudication,
            "bounds": self.bounds.to_dict(),
            "discrepancy": float(self.discrepancy),
            "errors": {k: float(v) for k, v in sorted(self.errors.items())},
            "n_x": int(self.x.size - 2),
            "n_y": int(self.y.size),
        }


def x_pencil(c, bounds=None):
    """Pencil ``(B_h, gamma I - C_h)`` of the ``x``-problem."""
    bounds = compute_bounds(c) if bounds is None else bounds
    B = discretize_b(c)
    return PencilSpec(B, bounds.gamma * np.eye(c.n_y) - discretize_c(c))


def adjudicate_convention(pencil, lam=1.0 + 0.5j):
    """Compare the two root conventions on a pencil whose ``-Lambda`` is accretive.

    Returns ``(factorizations, summary)``; ``summary["factoring"]`` lists the
    conventions whose ordered residual is at most ``1e-8`` times the scale.
    """
    M = -(pencil.B2 + pencil.C)
    S = principal_sqrt(M)
    scale = abs(lam) ** 2 + pencil.scale()
    facts, summary = {}, {"residuals": {}, "scale": scale, "lambda": [lam.real, lam.imag]}
    for conv in Convention:
        f = factors_from_root(pencil, S, conv, M)
        facts[conv.value] = f
        summary["residuals"][conv.value] = ordered_residual(f, pencil, lam) / scale
    summary["factoring"] = sorted(k for k, v in summary["residuals"].items() if v <= ADJUDICATION_RTOL)
    return facts, summary


def assemble_2d(c, n_x, gamma):
    """Sparse five-point-plus-cross discretization of the full 2D operator.

    Unknowns are ordered x-major over interior nodes; returns a CSC matrix.
    """
    hx = 1.0 / (n_x + 1)
    y = c.y
    Dy = sp.csr_matrix(_first_difference(c.n_y, c.h))
    P0 = sp.diags(c.p0(y))
    P1 = sp.diags(c.p1(y))
    Iy = sp.eye(c.n_y)
    Dxx = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n_x, n_x)) / hx**2
    Dx = sp.diags([-1.0, 1.0], [-1, 1], shape=(n_x, n_x)) / (2 * hx)
    L = (sp.kron(Dxx, Iy)
         - 2 * sp.kron(Dx, P0 @ Dy)
         - 2 * sp.kron(Dx, P1)
         + sp.kron(sp.eye(n_x), c.alpha * P0 @ Dy + c.alpha * P1 + (c.beta - gamma) * Iy))
    return L.tocsc().astype(complex)


def _fd_solve(c, n_x, gamma, F, u0, u1):
    hx = 1.0 / (n_x + 1)
    y = c.y
    G = np.array(F[1:-1], dtype=complex)
    # x-boundary columns moved to the right-hand side
    Dy = _first_difference(c.n_y, c.h)
    cross0 = -2 * (c.p0(y) * (Dy @ u0) + c.p1(y) * u0) * (-1 / (2 * hx))
    cross1 = -2 * (c.p0(y) * (Dy @ u1) + c.p1(y) * u1) * (1 / (2 * hx))
    G[0] -= u0 / hx**2 + cross0
    G[-1] -= u1 / hx**2 + cross1
    A = assemble_2d(c, n_x, gamma)
    try:
        U = spla.splu(A).solve(G.ravel())
    except RuntimeError as exc:
        raise SingularSystem("2D finite-difference matrix", 0.0) from exc
    return np.vstack([u0, U.reshape(n_x, c.n_y), u1])


def solve_example(c, f, u0, u1, n_x, convention="auto", exact=None):
    """Solve the 2D problem by the factorized formula and by 2D finite differences.

    Parameters
    ----------
    c : PdeCoefficients
    f : ndarray of shape (n_x + 2, n_y) or callable ``f(x, y)``
        Forcing on the tensor grid including the x endpoints.
    u0, u1 : ndarray of shape (n_y,) or callable of y
    n_x : int
        Number of interior x nodes.
    convention : {"auto", "real_root", "rotated_root", "real", "rotated"}
        ``"auto"`` uses the unique factoring convention.
    exact : callable ``exact(x, y)``, optional
        Reference solution; max-norm errors of both solvers are reported.
    """
    bounds = compute_bounds(c)
    x = np.linspace(0.0, 1.0, n_x + 2)
    y = c.y
    F = f(x[:, None], y[None, :]) if callable(f) else np.asarray(f, dtype=complex)
    F = np.broadcast_to(F, (x.size, y.size)).astype(complex)
    u0 = np.asarray(u0(y) if callable(u0) else u0, dtype=complex)
    u1 = np.asarray(u1(y) if callable(u1) else u1, dtype=complex)

    pencil = x_pencil(c, bounds)
    facts, summary = adjudicate_convention(pencil)
    if convention == "auto":
        if len(summary["factoring"]) != 1:
            raise SearchFailed(f"expected exactly one factoring convention, got {summary['factoring']}")
        chosen = summary["factoring"][0]
    else:
        chosen = Convention.parse(convention).value
    prob = BvpProblem(pencil, u0, u1, Forcing(x, F), x)
    sol = solve_bvp(prob, facts[chosen])
    U_fd = _fd_solve(c, n_x, bounds.gamma, F, u0, u1)
    errors = {}
    if exact is not None:
        E = exact(x[:, None], y[None, :])
        errors = {"formula": np.abs(sol.u - E).max(), "fd": np.abs(U_fd - E).max()}
    summary = dict(summary, chosen=chosen, sixth_term=sol.meta["sixth_term"],
                   boundary_residual=max(sol.residual_bc))
    return ExampleResult(x, y, sol.u, U_fd, chosen, summary, bounds,
                         float(np.abs(sol.u - U_fd).max()), errors)


def manufactured_case(c):
    """Forcing and data for ``u = sin(pi y) cos(pi x)``.

    Returns ``(f, u0, u1, exact)`` as callables suitable for
    :func:`solve_example`.
    """
    gamma = compute_bounds(c).gamma
    pi = np.pi

    def exact(x, y):
        return np.sin(pi * y) * np.cos(pi * x)

    def f(x, y):
        p0, p1 = c.p0(y), c.p1(y)
        u = exact(x, y)
        ux = -pi * np.sin(pi * y) * np.sin(pi * x)
        uxx = -pi**2 * u
        uy = pi * np.cos(pi * y) * np.cos(pi * x)
        uxy = -pi**2 * np.cos(pi * y) * np.sin(pi * x)
        return (uxx - 2 * p0 * uxy - 2 * p1 * ux + c.alpha * p0 * uy
                + (c.alpha * p1 + c.beta - gamma) * u)

    return f, (lambda y: np.sin(pi * y)), (lambda y: -np.sin(pi * y)), exact
