"""Two-point problem ``u'' - 2B u' - C u = f`` on (0, 1) with Dirichlet data.

:func:`solve_bvp` evaluates the closed-form solution built from the linear
factors ``Z1, Z2`` of the pencil; :func:`direct_solve` is an independent
block finite-difference solver used as an oracle.

Closed form
-----------
With ``M = (I - e^{Z2 - Z1})^{-1}``, ``D = (Z2 - Z1)^{-1}``,
``F(x) = int_0^x e^{(x-s) Z2} f(s) ds`` and
``G(x) = int_x^1 e^{-(s-x) Z1} f(s) ds``::

    u(x) = M [ e^{x Z2} u0 + e^{-(1-x) Z1} u1
               - e^{x Z2} e^{-Z1} (u1 - D F(1))
               - e^{-(1-x) Z1} e^{Z2} (u0 - D G(0))
               - D e^{x Z2} G(0)
               - D e^{-(1-x) Z1} F(1) ]
           + D F(x) + D G(x)

The sign and exponent of the last bracketed term are the ones that make
``u(0) = u0`` and ``u(1) = u1`` hold; see ``SIXTH_TERM_VARIANTS``.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ._validation import check_grid, check_vector, is_uniform
from .exceptions import SingularSystem
from .matfun import expm, phi_functions
from .pencil import Factorization, PencilSpec, pencil_from_json, pencil_to_json
from .semigroup import PropagatorCache

__all__ = [
    "Forcing",
    "BvpProblem",
    "BvpSolution",
    "SIXTH_TERM_VARIANTS",
    "INTEGRATION_MODES",
    "solve_bvp",
    "direct_solve",
    "residual_check",
    "compatibility_report",
    "problem_from_json",
    "problem_to_json",
    "solution_to_csv",
]

SIXTH_TERM_VARIANTS = ("derived", "printed", "exponent_only")
INTEGRATION_MODES = ("exact-linear", "gauss4")
SINGULAR_RTOL = 1e-12


def _complex_rows(values):
    arr = np.asarray(values, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def _rows_json(arr):
    arr = np.asarray(arr)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


@dataclass(frozen=True)
class Forcing:
    """Forcing term sampled on a grid of ``[0, 1]``, linear in between."""

    x: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = check_grid(self.x, "f.x")
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 2 or values.shape[0] != x.size:
            raise ValueError(f"f.values must have shape ({x.size}, n), got {values.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, dim, x=(0.0, 1.0)):
        x = np.asarray(x, dtype=float)
        return cls(x, np.zeros((x.size, dim), dtype=complex))

    @classmethod
    def from_callable(cls, func, x):
        x = np.asarray(x, dtype=float)
        return cls(x, np.array([np.asarray(func(xi), dtype=complex) for xi in x]))

    def __call__(self, xq):
        xq = np.atleast_1d(np.asarray(xq, dtype=float))
        out = np.empty((xq.size, self.values.shape[1]), dtype=complex)
        for k in range(self.values.shape[1]):
            col = self.values[:, k]
            out[:, k] = np.interp(xq, self.x, col.real) + 1j * np.interp(xq, self.x, col.imag)
        return out


@dataclass(frozen=True)
class BvpProblem:
    """Data of the two-point problem.

    ``p_exponent`` is carried as metadata for the discrete ``L^p`` norms in
    :func:`compatibility_report`.
    """

    pencil: PencilSpec
    u0: np.ndarray
    u1: np.ndarray
    f: Forcing = None
    x_grid: np.ndarray = None
    p_exponent: float = 2.0

    def __post_init__(self):
        n = self.pencil.dim
        object.__setattr__(self, "u0", check_vector(self.u0, n, "u0"))
        object.__setattr__(self, "u1", check_vector(self.u1, n, "u1"))
        f = Forcing.zeros(n) if self.f is None else self.f
        if f.values.shape[1] != n:
            raise ValueError(f"forcing has dimension {f.values.shape[1]}, expected {n}")
        object.__setattr__(self, "f", f)
        grid = np.linspace(0.0, 1.0, 129) if self.x_grid is None else self.x_grid
        object.__setattr__(self, "x_grid", check_grid(grid, "x_grid"))
        if not self.p_exponent > 1:
            raise ValueError("p_exponent must exceed 1")


@dataclass
class BvpSolution:
    x: np.ndarray
    u: np.ndarray
    residual_ode: float = np.nan
    residual_bc: tuple = (np.nan, np.nan)
    compatibility_norms: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "residual_ode": float(self.residual_ode),
            "residual_bc": [float(v) for v in self.residual_bc],
            "compatibility_norms": {k: float(v) for k, v in sorted(self.compatibility_norms.items())},
            "meta": dict(sorted(self.meta.items())),
            "nodes": int(self.x.size),
        }


# --------------------------------------------------------------------------
# Duhamel integrals on a grid


class _StepWeights:
    """Weights with ``int_0^h e^{(h-t)A} g(t) dt = Wa g(0) + Wb g(h)`` for linear g."""

    def __init__(self, A, mode):
        self.A = A
        self.mode = mode
        self._cache = {}
        if mode == "gauss4":
            self._nodes, self._weights = np.polynomial.legendre.leggauss(4)

    def __call__(self, h):
        key = round(h, 15)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.mode == "exact-linear":
            E, p1, p2 = phi_functions(h * self.A)
            out = (E, h * (p1 - p2), h * p2)
        else:
            E = expm(h * self.A)
            Wa = np.zeros_like(E)
            Wb = np.zeros_like(E)
            for g, w in zip(self._nodes, self._weights):
                t = 0.5 * h * (g + 1)
                P = 0.5 * h * w * expm((h - t) * self.A)
                Wa += P * (1 - t / h)
                Wb += P * (t / h)
            out = (E, Wa, Wb)
        self._cache[key] = out
        return out


def _duhamel(A, x, fvals, mode):
    """``F(x_j) = int_0^{x_j} e^{(x_j - s) A} f(s) ds`` for piecewise-linear f."""
    weights = _StepWeights(A, mode)
    F = np.zeros_like(fvals)
    for j in range(x.size - 1):
        E, Wa, Wb = weights(x[j + 1] - x[j])
        F[j + 1] = E @ F[j] + Wa @ fvals[j] + Wb @ fvals[j + 1]
    return F


def _merged_grid(x_grid, fx):
    merged = np.union1d(x_grid, fx)
    # collapse nodes closer than rounding so no step is numerically zero
    keep = np.concatenate([[True], np.diff(merged) > 1e-14])
    merged = merged[keep]
    idx = np.searchsorted(merged, x_grid)
    idx = np.clip(idx, 0, merged.size - 1)
    near = np.abs(merged[idx] - x_grid) > 1e-14
    idx[near] -= 1
    return merged, idx


# --------------------------------------------------------------------------
# closed-form solver


def _check_invertible(M, what):
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] <= SINGULAR_RTOL * max(1.0, s[0]):
        raise SingularSystem(what, s[-1])


def solve_bvp(prob, fact, integration="exact-linear", sixth_term="derived"):
    """Evaluate the closed-form solution on ``prob.x_grid``.

    Parameters
    ----------
    prob : BvpProblem
    fact : Factorization
        Linear factors of ``prob.pencil``.
    integration : {"exact-linear", "gauss4"}
        How the Duhamel integrals of the piecewise-linear forcing are
        computed: exactly through phi-functions, or by 4-point Gauss-Legendre
        on each interval.
    sixth_term : {"derived", "printed", "exponent_only"}
        Variant of the term ``D e^{-(1-x) Z1} (...)``.  ``"derived"`` uses
        ``-F(1)``; ``"printed"`` uses ``+int_0^1 e^{-(1-s) Z2} f ds`` and
        ``"exponent_only"`` uses ``+F(1)``.  Only ``"derived"`` satisfies the
        boundary conditions in general; the others exist for comparison.

    Notes
    -----
    The closed form solves the equation exactly only when ``B`` and the
    root commute; otherwise ``(d/dx - Z1)(d/dx - Z2)`` differs from the
    operator by the commutator.  Its norm is stored in ``meta`` so callers
    can tell the two regimes apart.

    Raises
    ------
    SingularSystem
        If ``I - e^{Z2 - Z1}`` or ``Z2 - Z1`` is singular.
    """
    if integration not in INTEGRATION_MODES:
        raise ValueError(f"integration must be one of {INTEGRATION_MODES}")
    if sixth_term not in SIXTH_TERM_VARIANTS:
        raise ValueError(f"sixth_term must be one of {SIXTH_TERM_VARIANTS}")
    if not isinstance(fact, Factorization):
        raise TypeError("fact must be a Factorization")
    n = prob.pencil.dim
    I = np.eye(n)
    Z1, Z2 = fact.Z1, fact.Z2

    # Z2 - Z1 = -2 R with R the root added to B
    _check_invertible(fact.root, "Z2 - Z1")
    D = -0.5 * np.linalg.inv(fact.root)
    K = I - expm(Z2 - Z1)
    _check_invertible(K, "I - exp(Z2 - Z1)")
    M = np.linalg.inv(K)

    x, idx = _merged_grid(prob.x_grid, prob.f.x)
    fvals = prob.f(x)
    F = _duhamel(Z2, x, fvals, integration)
    # G runs backwards: reverse the grid and integrate with generator -Z1
    G = _duhamel(-Z1, (1.0 - x)[::-1], fvals[::-1], integration)[::-1]
    F1, G0 = F[-1], G[0]
    if sixth_term == "derived":
        six = -F1
    elif sixth_term == "exponent_only":
        six = F1
    else:
        six = _duhamel(-Z2, x, fvals, integration)[-1]

    eZ1 = expm(-Z1)
    eZ2 = expm(Z2)
    a = eZ1 @ (prob.u1 - D @ F1)
    b = eZ2 @ (prob.u0 - D @ G0)
    fwd = PropagatorCache(Z2, sign=1)
    bwd = PropagatorCache(Z1, sign=-1)

    u = np.empty((prob.x_grid.size, n), dtype=complex)
    for k, xk in enumerate(prob.x_grid):
        P2 = fwd(xk)
        P1 = bwd(1.0 - xk)
        bracket = P2 @ (prob.u0 - a) + P1 @ (prob.u1 - b) - D @ (P2 @ G0) + D @ (P1 @ six)
        u[k] = M @ bracket + D @ (F[idx[k]] + G[idx[k]])
    sol = BvpSolution(
        x=prob.x_grid.copy(),
        u=u,
        meta={"solver": "closed_form", "sixth_term": sixth_term, "integration": integration,
              "convention": fact.convention.value,
              "commutator_norm": float(fact.commutator_norm)},
    )
    _attach_diagnostics(sol, prob, fact)
    return sol


def _attach_diagnostics(sol, prob, fact=None):
    sol.residual_bc = (float(np.linalg.norm(sol.u[0] - prob.u0)), float(np.linalg.norm(sol.u[-1] - prob.u1)))
    if sol.x.size >= 5 and is_uniform(sol.x):
        sol.residual_ode, _ = residual_check(sol, prob)
    if fact is not None:
        sol.compatibility_norms = compatibility_report(fact, prob.u0, prob.u1, sol.x, prob.p_exponent)


# --------------------------------------------------------------------------
# oracle and diagnostics


def direct_solve(prob, n_x):
    """Second-order block finite differences on ``n_x`` interior nodes.

    Raises
    ------
    SingularSystem
        If the assembled sparse system is singular.
    """
    if n_x < 3:
        raise ValueError("n_x must be at least 3")
    B, C = prob.pencil.B, prob.pencil.C
    n = prob.pencil.dim
    h = 1.0 / (n_x + 1)
    x = np.linspace(0.0, 1.0, n_x + 2)
    D2 = sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n_x, n_x)) / h**2
    D1 = sp.diags([-1.0, 1.0], [-1, 1], shape=(n_x, n_x)) / (2 * h)
    A = (sp.kron(D2, sp.eye(n)) - 2 * sp.kron(D1, sp.csr_matrix(B))
         - sp.kron(sp.eye(n_x), sp.csr_matrix(C))).tocsc()
    rhs = prob.f(x[1:-1]).copy()
    rhs[0] -= prob.u0 / h**2 + B @ prob.u0 / h
    rhs[-1] -= prob.u1 / h**2 - B @ prob.u1 / h
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularSystem("finite-difference matrix", 0.0) from exc
    inner = lu.solve(rhs.ravel())
    if not np.all(np.isfinite(inner)):
        raise SingularSystem("finite-difference matrix", 0.0)
    u = np.vstack([prob.u0, inner.reshape(n_x, n), prob.u1])
    sol = BvpSolution(x=x, u=u, meta={"solver": "finite_difference", "n_x": int(n_x)})
    _attach_diagnostics(sol, prob)
    return sol


def residual_check(sol, prob):
    """Centered-difference ODE residual and boundary residuals.

    Returns ``(residual_ode, (||u(0) - u0||, ||u(1) - u1||))``.
    """
    x = sol.x
    if x.size < 5 or not is_uniform(x):
        raise ValueError("residual_check needs a uniform grid with at least 5 nodes")
    h = x[1] - x[0]
    u = sol.u
    d2 = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
    d1 = (u[2:] - u[:-2]) / (2 * h)
    r = d2 - 2 * d1 @ prob.pencil.B.T - u[1:-1] @ prob.pencil.C.T - prob.f(x[1:-1])
    res_ode = float(np.linalg.norm(r, axis=1).max())
    res_bc = (float(np.linalg.norm(u[0] - prob.u0)), float(np.linalg.norm(u[-1] - prob.u1)))
    return res_ode, res_bc


def compatibility_report(fact, u0, u1, x_grid, p=2.0):
    """Sup and discrete ``L^p`` norms of ``x -> Z1^2 e^{-x Z1} u_i``.

    Both are finite for matrices; the report only documents their size.
    The ``L^p`` norm uses trapezoid weights, so it never exceeds the sup.
    """
    x = check_grid(x_grid, "x_grid")
    Z1 = fact.Z1
    Z1sq = Z1 @ Z1
    prop = PropagatorCache(Z1, sign=-1)
    w = np.zeros_like(x)
    dx = np.diff(x)
    w[:-1] += dx / 2
    w[1:] += dx / 2
    out = {}
    for name, v in (("u0", u0), ("u1", u1)):
        v = check_vector(v, Z1.shape[0], name)
        vals = np.array([np.linalg.norm(Z1sq @ (prop(xi) @ v)) for xi in x])
        out[f"{name}_sup"] = float(vals.max())
        out[f"{name}_lp"] = float((w @ vals**p) ** (1 / p))
    return out


# --------------------------------------------------------------------------
# I/O


def problem_from_json(obj):
    """Build a :class:`BvpProblem` from its JSON object form."""
    try:
        pencil = pencil_from_json(obj["pencil"])
        u0 = _complex_rows(obj["u0"])
        u1 = _complex_rows(obj["u1"])
        x_grid = np.asarray(obj.get("x_grid", np.linspace(0, 1, 129)), dtype=float)
        f = None
        if obj.get("f") is not None:
            f = Forcing(np.asarray(obj["f"]["x"], dtype=float), _complex_rows(obj["f"]["values"]))
        return BvpProblem(pencil, u0, u1, f, x_grid, float(obj.get("p", 2.0)))
    except KeyError as exc:
        raise ValueError(f"problem is missing field {exc}") from exc


def problem_to_json(prob):
    return {
        "pencil": pencil_to_json(prob.pencil),
        "u0": _rows_json(prob.u0),
        "u1": _rows_json(prob.u1),
        "f": {"x": prob.f.x.tolist(), "values": _rows_json(prob.f.values)},
        "x_grid": prob.x_grid.tolist(),
        "p": prob.p_exponent,
    }


def solution_to_csv(sol, stream=None):
    """Write ``x, component_index, re_u, im_u`` rows; returns the text if no stream."""
    own = stream is None
    stream = io.StringIO() if own else stream
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["x", "component_index", "re_u", "im_u"])
    for xi, row in zip(sol.x, sol.u):
        for k, z in enumerate(row):
            w.writerow([repr(float(xi)), k, repr(float(z.real)), repr(float(z.imag))])
    return stream.getvalue() if own else None
