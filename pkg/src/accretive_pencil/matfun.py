"""Matrix functions: principal square root, exponential, fractional powers.

Three independent square-root routes are provided so they can check one
another: a Schur-form recurrence (the default), a scaled Denman-Beavers
iteration and the Balakrishnan integral with ``alpha = 1/2``.
"""

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg as sla
from numpy.polynomial.legendre import leggauss

from ._validation import check_operator, opnorm
from .exceptions import ExpmOverflow, NegativeRealEigenvalue, NonConvergence
from .operator_core import (
    accretivity_margin,
    kernel_equality_check,
    null_space,
    resolvent,
)

__all__ = [
    "QuadratureRule",
    "gauss_legendre_rule",
    "principal_sqrt",
    "sqrt_schur",
    "sqrt_denman_beavers",
    "expm",
    "phi_functions",
    "balakrishnan_power",
    "grading_exponent",
    "kato_square_inequality_check",
    "moment_inequality_check",
    "moment_prefactor",
    "unit_samples",
]

EIG_RTOL = 1e-12


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature nodes and positive weights on ``[0, 1]``.

    ``degree`` is the highest polynomial degree integrated exactly.
    """

    nodes: np.ndarray
    weights: np.ndarray
    degree: int
    domain: str = "[0,1]"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if np.any(nodes <= 0) or np.any(nodes >= 1):
            raise ValueError("quadrature nodes must lie strictly inside (0, 1)")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def integrate(self, f):
        return sum(w * f(t) for t, w in zip(self.nodes, self.weights))

    def to_json(self):
        return json.dumps({"nodes": self.nodes.tolist(), "weights": self.weights.tolist()})

    @classmethod
    def from_json(cls, text, degree=0):
        obj = json.loads(text) if isinstance(text, str) else text
        return cls(np.asarray(obj["nodes"]), np.asarray(obj["weights"]), degree)


def gauss_legendre_rule(n_nodes=200, panels=1):
    """Composite Gauss-Legendre rule on ``[0, 1]`` with equal panels."""
    if n_nodes % panels:
        raise ValueError("n_nodes must be divisible by panels")
    k = n_nodes // panels
    x, w = leggauss(k)
    edges = np.linspace(0.0, 1.0, panels + 1)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append((b - a) / 2 * x + (a + b) / 2)
        weights.append((b - a) / 2 * w)
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), 2 * k - 1)


def _check_root_spectrum(A, ev):
    """Indices of eigenvalues on the closed negative real axis."""
    tol = EIG_RTOL * max(opnorm(A), np.finfo(float).tiny)
    return np.flatnonzero((np.abs(ev.imag) <= tol) & (ev.real <= tol))


def _sqrt_upper_triangular(T):
    n = T.shape[0]
    R = np.zeros_like(T)
    d = np.sqrt(np.diag(T))
    R[np.diag_indices(n)] = d
    for j in range(1, n):
        for i in range(j - 1, -1, -1):
            s = T[i, j] - R[i, i + 1:j] @ R[i + 1:j, j]
            R[i, j] = s / (d[i] + d[j])
    return R


def sqrt_schur(A):
    """Principal square root by the complex Schur recurrence.

    No spectrum check; callers go through :func:`principal_sqrt`.
    """
    T, Q = sla.schur(A, output="complex")
    R = _sqrt_upper_triangular(T)
    return Q @ R @ Q.conj().T


def sqrt_denman_beavers(A, tol=1e-13, max_iter=100):
    """Principal square root by the determinant-scaled Denman-Beavers iteration.

    Raises
    ------
    NegativeRealEigenvalue
        If the principal root does not exist.
    NonConvergence
        If the iteration stalls.
    """
    A = check_operator(A)
    ev = np.linalg.eigvals(A)
    bad = _check_root_spectrum(A, ev)
    if bad.size:
        raise NegativeRealEigenvalue(ev[bad[0]])
    n = A.shape[0]
    Y, Z = A.copy(), np.eye(n, dtype=complex)
    scaling = True
    res = np.inf
    for k in range(1, max_iter + 1):
        Yi, Zi = np.linalg.inv(Y), np.linalg.inv(Z)
        if scaling:
            logdet = np.linalg.slogdet(Y)[1] + np.linalg.slogdet(Z)[1]
            mu = math.exp(-logdet / (2 * n))
        else:
            mu = 1.0
        Yn = 0.5 * (mu * Y + Zi / mu)
        Zn = 0.5 * (mu * Z + Yi / mu)
        res = np.linalg.norm(Yn - Y) / np.linalg.norm(Yn)
        Y, Z = Yn, Zn
        if res < 1e-2:
            scaling = False
        if res <= tol:
            return Y
    raise NonConvergence(max_iter, res)


def principal_sqrt(A, method="schur"):
    """Principal square root: ``S @ S = A`` with spectrum in Re z > 0.

    A singular accretive matrix is also accepted: its kernel reduces it
    (``N(A) = N(A*)``), and the root is taken on the orthogonal complement.

    Parameters
    ----------
    A : array_like, shape (n, n)
    method : {"schur", "denman-beavers"}

    Raises
    ------
    NegativeRealEigenvalue
        If ``A`` has an eigenvalue on ``(-inf, 0]`` (zero is allowed only in
        the accretive, kernel-reducing case).
    """
    A = check_operator(A)
    if method == "schur":
        T, Q = sla.schur(A, output="complex")
        ev = np.diag(T)
    elif method == "denman-beavers":
        ev = np.linalg.eigvals(A)
    else:
        raise ValueError(f"unknown method {method!r}")
    bad = _check_root_spectrum(A, ev)
    if bad.size:
        tol = EIG_RTOL * max(opnorm(A), np.finfo(float).tiny)
        zero_only = np.all(np.abs(ev[bad]) <= tol)
        if zero_only and accretivity_margin(A) >= -1e-10 * opnorm(A):
            return _sqrt_on_kernel_complement(A, method)
        raise NegativeRealEigenvalue(ev[bad[np.argmin(ev[bad].real)]])
    if method == "schur":
        return Q @ _sqrt_upper_triangular(T) @ Q.conj().T
    return sqrt_denman_beavers(A)


def _sqrt_on_kernel_complement(A, method):
    ok, _ = kernel_equality_check(A)
    N = null_space(A)
    if not ok or N.shape[1] == 0:
        raise NegativeRealEigenvalue(0.0)
    if N.shape[1] == A.shape[0]:
        return np.zeros_like(A)
    V = sla.null_space(N.conj().T)
    return V @ principal_sqrt(V.conj().T @ A @ V, method) @ V.conj().T


def expm(A):
    """Matrix exponential (scaling and squaring with Pade, via SciPy).

    Raises
    ------
    ExpmOverflow
        If the result is not finite.
    """
    A = check_operator(A)
    with np.errstate(over="ignore", invalid="ignore"):
        E = sla.expm(A)
    if not np.all(np.isfinite(E)):
        nrm = np.linalg.norm(A, 1)
        raise ExpmOverflow(nrm, max(0, math.ceil(math.log2(max(nrm, 1.0) / 5.4))))
    return E


def phi_functions(A):
    """Return ``(exp(A), phi1(A), phi2(A))`` from one block exponential.

    ``phi1(z) = (e^z - 1)/z`` and ``phi2(z) = (e^z - 1 - z)/z^2``; the block
    form stays valid for singular ``A``.
    """
    A = check_operator(A)
    n = A.shape[0]
    I = np.eye(n)
    W = np.zeros((3 * n, 3 * n), dtype=complex)
    W[:n, :n] = A
    W[:n, n:2 * n] = I
    W[n:2 * n, 2 * n:] = I
    E = expm(W)
    return E[:n, :n], E[:n, n:2 * n], E[:n, 2 * n:]


def grading_exponent(alpha, max_q=12):
    """Smallest ``q`` making ``q*alpha`` and ``q*(1-alpha)`` integers.

    With ``lambda = c (t/(1-t))^q`` this turns both endpoint singularities of
    the Balakrishnan integrand into polynomial factors.  Falls back to a
    large ``q`` for irrational-looking ``alpha``.
    """
    frac = Fraction(alpha).limit_denominator(max_q)
    if abs(float(frac) - alpha) < 1e-12:
        return frac.denominator
    return max(2, math.ceil(4 / min(alpha, 1 - alpha)))


def balakrishnan_power(T, alpha, rule=None, q=None, scale=None):
    """Fractional power ``T^alpha`` from the Balakrishnan integral.

    ``T^alpha = sin(pi alpha)/pi * int_0^inf lam^(alpha-1) T (lam + T)^{-1} dlam``,
    mapped to ``[0, 1]`` with ``lam = scale * (t/(1-t))^q``.

    Parameters
    ----------
    T : array_like
        Accretive, invertible matrix.
    alpha : float in (0, 1)
    rule : QuadratureRule, optional
        Defaults to 200-node Gauss-Legendre.
    q : int, optional
        Grading exponent, see :func:`grading_exponent`.
    scale : float, optional
        Spectral scale; defaults to the geometric mean of the extreme
        singular values of ``T``.
    """
    T = check_operator(T)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    rule = gauss_legendre_rule(200) if rule is None else rule
    q = grading_exponent(alpha) if q is None else q
    if scale is None:
        s = np.linalg.svd(T, compute_uv=False)
        scale = math.sqrt(s[0] * s[-1]) if s[-1] > 0 else s[0]
    n = T.shape[0]
    acc = np.zeros((n, n), dtype=complex)
    for t, w in zip(rule.nodes, rule.weights):
        u = t / (1 - t)
        lam = scale * u**q
        jac = q * u ** (q * alpha - 1) / (1 - t) ** 2
        # T (lam + T)^{-1}; the resolvent raises SingularResolvent if needed
        acc += (w * jac) * (T @ resolvent(-T, lam))
    return (math.sin(math.pi * alpha) / math.pi) * scale**alpha * acc


def unit_samples(n, samples, rng):
    """``samples`` random unit vectors in C^n as columns."""
    X = rng.standard_normal((n, samples)) + 1j * rng.standard_normal((n, samples))
    return X / np.linalg.norm(X, axis=0)


def kato_square_inequality_check(B, nu, samples=10_000, seed=0):
    """Smallest sampled slack of ``nu |x|^2 + |B^2 x|^2 / nu - |B x|^2``.

    Non-negative for accretive ``B`` and every ``nu > 0``.
    """
    B = check_operator(B)
    if nu <= 0:
        raise ValueError("nu must be positive")
    X = unit_samples(B.shape[0], samples, np.random.default_rng(seed))
    BX = B @ X
    B2X = B @ BX
    slack = nu + np.sum(np.abs(B2X) ** 2, axis=0) / nu - np.sum(np.abs(BX) ** 2, axis=0)
    return float(slack.min())


def moment_inequality_check(T, samples=10_000, seed=0, constant=1.0):
    """Smallest sampled slack of ``constant |x| |T x| - |T^{1/2} x|^2``.

    With ``constant = 1`` this is the moment inequality for normal
    (in particular self-adjoint) ``T``; for general accretive ``T`` the
    constant 2 is the safe choice.
    """
    T = check_operator(T)
    S = principal_sqrt(T)
    X = unit_samples(T.shape[0], samples, np.random.default_rng(seed))
    slack = constant * np.linalg.norm(T @ X, axis=0) - np.linalg.norm(S @ X, axis=0) ** 2
    return float(slack.min())


def moment_prefactor(T, rho=1.0, samples=10_000, seed=0):
    """Empirical best prefactor ``c`` in ``|T^{1/2}x|^2 <= c (rho|x|^2 + |Tx|^2/rho)``.

    Returns the sampled maximum of the ratio; compare against ``1/pi**2``.
    """
    T = check_operator(T)
    S = principal_sqrt(T)
    X = unit_samples(T.shape[0], samples, np.random.default_rng(seed))
    num = np.linalg.norm(S @ X, axis=0) ** 2
    den = rho + np.linalg.norm(T @ X, axis=0) ** 2 / rho
    return float((num / den).max())
