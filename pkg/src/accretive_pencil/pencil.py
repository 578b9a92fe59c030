"""Quadratic pencils ``Q(lam) = lam^2 I - 2 lam B - C`` and their linear factors.

The factors are ``Z1 = B + S`` and ``Z2 = B - S`` with ``S`` a square root of
``Lambda = B^2 + C``.  In the ``rotated_root`` convention ``S`` is the
principal root of ``-Lambda`` and the factors are ``B +- iS``.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from ._validation import check_operator, check_vector, opnorm, scale_tol
from .exceptions import NegativeRealEigenvalue, SearchFailed, SingularResolvent
from .matfun import principal_sqrt, unit_samples
from .operator_core import (
    M_ACCRETIVE_NOTE,
    Sector,
    accretivity_margin,
    containment_gap,
    hermitian_split,
    intersect_subspaces,
    null_space,
    resolvent,
    sector_test,
    subspace_gap,
)

__all__ = [
    "Convention",
    "PencilSpec",
    "ConditionC1Params",
    "ConditionC2Params",
    "ConditionReport",
    "Factorization",
    "check_c1",
    "estimate_c2",
    "check_c2",
    "check_c3",
    "check_c4_c5",
    "build_lambda",
    "factorize",
    "factors_from_root",
    "evaluate_pencil",
    "symmetrized_residual",
    "ordered_residual",
    "kernel_inclusion_lambda",
    "kernel_identity_z1",
    "factor_shift_search",
    "pencil_eigen",
    "eigenvalue_localization_check",
    "pencil_to_json",
    "pencil_from_json",
]


class Convention(str, Enum):
    REAL_ROOT = "real_root"
    ROTATED_ROOT = "rotated_root"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        aliases = {"real": cls.REAL_ROOT, "rotated": cls.ROTATED_ROOT}
        return aliases.get(value) or cls(value)


@dataclass(frozen=True)
class PencilSpec:
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        B = check_operator(self.B, "B")
        C = check_operator(self.C, "C")
        if B.shape != C.shape:
            raise ValueError(f"B and C must have the same dimension, got {B.shape} and {C.shape}")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def dim(self):
        return self.B.shape[0]

    @property
    def B2(self):
        return self.B @ self.B

    def scale(self):
        """``||B||^2 + ||C||``: the natural size of the λ-independent part of Q."""
        return opnorm(self.B) ** 2 + opnorm(self.C)


@dataclass(frozen=True)
class ConditionC1Params:
    alpha: float = 0.0
    beta: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if self.alpha < 0 or self.delta < 0 or not 0 <= self.beta < 1:
            raise ValueError("(C.1) needs alpha >= 0, 0 <= beta < 1, delta >= 0")


@dataclass(frozen=True)
class ConditionC2Params:
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.a < 0 or not 0 <= self.b < 1:
            raise ValueError("(C.2) needs a >= 0 and 0 <= b < 1")


@dataclass
class ConditionReport:
    """Outcome of one hypothesis check.

    ``passed`` is always ``margin >= threshold``; ``threshold`` is a small
    negative tolerance for sign conditions and a positive one for
    invertibility conditions.
    """

    condition: str
    passed: bool
    margin: float
    threshold: float = 0.0
    mode: str = "exact"
    params: dict = field(default_factory=dict)
    samples: int = None
    seed: int = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        self.margin = float(self.margin)
        self.threshold = float(self.threshold)
        self.passed = bool(self.passed)
        if self.mode != "hypothesis_unmet" and self.passed != (self.margin >= self.threshold):
            raise ValueError("ConditionReport pass flag disagrees with its margin")

    def to_dict(self):
        return {
            "condition": self.condition,
            "pass": self.passed,
            "margin": self.margin,
            "threshold": self.threshold,
            "mode": self.mode,
            "params": {k: _jsonable(v) for k, v in sorted(self.params.items())},
            "samples": self.samples,
            "seed": self.seed,
            "notes": list(self.notes),
        }


def _jsonable(v):
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


@dataclass
class Factorization:
    """Linear factors of a pencil.

    ``root_operand`` is the matrix whose principal root is ``S``: ``Lambda``
    for ``real_root`` and ``-Lambda`` for ``rotated_root`` unless built
    explicitly with :func:`factors_from_root`.
    """

    Lambda: np.ndarray
    S: np.ndarray
    Z1: np.ndarray
    Z2: np.ndarray
    convention: Convention
    commutator_norm: float
    lambda_margin: float
    root_operand: np.ndarray
    defective_lambda: bool = False

    @property
    def root(self):
        """The operator added to / subtracted from B (``S`` or ``iS``)."""
        return 1j * self.S if self.convention is Convention.ROTATED_ROOT else self.S

    def root_residual(self):
        return opnorm(self.S @ self.S - self.root_operand)


# --------------------------------------------------------------------------
# condition checkers


def _c1_slack(B2, C, params, X):
    B2X = B2 @ X
    CX = C @ X
    nx2 = np.sum(np.abs(X) ** 2, axis=0)
    nb = np.linalg.norm(B2X, axis=0)
    re = np.real(np.sum(CX.conj() * B2X, axis=0))
    return re + params.alpha * nx2 + params.beta * nb**2 + params.delta * nb * np.sqrt(nx2)


def check_c1(p, params=None, samples=100_000, seed=0, refine=5, tol=None):
    """Check condition (C.1) for the pencil.

    With ``delta = 0`` the slack is a Hermitian quadratic form and the check
    is exact (smallest eigenvalue).  Otherwise the slack over the unit sphere
    is minimized by seeded sampling plus local refinement of the best
    candidates, and the report is marked ``sampled``.
    """
    params = params or ConditionC1Params()
    B2, C = p.B2, p.C
    if tol is None:
        tol = 1e-10 * max(1.0, opnorm(B2) * (opnorm(C) + opnorm(B2)) + params.alpha)
    if params.delta == 0:
        F = C.conj().T @ B2 + params.alpha * np.eye(p.dim) + params.beta * (B2.conj().T @ B2)
        H, _ = hermitian_split(F)
        margin = float(np.linalg.eigvalsh(H)[0])
        return ConditionReport("C1", margin >= -tol, margin, -tol, "exact", vars(params).copy())

    rng = np.random.default_rng(seed)
    n = p.dim
    X = unit_samples(n, samples, rng)
    slack = _c1_slack(B2, C, params, X)
    margin = float(slack.min())
    best = np.argsort(slack)[:refine]

    def objective(v):
        x = (v[:n] + 1j * v[n:])[:, None]
        return float(_c1_slack(B2, C, params, x / np.linalg.norm(x))[0])

    for k in best:
        v0 = np.concatenate([X[:, k].real, X[:, k].imag])
        res = minimize(objective, v0, method="BFGS")
        margin = min(margin, float(res.fun))
    return ConditionReport(
        "C1", margin >= -tol, margin, -tol, "sampled", vars(params).copy(),
        samples=samples, seed=seed,
        notes=["sampled certificate: Monte-Carlo minimum plus local refinement"],
    )


def _c2_sup(B2, C, ts):
    vals = np.empty(len(ts))
    for k, t in enumerate(ts):
        R = resolvent(-B2, t)  # (B^2 + t)^{-1}
        vals[k] = opnorm(C @ R)
    return vals


def estimate_c2(p, t_grid=None, max_extend=6):
    """Estimate the (C.2) constants from ``sup_t ||C (B^2 + t)^{-1}||``.

    Returns
    -------
    b_est : float
        Squared supremum (matches the squared form of (C.2)).
    a_est : float
        Smallest ``a >= 0`` with ``||Cx||^2 <= a|x|^2 + b_est |B^2 x|^2``.
    report : ConditionReport
        Pass iff ``b_est < 1``; ``params`` carries both ``b_lin`` and
        ``b_quad``.
    """
    B2, C = p.B2, p.C
    nb2 = max(opnorm(B2), 1e-300)
    ts = np.logspace(-6, 6, 200) * nb2 if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any(ts <= 0):
        raise ValueError("t_grid must be positive")
    vals = _c2_sup(B2, C, ts)
    k = int(np.argmax(vals))
    b_lin = float(vals[k])
    if t_grid is None:
        # supremum on the boundary of the grid: push the grid outwards
        for _ in range(max_extend):
            if k == 0:
                t_new = ts[0] * np.logspace(-3, -0.5, 6)
            elif k == len(ts) - 1:
                t_new = ts[-1] * np.logspace(0.5, 3, 6)
            else:
                break
            new_vals = _c2_sup(B2, C, t_new)
            ts = np.sort(np.concatenate([ts, t_new]))
            vals = _c2_sup(B2, C, ts)
            k = int(np.argmax(vals))
            improved = new_vals.max() - b_lin
            b_lin = float(vals[k])
            if improved <= 1e-14 * max(b_lin, 1e-300):
                break
    b_quad = b_lin**2
    G = C.conj().T @ C - b_quad * (B2.conj().T @ B2)
    a_est = max(0.0, float(np.linalg.eigvalsh((G + G.conj().T) / 2)[-1]))
    tiny = np.nextafter(0.0, 1.0)
    report = ConditionReport(
        "C2", 1.0 - b_quad >= tiny, 1.0 - b_quad, tiny, "exact",
        {"b_lin": b_lin, "b_quad": b_quad, "a": a_est, "t_min": float(ts[0]), "t_max": float(ts[-1])},
    )
    return b_quad, a_est, report


def check_c2(p, params, tol=None):
    """Exact (C.2) test for given ``(a, b)``: ``C*C - aI - b (B^2)* B^2 <= 0``."""
    B2, C = p.B2, p.C
    G = C.conj().T @ C - params.a * np.eye(p.dim) - params.b * (B2.conj().T @ B2)
    top = float(np.linalg.eigvalsh((G + G.conj().T) / 2)[-1])
    if tol is None:
        tol = 1e-10 * max(1.0, opnorm(C) ** 2 + params.a + params.b * opnorm(B2) ** 2)
    return ConditionReport("C2", -top >= -tol, -top, -tol, "exact", vars(params).copy())


def check_c3(p, t0=1.0, tol=1e-10):
    """(C.3): smallest singular value of ``I + C (B^2 + t0)^{-1}``."""
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    R = resolvent(-p.B2, t0)
    M = np.eye(p.dim) + p.C @ R
    smin = float(np.linalg.svd(M, compute_uv=False)[-1])
    return ConditionReport("C3", smin > tol, smin, np.nextafter(tol, np.inf), "exact", {"t0": t0})


def check_c4_c5(p, tol=None):
    """(C.4)/(C.5): accretivity of B (domain inclusions are automatic here)."""
    margin = accretivity_margin(p.B)
    if tol is None:
        tol = scale_tol(p.B, 1e-10)
    return ConditionReport(
        "C4/C5", margin >= -tol, margin, -tol, "exact",
        notes=["D(B) subset D(C) and boundedness of C hold automatically in finite dimension",
               M_ACCRETIVE_NOTE],
    )


# --------------------------------------------------------------------------
# Lambda and the factors


def build_lambda(p, tol=None):
    """``Lambda = B^2 + C`` and the margins behind its accretivity."""
    B2 = p.B2
    Lam = B2 + p.C
    m_b2 = accretivity_margin(B2)
    m_c = accretivity_margin(p.C)
    m_lam = accretivity_margin(Lam)
    if tol is None:
        tol = 1e-10 * max(1.0, opnorm(B2) + opnorm(p.C))
    hypothesis = m_b2 >= -tol and m_c >= -tol
    params = {"margin_B2": m_b2, "margin_C": m_c, "margin_Lambda": m_lam}
    if hypothesis:
        report = ConditionReport("Lambda_accretive", m_lam >= -tol, m_lam, -tol, "exact", params,
                                 notes=[M_ACCRETIVE_NOTE])
    else:
        report = ConditionReport(
            "Lambda_accretive", False, m_lam, -tol, "hypothesis_unmet", params,
            notes=["B^2 or C is not accretive; the accretivity of Lambda is not implied"],
        )
    return Lam, report


def factors_from_root(p, S, convention, root_operand, Lam=None, defective=False):
    """Assemble a :class:`Factorization` from a given root ``S``."""
    convention = Convention.parse(convention)
    Lam = p.B2 + p.C if Lam is None else Lam
    R = 1j * S if convention is Convention.ROTATED_ROOT else S
    return Factorization(
        Lambda=Lam,
        S=S,
        Z1=p.B + R,
        Z2=p.B - R,
        convention=convention,
        commutator_norm=opnorm(p.B @ S - S @ p.B),
        lambda_margin=accretivity_margin(Lam),
        root_operand=root_operand,
        defective_lambda=defective,
    )


def factorize(p, convention=Convention.REAL_ROOT, method="schur"):
    """Factor the pencil into ``(lam - Z1)`` and ``(lam - Z2)``.

    ``Lambda = 0`` (the pencil ``C = -B^2``) takes a dedicated path that
    returns ``Z1 = Z2 = B`` with ``defective_lambda`` set.

    Raises
    ------
    NegativeRealEigenvalue
        If the required principal root does not exist.
    """
    convention = Convention.parse(convention)
    Lam = p.B2 + p.C
    if opnorm(Lam) <= 1e-14 * max(p.scale(), np.finfo(float).tiny):
        Z = np.zeros_like(Lam)
        return factors_from_root(p, Z, convention, Z, Lam, defective=True)
    operand = Lam if convention is Convention.REAL_ROOT else -Lam
    S = principal_sqrt(operand, method)
    return factors_from_root(p, S, convention, operand, Lam)


def evaluate_pencil(p, lam, x):
    x = check_vector(x, p.dim, "x")
    return lam**2 * x - 2 * lam * (p.B @ x) - p.C @ x


def _q_matrix(p, lam):
    return lam**2 * np.eye(p.dim) - 2 * lam * p.B - p.C


def symmetrized_residual(f, p, lam):
    """``|| Q(lam) - ((lam-Z1)(lam-Z2) + (lam-Z2)(lam-Z1))/2 ||``."""
    I = np.eye(p.dim)
    L1, L2 = lam * I - f.Z1, lam * I - f.Z2
    return opnorm(_q_matrix(p, lam) - 0.5 * (L1 @ L2 + L2 @ L1))


def ordered_residual(f, p, lam):
    """``|| Q(lam) - (lam-Z1)(lam-Z2) ||``; equals ``||[S, B]||`` when ``S^2 = Lambda``."""
    I = np.eye(p.dim)
    return opnorm(_q_matrix(p, lam) - (lam * I - f.Z1) @ (lam * I - f.Z2))


# --------------------------------------------------------------------------
# kernels


def kernel_inclusion_lambda(p, theta, angle_tol=1e-8):
    """``N(Lambda) subset N(B^2) cap N(C*)`` for theta-accretive C, theta < pi/2."""
    if not theta < np.pi / 2:
        raise ValueError("theta must be below pi/2")
    ok_c, _ = sector_test(p.C, Sector(theta))
    ok_b2 = accretivity_margin(p.B2) >= -scale_tol(p.B2, 1e-10)
    Lam = p.B2 + p.C
    K = null_space(Lam)
    W = intersect_subspaces(null_space(p.B2), null_space(p.C.conj().T))
    gap = containment_gap(K, W)
    params = {"theta": theta, "dim_N_Lambda": K.shape[1], "dim_intersection": W.shape[1]}
    if not (ok_c and ok_b2):
        return ConditionReport("kernel_inclusion", False, -gap, -angle_tol, "hypothesis_unmet", params,
                               notes=["C is not theta-accretive or B^2 is not accretive"])
    return ConditionReport("kernel_inclusion", gap <= angle_tol, -gap, -angle_tol, "exact", params)


def kernel_identity_z1(f, p, theta, angle_tol=1e-8):
    """``N(Z1) = N(B) cap N(S)`` for theta-accretive B (real_root convention)."""
    ok_b, _ = sector_test(p.B, Sector(theta))
    N1 = null_space(f.Z1)
    W = intersect_subspaces(null_space(p.B), null_space(f.S))
    gap = subspace_gap(N1, W)
    params = {"theta": theta, "dim_N_Z1": N1.shape[1], "dim_intersection": W.shape[1]}
    if not ok_b or f.convention is not Convention.REAL_ROOT:
        return ConditionReport("kernel_identity_Z1", False, -gap, -angle_tol, "hypothesis_unmet", params,
                               notes=["needs theta-accretive B and the real_root convention"])
    return ConditionReport("kernel_identity_Z1", gap <= angle_tol, -gap, -angle_tol, "exact", params)


# --------------------------------------------------------------------------
# shifts and spectra


def _min_shift(T, psi, upper, tol):
    def ok(r):
        return sector_test(T, Sector(psi, vertex=-r))[0]

    if ok(0.0):
        return 0.0
    if not ok(upper):
        raise SearchFailed(f"no shift r <= {upper:.3e} makes the operator m-{psi:.4f}-accretive")
    lo, hi = 0.0, upper
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def factor_shift_search(f, eps, tol=1e-6):
    """Smallest ``r1, r2 >= 0`` making ``Z1 + r1`` and ``-Z2 + r2`` m-psi-accretive.

    ``psi = pi/4 + eps``; the shift moves the sector vertex to ``-r``.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    psi = min(np.pi / 4 + eps, np.pi / 2)
    upper = 10 * (opnorm(f.Z1 + f.Z2) / 2 + opnorm(f.S)) + 1.0
    return _min_shift(f.Z1, psi, upper, tol), _min_shift(-f.Z2, psi, upper, tol)


def pencil_eigen(p):
    """Eigenpairs of the pencil via the companion form ``[[0, I], [C, 2B]]``.

    Returns ``(eigenvalues, V)`` with unit columns ``V[:, k]``.
    """
    n = p.dim
    L = np.zeros((2 * n, 2 * n), dtype=complex)
    L[:n, n:] = np.eye(n)
    L[n:, :n] = p.C
    L[n:, n:] = 2 * p.B
    w, X = sla.eig(L)
    V = X[:n, :]
    V = V / np.linalg.norm(V, axis=0)
    return w, V


def eigenvalue_localization_check(p, rtol=1e-9):
    """``2(Re lam - |Im lam|) Re<Bv, v> <= (Re lam)^2 - (Im lam)^2`` for all eigenpairs.

    Meaningful when B is pi/4-sectorial and C is accretive; otherwise the
    report is marked ``hypothesis_unmet``.
    """
    ok_b, _ = sector_test(p.B, Sector(np.pi / 4))
    ok_c = accretivity_margin(p.C) >= -scale_tol(p.C, 1e-10)
    w, V = pencil_eigen(p)
    a, b = w.real, w.imag
    rb = np.real(np.einsum("ik,ij,jk->k", V.conj(), p.B, V))
    slack = (a**2 - b**2) - 2 * (a - np.abs(b)) * rb
    scale = np.abs(w) ** 2 + opnorm(p.B) + opnorm(p.C)
    normalized = slack / scale
    margin = float(normalized.min())
    params = {"eigenvalues": len(w)}
    if not (ok_b and ok_c):
        return ConditionReport("eigen_localization", False, margin, -rtol, "hypothesis_unmet", params)
    return ConditionReport("eigen_localization", margin >= -rtol, margin, -rtol, "exact", params,
                           notes=["margin is the slack divided by |lam|^2 + ||B|| + ||C||"])


def pencil_to_json(p):
    from .operator_core import operator_to_json

    return {"B": operator_to_json(p.B), "C": operator_to_json(p.C)}


def pencil_from_json(obj):
    from .operator_core import operator_from_json

    try:
        return PencilSpec(operator_from_json(obj["B"]), operator_from_json(obj["C"]))
    except KeyError as exc:
        raise ValueError(f"pencil object is missing field {exc}") from exc
