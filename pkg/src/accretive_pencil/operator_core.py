"""Dense complex operators and the accretivity / numerical-range layer.

Every operator is a finite complex matrix, so "m-accretive" reduces to
"accretive": the range condition on ``lambda + A`` holds automatically in
finite dimension.  Reports produced downstream record this reduction.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._validation import check_operator, opnorm, scale_tol
from .exceptions import PencilError, SingularResolvent

__all__ = [
    "Sector",
    "NumericalRangeSample",
    "hermitian_split",
    "accretivity_margin",
    "numerical_range",
    "support_violation",
    "sector_test",
    "sector_distance",
    "resolvent",
    "spectral_inclusion_check",
    "null_space",
    "intersect_subspaces",
    "subspace_gap",
    "containment_gap",
    "kernel_equality_check",
    "operator_to_json",
    "operator_from_json",
    "random_accretive",
    "M_ACCRETIVE_NOTE",
]

M_ACCRETIVE_NOTE = "finite dimension: accretive implies m-accretive (range condition automatic)"

DEFAULT_ANGLES = 720
NULL_RTOL = 1e-10


@dataclass(frozen=True)
class Sector:
    """Closed sector ``{z : |arg(z - vertex)| <= half_angle}``."""

    half_angle: float
    vertex: complex = 0j

    def __post_init__(self):
        if not 0.0 <= self.half_angle <= np.pi / 2:
            raise ValueError(f"half_angle must lie in [0, pi/2], got {self.half_angle}")
        if not np.isfinite(self.vertex):
            raise ValueError("sector vertex must be finite")


@dataclass(frozen=True)
class NumericalRangeSample:
    """Support-function sampling of W(A).

    ``support_values[k]`` is ``max Re(exp(-i angles[k]) z)`` over W(A) and
    ``boundary_points[k] = <A x_k, x_k>`` for the maximizing unit vector
    ``witnesses[k]``.  The half-planes give an outer polygon, the boundary
    points an inner one.
    """

    angles: np.ndarray
    support_values: np.ndarray
    boundary_points: np.ndarray
    witnesses: np.ndarray

    def contains(self, z, tol=0.0):
        """Whether ``z`` lies in the support-function intersection up to ``tol``."""
        return bool(np.all(support_violation(self, z) <= tol))


def hermitian_split(A):
    """Split ``A`` into Hermitian and skew-Hermitian parts, ``A = H + K``."""
    A = check_operator(A)
    Ah = A.conj().T
    return (A + Ah) / 2, (A - Ah) / 2


def accretivity_margin(A):
    """Smallest eigenvalue of the Hermitian part, i.e. ``min Re<Ax, x>``.

    ``A`` is accretive iff the result is non-negative.
    """
    H, _ = hermitian_split(A)
    return float(np.linalg.eigvalsh(H)[0])


def numerical_range(A, m=DEFAULT_ANGLES, chunk=90):
    """Sample the boundary of the numerical range at ``m`` equispaced angles.

    For each angle ``theta`` the top eigenpair of the Hermitian part of
    ``exp(-i theta) A`` gives the support value and a boundary witness.
    """
    A = check_operator(A)
    if m < 3:
        raise ValueError("need at least 3 angles")
    n = A.shape[0]
    angles = 2 * np.pi * np.arange(m) / m
    H, K = hermitian_split(A)
    support = np.empty(m)
    witnesses = np.empty((m, n), dtype=complex)
    for start in range(0, m, chunk):
        th = angles[start:start + chunk]
        # Herm(e^{-i th} A) = cos(th) H - i sin(th) K
        stack = np.cos(th)[:, None, None] * H - 1j * np.sin(th)[:, None, None] * K
        try:
            w, V = np.linalg.eigh(stack)
        except np.linalg.LinAlgError as exc:
            raise PencilError(f"Hermitian eigensolver failed in numerical_range: {exc}") from exc
        support[start:start + chunk] = w[:, -1]
        witnesses[start:start + chunk] = V[:, :, -1]
    boundary = np.einsum("ki,ij,kj->k", witnesses.conj(), A, witnesses)
    return NumericalRangeSample(angles, support, boundary, witnesses)


def support_violation(sample, z):
    """Largest excess of ``Re(exp(-i theta) z)`` over the support values.

    Non-positive iff every point of ``z`` lies inside the outer polygon.
    Returns one value per point.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    proj = np.real(np.exp(-1j * sample.angles)[None, :] * z[:, None])
    return (proj - sample.support_values[None, :]).max(axis=1)


def sector_test(A, sector, tol=None):
    """Test ``W(A - vertex I)`` against the closed sector.

    Uses that the sector of half-angle ``omega`` is the intersection of the
    half-planes where ``exp(+-i phi) z`` has non-negative real part, with
    ``phi = pi/2 - omega``.  At ``omega = 0`` those half-planes only pin
    ``Im z = 0``, so accretivity is checked as well.

    Returns
    -------
    passed : bool
    margin : float
        Minimum of the accretivity margins of the rotated operators.
    """
    A = check_operator(A)
    if not isinstance(sector, Sector):
        sector = Sector(float(sector))
    shifted = A - sector.vertex * np.eye(A.shape[0])
    phi = np.pi / 2 - sector.half_angle
    margin = min(
        accretivity_margin(np.exp(1j * phi) * shifted),
        accretivity_margin(np.exp(-1j * phi) * shifted),
    )
    if sector.half_angle == 0.0:
        margin = min(margin, accretivity_margin(shifted))
    if tol is None:
        tol = scale_tol(shifted, 1e-10)
    return margin >= -tol, margin


def sector_distance(z, half_angle):
    """Distance from ``z`` to the closed sector with vertex 0."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    ang = np.abs(np.angle(z))
    out = np.where(
        ang <= half_angle,
        0.0,
        np.where(ang >= half_angle + np.pi / 2, r, r * np.sin(ang - half_angle)),
    )
    return out if out.ndim else float(out)


def resolvent(A, lam, rtol=1e-13):
    """Return ``(lam I - A)^{-1}``.

    Raises
    ------
    SingularResolvent
        If the smallest singular value of ``lam I - A`` is below
        ``rtol * max(1, ||lam I - A||)``.
    """
    A = check_operator(A)
    M = lam * np.eye(A.shape[0]) - A
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] <= rtol * max(1.0, s[0]):
        raise SingularResolvent(s[-1], lam)
    return np.linalg.solve(M, np.eye(A.shape[0], dtype=complex))


def spectral_inclusion_check(A, m=DEFAULT_ANGLES, tol=None):
    """Check that every eigenvalue lies in the sampled numerical range.

    Returns ``(passed, worst_violation)``; the violation is measured against
    the support-function half-planes.
    """
    A = check_operator(A)
    sample = numerical_range(A, m)
    ev = np.linalg.eigvals(A)
    worst = float(support_violation(sample, ev).max())
    if tol is None:
        tol = scale_tol(A, 1e-10)
    return worst <= tol, worst


def null_space(A, rtol=NULL_RTOL):
    """Orthonormal basis of the numerical null space.

    Singular values below ``rtol * ||A||`` count as zero.
    """
    A = np.asarray(A, dtype=complex)
    return sla.null_space(A, rcond=rtol)


def intersect_subspaces(U, V, tol=1e-8):
    """Orthonormal basis of ``span(U) cap span(V)`` for orthonormal U, V."""
    if U.shape[1] == 0 or V.shape[1] == 0:
        return np.zeros((U.shape[0], 0), dtype=complex)
    R = U - V @ (V.conj().T @ U)
    _, s, Wh = np.linalg.svd(R)
    s = np.concatenate([s, np.zeros(U.shape[1] - s.size)])
    return U @ Wh.conj().T[:, s <= tol]


def subspace_gap(U, V):
    """Sine of the largest principal angle between two subspaces.

    Both bases must be orthonormal. Returns 1.0 when dimensions differ
    (and one of them is non-trivial), 0.0 when both are trivial.
    """
    if U.shape[1] == 0 and V.shape[1] == 0:
        return 0.0
    if U.shape[1] != V.shape[1]:
        return 1.0
    return float(np.sin(sla.subspace_angles(U, V).max()))


def containment_gap(U, V):
    """Sine of the largest angle between span(U) and its projection on span(V)."""
    if U.shape[1] == 0:
        return 0.0
    if V.shape[1] == 0:
        return 1.0
    R = U - V @ (V.conj().T @ U)
    return float(min(1.0, np.linalg.norm(R, 2)))


def kernel_equality_check(A, rtol=NULL_RTOL, angle_tol=1e-8):
    """Check ``N(A) = N(A*)``, which holds for accretive ``A``.

    Returns ``(passed, gap)`` with ``gap`` the sine of the largest principal
    angle between the two numeric null spaces.
    """
    A = check_operator(A)
    gap = subspace_gap(null_space(A, rtol), null_space(A.conj().T, rtol))
    return gap <= angle_tol, gap


def operator_to_json(A):
    A = check_operator(A)
    return {
        "dim": int(A.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in A],
    }


def operator_from_json(obj):
    try:
        n = int(obj["dim"])
        arr = np.asarray(obj["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed operator object: {exc}") from exc
    if arr.shape != (n, n, 2):
        raise ValueError(f"operator entries have shape {arr.shape}, expected {(n, n, 2)}")
    return check_operator(arr[..., 0] + 1j * arr[..., 1])


def random_accretive(n, rng, skew=1.0, floor=0.0, rank=None):
    """Random accretive matrix: PSD Hermitian part plus a skew part.

    ``floor`` is added to the Hermitian part, so ``accretivity_margin``
    is at least ``floor``.
    """
    rank = n if rank is None else rank
    G = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    K = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = G @ G.conj().T / n
    return H + floor * np.eye(n) + skew * (K - K.conj().T) / (2 * np.sqrt(n))
