"""Propagators ``exp(-tT)`` and checks of contraction and sector claims."""

import threading

import numpy as np

from ._validation import check_operator, opnorm
from .matfun import expm
from .operator_core import Sector, numerical_range, sector_test
from .pencil import ConditionReport

__all__ = [
    "PropagatorCache",
    "propagator",
    "contraction_check",
    "holomorphic_sector_check",
    "omega_region_excess",
    "in_omega_region",
    "quasi_sectorial_check",
    "DEFAULT_T_SAMPLES",
]

DEFAULT_T_SAMPLES = (0.01, 0.1, 0.5, 1.0, 2.0, 10.0)
SECTOR_GUARD = 1e-3


class PropagatorCache:
    """Append-only cache of ``expm(sign * t * generator)`` keyed by ``t``.

    Reads are lock-free dictionary lookups; concurrent misses may compute
    the same entry twice, and the last write wins (values are identical).
    """

    def __init__(self, generator, sign=-1):
        if sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")
        self.generator = check_operator(generator, "generator")
        self.sign = sign
        self._store = {}
        self._lock = threading.Lock()

    def __call__(self, t):
        t = float(t)
        if t < 0:
            raise ValueError("t must be non-negative")
        hit = self._store.get(t)
        if hit is not None:
            return hit
        value = expm(self.sign * t * self.generator)
        value.setflags(write=False)
        with self._lock:
            self._store[t] = value
        return value

    def __len__(self):
        return len(self._store)

    def items(self):
        return sorted(self._store.items())


def propagator(T, t):
    """``exp(-tT)`` for ``t >= 0``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return expm(-t * check_operator(T))


def contraction_check(T, t_samples=DEFAULT_T_SAMPLES):
    """Largest ``||exp(-tT)||`` over the samples (at most 1 for accretive T)."""
    T = check_operator(T)
    return max(opnorm(propagator(T, t)) for t in t_samples)


def _polar_grid(psi, radii, n_angles, guard):
    half = np.pi / 2 - psi - guard
    if half < 0:
        return np.array([], dtype=complex)
    angles = np.linspace(-half, half, n_angles)
    return np.array([r * np.exp(1j * a) for r in radii for a in angles])


def holomorphic_sector_check(T, psi, radii=(0.1, 1.0, 10.0), n_angles=9,
                             guard=SECTOR_GUARD, tol=1e-10):
    """Contraction of ``exp(-zT)`` on a polar grid in ``|arg z| <= pi/2 - psi - guard``."""
    T = check_operator(T)
    ok, sector_margin = sector_test(T, Sector(psi))
    grid = _polar_grid(psi, radii, n_angles, guard)
    worst = max((opnorm(expm(-z * T)) for z in grid), default=1.0)
    params = {"psi": psi, "guard": guard, "grid_points": len(grid), "worst_norm": worst,
              "sector_margin": sector_margin}
    margin = 1.0 - worst
    if not ok:
        return ConditionReport("holomorphic_sector", False, margin, -tol, "hypothesis_unmet", params,
                               notes=[f"T is not m-{psi:.4f}-accretive"])
    return ConditionReport("holomorphic_sector", margin >= -tol, margin, -tol, "exact", params)


def omega_region_excess(z, omega):
    """Excess of ``z`` over the region ``|Im sqrt z| <= (1 - |z|) tan(omega) / 2``.

    Non-positive exactly inside the region.  Since ``(Im sqrt z)^2 =
    (|z| - Re z) / 2`` for either branch, the test is carried out in squared
    form, which needs no branch choice and does not amplify rounding near
    ``z = 0``.  ``omega = pi/2`` gives the closed unit disc and ``omega = 0``
    the segment ``[0, 1]``.
    """
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    if omega >= np.pi / 2:
        return r - 1.0
    c = 0.5 * np.tan(omega)
    squared = 0.5 * (r - z.real) - (c * (1.0 - r)) ** 2
    # squaring drops the sign of 1 - |z|
    return np.maximum(squared, r - 1.0)


def in_omega_region(z, omega, tol=0.0):
    return np.asarray(omega_region_excess(z, omega)) <= tol


def quasi_sectorial_check(T, omega, t_samples=DEFAULT_T_SAMPLES, m=720, tol=1e-10):
    """Check that the numerical range of ``exp(-tT)`` lies in the region Omega(omega)."""
    T = check_operator(T)
    ok, _ = sector_test(T, Sector(omega))
    worst = -np.inf
    for t in t_samples:
        sample = numerical_range(propagator(T, t), m)
        worst = max(worst, float(np.max(omega_region_excess(sample.boundary_points, omega))))
    params = {"omega": omega, "t_samples": list(t_samples), "angles": m}
    margin = -worst
    if not ok:
        return ConditionReport("quasi_sectorial", False, margin, -tol, "hypothesis_unmet", params,
                               notes=[f"T is not m-{omega:.4f}-accretive"])
    return ConditionReport("quasi_sectorial", margin >= -tol, margin, -tol, "exact", params)
