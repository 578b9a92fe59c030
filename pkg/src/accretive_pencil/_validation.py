"""Input validation helpers, in the spirit of ``sklearn.utils.check_array``."""

import numpy as np


def check_operator(A, name="A"):
    """Return ``A`` as a finite, square complex128 array.

    Parameters
    ----------
    A : array_like
        Candidate operator matrix.
    name : str
        Used in error messages.

    Returns
    -------
    ndarray of shape (n, n), dtype complex128
    """
    A = np.asarray(A)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {A.shape}")
    if A.shape[0] == 0:
        raise ValueError(f"{name} must have positive dimension")
    A = A.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return A


def check_vector(v, dim, name="v"):
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if v.shape[0] != dim:
        raise ValueError(f"{name} must have dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return v


def check_grid(x, name="x_grid", unit_interval=True):
    """Strictly increasing real grid, optionally pinned to [0, 1]."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size < 2:
        raise ValueError(f"{name} needs at least two nodes")
    if np.any(np.diff(x) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    if unit_interval and (x[0] != 0.0 or x[-1] != 1.0):
        raise ValueError(f"{name} must start at 0 and end at 1")
    return x


def is_uniform(x, rtol=1e-9):
    d = np.diff(x)
    return bool(np.all(np.abs(d - d.mean()) <= rtol * d.mean()))


def opnorm(A):
    """Spectral norm; 0 for the zero matrix."""
    return float(np.linalg.norm(A, 2))


def scale_tol(A, rtol):
    """Absolute tolerance ``rtol * ||A||`` with a floor for the zero matrix."""
    return rtol * max(opnorm(A), np.finfo(float).tiny)
