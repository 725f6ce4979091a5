"""Dense SPD kernels: Cholesky factor/solve, inversion, symmetric rank-1 update.

Everything is float64 and dense row-major. Positive definiteness is
detected solely through Cholesky (a non-positive pivot), never through
eigenvalues.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NotPositiveDefinite

__all__ = [
    "CholeskyFactor",
    "cholesky_factor",
    "cholesky_solve",
    "spd_inverse",
    "rank1_symmetric_update",
    "matvec",
    "require_symmetric",
]


@dataclass
class CholeskyFactor:
    """Lower-triangular factor L with L @ L.T reconstructing the input."""

    n: int
    lower: np.ndarray


def require_symmetric(a: np.ndarray, rtol: float = 1e-12) -> None:
    """Raise ValueError unless ``a`` is square and symmetric within rtol * max|a|."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if np.max(np.abs(a - a.T)) > rtol * max(scale, 1.0):
        raise ValueError("matrix is not symmetric within tolerance")


def cholesky_factor(a: np.ndarray) -> CholeskyFactor:
    """Factor a symmetric positive definite matrix as L @ L.T.

    Raises NotPositiveDefinite when any pivot is non-positive, which is
    the only PD check performed anywhere in the package.
    """
    a = np.asarray(a, dtype=float)
    require_symmetric(a)
    try:
        lower = sla.cholesky(a, lower=True, check_finite=False)
    except sla.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return CholeskyFactor(n=a.shape[0], lower=lower)


def cholesky_solve(f: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    """Solve A x = b given the factor of A. ``b`` may be a vector or matrix."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != f.n:
        raise ValueError(f"rhs has leading dimension {b.shape[0]}, expected {f.n}")
    return sla.cho_solve((f.lower, True), b, check_finite=False)


def spd_inverse(a: np.ndarray) -> np.ndarray:
    """Invert an SPD matrix by factoring and solving against the identity."""
    f = cholesky_factor(a)
    inv = cholesky_solve(f, np.eye(f.n))
    # exact symmetry, cheap insurance against round-off drift
    return 0.5 * (inv + inv.T)


def rank1_symmetric_update(m: np.ndarray, c: float, v: np.ndarray) -> None:
    """In place M <- M + c * v v^T, keeping M exactly symmetric.

    Only the lower triangle is computed; the upper triangle is mirrored
    from it so repeated updates cannot accumulate asymmetry.
    """
    n = m.shape[0]
    if m.shape != (n, n) or v.shape != (n,):
        raise ValueError(f"shape mismatch: M {m.shape}, v {v.shape}")
    if c == 0.0:
        return
    m += c * np.outer(v, v)
    iu = np.triu_indices(n, 1)
    m[iu] = m.T[iu]


def matvec(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Matrix-vector product with an explicit dimension check."""
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if a.ndim != 2 or x.ndim != 1 or a.shape[1] != x.shape[0]:
        raise ValueError(f"cannot multiply {a.shape} by {x.shape}")
    return a @ x
