"""Dense SPD linear algebra: Cholesky factor/solve/inverse and extreme eigenvalues.

All routines work on plain float64 numpy arrays.  Symmetry is enforced by
averaging with the transpose on ingestion (accumulated Gram matrices can
drift), after checking the asymmetry is within tolerance.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_solve

from .exceptions import DimensionMismatch, NotPositiveDefinite, NotSymmetric
from .validation import as_matrix, as_vector

SYMMETRY_RTOL = 1e-10
PIVOT_RTOL = 1e-14


def symmetrize(m, name="matrix"):
    """Average ``m`` with its transpose after checking it is nearly symmetric.

    Raises NotSymmetric if the relative Frobenius asymmetry exceeds 1e-10.
    """
    m = as_matrix(m, square=True, name=name)
    scale = np.linalg.norm(m)
    if scale > 0 and np.linalg.norm(m - m.T) > SYMMETRY_RTOL * scale:
        raise NotSymmetric(f"{name} is asymmetric beyond relative tolerance {SYMMETRY_RTOL}")
    return 0.5 * (m + m.T)


@dataclass(frozen=True)
class SpdFactor:
    """Lower-triangular Cholesky factor of ``matrix + damp*I``."""

    lower: np.ndarray
    damp: float

    @property
    def dim(self):
        return self.lower.shape[0]


def cholesky(m, damp=0.0):
    """Factor ``sym(m) + damp*I`` as L L^T with L lower triangular.

    Raises NotPositiveDefinite when a pivot falls at or below
    1e-14 times the largest diagonal entry, which signals that the
    dampening is too small for this matrix.
    """
    if damp < 0:
        raise ValueError("damp must be nonnegative")
    a = symmetrize(m)
    d = a.shape[0]
    a = a + damp * np.eye(d)
    try:
        lower = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    max_diag = float(np.max(np.diag(a))) if d else 0.0
    pivots = np.diag(lower) ** 2
    if d and np.any(pivots <= PIVOT_RTOL * max_diag):
        raise NotPositiveDefinite(
            f"pivot {pivots.min():.3e} below threshold {PIVOT_RTOL * max_diag:.3e}"
        )
    return SpdFactor(lower=lower, damp=float(damp))


def solve(factor, b):
    """Solve ``(m + damp*I) x = b`` given the Cholesky factor."""
    b = as_vector(b, dim=factor.dim, name="rhs")
    return cho_solve((factor.lower, True), b)


def solve_matrix(factor, b):
    """Solve with a matrix right-hand side (one column per system)."""
    b = as_matrix(b, name="rhs")
    if b.shape[0] != factor.dim:
        raise DimensionMismatch(f"rhs has {b.shape[0]} rows, factor dimension is {factor.dim}")
    return cho_solve((factor.lower, True), b)


def inverse(factor):
    """Dense inverse of the factored matrix, symmetrized."""
    inv = cho_solve((factor.lower, True), np.eye(factor.dim))
    return 0.5 * (inv + inv.T)


class PowerIterationResult(NamedTuple):
    value: float
    converged: bool
    iterations: int


_START_SEED = 0x5EED


def lambda_max(m, tol=1e-8, max_iter=10000):
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Starts from a fixed-seed random vector for determinism.  Convergence is
    declared when the eigen-residual ||A v - lam v|| drops below ``tol * lam``;
    otherwise the best estimate after ``max_iter`` sweeps is returned with
    ``converged=False``.
    """
    a = symmetrize(m)
    d = a.shape[0]
    if d == 0:
        return PowerIterationResult(0.0, True, 0)
    v = np.random.default_rng(_START_SEED).standard_normal(d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = a @ v
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            # v lies in the null space; for a PSD matrix sampled at random
            # this only happens when the matrix is (numerically) zero.
            return PowerIterationResult(0.0, True, it)
        lam = float(v @ w)
        resid = np.linalg.norm(w - lam * v)
        v = w / norm_w
        if resid <= tol * max(abs(lam), np.finfo(np.float64).tiny):
            return PowerIterationResult(lam, True, it)
    return PowerIterationResult(lam, False, max_iter)


def lambda_min(m, tol=1e-8, max_iter=10000):
    """Smallest eigenvalue of a symmetric PSD matrix via a shifted power iteration."""
    a = symmetrize(m)
    top = lambda_max(a, tol=tol, max_iter=max_iter)
    shifted = top.value * np.eye(a.shape[0]) - a
    bottom = lambda_max(shifted, tol=tol, max_iter=max_iter)
    return PowerIterationResult(
        top.value - bottom.value,
        top.converged and bottom.converged,
        top.iterations + bottom.iterations,
    )


def spectral_norm(m, tol=1e-8, max_iter=10000):
    """Spectral norm of a symmetric (possibly indefinite) matrix.

    Runs the PSD power iteration on m @ m and takes a square root, so sign
    patterns in the spectrum do not matter.
    """
    a = symmetrize(m)
    res = lambda_max(a @ a, tol=tol, max_iter=max_iter)
    return PowerIterationResult(float(np.sqrt(max(res.value, 0.0))), res.converged, res.iterations)
