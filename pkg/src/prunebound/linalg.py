"""Dense matrix primitives: validation, norms, spectral estimation, sampling.

Matrices are plain 2-D float64 numpy arrays throughout the package; the
helpers here enforce the shared invariants (2-D, finite entries).
"""

from __future__ import annotations

import numpy as np

from .errors import PowerIterationError, ValidationFailure
from .rng import RngHandle


def require_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and return a dense 2-D float64 matrix with finite entries."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise ValidationFailure(f"{name} must be 2-D, got ndim={a.ndim}")
    if a.size == 0:
        raise ValidationFailure(f"{name} must be non-empty")
    if not np.all(np.isfinite(a)):
        raise ValidationFailure(f"{name} contains non-finite entries")
    return a


def spectral_norm(m, tol: float = 1e-9, max_iter: int = 1000,
                  rng: RngHandle | None = None) -> float:
    """Largest singular value via power iteration on m^T m.

    The start vector is random (seeded, deterministic) so an unlucky
    orthogonal start is measure-zero. Convergence is declared when the
    Rayleigh estimate moves by less than `tol` in relative terms.

    Raises PowerIterationError after max_iter without convergence, carrying
    the last estimate and residual.
    """
    a = require_matrix(m)
    if tol <= 0:
        raise ValidationFailure("tol must be positive")
    gen = (rng or RngHandle(0x5EC7_0A11)).generator()

    v = gen.standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    residual = np.inf
    for it in range(max_iter):
        w = a @ v
        sigma_new = float(np.linalg.norm(w))
        if sigma_new == 0.0:
            # v is in the null space; for the zero matrix that means norm 0,
            # otherwise restart from a fresh direction.
            if not a.any():
                return 0.0
            v = gen.standard_normal(a.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = a.T @ w
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return sigma_new
        v /= nv
        residual = abs(sigma_new - sigma)
        if residual <= tol * sigma_new:
            return sigma_new
        sigma = sigma_new
    raise PowerIterationError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(last estimate {sigma_new:.6g}, residual {residual:.3g})",
        last_estimate=sigma_new, residual=residual, iterations=max_iter)


def norm_2_1(m) -> float:
    """(2,1) norm: sum over columns of the column Euclidean norms.

    Applied to the matrix exactly as passed; callers wanting the row-sum
    convention pass the transpose.
    """
    a = require_matrix(m)
    return float(np.sum(np.linalg.norm(a, axis=0)))


def gaussian_matrix(rows: int, cols: int, variance: float, rng: RngHandle) -> np.ndarray:
    """i.i.d. zero-mean Gaussian matrix with the given entry variance."""
    if rows <= 0 or cols <= 0:
        raise ValidationFailure("rows and cols must be positive")
    if variance <= 0:
        raise ValidationFailure("variance must be positive")
    return rng.generator().standard_normal((rows, cols)) * np.sqrt(variance)
