"""Dense linear algebra and Gaussian sampling primitives.

Everything operates on plain float64 ndarrays.  Factorizations are written
out explicitly (row Cholesky, cyclic Jacobi) so behavior is identical across
BLAS builds and pivoting failures raise typed errors.
"""

from __future__ import annotations

import numpy as np

from .errors import DimMismatch, NoConvergence, NotPositiveDefinite
from .rng import RngState

_CHOL_PIVOT_MIN = 1e-12
_JACOBI_MAX_SWEEPS = 100


def standard_normal_sample(rng: RngState, n: int, d: int) -> np.ndarray:
    """n x d matrix of i.i.d. standard normals, deterministic in ``rng``."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    return rng.normal(n * d).reshape(n, d)


def cholesky(cov: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L @ L.T == cov.

    Raises
    ------
    NotPositiveDefinite
        If any pivot falls at or below 1e-12.
    """
    a = np.asarray(cov, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimMismatch(f"expected square matrix, got shape {a.shape}")
    n = a.shape[0]
    lower = np.zeros((n, n))
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= _CHOL_PIVOT_MIN:
            raise NotPositiveDefinite(f"pivot {pivot:.3e} at index {j}")
        lower[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            lower[j + 1:, j] = (a[j + 1:, j] - lower[j + 1:, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def mvn_sample(rng: RngState, mean: np.ndarray, chol: np.ndarray, n: int) -> np.ndarray:
    """Draw n rows from N(mean, chol @ chol.T)."""
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    chol = np.asarray(chol, dtype=np.float64)
    d = mean.shape[0]
    if chol.shape != (d, d):
        raise DimMismatch(f"mean has dim {d} but factor has shape {chol.shape}")
    z = standard_normal_sample(rng, n, d)
    return mean + z @ chol.T


def sym_eigen(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues descending, eigenvectors as columns) satisfying
    ``V @ diag(w) @ V.T == cov`` to 1e-8.

    Raises
    ------
    NoConvergence
        If off-diagonal mass has not vanished after 100 sweeps.
    """
    a = np.array(cov, dtype=np.float64)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] != n:
        raise DimMismatch(f"expected square matrix, got shape {a.shape}")
    if n > 4096:
        raise DimMismatch("matrix dimension exceeds 4096")
    v = np.eye(n)
    if n == 1:
        return a[0, :1].copy(), v
    scale = max(1.0, float(np.abs(a).max()))
    tol = 1e-14 * scale
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= n * tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= tol:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise NoConvergence(f"Jacobi did not converge in {_JACOBI_MAX_SWEEPS} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distance matrix: D[i, j] = sum_k (x_ik - x_jk)^2.

    Computed from explicit differences (no expanded-product shortcut) so the
    result matches a per-pair summation bit-for-bit; intended for modest row
    counts.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DimMismatch("need a 2-D array with at least two rows")
    diff = x[:, None, :] - x[None, :, :]
    return np.sum(diff * diff, axis=-1)
