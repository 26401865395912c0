"""Small dense linear-algebra helpers: symmetric eigendecomposition, thin SVD,
Cholesky with pivot reporting, and seeded random orthogonal matrices.

Everything here targets small matrices (n up to a few hundred) and wraps
numpy's LAPACK bindings behind the contracts the rest of the package relies on.
"""

import numpy as np

from .errors import InvalidInputError, NotPositiveDefiniteError


def _as_float_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return M


def sym_eig(M, sym_tol=1e-10):
    """Eigendecomposition of a symmetric matrix.

    Returns (eigenvalues, eigenvectors) with eigenvalues in descending order
    and eigenvectors as columns of an orthonormal matrix.
    """
    M = _as_float_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise InvalidInputError("sym_eig requires a square matrix")
    scale = max(1.0, np.abs(M).max())
    if np.abs(M - M.T).max() > sym_tol * scale:
        raise InvalidInputError("sym_eig requires a symmetric matrix")
    vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def thin_svd(M, k):
    """Top-k singular triplets of M as (U, s, V) with U: m×k, s: k, V: p×k."""
    M = _as_float_matrix(M)
    m, p = M.shape
    if not (1 <= k <= min(m, p)):
        raise InvalidInputError(f"k={k} out of range for shape {M.shape}")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return U[:, :k], s[:k], Vt[:k].T


def cholesky(M, rel_tol=1e-10):
    """Lower-triangular L with L L^T = M for symmetric positive-definite M.

    Raises NotPositiveDefiniteError naming the failing pivot when a diagonal
    pivot falls below rel_tol times the largest diagonal entry.
    """
    M = _as_float_matrix(M)
    n = M.shape[0]
    if M.shape[1] != n:
        raise InvalidInputError("cholesky requires a square matrix")
    scale = max(np.abs(np.diag(M)).max(), np.finfo(float).tiny)
    A = 0.5 * (M + M.T)
    L = np.zeros_like(A)
    for j in range(n):
        pivot = A[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= rel_tol * scale:
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite: pivot {j} = {pivot:.3e}", pivot=j
            )
        L[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def random_orthogonal(n, seed):
    """Seeded random orthogonal matrix, rotation-invariantly distributed.

    QR of a Gaussian matrix with the R diagonal sign fixed positive, which
    makes the result Haar-distributed and deterministic per seed.
    """
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(G)
    return Q * np.sign(np.diag(R))
