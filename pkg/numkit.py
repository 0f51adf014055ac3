##############################################################################
# Dense symmetric linear-algebra kernels.
# Cholesky goes through numpy/scipy; the symmetric eigensolver is a cyclic
# Jacobi rotation sweep, and the thin SVD is taken from the eigenpairs of the
# Gram matrix. All functions are pure: inputs are never modified.
##############################################################################
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from errors import InvalidInput, NoConvergence, NotPositiveDefinite, NotSymmetric

ASYMMETRY_TOL = 1e-8
JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-12


@dataclass(frozen=True)
class SymEig:
    eigenvalues: np.ndarray   # ascending
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def symmetrize(S) -> np.ndarray:
    """Return (S + S^T)/2 after checking S is square and symmetric up to ASYMMETRY_TOL."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InvalidInput("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if S.size and np.max(np.abs(S - S.T)) > ASYMMETRY_TOL * scale:
        raise NotSymmetric(f"matrix asymmetry {np.max(np.abs(S - S.T)):.3e} exceeds tolerance")
    return (S + S.T) / 2.0


def chol_lower(S) -> np.ndarray:
    """Lower Cholesky factor L with L L^T = S."""
    S = symmetrize(S)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"matrix is not positive definite: {e}") from e
    diag = np.diag(L)
    if not np.all(np.isfinite(L)) or np.any(diag <= 0.0):
        raise NotPositiveDefinite("non-positive pivot in Cholesky factorization")
    return L


def _rotate(A: np.ndarray, V: np.ndarray, p: int, q: int) -> None:
    """One Jacobi rotation in place, zeroing A[p, q]."""
    apq = A[p, q]
    theta = (A[q, q] - A[p, p]) / (2.0 * apq)
    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c

    row_p = A[p, :].copy()
    row_q = A[q, :].copy()
    A[p, :] = c * row_p - s * row_q
    A[q, :] = s * row_p + c * row_q
    col_p = A[:, p].copy()
    col_q = A[:, q].copy()
    A[:, p] = c * col_p - s * col_q
    A[:, q] = s * col_p + c * col_q
    A[p, q] = A[q, p] = 0.0

    vp = V[:, p].copy()
    vq = V[:, q].copy()
    V[:, p] = c * vp - s * vq
    V[:, q] = s * vp + c * vq


def _off_diagonal(A: np.ndarray) -> float:
    return float(np.linalg.norm(A - np.diag(np.diag(A))))


def sym_eig(S) -> SymEig:
    """
    Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.

    Stops once the off-diagonal Frobenius norm falls below JACOBI_TOL * ||S||_F.
    Eigenvalues come back ascending; each eigenvector is sign-fixed so that its
    largest-magnitude entry is positive, which keeps downstream projections
    deterministic.
    """
    A = symmetrize(S).copy()
    n = A.shape[0]
    V = np.eye(n)
    norm = np.linalg.norm(A)
    if n == 0 or norm == 0.0:
        return SymEig(np.zeros(n), V)

    threshold = JACOBI_TOL * norm
    for _ in range(JACOBI_MAX_SWEEPS):
        off = _off_diagonal(A)
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if A[p, q] != 0.0:
                    _rotate(A, V, p, q)
    else:
        off = _off_diagonal(A)
        if off > threshold:
            raise NoConvergence(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-diagonal {off:.3e})")

    order = np.argsort(np.diag(A), kind="stable")
    eigenvalues = np.diag(A)[order]
    V = V[:, order]
    pivots = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivots, np.arange(n)])
    signs[signs == 0] = 1.0
    return SymEig(eigenvalues, V * signs)


def spd_inverse(S) -> np.ndarray:
    L = chol_lower(S)
    inverse = cho_solve((L, True), np.eye(L.shape[0]))
    return (inverse + inverse.T) / 2.0


def log_det_spd(S) -> float:
    L = chol_lower(S)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def spd_sqrt(S) -> np.ndarray:
    """Symmetric positive square root."""
    chol_lower(S)
    eig = sym_eig(S)
    root = (eig.eigenvectors * np.sqrt(np.clip(eig.eigenvalues, 0.0, None))) @ eig.eigenvectors.T
    return (root + root.T) / 2.0


def spd_inv_sqrt(S) -> np.ndarray:
    chol_lower(S)
    eig = sym_eig(S)
    root = (eig.eigenvectors / np.sqrt(eig.eigenvalues)) @ eig.eigenvectors.T
    return (root + root.T) / 2.0


def whiten(L: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Rows of X mapped through L^{-1}, so squared row norms are Mahalanobis distances."""
    return solve_triangular(L, np.asarray(X, dtype=float).T, lower=True).T


def svd_topk(M, r: int):
    """
    Top-r singular values (descending) and right singular vectors (d x r) of M.

    Taken from the eigenpairs of the d x d Gram matrix M^T M.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidInput(f"expected a matrix, got shape {M.shape}")
    n, d = M.shape
    if not 1 <= r <= min(n, d):
        raise InvalidInput(f"rank {r} outside [1, {min(n, d)}]")
    eig = sym_eig(M.T @ M)
    values = np.sqrt(np.clip(eig.eigenvalues[::-1][:r], 0.0, None))
    vectors = eig.eigenvectors[:, ::-1][:, :r]
    return values, vectors
