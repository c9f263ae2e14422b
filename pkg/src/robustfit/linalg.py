"""Dense linear-algebra kernel used by every solver in the package.

Matrices are plain row-major float64 numpy arrays (2-D) and vectors are 1-D
float64 arrays.  The validators below enforce the construction invariants
(finite entries, expected dimensionality) at API boundaries; everything
downstream can then assume clean inputs.

Factorizations are LAPACK-backed.  cholesky_upper additionally applies the
pivot acceptance rule documented on the function, so rank-deficient inputs
fail loudly instead of producing a silently ill-conditioned factor.
"""

import numpy as np
import scipy.linalg


class ShapeMismatch(ValueError):
    """Operands do not conform."""


class NotPositiveDefinite(ArithmeticError):
    """Cholesky pivot fell below the acceptance threshold."""


class SingularFactor(ArithmeticError):
    """Triangular factor has a zero diagonal entry."""


class NoConvergence(ArithmeticError):
    """Eigenvalue iteration failed to converge."""


def as_matrix(a, name="matrix"):
    """Validate and return `a` as a 2-D float64 array with finite entries."""
    out = np.asarray(a, dtype=float)
    if out.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-D, got ndim={out.ndim}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def as_vector(a, name="vector"):
    """Validate and return `a` as a 1-D float64 array with finite entries."""
    out = np.asarray(a, dtype=float)
    if out.ndim != 1:
        raise ShapeMismatch(f"{name} must be 1-D, got ndim={out.ndim}")
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} contains non-finite entries")
    return out


def _require_square_symmetric(A, name, rtol=1e-10):
    if A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"{name} must be square, got {A.shape}")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale > 0 and np.max(np.abs(A - A.T)) > rtol * scale:
        raise ValueError(f"{name} is not symmetric within rtol={rtol}")


def matvec(A, x):
    """Product A @ x for a 2-D A and 1-D x."""
    A = as_matrix(A, "A")
    x = as_vector(x, "x")
    if A.shape[1] != x.shape[0]:
        raise ShapeMismatch(f"matvec: {A.shape} @ {x.shape}")
    return A @ x


def transpose_matvec(A, x):
    """Product A.T @ x without forming the transpose."""
    A = as_matrix(A, "A")
    x = as_vector(x, "x")
    if A.shape[0] != x.shape[0]:
        raise ShapeMismatch(f"transpose_matvec: {A.shape}.T @ {x.shape}")
    return A.T @ x


def matmul(A, B):
    """Product A @ B for 2-D operands."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape[1] != B.shape[0]:
        raise ShapeMismatch(f"matmul: {A.shape} @ {B.shape}")
    return A @ B


def cholesky_upper(A):
    """Upper-triangular U with U.T @ U = A for symmetric positive-definite A.

    A pivot (the squared diagonal entry of the factor) is accepted only if it
    exceeds 1e-12 * trace(A) / n; anything at or below that threshold raises
    NotPositiveDefinite.  This is the rank-deficiency detector for the whole
    package: a duplicated design column lands here.
    """
    A = as_matrix(A, "A")
    _require_square_symmetric(A, "A")
    n = A.shape[0]
    if n == 0:
        return A.copy()
    eps = 1e-12 * np.trace(A) / n
    try:
        U = np.linalg.cholesky(A).T
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    pivots = np.diag(U) ** 2
    if np.min(pivots) <= eps:
        raise NotPositiveDefinite(
            f"pivot {np.min(pivots):.3e} <= threshold {eps:.3e}")
    return U


def solve_upper_triangular(U, b, transpose=False):
    """Solve U @ x = b (or U.T @ x = b when transpose=True).

    U must be upper triangular; b may be a vector or a stack of columns.
    """
    U = as_matrix(U, "U")
    if U.shape[0] != U.shape[1]:
        raise ShapeMismatch(f"U must be square, got {U.shape}")
    b = np.asarray(b, dtype=float)
    if b.shape[0] != U.shape[0]:
        raise ShapeMismatch(f"solve: U {U.shape} vs b {b.shape}")
    if np.any(np.diag(U) == 0.0):
        raise SingularFactor("zero diagonal entry in triangular factor")
    return scipy.linalg.solve_triangular(
        U, b, trans="T" if transpose else "N", lower=False)


def sym_eig(A):
    """Eigendecomposition of a symmetric matrix.

    Returns (eigvals, eigvecs) with eigenvalues sorted descending and
    eigenvectors in matching columns, orthonormal.
    """
    A = as_matrix(A, "A")
    _require_square_symmetric(A, "A")
    try:
        lam, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    return lam[::-1].copy(), V[:, ::-1].copy()


def solve_normal_equations(G, rhs):
    """Solve G @ x = rhs for symmetric positive-definite G via Cholesky."""
    U = cholesky_upper(G)
    return solve_upper_triangular(U, solve_upper_triangular(U, rhs, transpose=True))
