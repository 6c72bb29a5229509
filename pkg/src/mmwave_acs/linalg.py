"""Dense complex linear-algebra helpers.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``.  Vectors
produced by :func:`vec` are column vectors of shape ``(n, 1)``.
"""
import numpy as np
import scipy.linalg

DEFAULT_PINV_TOL = 1e-12


class SVDError(np.linalg.LinAlgError):
    """Raised when the singular value decomposition fails to converge."""


def as_matrix(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or 0 in a.shape:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    return a


def kron(a, b):
    return np.kron(as_matrix(a), as_matrix(b))


def khatri_rao(a, b):
    """Column-wise Kronecker product; column j is ``kron(a[:, j], b[:, j])``."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"khatri_rao needs equal column counts, got {a.shape[1]} and {b.shape[1]}")
    return scipy.linalg.khatri_rao(a, b)


def hadamard(a, b):
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"hadamard needs equal shapes, got {a.shape} and {b.shape}")
    return a * b


def vec(a):
    """Stack the columns of ``a`` into a single column (column-major order)."""
    return as_matrix(a).reshape(-1, 1, order="F")


def unvec(v, rows, cols):
    v = np.asarray(v, dtype=complex).ravel()
    if v.size != rows * cols:
        raise ValueError(f"cannot reshape {v.size} entries into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def hermitian(a):
    return as_matrix(a).conj().T


def frobenius_norm(a):
    return float(np.linalg.norm(as_matrix(a), "fro"))


def svd(a):
    """Thin SVD ``a = U @ diag(s) @ V^H``.

    Returns ``(U, s, V)`` with ``s`` non-increasing.  Note that ``V`` (not
    ``V^H``) is returned.
    """
    a = as_matrix(a)
    if not np.all(np.isfinite(a)):
        raise SVDError("svd input contains non-finite entries")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SVDError(str(exc)) from exc
    return u, s, vh.conj().T


def pinv(a, tol=DEFAULT_PINV_TOL):
    """Moore-Penrose pseudo-inverse.

    Singular values below ``tol * sigma_max`` are treated as zero.
    """
    a = as_matrix(a)
    u, s, v = svd(a)
    if s[0] == 0.0:
        return np.zeros(a.shape[::-1], dtype=complex)
    keep = s > tol * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (v * inv) @ u.conj().T


def projector(v, tol=DEFAULT_PINV_TOL):
    """Orthogonal projector ``V V^+`` onto the column space of ``v``."""
    v = as_matrix(v)
    return v @ pinv(v, tol)
