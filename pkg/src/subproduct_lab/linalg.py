"""Dense complex matrix kernel.

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
Kronecker products use numpy's convention: the left factor indexes the
outer blocks, so ``kron(A, B)[i*p + k, j*q + l] = A[i, j] * B[k, l]``.
That ordering is the word ordering used throughout the package.
"""

import numpy as np
import scipy.linalg

DEFAULT_RANK_TOL = 1e-8


def cmatrix(a):
    """Return ``a`` as a 2-d complex128 array (copying only when needed)."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got an array of shape {a.shape}")
    return a


def adjoint(a):
    """Conjugate transpose as a C-contiguous copy.

    Returning a fresh row-major array (not a transposed view) keeps BLAS
    products independent of memory layout, so equal inputs round equally.
    """
    return np.ascontiguousarray(np.conj(np.asarray(a)).T)


def kron(a, b):
    """Kronecker product, left factor slowest."""
    return np.kron(cmatrix(a), cmatrix(b))


def kron_all(*factors):
    out = np.ones((1, 1), dtype=np.complex128)
    for f in factors:
        out = np.kron(out, cmatrix(f))
    return out


def op_norm(a):
    """Operator (spectral) norm, i.e. the largest singular value."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(a)[0])


def numerical_rank(a, tol=DEFAULT_RANK_TOL):
    a = np.asarray(a)
    if a.size == 0:
        return 0
    s = scipy.linalg.svdvals(a)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def orthonormal_range(a, tol=DEFAULT_RANK_TOL):
    """Isometry whose columns span the numerical range of ``a``.

    Singular values below ``tol * s_max`` count as zero. The zero matrix
    gives a matrix with no columns.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = cmatrix(a)
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=np.complex128)
    u, s, _ = scipy.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0), dtype=np.complex128)
    r = int(np.count_nonzero(s > tol * s[0]))
    return u[:, :r]


def projector(j):
    """Orthogonal projection ``J J*`` onto the range of an isometry."""
    j = cmatrix(j)
    return j @ adjoint(j)


def isometry_defect(j):
    """``|J*J - I|`` for a matrix expected to be an isometry."""
    j = cmatrix(j)
    return op_norm(adjoint(j) @ j - np.eye(j.shape[1]))


def is_finite(a):
    return bool(np.all(np.isfinite(np.asarray(a))))


def subspace_distance(a, b):
    """Largest principal angle (radians) between the column spans of a and b.

    Two empty spans are at distance zero; an empty and a nonempty span are
    at distance pi/2.
    """
    a = cmatrix(a)
    b = cmatrix(b)
    if a.shape[1] == 0 and b.shape[1] == 0:
        return 0.0
    if a.shape[1] == 0 or b.shape[1] == 0:
        return float(np.pi / 2)
    return float(np.max(scipy.linalg.subspace_angles(a, b)))


def random_unitary(n, rng):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_cmatrix(rows, cols, rng):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
