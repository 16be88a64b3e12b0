"""Dense linear-algebra and transform kernels.

Thin, validated wrappers over LAPACK/pocketfft. Everything here is a pure
function of its inputs and works in complex double precision.
"""

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

HERMITIAN_ATOL = 1e-12
MAX_CONDITION = 1e10


class ShapeError(ValueError):
    """Operand dimensions are incompatible."""


class SymmetryError(ValueError):
    """A matrix expected to be Hermitian is not."""


class ConditioningError(np.linalg.LinAlgError):
    """Least-squares system is (numerically) rank deficient."""

    def __init__(self, condition):
        self.condition = float(condition)
        super().__init__(f"matrix is ill-conditioned (estimated condition number {self.condition:.3e})")


class FactorizationError(np.linalg.LinAlgError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot):
        self.pivot = int(pivot)
        super().__init__(f"matrix is not positive definite (failing pivot index {self.pivot})")


def _square(A, name="A"):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {A.shape}")
    return A


def is_hermitian(A, atol=HERMITIAN_ATOL):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    return bool(np.max(np.abs(A - A.conj().T), initial=0.0) <= atol * scale)


def dft(samples, axis=0):
    """Unnormalized forward DFT, ``X[k] = sum_l x[l] exp(-2j*pi*l*k/P)``.

    Any length is accepted; pocketfft handles prime sizes with Bluestein's
    algorithm, so there is no quadratic fallback to worry about. For 2-D
    input the transform runs along ``axis``.
    """
    x = np.asarray(samples, dtype=complex)
    if x.ndim not in (1, 2) or x.shape[axis] < 1:
        raise ShapeError("dft expects a non-empty 1-D sequence or 2-D stack")
    return np.fft.fft(x, axis=axis)


def idft(spectrum, axis=0):
    """Inverse of :func:`dft` (includes the 1/P factor), via the conjugate trick."""
    X = np.asarray(spectrum, dtype=complex)
    return np.conj(dft(np.conj(X), axis=axis)) / X.shape[axis]


def hermitian_eigen_min(A, atol=HERMITIAN_ATOL):
    """Smallest eigenvalue of a Hermitian (or real symmetric) matrix."""
    A = _square(A)
    if not is_hermitian(A, atol):
        raise SymmetryError("matrix is not Hermitian within tolerance")
    A = (A + A.conj().T) / 2
    return float(sla.eigh(A, eigvals_only=True, subset_by_index=[0, 0])[0])


def lstsq(A, b, max_condition=MAX_CONDITION):
    """Least-squares solution of ``A x = b`` via QR with column pivoting.

    Parameters
    ----------
    A : (m, n) array_like
        Tall matrix, ``m >= n``, with linearly independent columns.
    b : (m,) or (m, k) array_like
    max_condition : float
        Estimated condition numbers above this raise :class:`ConditioningError`.

    Returns
    -------
    x : (n,) or (n, k) ndarray
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    b = np.asarray(b, dtype=complex)
    m, n = A.shape
    if m < n:
        raise ShapeError(f"lstsq needs at least as many rows as columns, got {A.shape}")
    if b.shape[0] != m:
        raise ShapeError(f"right-hand side has {b.shape[0]} rows, expected {m}")
    if n == 0:
        return np.zeros((0,) + b.shape[1:], dtype=complex)
    Q, R, perm = sla.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    cond = np.inf if diag[-1] == 0 else diag[0] / diag[-1]
    if not cond <= max_condition:
        raise ConditioningError(cond)
    z = sla.solve_triangular(R, Q.conj().T @ b)
    x = np.empty_like(z)
    x[perm] = z
    return x


def cholesky_solve(A, B):
    """Solve ``A X = B`` for Hermitian positive definite ``A``.

    Raises
    ------
    FactorizationError
        With the zero-based index of the first non-positive pivot.
    """
    A = _square(A)
    if not is_hermitian(A):
        raise SymmetryError("matrix is not Hermitian within tolerance")
    B = np.asarray(B)
    if B.shape[0] != A.shape[0]:
        raise ShapeError(f"B has {B.shape[0]} rows, expected {A.shape[0]}")
    cplx = np.iscomplexobj(A) or np.iscomplexobj(B)
    dtype = complex if cplx else float
    potrf = lapack.zpotrf if cplx else lapack.dpotrf
    L, info = potrf(np.array(A, dtype=dtype), lower=1, clean=1)
    if info > 0:
        raise FactorizationError(info - 1)
    if info < 0:
        raise ValueError(f"illegal argument {-info} to potrf")
    return sla.cho_solve((L, True), np.array(B, dtype=dtype))
