"""Correlation matrices, Gram factorization and Schur products.

A correlation matrix here is a plain ``complex128`` ndarray that passed
:func:`validate_correlation`. A generating set of unit vectors is stored as
an ``(s, n)`` array ``T`` whose columns are the vectors, so that the Gram
matrix is ``T^* T``.
"""

import numpy as np

from .errors import (
    DiagonalNotUnit,
    DimensionMismatch,
    DuplicateIndex,
    IndexOutOfRange,
    NonFinite,
    NotHermitian,
    NotPSD,
    NotSquare,
)

VALIDATION_TOL = 1e-9
RANK_TOL = 1e-8
RECONSTRUCTION_TOL = 1e-8

__all__ = [
    "VALIDATION_TOL",
    "RANK_TOL",
    "RECONSTRUCTION_TOL",
    "as_complex_matrix",
    "validate_correlation",
    "is_correlation",
    "schur_product",
    "numerical_rank",
    "gram_factor",
    "gram_of",
    "principal_submatrix",
    "all_p_matrix",
]


def as_complex_matrix(M):
    """Return ``M`` as a finite 2-D ``complex128`` array (copied)."""
    A = np.array(M, dtype=np.complex128)
    if A.ndim != 2:
        raise NotSquare(f"expected a 2-D matrix, got {A.ndim} dimension(s)")
    if not np.all(np.isfinite(A)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(A))[0])
        raise NonFinite(f"non-finite entry at {bad}")
    return A


def _check_hermitian(A, tol):
    dev = np.abs(A - A.conj().T)
    worst = float(dev.max()) if dev.size else 0.0
    if worst > tol:
        a, b = np.unravel_index(np.argmax(dev), dev.shape)
        raise NotHermitian(
            f"|M[{a},{b}] - conj(M[{b},{a}])| = {worst:.3e} exceeds tol {tol:.1e}"
        )


def validate_correlation(M, tol=VALIDATION_TOL):
    """Check that ``M`` is a correlation matrix and return it as an array.

    Parameters
    ----------
    M : array_like, (n, n)
        Candidate matrix.
    tol : float
        Absolute tolerance for hermiticity, the unit diagonal and the
        off-diagonal magnitude bound. The PSD test allows a minimum
        eigenvalue down to ``-tol * max(1, lambda_max)``.

    Returns
    -------
    ndarray
        ``complex128`` copy of ``M``.

    Raises
    ------
    NotSquare, NotHermitian, DiagonalNotUnit, NotPSD
        Each message names the worst offending entry or eigenvalue.
    """
    A = as_complex_matrix(M)
    n_rows, n_cols = A.shape
    if n_rows != n_cols:
        raise NotSquare(f"matrix is {n_rows}x{n_cols}, not square")
    _check_hermitian(A, tol)

    diag_dev = np.abs(np.diag(A) - 1.0)
    if diag_dev.size and diag_dev.max() > tol:
        a = int(np.argmax(diag_dev))
        raise DiagonalNotUnit(f"|M[{a},{a}] - 1| = {diag_dev[a]:.3e} exceeds tol {tol:.1e}")

    evals = np.linalg.eigvalsh((A + A.conj().T) / 2)
    lam_min, lam_max = float(evals[0]), float(evals[-1])
    if lam_min < -tol * max(1.0, lam_max):
        raise NotPSD(f"minimum eigenvalue {lam_min:.6g} < 0")

    mags = np.abs(A)
    if mags.max() > 1.0 + tol:
        a, b = np.unravel_index(np.argmax(mags), mags.shape)
        raise NotPSD(f"|M[{a},{b}]| = {mags[a, b]:.6g} exceeds 1")
    return A


def is_correlation(M, tol=VALIDATION_TOL):
    try:
        validate_correlation(M, tol)
    except (ValueError, np.linalg.LinAlgError):
        return False
    return True


def schur_product(A, B, tol=VALIDATION_TOL):
    """Entrywise product of two correlation matrices, revalidated."""
    A = validate_correlation(A, tol)
    B = validate_correlation(B, tol)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    return validate_correlation(A * B, tol)


def numerical_rank(A, rel_tol=RANK_TOL):
    """Number of eigenvalues of the Hermitian matrix ``A`` above ``rel_tol * lambda_max``."""
    A = as_complex_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise NotSquare(f"matrix is {A.shape[0]}x{A.shape[1]}, not square")
    scale = max(1.0, float(np.abs(A).max()))
    _check_hermitian(A, VALIDATION_TOL * scale)
    evals = np.linalg.eigvalsh((A + A.conj().T) / 2)
    lam_max = evals[-1]
    if lam_max <= 0:
        return 0
    return int(np.count_nonzero(evals > rel_tol * lam_max))


def gram_factor(P, rel_tol=RANK_TOL, tol=VALIDATION_TOL):
    """Factor a correlation matrix as ``P = T^* T`` with ``T`` of shape ``(rank, n)``.

    Uses the Hermitian eigendecomposition: eigenvalues below the rank
    threshold (including slightly negative ones) are dropped and the columns
    of ``T`` are renormalized to unit length.
    """
    P = validate_correlation(P, tol)
    evals, evecs = np.linalg.eigh((P + P.conj().T) / 2)
    keep = evals > rel_tol * evals[-1]
    lam = evals[keep][::-1]
    U = evecs[:, keep][:, ::-1]
    T = np.sqrt(lam)[:, None] * U.conj().T
    return T / np.linalg.norm(T, axis=0)


def gram_of(T, tol=VALIDATION_TOL):
    """Gram matrix ``P(a, b) = <v_a, v_b>`` of the columns of ``T``.

    The inner product is conjugate-linear in the first argument.
    """
    T = np.asarray(T, dtype=np.complex128)
    if T.ndim == 1:
        T = T[:, None]
    norms = np.linalg.norm(T, axis=0)
    dev = np.abs(norms - 1.0)
    if dev.size and dev.max() > tol:
        a = int(np.argmax(dev))
        raise DiagonalNotUnit(f"vector {a} has norm {norms[a]:.12g}, expected 1")
    return validate_correlation(T.conj().T @ T, tol)


def principal_submatrix(P, idx, tol=VALIDATION_TOL):
    P = validate_correlation(P, tol)
    idx = [int(i) for i in idx]
    n = P.shape[0]
    if len(set(idx)) != len(idx):
        raise DuplicateIndex(f"repeated index in {idx}")
    for i in idx:
        if not 0 <= i < n:
            raise IndexOutOfRange(f"index {i} outside [0, {n})")
    return P[np.ix_(idx, idx)].copy()


def all_p_matrix(n, p):
    """The ``n x n`` matrix with unit diagonal and every off-diagonal entry ``p``."""
    return (1 - p) * np.eye(n, dtype=np.complex128) + p * np.ones((n, n), dtype=np.complex128)
