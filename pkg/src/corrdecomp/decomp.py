"""Rank peeling and Schur-product decompositions of correlation matrices.

The core step (:func:`peel`) takes a generating set containing a vector
``v_c`` that is linearly independent from the others and splits the Gram
matrix as ``P = R * Q`` (entrywise), where ``R`` has rank one less than ``P``
and ``Q`` has rank two. :func:`decompose_full` repeats the step until the
remaining factor fits the requested rank bound.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidRank,
    NoIndependentPivot,
    NotRankOne,
    NotUnimodular,
    PivotNotIndependent,
    RankTooLow,
)
from .matcore import (
    RANK_TOL,
    RECONSTRUCTION_TOL,
    VALIDATION_TOL,
    as_complex_matrix,
    gram_factor,
    gram_of,
    is_correlation,
    numerical_rank,
    validate_correlation,
)

# Below this projection norm the pivot is treated as orthogonal to the rest.
ORTHOGONAL_CUTOFF = 1e-12


@dataclass
class PeelResult:
    R: np.ndarray
    Q: np.ndarray
    branch: str  # "orthogonal" or "projective"
    pivot: int
    proj_norm: float
    R_vectors: np.ndarray
    Q_vectors: np.ndarray


@dataclass
class Decomposition:
    factors: list
    rank_bound: int
    target_n: int
    residual: float = np.nan
    verified: bool = False

    @property
    def m(self):
        return len(self.factors)

    def product(self):
        out = np.ones((self.target_n, self.target_n), dtype=np.complex128)
        for F in self.factors:
            out = out * np.asarray(F, dtype=np.complex128)
        return out


@dataclass
class VerificationReport:
    residual: float
    ranks: list
    factors_valid: list
    rank_bound: int
    tol: float
    problems: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.problems


def _span_basis(V, rel_tol):
    """Orthonormal basis of the column span of ``V``, consistent with the Gram rank rule."""
    U, sv, _ = np.linalg.svd(V, full_matrices=False)
    if sv.size == 0 or sv[0] == 0:
        return U[:, :0]
    keep = sv**2 > rel_tol * sv[0] ** 2
    return U[:, keep]


def _drop_rank(P, c, rel_tol):
    others = [a for a in range(P.shape[0]) if a != c]
    return numerical_rank(P[np.ix_(others, others)], rel_tol)


def is_independent_pivot(P, c, rel_tol=RANK_TOL, rank=None):
    """True if generator ``c`` of ``P`` lies outside the span of the other generators.

    Decided by a rank drop: removing row and column ``c`` lowers the rank by one.
    """
    if rank is None:
        rank = numerical_rank(P, rel_tol)
    return _drop_rank(P, c, rel_tol) == rank - 1


def projection_norm(T, c, rel_tol=RANK_TOL):
    """Norm of the projection of column ``c`` of ``T`` onto the span of the other columns."""
    others = [a for a in range(T.shape[1]) if a != c]
    B = _span_basis(T[:, others], rel_tol)
    return float(np.linalg.norm(B.conj().T @ T[:, c]))


def peel(T, c, rel_tol=RANK_TOL, tol=VALIDATION_TOL):
    """Split the Gram matrix of ``T`` into a rank-reduced factor and a rank-2 factor.

    Parameters
    ----------
    T : array_like, (s, n)
        Generating unit vectors as columns.
    c : int
        Index of the pivot vector; must be linearly independent of the others.

    Returns
    -------
    PeelResult
        ``R`` has rank ``rank(P) - 1``, ``Q`` has rank at most 2 and
        ``R * Q == P`` entrywise. ``R_vectors`` and ``Q_vectors`` generate them.
    """
    T = np.asarray(T, dtype=np.complex128)
    P = gram_of(T, tol)
    n = P.shape[0]
    if not 0 <= c < n:
        raise PivotNotIndependent(f"pivot {c} outside [0, {n})")
    rank = numerical_rank(P, rel_tol)
    if rank < 3:
        raise RankTooLow(f"rank {rank} < 3; nothing to peel")
    if not is_independent_pivot(P, c, rel_tol, rank):
        raise PivotNotIndependent(f"vector {c} lies in the span of the others")

    others = [a for a in range(n) if a != c]
    B = _span_basis(T[:, others], rel_tol)
    proj_c = B @ (B.conj().T @ T[:, c])
    q = float(np.linalg.norm(proj_c))

    if q <= ORTHOGONAL_CUTOFF:
        branch = "orthogonal"
        R_vecs = T.copy()
        R_vecs[:, c] = T[:, others[0]]
        Q_vecs = np.zeros((2, n), dtype=np.complex128)
        Q_vecs[0, :] = 1.0
        Q_vecs[:, c] = [0.0, 1.0]
    else:
        branch = "projective"
        R_vecs = T.copy()
        R_vecs[:, c] = proj_c / q
        Q_vecs = np.zeros((2, n), dtype=np.complex128)
        Q_vecs[0, :] = 1.0
        Q_vecs[:, c] = [q, np.sqrt(max(0.0, 1.0 - q * q))]

    return PeelResult(
        R=gram_of(R_vecs, tol),
        Q=gram_of(Q_vecs, tol),
        branch=branch,
        pivot=int(c),
        proj_norm=q,
        R_vectors=R_vecs,
        Q_vectors=Q_vecs,
    )


PIVOT_RULES = ("farthest", "first")


def choose_pivot(T, rel_tol=RANK_TOL, rule="farthest"):
    """Pick an independent generator.

    ``"farthest"`` takes the one whose projection onto the span of the rest
    is shortest (lowest index on ties); ``"first"`` takes the lowest index.
    Returns ``None`` when every generator lies in the span of the others.
    """
    if rule not in PIVOT_RULES:
        raise ValueError(f"unknown pivot rule {rule!r}")
    P = T.conj().T @ T
    rank = numerical_rank(P, rel_tol)
    best, best_q = None, np.inf
    for c in range(T.shape[1]):
        if not is_independent_pivot(P, c, rel_tol, rank):
            continue
        if rule == "first":
            return c
        q = projection_norm(T, c, rel_tol)
        if q < best_q:
            best, best_q = c, q
    return best


def decompose_full(P, r, rel_tol=RANK_TOL, tol=VALIDATION_TOL, verify_tol=RECONSTRUCTION_TOL, pivot_rule="farthest"):
    """Write ``P`` as a Schur product of correlation matrices of rank at most ``r``.

    Peels rank-2 factors off ``P`` until the remainder has rank ``<= r``.
    Always succeeds for ``n <= r + 1``.

    Raises
    ------
    InvalidRank
        If ``r < 2``.
    NoIndependentPivot
        If the remainder still has rank above ``r`` but none of its
        generators is independent from the others. The exception carries the
        rank-2 factors found so far and the stuck remainder.
    """
    if r < 2:
        raise InvalidRank(f"rank bound r={r} must be at least 2")
    P = validate_correlation(P, tol)
    n = P.shape[0]

    peeled = []
    R = P
    while numerical_rank(R, rel_tol) > r:
        T = gram_factor(R, rel_tol, tol)
        c = choose_pivot(T, rel_tol, pivot_rule)
        if c is None:
            raise NoIndependentPivot(
                f"rank {numerical_rank(R, rel_tol)} > {r} and no generator is independent",
                factors=peeled,
                remainder=R,
            )
        res = peel(T, c, rel_tol, tol)
        peeled.append(res.Q)
        R = res.R

    D = Decomposition(factors=peeled + [R], rank_bound=r, target_n=n)
    D = absorb_all_rank_one(D, rel_tol, tol)
    report = verify_decomposition(P, D, verify_tol, rel_tol)
    D.residual = report.residual
    D.verified = report.passed
    return D


def _unimodular_vector(X, rel_tol, tol):
    X = as_complex_matrix(X)
    if numerical_rank(X, rel_tol) != 1:
        raise NotRankOne(f"factor has rank {numerical_rank(X, rel_tol)}, expected 1")
    evals, evecs = np.linalg.eigh((X + X.conj().T) / 2)
    x = np.sqrt(evals[-1]) * evecs[:, -1]
    dev = np.abs(np.abs(x) - 1.0)
    if dev.max() > np.sqrt(tol):
        a = int(np.argmax(dev))
        raise NotUnimodular(f"|x[{a}]| = {abs(x[a]):.6g}, expected 1")
    # fix the gauge x[0] = 1 and snap moduli to one
    x = x * np.conj(x[0]) / abs(x[0])
    return x / np.abs(x)


def absorb_rank_one(R, X, rel_tol=RANK_TOL, tol=VALIDATION_TOL):
    """Schur-multiply ``R`` by a rank-one correlation matrix ``X = x x^*``.

    The product equals ``diag(x) R diag(x)^*``, so rank and entry magnitudes
    of ``R`` are unchanged; both facts are checked before returning.
    """
    R = validate_correlation(R, tol)
    x = _unimodular_vector(X, rel_tol, tol)
    if R.shape != (x.size, x.size):
        raise DimensionMismatch(f"shapes {R.shape} and {(x.size, x.size)} differ")
    out = R * np.asarray(X, dtype=np.complex128)
    conj_form = (x[:, None] * R) * x.conj()[None, :]
    assert np.abs(out - conj_form).max() <= RECONSTRUCTION_TOL, "rank-one absorption identity failed"
    assert numerical_rank(out, rel_tol) == numerical_rank(R, rel_tol)
    return validate_correlation(out, tol)


def absorb_all_rank_one(D, rel_tol=RANK_TOL, tol=VALIDATION_TOL):
    """Fold every rank-one factor of ``D`` into a factor of higher rank."""
    ranks = [numerical_rank(F, rel_tol) for F in D.factors]
    keep = [F for F, k in zip(D.factors, ranks) if k > 1]
    ones = [F for F, k in zip(D.factors, ranks) if k <= 1]
    if not ones:
        return D
    if not keep:
        merged = np.ones((D.target_n, D.target_n), dtype=np.complex128)
        for F in ones:
            merged = merged * F
        keep = [validate_correlation(merged, tol)]
    else:
        for F in ones:
            keep[-1] = absorb_rank_one(keep[-1], F, rel_tol, tol)
    return Decomposition(
        factors=keep,
        rank_bound=D.rank_bound,
        target_n=D.target_n,
        residual=D.residual,
        verified=D.verified,
    )


def verify_decomposition(P, D, tol=RECONSTRUCTION_TOL, rel_tol=RANK_TOL):
    """Recompute the product of ``D.factors`` and check it against ``P``."""
    P = as_complex_matrix(P)
    problems = []
    for i, F in enumerate(D.factors):
        if np.shape(F) != P.shape:
            raise DimensionMismatch(f"factor {i} has shape {np.shape(F)}, target {P.shape}")
    if not D.factors:
        problems.append("no factors")
    ranks = [numerical_rank(F, rel_tol) for F in D.factors]
    valid = [is_correlation(F) for F in D.factors]
    residual = float(np.abs(P - D.product()).max()) if D.factors else np.inf

    for i, (k, ok) in enumerate(zip(ranks, valid)):
        if not ok:
            problems.append(f"factor {i} is not a correlation matrix")
        if k > D.rank_bound:
            problems.append(f"factor {i} has rank {k} > rank bound {D.rank_bound}")
    if not residual <= tol:
        problems.append(f"residual {residual:.3e} exceeds tol {tol:.1e}")
    return VerificationReport(
        residual=residual,
        ranks=ranks,
        factors_valid=valid,
        rank_bound=D.rank_bound,
        tol=tol,
        problems=problems,
    )
