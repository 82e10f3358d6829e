"""Explicit and random correlation-matrix families.

Generators return ``(T, P)`` with ``T`` the generating vectors as columns and
``P = T^* T``. Indices are 0-based throughout.

Chain family layout for rank bound ``r``: columns ``0..r`` are the chain
vectors ``v_0..v_r`` with pairwise overlap ``p``; column ``r + 1 + a`` is the
normalized combination ``alpha_a v_a + beta_a v_{a+1}`` for ``a = 0..r-1``.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import BadP, BadRank, NormalizationViolated
from .matcore import all_p_matrix, gram_of, numerical_rank

NORM_TOL = 1e-12
HARD_COEF_CUTOFF = 1e-6


def equal_overlap_vectors(k, p):
    """``k`` unit vectors in C^k with every pairwise inner product equal to ``p``.

    Columns of the conjugate-transposed Cholesky factor of the all-``p`` matrix.
    """
    L = np.linalg.cholesky(all_p_matrix(k, p))
    return L.conj().T


@dataclass(frozen=True)
class ChainFamilyParams:
    r: int
    p: float
    alphas: tuple = None
    betas: tuple = None

    def coefficients(self):
        default = 1.0 / np.sqrt(2 * (1 + self.p))
        alphas = np.full(self.r, default, dtype=np.complex128) if self.alphas is None else np.asarray(self.alphas, dtype=np.complex128)
        betas = np.full(self.r, default, dtype=np.complex128) if self.betas is None else np.asarray(self.betas, dtype=np.complex128)
        return alphas, betas


def gen_chain(params=None, *, r=None, p=None):
    """Chain family of ``2r + 1`` unit vectors and their Gram matrix.

    Either pass a :class:`ChainFamilyParams` or the keywords ``r`` and ``p``
    (default combination coefficients ``1/sqrt(2(1+p))``).
    """
    if params is None:
        params = ChainFamilyParams(r=r, p=p)
    r, p = int(params.r), float(params.p)
    if r < 1:
        raise BadRank(f"r={r} must be >= 1")
    if not 0 < p < 1:
        raise BadP(f"p={p} must lie in (0, 1)")
    alphas, betas = params.coefficients()
    if alphas.shape != (r,) or betas.shape != (r,):
        raise NormalizationViolated(f"need {r} alphas and {r} betas")
    if np.any(alphas == 0) or np.any(betas == 0):
        raise NormalizationViolated("combination coefficients must be nonzero")

    V = equal_overlap_vectors(r + 1, p)
    cols = [V[:, a] for a in range(r + 1)]
    for a in range(r):
        w = alphas[a] * V[:, a] + betas[a] * V[:, a + 1]
        norm = np.linalg.norm(w)
        if abs(norm - 1) > NORM_TOL * 100:
            raise NormalizationViolated(f"||alpha_{a} v_{a} + beta_{a} v_{a+1}|| = {norm:.15g}")
        cols.append(w / norm)
    T = np.column_stack(cols)
    return T, gram_of(T)


def chain_cross_index(r, a):
    """Column index of the combination of chain vectors ``a`` and ``a + 1``."""
    return r + 1 + a


@dataclass(frozen=True)
class Prop52Params:
    """Parameters of the four-vector family ``v_3 = a1 (v_0 + v_2) + a2 v_1``.

    ``v_0, v_1, v_2`` share pairwise overlap ``p`` in ``(-1/2, 1)``; the
    coefficients must make ``v_3`` a unit vector.
    """

    p: float
    alpha1: complex
    alpha2: complex

    def __post_init__(self):
        if not -0.5 < self.p < 1:
            raise BadP(f"p={self.p} must lie in (-1/2, 1)")
        if self.alpha1 == 0 or self.alpha2 == 0:
            raise NormalizationViolated("alpha1 and alpha2 must be nonzero")
        err = abs(self.norm_sq() - 1.0)
        if err > NORM_TOL:
            raise NormalizationViolated(f"||v_3||^2 - 1 = {err:.3e}")

    def norm_sq(self):
        a1, a2, p = complex(self.alpha1), complex(self.alpha2), self.p
        return 2 * abs(a1) ** 2 * (1 + p) + abs(a2) ** 2 + 4 * p * (np.conj(a1) * a2).real

    @classmethod
    def auto(cls, p, alpha1, alpha2_phase=0.0):
        """Solve the normalization for ``|alpha2|`` given ``alpha1`` and the phase of ``alpha2``."""
        a1 = complex(alpha1)
        b = 4 * p * abs(a1) * np.cos(alpha2_phase - np.angle(a1))
        c = 2 * abs(a1) ** 2 * (1 + p) - 1
        disc = b * b / 4 - c
        if disc < 0:
            raise NormalizationViolated("no alpha2 with this phase normalizes v_3")
        roots = [t for t in (-b / 2 + np.sqrt(disc), -b / 2 - np.sqrt(disc)) if t > 0]
        if not roots:
            raise NormalizationViolated("no positive |alpha2| normalizes v_3")
        return cls(p=float(p), alpha1=a1, alpha2=max(roots) * np.exp(1j * alpha2_phase))

    @classmethod
    def random(cls, rng, p_range=(-0.45, 0.95)):
        """Draw valid parameters: uniform ``p``, random phases, ``|alpha1|`` below the root bound."""
        p = rng.uniform(*p_range)
        mag = rng.uniform(0.05, 0.95) / np.sqrt(2 * (1 + p))
        a1 = mag * np.exp(1j * rng.uniform(0, 2 * np.pi))
        return cls.auto(p, a1, rng.uniform(0, 2 * np.pi))


def prop52_closed_form(params):
    """The target matrix written out entry by entry from ``p``, ``alpha1``, ``alpha2``."""
    p, a1, a2 = params.p, complex(params.alpha1), complex(params.alpha2)
    u = a1 + (a1 + a2) * p
    w = a2 + 2 * a1 * p
    P = np.array(
        [
            [1, p, p, u],
            [p, 1, p, w],
            [p, p, 1, u],
            [np.conj(u), np.conj(w), np.conj(u), 1],
        ],
        dtype=np.complex128,
    )
    return P


def gen_prop52_target(params):
    """Realize ``v_0..v_3`` and return ``(T, P)``; ``P`` is checked against the closed form."""
    V = equal_overlap_vectors(3, params.p)
    v3 = params.alpha1 * (V[:, 0] + V[:, 2]) + params.alpha2 * V[:, 1]
    T = np.column_stack([V, v3])
    P = gram_of(T)
    err = np.abs(P - prop52_closed_form(params)).max()
    if err > 1e-12:
        raise NormalizationViolated(f"realized Gram deviates from closed form by {err:.3e}")
    return T, P


def gen_prop52_factors(params):
    """Rank-two factors ``Q1, Q2`` with ``Q1 * Q2 = P`` and their generating vectors.

    Returns
    -------
    Q1, Q2 : ndarray, (4, 4)
    q1, q2 : ndarray, (2, 4)
        Generating unit vectors (columns) of ``Q1`` and ``Q2``.
    """
    p, a1, a2 = params.p, complex(params.alpha1), complex(params.alpha2)
    h = np.sqrt((1 + p) / 2)
    g = np.sqrt(2 / (1 + p))
    u = a1 + (a1 + a2) * p
    w = a2 + 2 * a1 * p

    Q1 = np.array(
        [
            [1, h, p, h],
            [h, 1, h, 1],
            [p, h, 1, h],
            [h, 1, h, 1],
        ],
        dtype=np.complex128,
    )
    Q2 = np.array(
        [
            [1, p * g, 1, g * u],
            [p * g, 1, p * g, w],
            [1, p * g, 1, g * u],
            [g * np.conj(u), np.conj(w), g * np.conj(u), 1],
        ],
        dtype=np.complex128,
    )

    q12 = np.array([h, np.sqrt((1 - p) / 2)])
    q1 = np.column_stack([[1, 0], q12, [p, np.sqrt(1 - p * p)], q12]).astype(np.complex128)

    s = 1 + p - 2 * p * p
    q21 = np.array([p * g, np.conj(a1) / abs(a1) * np.sqrt(s / (1 + p))])
    q24 = np.array([w, abs(a1) * np.sqrt(2 * s)])
    q2 = np.column_stack([q21, [1, 0], q21, q24]).astype(np.complex128)

    for name, Q, q in (("Q1", Q1, q1), ("Q2", Q2, q2)):
        err = np.abs(gram_of(q) - Q).max()
        if err > 1e-10:
            raise NormalizationViolated(f"{name} generating vectors deviate by {err:.3e}")
        if numerical_rank(Q) > 2:
            raise NormalizationViolated(f"{name} has rank {numerical_rank(Q)} > 2")
    _, P = gen_prop52_target(params)
    err = np.abs(Q1 * Q2 - P).max()
    if err > 1e-10:
        raise NormalizationViolated(f"Q1 * Q2 deviates from the target by {err:.3e}")
    return Q1, Q2, q1, q2


def random_unit_vectors(rng, dim, count):
    Z = rng.standard_normal((dim, count)) + 1j * rng.standard_normal((dim, count))
    return Z / np.linalg.norm(Z, axis=0)


def random_correlation(n, rank, seed=None):
    """Gram matrix of ``n`` Gaussian unit vectors in C^rank."""
    if not 1 <= rank <= n:
        raise BadRank(f"rank={rank} must satisfy 1 <= rank <= n={n}")
    rng = np.random.default_rng(seed)
    return gram_of(random_unit_vectors(rng, rank, n))


def dependency_coefficients(T):
    """Coefficients expressing the last column of ``T`` in terms of the others (least squares)."""
    coef, *_ = np.linalg.lstsq(T[:, :-1], T[:, -1], rcond=None)
    return coef


def hard_candidate_checks(T, cutoff=HARD_COEF_CUTOFF):
    """Check that four generators have rank 3 with every 3-subset spanning the whole span.

    Equivalently, the last vector is a combination of the first three with
    all coefficients nonzero, so no generator is independent from the rest.
    """
    P = T.conj().T @ T
    if numerical_rank(P) != 3:
        return False
    for idx in combinations(range(4), 3):
        if numerical_rank(P[np.ix_(idx, idx)]) != 3:
            return False
    # coordinates in the rank-3 span keep the linear system square
    U, sv, Vh = np.linalg.svd(T, full_matrices=False)
    coords = sv[:3, None] * Vh[:3]
    coef = np.linalg.solve(coords[:, :3], coords[:, 3])
    return bool(np.all(np.abs(coef) > cutoff))


def random_hard_candidate(seed=None):
    """Rank-3 4x4 correlation matrix whose generators are each dependent on the other three."""
    rng = np.random.default_rng(seed)
    while True:
        V = random_unit_vectors(rng, 3, 3)
        coef = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        v3 = V @ coef
        T = np.column_stack([V, v3 / np.linalg.norm(v3)])
        if hard_candidate_checks(T):
            return T, gram_of(T)
