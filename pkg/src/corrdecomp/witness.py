"""Non-decomposability certificates for chain-family matrices and a measurement simulator.

The certificate needs only the squared overlaps ``|<v_a, v_b>|^2``, which is
exactly what the swap-free projective measurements reveal: the Gram matrix
of the projectors ``v_a v_a^*`` is ``P * conj(P)``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, MissingPair, StructureMismatch
from .matcore import as_complex_matrix

DEFAULT_TOL = 1e-9
STAT_SIGMAS = 5.0


class Verdict(str, Enum):
    CERTIFIED = "CertifiedNotDecomposable"
    INCONCLUSIVE = "Inconclusive"


class DetCheck(str, Enum):
    RANK2_CONFIRMED = "rank2_confirmed"
    FAIL = "fail"


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class WitnessReport:
    verdict: Verdict
    r: int
    checks: list
    estimated_p: float
    tolerance: float

    @property
    def certified(self):
        return self.verdict is Verdict.CERTIFIED

    @property
    def failed_checks(self):
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "r": self.r,
            "estimated_p": self.estimated_p,
            "tolerance": self.tolerance,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


@dataclass
class MeasurementRecord:
    """Shot counts and successes for every ordered (measurement, state) pair."""

    n: int
    shots: np.ndarray
    successes: np.ndarray
    seed: int = None

    def __post_init__(self):
        self.shots = np.asarray(self.shots, dtype=np.int64)
        self.successes = np.asarray(self.successes, dtype=np.int64)
        if self.shots.shape != (self.n, self.n) or self.successes.shape != (self.n, self.n):
            raise DimensionMismatch(f"count arrays must be {self.n}x{self.n}")
        if np.any(self.successes < 0) or np.any(self.successes > self.shots):
            raise ValueError("successes must lie in [0, shots]")

    def pairs(self):
        for a in range(self.n):
            for b in range(self.n):
                yield a, b, int(self.shots[a, b]), int(self.successes[a, b])

    @classmethod
    def from_pairs(cls, n, pairs, seed=None):
        shots = np.zeros((n, n), dtype=np.int64)
        succ = np.zeros((n, n), dtype=np.int64)
        for a, b, k, s in pairs:
            shots[a, b] = k
            succ[a, b] = s
        return cls(n=n, shots=shots, successes=succ, seed=seed)


def _check_range(n, *idx):
    for i in idx:
        if not 0 <= i < n:
            raise IndexOutOfRange(f"index {i} outside [0, {n})")


def assumption_inequality(P_abs, a, margin=1e-12):
    """Strict test of ``|P[a, a+2]| > |P[a, a+1]| * |P[a+1, a+2]|`` on magnitudes.

    The left side must exceed the product by more than ``margin``, so
    equality counts as failure.
    """
    M = np.abs(np.asarray(P_abs))
    _check_range(M.shape[0], a, a + 1, a + 2)
    return bool(M[a, a + 2] > M[a, a + 1] * M[a + 1, a + 2] + margin)


def gershgorin_independent(P_abs, idx, margin=0.0):
    """True if the Gram submatrix on ``idx`` is strictly diagonally dominant.

    Every row's off-diagonal magnitude sum must be below ``1 - margin``,
    which makes the submatrix nonsingular and the generators independent.
    """
    M = np.abs(np.asarray(P_abs))
    idx = [int(i) for i in idx]
    _check_range(M.shape[0], *idx)
    sub = M[np.ix_(idx, idx)]
    row_sums = sub.sum(axis=1) - np.diag(sub)
    return bool(np.all(row_sums < 1.0 - margin))


def triple_det_check(S, tol=DEFAULT_TOL):
    """Rank-two test for a 3x3 block with the ``(p, sqrt((1+p)/2))`` overlap pattern.

    ``S`` is indexed as (chain vector a, chain vector a+1, their combination).
    A determinant that is zero certifies rank at most two; off-diagonal
    magnitudes below one exclude rank one.
    """
    S = as_complex_matrix(S)
    if S.shape != (3, 3):
        raise DimensionMismatch(f"expected a 3x3 block, got {S.shape}")
    p = abs(S[0, 1])
    h = np.sqrt((1 + p) / 2)
    if p <= tol:
        raise StructureMismatch(f"chain overlap {p:.3g} must be positive")
    if abs(abs(S[0, 2]) - h) > np.sqrt(tol) or abs(abs(S[1, 2]) - h) > np.sqrt(tol):
        raise StructureMismatch(
            f"combination overlaps {abs(S[0, 2]):.6g}, {abs(S[1, 2]):.6g} differ from {h:.6g}"
        )
    det = float(np.linalg.det(S).real)
    if abs(det) > np.sqrt(tol):
        return DetCheck.FAIL
    off = np.abs(S[np.triu_indices(3, 1)])
    if np.any(off >= 1 - tol):
        return DetCheck.FAIL
    return DetCheck.RANK2_CONFIRMED


def submatrix_det_check(P, a, r=None, tol=DEFAULT_TOL):
    """Apply :func:`triple_det_check` to chain vectors ``a``, ``a+1`` and their combination."""
    P = as_complex_matrix(P)
    n = P.shape[0]
    if r is None:
        r = (n - 1) // 2
    c = r + 1 + a
    _check_range(n, a, a + 1, c)
    if a + 1 > r:
        raise IndexOutOfRange(f"chain index {a} needs a + 1 <= r = {r}")
    idx = [a, a + 1, c]
    return triple_det_check(P[np.ix_(idx, idx)], tol)


def _max_det(x, y, z):
    # largest determinant of a unit-diagonal 3x3 Hermitian block with these
    # off-diagonal magnitudes, over all phases
    return 1 - x * x - y * y - z * z + 2 * x * y * z


def chain_witness(P_abs, r, tol=DEFAULT_TOL, squared=True):
    """Try to certify that no correlation matrix with these overlaps is r-decomposable.

    Parameters
    ----------
    P_abs : array_like, (2r+1, 2r+1)
        Squared overlaps ``|P(a, b)|^2`` (default) or magnitudes when
        ``squared=False``. Layout as produced by :func:`families.gen_chain`.
    r : int
        Rank bound to rule out.
    tol : float
        Allowed deviation of each squared overlap from the fitted pattern.
        Bounds on ``p`` are taken conservatively over this band.

    Returns
    -------
    WitnessReport
        ``CertifiedNotDecomposable`` only if every sub-check passes.
    """
    M = np.abs(np.asarray(P_abs, dtype=np.complex128))
    S = M if squared else M**2
    if r < 1 or S.shape != (2 * r + 1, 2 * r + 1):
        raise DimensionMismatch(f"expected a {2 * r + 1}x{2 * r + 1} matrix for r={r}, got {S.shape}")
    S = (S + S.T) / 2
    mag = np.sqrt(np.clip(S, 0, None))
    checks = []

    block = S[: r + 1, : r + 1]
    off = block[~np.eye(r + 1, dtype=bool)]
    p = float(np.mean(np.sqrt(np.clip(off, 0, None))))
    dev = float(np.max(np.abs(off - p * p)))
    checks.append(Check("first_block_equal_overlap", dev <= tol, f"p={p:.6g}, max |S - p^2| = {dev:.3e}"))

    target = (1 + p) / 2
    cross = []
    for a in range(r):
        c = r + 1 + a
        cross += [S[a, c], S[a + 1, c]]
    cross_dev = float(np.max(np.abs(np.array(cross) - target)))
    checks.append(
        Check("cross_overlap", cross_dev <= tol, f"target (1+p)/2 = {target:.6g}, max dev {cross_dev:.3e}")
    )

    p_lo = np.sqrt(max(p * p - tol, 0.0))
    p_hi = np.sqrt(p * p + tol)
    checks.append(Check("p_range", p_lo > 0 and p_hi < 1.0 / r, f"p in [{p_lo:.6g}, {p_hi:.6g}], need (0, {1 / r:.6g})"))

    upper = np.sqrt(np.clip(S + tol, 0, None))
    checks.append(
        Check(
            "gershgorin_independence",
            gershgorin_independent(upper, range(r + 1)),
            f"max row sum {float(np.max(upper[: r + 1, : r + 1].sum(axis=1) - np.diag(upper)[: r + 1])):.6g}",
        )
    )

    lower = np.sqrt(np.clip(S - tol, 0, None))
    ineq = []
    for a in range(r - 1):
        lhs = lower[a, a + 2]
        rhs = upper[a, a + 1] * upper[a + 1, a + 2]
        ineq.append(bool(lhs > rhs))
    checks.append(
        Check(
            "chain_inequality",
            all(ineq),
            f"{sum(ineq)}/{len(ineq)} indices satisfy the strict inequality" if ineq else "no index applies",
        )
    )

    worst_det, worst_mag = -np.inf, 0.0
    for a in range(r):
        c = r + 1 + a
        x, y, z = mag[a, a + 1], mag[a, c], mag[a + 1, c]
        worst_det = max(worst_det, _max_det(x, y, z))
        worst_mag = max(worst_mag, x, y, z)
    det_tol = 10 * tol
    checks.append(
        Check(
            "submatrix_rank2",
            abs(worst_det) <= det_tol and worst_mag < 1 - tol,
            f"max over phases of det = {worst_det:.3e}, max off-diagonal magnitude {worst_mag:.6g}",
        )
    )

    if r == 1:
        offdiag = mag[~np.eye(3, dtype=bool)]
        checks.append(
            Check("rank_at_least_2", bool(np.any(offdiag < 1 - tol)), f"min off-diagonal magnitude {offdiag.min():.6g}")
        )

    verdict = Verdict.CERTIFIED if all(c.passed for c in checks) else Verdict.INCONCLUSIVE
    return WitnessReport(verdict=verdict, r=r, checks=checks, estimated_p=p, tolerance=tol)


def _pair_rng(seed, a, b):
    return np.random.default_rng([int(seed), int(a), int(b)])


def simulate_measurements(T, shots, seed=0, parallel=None):
    """Sample the two-outcome measurement ``{v_a v_a^*, 1 - v_a v_a^*}`` on copies of ``v_b``.

    Each ordered pair gets its own generator seeded by ``(seed, a, b)``, so the
    record does not depend on how pairs are scheduled across threads.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    T = np.asarray(T, dtype=np.complex128)
    n = T.shape[1]
    probs = np.clip(np.abs(T.conj().T @ T) ** 2, 0.0, 1.0)

    def draw(ab):
        a, b = ab
        return _pair_rng(seed, a, b).binomial(shots, probs[a, b])

    pairs = [(a, b) for a in range(n) for b in range(n)]
    if parallel and parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            counts = list(pool.map(draw, pairs))
    else:
        counts = [draw(ab) for ab in pairs]
    successes = np.array(counts, dtype=np.int64).reshape(n, n)
    return MeasurementRecord(n=n, shots=np.full((n, n), shots, dtype=np.int64), successes=successes, seed=seed)


def estimate_projector_gram(rec):
    """Symmetrized success frequencies with the diagonal set to one."""
    if np.any(rec.shots <= 0):
        a, b = np.argwhere(rec.shots <= 0)[0]
        raise MissingPair(f"no shots recorded for pair ({a}, {b})")
    F = rec.successes / rec.shots
    R = (F + F.T) / 2
    np.fill_diagonal(R, 1.0)
    return R


def exact_projector_gram(T):
    """Noise-free ``|<v_a, v_b>|^2`` for generating vectors ``T``."""
    T = np.asarray(T, dtype=np.complex128)
    return np.abs(T.conj().T @ T) ** 2


def default_stat_tol(shots, sigmas=STAT_SIGMAS):
    """Worst-case (variance 1/4) per-entry standard error at ``shots``, times ``sigmas``."""
    return sigmas * np.sqrt(0.25 / shots)


def detect_entanglement(R_hat, r, stat_tol=0.0, tol=DEFAULT_TOL):
    """Certify entanglement from an estimated projector Gram matrix.

    Runs :func:`chain_witness` with its tolerance widened by ``stat_tol``. A
    certificate means every correlation matrix ``P`` with ``P * conj(P)``
    within the band is not r-decomposable: for any split into subsystems of
    dimension at most ``r``, some state must be entangled.
    """
    R = np.asarray(R_hat, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise DimensionMismatch(f"R_hat must be square, got {R.shape}")
    if np.abs(np.diag(R) - 1).max() > tol:
        raise ValueError("R_hat must have unit diagonal")
    return chain_witness(R, r, tol=tol + stat_tol, squared=True)
