"""Randomized search for Schur factorizations into low-rank correlation matrices.

Looks for unit vectors ``y[i, a]`` in C^d (subsystem ``i = 0..m-1``, index
``a = 0..n-1``) such that

    P(a, b) = prod_i <y[i, a], y[i, b]>

for all ``a < b``. With ``m = 2`` and ``d = 2`` this is a decomposition into
exactly two correlation matrices of rank two.

Each restart runs a Levenberg-Marquardt iteration on the product of unit
spheres: a damped Gauss-Newton step in the tangent space followed by
renormalization. A step is kept only if it lowers the objective, so the
recorded objective history is non-increasing.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .decomp import Decomposition, verify_decomposition
from .errors import DimensionMismatch
from .matcore import gram_factor, numerical_rank, validate_correlation


@dataclass
class FactorParams:
    """Unit vectors of shape ``(m, n, d)``; ``vectors[i, a]`` is the factor of ``a`` in subsystem ``i``."""

    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.complex128)
        if self.vectors.ndim != 3:
            raise ValueError("vectors must have shape (m, n, d)")

    @property
    def m(self):
        return self.vectors.shape[0]

    @property
    def n(self):
        return self.vectors.shape[1]

    @property
    def d(self):
        return self.vectors.shape[2]

    def grams(self):
        Y = self.vectors
        return np.einsum("iak,ibk->iab", Y.conj(), Y)

    def product(self):
        return np.prod(self.grams(), axis=0)

    def factor_matrices(self):
        return list(self.grams())

    def normalized(self):
        Y = self.vectors / np.linalg.norm(self.vectors, axis=2, keepdims=True)
        return FactorParams(Y)

    def gauge_fixed(self):
        """Canonical representative with the same products ``prod_i <y_ia, y_ib>``.

        Each subsystem is rotated by a unitary sending its first vector to
        ``e_0``. Then, for every index ``a``, the leading nonzero component of
        ``y[i, a]`` is made real nonnegative in subsystems ``0..m-2``; the
        removed phase is pushed into subsystem ``m-1``, which therefore keeps
        the overall phase of the product vector.
        """
        Y = self.normalized().vectors.copy()
        m, n, d = Y.shape
        for i in range(m):
            Y[i] = Y[i] @ _unitary_to_e0(Y[i, 0]).T
        for i in range(m - 1):
            for a in range(n):
                k = int(np.argmax(np.abs(Y[i, a]) > 1e-12))
                ph = Y[i, a, k] / abs(Y[i, a, k]) if abs(Y[i, a, k]) > 0 else 1.0
                Y[i, a] = Y[i, a] / ph
                Y[-1, a] = Y[-1, a] * ph
        return FactorParams(Y)


def _unitary_to_e0(y):
    """A unitary ``U`` with ``U @ y = e_0`` for a unit vector ``y``."""
    d = y.size
    M = np.eye(d, dtype=np.complex128)
    k = int(np.argmax(np.abs(y)))
    M = np.column_stack([y] + [M[:, j] for j in range(d) if j != k])
    Qm, _ = np.linalg.qr(M)
    U = Qm.conj().T
    ph = U[0] @ y
    U[0] = U[0] * (np.conj(ph) / abs(ph))
    return U


@dataclass
class SearchConfig:
    restarts: int = 100
    max_iters: int = 500
    success_threshold: float = 1e-6
    polish_threshold: float = 1e-10
    polish_iters: int = 2000
    tied_iters: int = 300
    seed: int = 0
    m: int = 2
    d: int = 2
    damping: float = 1.0
    stop_on_success: bool = True
    parallel: int = None

    def __post_init__(self):
        if self.restarts <= 0 or self.max_iters <= 0:
            raise ValueError("restarts and max_iters must be positive")


@dataclass
class RestartOutcome:
    index: int
    params: FactorParams
    residual: float
    objective: float
    history: list
    iterations: int


@dataclass
class SearchResult:
    verdict: str  # "FoundDecomposition" or "NotFound"
    best_residual: float
    best_params: FactorParams
    per_restart: list
    factors: list
    basin_residual: float = np.nan
    report: object = None
    trivial: bool = False

    @property
    def found(self):
        return self.verdict == "FoundDecomposition"

    @property
    def Q1(self):
        return self.factors[0]

    @property
    def Q2(self):
        return self.factors[1]


def objective(P, params):
    """Sum over ``a < b`` of ``|P(a, b) - prod_i <y_ia, y_ib>|^2``."""
    P = np.asarray(P, dtype=np.complex128)
    if P.shape != (params.n, params.n):
        raise DimensionMismatch(f"P is {P.shape}, params describe n={params.n}")
    E = params.product() - P
    iu = np.triu_indices(params.n, 1)
    return float(np.sum(np.abs(E[iu]) ** 2))


def max_residual(P, params):
    E = params.product() - np.asarray(P, dtype=np.complex128)
    return float(np.abs(E).max())


def _residual_and_jacobian(P, Y, iu):
    """Stacked real residual and its Jacobian w.r.t. tangent steps of every vector.

    Columns are ordered ``(i, c, k, re/im)``; the radial direction of each
    vector is projected out so the model matches the renormalized update.
    """
    m, n, d = Y.shape
    G = np.einsum("iak,ibk->iab", Y.conj(), Y)
    M = np.prod(G, axis=0)
    ia, ib = iu
    E = (M - P)[ia, ib]
    r = np.concatenate([E.real, E.imag])

    npairs = ia.size
    J = np.zeros((2 * npairs, m, n, d, 2))
    for i in range(m):
        H = np.prod(np.delete(G, i, axis=0), axis=0) if m > 1 else np.ones((n, n))
        Hp = H[ia, ib]
        for c in range(n):
            sel_b = ib == c
            sel_a = ia == c
            for k in range(d):
                # dM_ab = H_ab (conj(y_a) . dy_b + conj(dy_a) . y_b)
                dre = np.zeros(npairs, dtype=np.complex128)
                dim = np.zeros(npairs, dtype=np.complex128)
                dre[sel_b] += Hp[sel_b] * np.conj(Y[i, ia[sel_b], k])
                dim[sel_b] += 1j * Hp[sel_b] * np.conj(Y[i, ia[sel_b], k])
                dre[sel_a] += Hp[sel_a] * Y[i, ib[sel_a], k]
                dim[sel_a] += -1j * Hp[sel_a] * Y[i, ib[sel_a], k]
                J[:, i, c, k, 0] = np.concatenate([dre.real, dre.imag])
                J[:, i, c, k, 1] = np.concatenate([dim.real, dim.imag])
    J = J.reshape(2 * npairs, m * n, 2 * d)

    # columns interleave (k, re/im); y must use the same layout
    yr = np.stack([Y.real, Y.imag], axis=3).reshape(m * n, 2 * d)
    proj = np.eye(2 * d)[None] - yr[:, :, None] * yr[:, None, :]
    J = np.einsum("rvk,vkl->rvl", J, proj).reshape(2 * npairs, m * n * 2 * d)
    return r, J


def _step(Y, delta):
    m, n, d = Y.shape
    D = delta.reshape(m, n, d, 2)
    Z = Y + D[..., 0] + 1j * D[..., 1]
    return Z / np.linalg.norm(Z, axis=2, keepdims=True)


def local_search(P, Y0, max_iters, stop_residual, damping=1.0):
    """Levenberg-Marquardt from ``Y0``; returns ``(Y, history, iterations)``.

    The damping is ``mu * ||r||^2`` with ``mu`` adapted from the ratio of
    actual to predicted decrease. ``history`` holds the objective after every
    accepted step (first entry is the start), so it is non-increasing by
    construction.
    """
    P = np.asarray(P, dtype=np.complex128)
    n = P.shape[0]
    iu = np.triu_indices(n, 1)
    Y = Y0 / np.linalg.norm(Y0, axis=2, keepdims=True)
    r, J = _residual_and_jacobian(P, Y, iu)
    f = float(r @ r)
    history = [f]
    mu = damping
    it = 0
    for it in range(1, max_iters + 1):
        if np.sqrt(f) <= stop_residual:
            break
        A = J.T @ J
        g = J.T @ r
        try:
            delta = -np.linalg.solve(A + mu * f * np.eye(A.shape[0]), g)
        except np.linalg.LinAlgError:
            mu *= 4
            continue
        predicted = f - float(np.sum((r + J @ delta) ** 2))
        Yn = _step(Y, delta)
        rn, Jn = _residual_and_jacobian(P, Yn, iu)
        fn = float(rn @ rn)
        rho = (f - fn) / predicted if predicted > 0 else -1.0
        if fn < f and rho > 1e-4:
            Y, r, J, f = Yn, rn, Jn, fn
            history.append(f)
        if rho < 0.25:
            mu *= 4
            if mu > 1e16:
                break
        elif rho > 0.75:
            mu = max(mu / 4, 1e-8)
    return Y, history, it


def _candidate_tie_sets(Y, max_gap=0.2, per_subsystem=3):
    """Tie sets with at most one nearly parallel pair per subsystem.

    Candidates are the ``per_subsystem`` pairs closest to parallel (with
    ``1 - |<y_a, y_b>| < max_gap``); every combination is returned, closest
    first, including the empty choice for each subsystem.
    """
    m, n, _ = Y.shape
    options = []
    for i in range(m):
        G = np.abs(Y[i].conj() @ Y[i].T)
        pairs = sorted((1 - G[a, b], a, b) for a in range(n) for b in range(a + 1, n))
        opts = [{(i, b): a} for gap, a, b in pairs[:per_subsystem] if gap < max_gap]
        options.append(opts + [{}])
    out = [{}]
    for opts in options:
        out = [{**t, **o} for t in out for o in opts]
    return [t for t in out if t]


def _apply_ties(Y, ties):
    Y = Y.copy()
    for (i, b), a in ties.items():
        ov = np.vdot(Y[i, a], Y[i, b])
        Y[i, b] = Y[i, a] * (ov / abs(ov) if abs(ov) > 0 else 1.0)
    return Y


def _tie_embedding(Y, ties):
    """Map reduced tangent coordinates to full ones for tied vectors.

    A tied vector ``y_b = e^{i theta} y_a`` moves with ``y_a`` (rotated by
    the same phase) plus one extra real coordinate for ``theta``.
    """
    m, n, d = Y.shape
    width = 2 * d
    free = [(i, a) for i in range(m) for a in range(n) if (i, a) not in ties]
    col = {key: j * width for j, key in enumerate(free)}
    ncols = len(free) * width + len(ties)
    E = np.zeros((m * n * width, ncols))
    for (i, a), c0 in col.items():
        r0 = (i * n + a) * width
        E[r0 : r0 + width, c0 : c0 + width] = np.eye(width)
    for t, ((i, b), a) in enumerate(ties.items()):
        ov = np.vdot(Y[i, a], Y[i, b])
        ph = ov / abs(ov) if abs(ov) > 0 else 1.0
        rot = np.kron(np.eye(d), np.array([[ph.real, -ph.imag], [ph.imag, ph.real]]))
        rb = (i * n + b) * width
        c0 = col[(i, a)]
        E[rb : rb + width, c0 : c0 + width] = rot
        iy = 1j * Y[i, b]
        E[rb : rb + width, len(free) * width + t] = np.stack([iy.real, iy.imag], axis=1).reshape(-1)
    return E


def snapped_search(P, Y0, ties, max_iters, stop_residual, damping=1.0):
    """Levenberg-Marquardt with the vector pairs in ``ties`` forced to be parallel.

    ``ties`` maps ``(i, b)`` to ``a``: in subsystem ``i``, ``y_b`` is kept
    equal to ``y_a`` up to a phase. Near solutions where two generators of a
    factor coincide the plain iteration converges only sublinearly; tying the
    pair removes the degeneracy. Returns ``(Y, history, iterations)`` like
    :func:`local_search`.
    """
    P = np.asarray(P, dtype=np.complex128)
    iu = np.triu_indices(P.shape[0], 1)
    Y = Y0 / np.linalg.norm(Y0, axis=2, keepdims=True)
    Y = _apply_ties(Y, ties)
    r, J = _residual_and_jacobian(P, Y, iu)
    f = float(r @ r)
    history = [f]
    mu = damping
    it = 0
    for it in range(1, max_iters + 1):
        if np.sqrt(f) <= stop_residual:
            break
        E = _tie_embedding(Y, ties)
        Jr = J @ E
        A = Jr.T @ Jr
        g = Jr.T @ r
        try:
            delta = -np.linalg.solve(A + mu * f * np.eye(A.shape[0]), g)
        except np.linalg.LinAlgError:
            mu *= 4
            continue
        predicted = f - float(np.sum((r + Jr @ delta) ** 2))
        Yn = _apply_ties(_step(Y, E @ delta), ties)
        rn, Jn = _residual_and_jacobian(P, Yn, iu)
        fn = float(rn @ rn)
        rho = (f - fn) / predicted if predicted > 0 else -1.0
        if fn < f and rho > 1e-4:
            Y, r, J, f = Yn, rn, Jn, fn
            history.append(f)
        if rho < 0.25:
            mu *= 4
            if mu > 1e16:
                break
        elif rho > 0.75:
            mu = max(mu / 4, 1e-8)
    return Y, history, it


def polish(P, params, cfg):
    """Drive a basin point toward ``cfg.polish_threshold``; keeps the best of plain and tied runs."""
    stop = cfg.polish_threshold * 1e-2
    best = params
    best_res = max_residual(P, params)
    Y, _, _ = local_search(P, params.vectors, cfg.polish_iters, stop, cfg.damping)
    cand = FactorParams(Y)
    if max_residual(P, cand) < best_res:
        best, best_res = cand, max_residual(P, cand)
    start = best
    for ties in _candidate_tie_sets(start.vectors) if best_res > cfg.polish_threshold else []:
        Y, _, _ = snapped_search(P, start.vectors, ties, cfg.tied_iters, stop, cfg.damping)
        cand = FactorParams(Y)
        res = max_residual(P, cand)
        if res < best_res:
            best, best_res = cand, res
        if best_res <= cfg.polish_threshold:
            break
    return best


def random_params(rng, m, n, d):
    Z = rng.standard_normal((m, n, d)) + 1j * rng.standard_normal((m, n, d))
    return FactorParams(Z).normalized().gauge_fixed()


def _run_restart(P, cfg, idx):
    rng = np.random.default_rng([int(cfg.seed), int(idx)])
    start = random_params(rng, cfg.m, P.shape[0], cfg.d)
    Y, hist, its = local_search(P, start.vectors, cfg.max_iters, cfg.polish_threshold * 1e-2, cfg.damping)
    params = FactorParams(Y).gauge_fixed()
    return RestartOutcome(
        index=idx,
        params=params,
        residual=max_residual(P, params),
        objective=objective(P, params),
        history=hist,
        iterations=its,
    )


def _trivial_params(P, cfg):
    """Realize a matrix of rank ``<= d`` in the first subsystem with all other factors equal."""
    T = gram_factor(P)
    n = P.shape[0]
    Y = np.zeros((cfg.m, n, cfg.d), dtype=np.complex128)
    Y[0, :, : T.shape[0]] = T.T
    Y[1:, :, 0] = 1.0
    return FactorParams(Y)


def _finish(P, cfg, params, per_restart, basin, trivial=False):
    # the trivial realization keeps its all-ones factors rather than the gauge
    if not trivial:
        params = params.gauge_fixed()
    residual = max_residual(P, params)
    factors = [validate_correlation(F) for F in params.factor_matrices()]
    D = Decomposition(factors=factors, rank_bound=cfg.d, target_n=P.shape[0])
    report = verify_decomposition(P, D, tol=cfg.polish_threshold)
    found = basin <= cfg.success_threshold and residual <= cfg.polish_threshold and report.passed
    return SearchResult(
        verdict="FoundDecomposition" if found else "NotFound",
        best_residual=residual,
        best_params=params,
        per_restart=per_restart,
        factors=factors,
        basin_residual=basin,
        report=report,
        trivial=trivial,
    )


def two_factor_search(P, cfg=None):
    """Search for ``P = Q_1 * ... * Q_m`` with each ``Q_i`` of rank at most ``d``.

    Restart ``k`` starts from a random point drawn from a generator seeded by
    ``(cfg.seed, k)``. With ``stop_on_success`` the search stops at the first
    restart that reaches ``success_threshold``; parallel runs discard later
    restarts so the outcome matches a serial run.

    A success is polished toward ``polish_threshold`` and independently
    checked with :func:`decomp.verify_decomposition` before being reported
    as ``FoundDecomposition``.
    """
    cfg = cfg or SearchConfig()
    P = validate_correlation(P)

    if numerical_rank(P) <= cfg.d:
        params = _trivial_params(P, cfg)
        res = max_residual(P, params)
        return _finish(P, cfg, params, [res], res, trivial=True)

    outcomes = []
    chunk = max(1, int(cfg.parallel or 1))
    pool = ThreadPoolExecutor(max_workers=chunk) if chunk > 1 else None
    try:
        for start in range(0, cfg.restarts, chunk):
            idx = range(start, min(start + chunk, cfg.restarts))
            if pool is None:
                batch = [_run_restart(P, cfg, k) for k in idx]
            else:
                batch = list(pool.map(lambda k: _run_restart(P, cfg, k), idx))
            outcomes.extend(batch)
            if cfg.stop_on_success:
                hits = [o.index for o in outcomes if o.residual <= cfg.success_threshold]
                if hits:
                    outcomes = [o for o in outcomes if o.index <= hits[0]]
                    break
    finally:
        if pool is not None:
            pool.shutdown()

    best = min(outcomes, key=lambda o: (o.residual, o.index))
    params = best.params
    if best.residual <= cfg.success_threshold and best.residual > cfg.polish_threshold:
        params = polish(P, params, cfg)
    return _finish(P, cfg, params, [o.residual for o in outcomes], best.residual)


@dataclass
class BatchSummary:
    count: int
    found: int
    residuals: list
    verdicts: list
    histogram: dict
    not_found: list = field(default_factory=list)

    def to_dict(self):
        return {
            "count": self.count,
            "found": self.found,
            "residuals": self.residuals,
            "verdicts": self.verdicts,
            "histogram": self.histogram,
            "not_found": self.not_found,
        }


def _log_histogram(residuals):
    edges = np.arange(-17, 2, 1.0)
    logs = np.log10(np.maximum(np.asarray(residuals, dtype=float), 1e-17))
    counts, _ = np.histogram(logs, bins=edges)
    return {"log10_edges": edges.tolist(), "counts": counts.tolist()}


def batch_search(generator, count, cfg=None):
    """Run :func:`two_factor_search` on ``count`` instances drawn from ``generator``.

    ``generator`` is a callable ``k -> P`` or an iterable of matrices.
    Instances without a decomposition are returned in ``not_found`` as
    ``[re, im]`` nested lists for later inspection.
    """
    if count <= 0:
        raise ValueError("count must be positive")
    cfg = cfg or SearchConfig()
    if callable(generator):
        instances = (generator(k) for k in range(count))
    else:
        instances = iter(generator)
    residuals, verdicts, missing = [], [], []
    for k in range(count):
        P = np.asarray(next(instances), dtype=np.complex128)
        res = two_factor_search(P, cfg)
        residuals.append(res.best_residual)
        verdicts.append(res.verdict)
        if not res.found:
            missing.append(
                {
                    "index": k,
                    "best_residual": res.best_residual,
                    "entries": np.stack([P.real, P.imag], axis=-1).tolist(),
                }
            )
    return BatchSummary(
        count=count,
        found=sum(v == "FoundDecomposition" for v in verdicts),
        residuals=residuals,
        verdicts=verdicts,
        histogram=_log_histogram(residuals),
        not_found=missing,
    )


def prop52_stream(seed=0):
    """Instance source drawing random valid parameters of the four-vector family."""
    from .families import Prop52Params, gen_prop52_target

    def gen(k):
        rng = np.random.default_rng([int(seed), int(k)])
        return gen_prop52_target(Prop52Params.random(rng))[1]

    return gen


def low_rank_stream(n=4, rank=2, seed=0):
    from .families import random_correlation

    return lambda k: random_correlation(n, rank, seed=[int(seed), int(k)])


def hard_candidate_stream(seed=0):
    from .families import random_hard_candidate

    return lambda k: random_hard_candidate(seed=[int(seed), int(k)])[1]


def params_from_gram_sets(*sets):
    """Build :class:`FactorParams` from per-subsystem generating sets ``(d, n)``."""
    return FactorParams(np.stack([np.asarray(q, dtype=np.complex128).T for q in sets]))
