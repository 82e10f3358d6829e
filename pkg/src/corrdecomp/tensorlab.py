"""Product vectors in small tensor spaces.

Tensors are stored flat (length ``prod(dims)``) in C order, so a product
vector is ``np.kron(x_0, np.kron(x_1, ...))``. Subsystem indices are 0-based.
"""

from dataclasses import dataclass
from functools import reduce
from itertools import combinations

import numpy as np

from .errors import FactorsMissing, NotIndependent, NotProduct, ZeroCoefficient, ZeroVector
from .matcore import numerical_rank

PRODUCT_TOL = 1e-8
MAX_TOTAL_DIM = 4096
MIN_COEF = 1e-3


@dataclass(frozen=True)
class TensorShape:
    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"invalid subsystem dimensions {dims}")
        if self.size > MAX_TOTAL_DIM:
            raise ValueError(f"total dimension {self.size} exceeds {MAX_TOTAL_DIM}")

    @property
    def m(self):
        return len(self.dims)

    @property
    def size(self):
        return int(np.prod(self.dims))


def _shape(shape):
    return shape if isinstance(shape, TensorShape) else TensorShape(tuple(shape))


def outer(factors):
    """Flattened tensor product of the given vectors."""
    return reduce(np.kron, [np.asarray(f, dtype=np.complex128) for f in factors])


@dataclass
class ProductVectorSet:
    shape: TensorShape
    vectors: list
    factors: list = None

    def __post_init__(self):
        self.shape = _shape(self.shape)
        self.vectors = [np.asarray(v, dtype=np.complex128).reshape(-1) for v in self.vectors]
        if self.factors is not None:
            for v, fs in zip(self.vectors, self.factors):
                if any(np.linalg.norm(f) == 0 for f in fs):
                    raise ZeroVector("factor vectors must be nonzero")
                if np.abs(outer(fs) - v).max() > 1e-10:
                    raise NotProduct("tensor does not match the outer product of its factors")

    @classmethod
    def from_factors(cls, shape, factors):
        factors = [[np.asarray(f, dtype=np.complex128) for f in fs] for fs in factors]
        return cls(shape=_shape(shape), vectors=[outer(fs) for fs in factors], factors=factors)

    @property
    def n(self):
        return len(self.vectors)

    def matrix(self):
        """Vectors as the columns of a ``(prod(dims), n)`` array."""
        return np.column_stack(self.vectors)


def matricization(x, shape, j):
    """Flattening of ``x`` with subsystem ``j`` as rows and all others as columns."""
    shape = _shape(shape)
    X = np.asarray(x, dtype=np.complex128).reshape(shape.dims)
    return np.moveaxis(X, j, 0).reshape(shape.dims[j], -1)


def _is_rank_one(A, tol):
    sv = np.linalg.svd(A, compute_uv=False)
    return sv.size < 2 or sv[1] <= tol * sv[0]


def is_product_vector(x, shape, tol=PRODUCT_TOL):
    """Test whether ``x`` is an elementary tensor.

    Returns
    -------
    (bool, list or None)
        On success the factors (leading singular vectors of each
        single-subsystem flattening, rescaled so their tensor product is
        ``x``). Factors are unique only up to scalars whose product is one.
    """
    shape = _shape(shape)
    x = np.asarray(x, dtype=np.complex128).reshape(-1)
    if x.size != shape.size:
        raise ValueError(f"tensor of length {x.size} does not fit shape {shape.dims}")
    if np.linalg.norm(x) == 0:
        raise ZeroVector("the zero tensor is neither product nor entangled")

    factors = []
    for j in range(shape.m):
        U, sv, _ = np.linalg.svd(matricization(x, shape, j), full_matrices=False)
        if sv.size > 1 and sv[1] > tol * sv[0]:
            return False, None
        factors.append(U[:, 0])
    scale = np.vdot(outer(factors), x)
    factors[0] = factors[0] * scale
    return True, factors


def bipartition_product_check(x, shape, tol=PRODUCT_TOL):
    """Slow reference: rank one across every bipartition of the subsystems."""
    shape = _shape(shape)
    X = np.asarray(x, dtype=np.complex128).reshape(shape.dims)
    m = shape.m
    for k in range(1, m):
        for left in combinations(range(m), k):
            right = [j for j in range(m) if j not in left]
            A = np.transpose(X, list(left) + right).reshape(int(np.prod([shape.dims[j] for j in left])), -1)
            if not _is_rank_one(A, tol):
                return False
    return True


def nonparallel_subsystems(S, tol=PRODUCT_TOL):
    """Subsystems ``j`` where the factors ``x_{a,j}`` span more than one dimension."""
    if S.factors is None:
        raise FactorsMissing("product vector set carries no factors")
    out = set()
    for j in range(S.shape.m):
        F = np.column_stack([fs[j] / np.linalg.norm(fs[j]) for fs in S.factors])
        if not _is_rank_one(F, tol):
            out.add(j)
    return out


def _factors_or_raise(x, shape, tol):
    ok, fs = is_product_vector(x, shape, tol)
    if not ok:
        raise NotProduct("input is not a product vector")
    return fs


def random_nonzero_coefficients(rng, k, floor=MIN_COEF):
    """Complex Gaussian scalars, redrawn until every modulus is at least ``floor``."""
    out = []
    while len(out) < k:
        z = rng.standard_normal() + 1j * rng.standard_normal()
        if abs(z) >= floor:
            out.append(z)
    return np.array(out)


@dataclass
class PairReport:
    one_nonparallel: bool
    nonparallel: set
    trials: int
    product_count: int
    equivalence_held: bool


def lemma_pair_check(x1, x2, shape, trials=20, seed=0, tol=PRODUCT_TOL):
    """Compare the span criterion for two product vectors with sampled combinations.

    The span criterion (at most one subsystem where the factors are non-parallel)
    should hold exactly when random combinations ``a1 x1 + a2 x2`` with
    nonzero scalars are product vectors.
    """
    shape = _shape(shape)
    f1 = _factors_or_raise(x1, shape, tol)
    f2 = _factors_or_raise(x2, shape, tol)
    S = ProductVectorSet(shape, [outer(f1), outer(f2)], [f1, f2])
    nonpar = nonparallel_subsystems(S, tol)
    cond3 = len(nonpar) <= 1

    rng = np.random.default_rng(seed)
    x1 = np.asarray(x1, dtype=np.complex128).reshape(-1)
    x2 = np.asarray(x2, dtype=np.complex128).reshape(-1)
    scale = max(np.linalg.norm(x1), np.linalg.norm(x2))
    hits = 0
    for _ in range(trials):
        a1, a2 = random_nonzero_coefficients(rng, 2)
        y = a1 * x1 + a2 * x2
        if np.linalg.norm(y) <= 1e-12 * scale or is_product_vector(y, shape, tol)[0]:
            hits += 1
    held = hits == trials if cond3 else hits == 0
    return PairReport(one_nonparallel=cond3, nonparallel=nonpar, trials=trials, product_count=hits, equivalence_held=held)


@dataclass
class ComboReport:
    sum_is_product: bool
    nonparallel: set
    bound: int
    bound_holds: bool


def combo_product_check(S, coeffs, tol=PRODUCT_TOL):
    """Check the non-parallel bound for independent product vectors with a product sum.

    If ``sum_a coeffs[a] x_a`` is a product vector, the vectors can be
    non-parallel in at most ``n - 1`` subsystems.
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    if coeffs.shape != (S.n,):
        raise ValueError(f"need {S.n} coefficients")
    if np.any(coeffs == 0):
        raise ZeroCoefficient("all coefficients must be nonzero")
    X = S.matrix()
    if numerical_rank(X.conj().T @ X) < S.n:
        raise NotIndependent("product vectors are linearly dependent")
    if S.factors is None:
        S = ProductVectorSet(S.shape, S.vectors, [_factors_or_raise(v, S.shape, tol) for v in S.vectors])
    is_prod, _ = is_product_vector(X @ coeffs, S.shape, tol)
    nonpar = nonparallel_subsystems(S, tol)
    bound = S.n - 1
    holds = (len(nonpar) <= bound) if is_prod else True
    return ComboReport(sum_is_product=is_prod, nonparallel=nonpar, bound=bound, bound_holds=holds)


def random_product_pair(rng, shape):
    """Two random product vectors; each subsystem factor is shared with probability 1/2."""
    shape = _shape(shape)
    f1, f2 = [], []
    for d in shape.dims:
        u = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        f1.append(u)
        if rng.random() < 0.5:
            f2.append(u * random_nonzero_coefficients(rng, 1)[0])
        else:
            f2.append(rng.standard_normal(d) + 1j * rng.standard_normal(d))
    return outer(f1), outer(f2)


def sample_product_sum_instance(rng, shape, n, max_tries=100):
    """Independent product vectors whose combination with random nonzero coefficients is a product vector.

    Built by merging: the running sum ``s`` is a product vector, and each
    new vector copies the factors of ``s`` except in one random subsystem,
    so adding it keeps the sum a product vector.
    """
    shape = _shape(shape)
    for _ in range(max_tries):
        coeffs = random_nonzero_coefficients(rng, n)
        first = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in shape.dims]
        factors = [first]
        running = [f.copy() for f in first]
        running[0] = running[0] * coeffs[0]
        for k in range(1, n):
            j = int(rng.integers(shape.m))
            new = [f.copy() for f in running]
            new[j] = rng.standard_normal(shape.dims[j]) + 1j * rng.standard_normal(shape.dims[j])
            factors.append(new)
            running[j] = running[j] + coeffs[k] * new[j]
        S = ProductVectorSet.from_factors(shape, factors)
        X = S.matrix()
        if numerical_rank(X.conj().T @ X) == n:
            return S, coeffs
    raise NotIndependent(f"could not sample {n} independent vectors in shape {shape.dims}")


def product_gram_identity(S):
    """Largest gap between ``<x_a, x_b>`` and the product of per-subsystem overlaps."""
    if S.factors is None:
        raise FactorsMissing("product vector set carries no factors")
    X = S.matrix()
    G = X.conj().T @ X
    H = np.ones_like(G)
    for j in range(S.shape.m):
        F = np.column_stack([fs[j] for fs in S.factors])
        H = H * (F.conj().T @ F)
    return float(np.abs(G - H).max())
