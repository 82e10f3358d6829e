import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrdecomp.errors import FactorsMissing, NotIndependent, NotProduct, ZeroCoefficient, ZeroVector
from corrdecomp.tensorlab import (
    ProductVectorSet,
    TensorShape,
    bipartition_product_check,
    combo_product_check,
    is_product_vector,
    lemma_pair_check,
    matricization,
    nonparallel_subsystems,
    outer,
    product_gram_identity,
    random_product_pair,
    sample_product_sum_instance,
)

e0 = np.array([1, 0], dtype=complex)
e1 = np.array([0, 1], dtype=complex)


def test_bell_state_entangled():
    x = outer([e0, e0]) + outer([e1, e1])
    ok, fs = is_product_vector(x, (2, 2))
    assert not ok and fs is None
    assert np.linalg.matrix_rank(matricization(x, (2, 2), 0)) == 2


def test_simple_product_recovered():
    y = (e0 + e1) / np.sqrt(2)
    x = outer([e0, y])
    ok, fs = is_product_vector(x, (2, 2))
    assert ok
    assert np.allclose(outer(fs), x)
    # factors agree with the inputs up to scalars
    assert abs(abs(np.vdot(fs[1], y)) - np.linalg.norm(fs[1])) < 1e-12


def test_random_triple_product():
    rng = np.random.default_rng(0)
    fs = [rng.standard_normal(2) + 1j * rng.standard_normal(2) for _ in range(3)]
    ok, got = is_product_vector(outer(fs), (2, 2, 2))
    assert ok
    assert np.allclose(outer(got), outer(fs))


def test_zero_vector_rejected():
    with pytest.raises(ZeroVector):
        is_product_vector(np.zeros(4), (2, 2))


def test_shape_validation():
    with pytest.raises(ValueError):
        TensorShape((2, 0))
    with pytest.raises(ValueError):
        TensorShape((64, 65))
    with pytest.raises(ValueError):
        is_product_vector(np.ones(5), (2, 2))


def test_product_set_rejects_inconsistent_factors():
    with pytest.raises(NotProduct):
        ProductVectorSet((2, 2), [outer([e0, e0])], [[e0, e1]])


def test_nonparallel_examples():
    # 0-based: the second subsystem differs
    S = ProductVectorSet.from_factors((2, 2), [[e0, e0], [e0, e1]])
    assert nonparallel_subsystems(S) == {1}
    S = ProductVectorSet.from_factors((2, 2), [[e0, e0], [e1, e1]])
    assert nonparallel_subsystems(S) == {0, 1}
    x = [e0 + e1, 2j * e0]
    S = ProductVectorSet.from_factors((2, 2), [x, x])
    assert nonparallel_subsystems(S) == set()


def test_nonparallel_needs_factors():
    with pytest.raises(FactorsMissing):
        nonparallel_subsystems(ProductVectorSet((2, 2), [outer([e0, e0])]))


def test_lemma_pair_one_subsystem_differs():
    x1 = outer([e0, e0, e0])
    x2 = outer([e0, e0, e1])
    rep = lemma_pair_check(x1, x2, (2, 2, 2), trials=30, seed=1)
    assert rep.one_nonparallel
    assert rep.product_count == 30
    assert rep.equivalence_held


def test_lemma_pair_two_differ():
    rep = lemma_pair_check(outer([e0, e0]), outer([e1, e1]), (2, 2), trials=30, seed=1)
    assert not rep.one_nonparallel
    assert rep.product_count == 0
    assert rep.equivalence_held


def test_lemma_pair_identical():
    x = outer([e0 + 1j * e1, e1])
    rep = lemma_pair_check(x, x, (2, 2), seed=3)
    assert rep.one_nonparallel and rep.equivalence_held


def test_lemma_pair_rejects_entangled():
    with pytest.raises(NotProduct):
        lemma_pair_check(outer([e0, e0]) + outer([e1, e1]), outer([e0, e0]), (2, 2))


def test_combo_shared_factor():
    S = ProductVectorSet.from_factors((2, 2), [[e0, e0], [e1, e0]])
    rep = combo_product_check(S, [1, 1])
    assert rep.sum_is_product
    assert rep.nonparallel == {0}
    assert rep.bound == 1 and rep.bound_holds


def test_combo_entangled_sum():
    S = ProductVectorSet.from_factors((2, 2), [[e0, e0], [e1, e1]])
    rep = combo_product_check(S, [1, 1])
    assert not rep.sum_is_product
    assert rep.bound_holds


def test_combo_errors():
    S = ProductVectorSet.from_factors((2, 2), [[e0, e0], [e1, e0]])
    with pytest.raises(ZeroCoefficient):
        combo_product_check(S, [1, 0])
    S = ProductVectorSet.from_factors((2, 2), [[e0, e0], [e0, e0]])
    with pytest.raises(NotIndependent):
        combo_product_check(S, [1, 1])


def test_combo_without_factors():
    S = ProductVectorSet((2, 2), [outer([e0, e0]), outer([e1, e0])])
    assert combo_product_check(S, [1, 2j]).sum_is_product


@pytest.mark.parametrize("shape", [(2, 2), (2, 2, 2), (3, 2)])
def test_sampled_pairs_agree(shape):
    rng = np.random.default_rng(sum(shape))
    for k in range(30):
        x1, x2 = random_product_pair(rng, shape)
        assert lemma_pair_check(x1, x2, shape, trials=10, seed=k).equivalence_held


@pytest.mark.parametrize("shape, n", [((2, 2, 2), 3), ((3, 2), 2), ((2, 2, 2, 2), 4)])
def test_constructed_instances_respect_bound(shape, n):
    rng = np.random.default_rng(len(shape))
    for _ in range(30):
        S, coeffs = sample_product_sum_instance(rng, shape, n)
        rep = combo_product_check(S, coeffs)
        assert rep.sum_is_product
        assert rep.bound_holds
        X = S.matrix()
        assert product_gram_identity(S) <= 1e-13 * np.abs(X.conj().T @ X).max()


@settings(max_examples=60, deadline=None)
@given(dims=st.lists(st.integers(1, 3), min_size=2, max_size=4), seed=st.integers(0, 2**31), entangle=st.booleans())
def test_fast_check_matches_bipartition_oracle(dims, seed, entangle):
    rng = np.random.default_rng(seed)
    shape = TensorShape(tuple(dims))
    if entangle:
        x = rng.standard_normal(shape.size) + 1j * rng.standard_normal(shape.size)
    else:
        x = outer([rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in dims])
    assert is_product_vector(x, shape)[0] == bipartition_product_check(x, shape)
