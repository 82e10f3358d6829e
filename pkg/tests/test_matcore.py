import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corrdecomp.errors import (
    DiagonalNotUnit,
    DimensionMismatch,
    DuplicateIndex,
    IndexOutOfRange,
    NonFinite,
    NotHermitian,
    NotPSD,
    NotSquare,
)
from corrdecomp.families import gen_chain, gen_prop52_factors, Prop52Params, random_correlation
from corrdecomp.matcore import (
    all_p_matrix,
    gram_factor,
    gram_of,
    is_correlation,
    numerical_rank,
    principal_submatrix,
    schur_product,
    validate_correlation,
)

T3 = 3 ** -0.5


def p52_zero():
    return Prop52Params(p=0.0, alpha1=T3, alpha2=T3)


def test_identity_is_valid():
    P = validate_correlation(np.eye(3), tol=1e-10)
    assert np.array_equal(P, np.eye(3))


def test_all_p_half_valid_with_known_spectrum():
    P = validate_correlation(all_p_matrix(3, 0.5))
    # (1-p)I + pJ has eigenvalues 1+2p and 1-p (twice)
    assert np.allclose(np.linalg.eigvalsh(P), [0.5, 0.5, 2.0])


def test_all_p_negative_not_psd():
    with pytest.raises(NotPSD) as exc:
        validate_correlation(all_p_matrix(3, -0.6))
    assert "-0.2" in str(exc.value)


@pytest.mark.parametrize(
    "M, err",
    [
        (np.ones((2, 3)), NotSquare),
        (np.array([[1, 0.5], [0.2, 1]]), NotHermitian),
        (np.array([[1, 0.5j], [0.5j, 1]]), NotHermitian),
        (np.array([[1.1, 0], [0, 1]]), DiagonalNotUnit),
        (np.array([[1, np.nan], [np.nan, 1]]), NonFinite),
    ],
)
def test_validation_errors(M, err):
    with pytest.raises(err):
        validate_correlation(M)


def test_validation_errors_are_value_errors():
    with pytest.raises(ValueError):
        validate_correlation(np.ones((2, 3)))


def test_schur_with_all_ones_is_identity_op():
    P = random_correlation(5, 3, seed=1)
    assert np.array_equal(schur_product(P, np.ones((5, 5))), P)


def test_schur_identity_absorbs():
    P = random_correlation(4, 4, seed=2)
    assert np.allclose(schur_product(np.eye(4), P), np.eye(4))


def test_schur_prop52_entry():
    Q1, Q2, _, _ = gen_prop52_factors(Prop52Params(p=0.0, alpha1=T3, alpha2=T3))
    out = schur_product(Q1, Q2)
    assert abs(out[0, 1]) < 1e-15
    assert out[0, 3] == pytest.approx(T3)


def test_schur_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        schur_product(np.eye(2), np.eye(3))


def test_numerical_rank_examples():
    assert numerical_rank(np.eye(4)) == 4
    assert numerical_rank(all_p_matrix(3, 0.5)) == 3
    Q1, _, _, _ = gen_prop52_factors(p52_zero())
    assert numerical_rank(Q1) == 2


def test_numerical_rank_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        numerical_rank(np.array([[1, 2], [0, 1]]))


def test_gram_factor_identity_orthonormal():
    T = gram_factor(np.eye(3))
    assert T.shape == (3, 3)
    assert np.allclose(T.conj().T @ T, np.eye(3), atol=1e-14)


def test_gram_factor_all_p():
    P = all_p_matrix(3, 0.5)
    T = gram_factor(P)
    assert T.shape[0] == 3
    G = T.conj().T @ T
    assert np.allclose(G[np.triu_indices(3, 1)], 0.5, atol=1e-14)


def test_gram_factor_rank_one():
    T = gram_factor(np.ones((3, 3)))
    assert T.shape == (1, 3)
    assert np.allclose(T, T[:, :1])


def test_gram_of_examples():
    assert np.allclose(gram_of(np.eye(2)), np.eye(2))
    v = np.array([1, 1j]) / np.sqrt(2)
    assert np.allclose(gram_of(np.column_stack([v, v])), np.ones((2, 2)))


def test_gram_of_chain_overlap():
    T, P = gen_chain(r=2, p=0.5)
    # chain vector 0 against the combination of chain vectors 0 and 1
    assert abs(P[0, 3]) == pytest.approx(np.sqrt(0.75), abs=1e-12)
    assert np.allclose(gram_of(T), P)


def test_gram_of_rejects_non_unit():
    with pytest.raises(DiagonalNotUnit):
        gram_of(np.array([[2.0, 0], [0, 1]]))


def test_principal_submatrix_examples():
    _, P = gen_chain(r=2, p=0.5)
    assert np.array_equal(principal_submatrix(P, range(5)), P)
    S = principal_submatrix(P, [0, 1, 3])
    assert np.allclose(np.abs(S), [[1, 0.5, 0.86603], [0.5, 1, 0.86603], [0.86603, 0.86603, 1]], atol=1e-5)
    assert np.array_equal(principal_submatrix(P, [2]), [[1]])


def test_principal_submatrix_errors():
    P = np.eye(3)
    with pytest.raises(IndexOutOfRange):
        principal_submatrix(P, [0, 3])
    with pytest.raises(DuplicateIndex):
        principal_submatrix(P, [1, 1])


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 7), k=st.integers(1, 7), seed=st.integers(0, 2**31))
def test_gram_roundtrip_property(n, k, seed):
    rank = min(n, k)
    P = random_correlation(n, rank, seed=seed)
    T = gram_factor(P)
    assert T.shape[0] == numerical_rank(P)
    assert np.abs(gram_of(T) - P).max() < 1e-10


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 6), a=st.integers(1, 6), b=st.integers(1, 6), seed=st.integers(0, 2**31))
def test_schur_product_stays_correlation(n, a, b, seed):
    rng = np.random.default_rng(seed)
    A = random_correlation(n, min(a, n), seed=rng.integers(2**31))
    B = random_correlation(n, min(b, n), seed=rng.integers(2**31))
    C = schur_product(A, B)
    assert is_correlation(C)
    assert numerical_rank(C) <= numerical_rank(A) * numerical_rank(B)
