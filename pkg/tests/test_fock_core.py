import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from pytest import approx

from focknum.errors import ValidationError
from focknum.fock_core import (BandedMatrix, CoeffVec, HamiltonianSpec, MonomialTerm, annihilation, apply_op,
                               basis_eval, basis_table, build_matrix, creation, evaluate, falling_factorial,
                               falling_factorials, inner, ladder_spec, monomial_entry, number_spec, pad,
                               spec_from_terms)


def dense_ladder(N):
    """Annihilation and creation on span{e_0..e_{N-1}} written out entry by entry."""
    A = np.zeros((N, N))
    for n in range(1, N):
        A[n - 1, n] = math.sqrt(n)
    return A, A.T.copy()


def dense_monomial(i, j, N, pad_to=12):
    """A*^i A^j from products of ladder matrices on a larger space, then cut to N."""
    A, Ad = dense_ladder(N + pad_to)
    M = np.linalg.matrix_power(Ad, i) @ np.linalg.matrix_power(A, j)
    return M[:N, :N]


coeff = st.floats(-5, 5).map(lambda x: 0.0 if abs(x) < 1e-100 else x)
complex_vec = st.lists(st.tuples(coeff, coeff), min_size=1, max_size=30).map(
    lambda xs: np.array([complex(a, b) for a, b in xs]))


# --- basis_eval ---------------------------------------------------------------

def test_basis_eval_examples():
    assert basis_eval(0, 3 + 4j) == 1
    assert basis_eval(1, 1) == 1
    assert basis_eval(3, 2) == approx(3.265986323710904, rel=1e-15)


def test_basis_eval_large_n_uses_log_gamma():
    z = 2.5 + 0.5j
    expected = np.exp(400 * np.log(z) - 0.5 * math.lgamma(401))
    assert basis_eval(400, z) == approx(expected, rel=1e-12)
    assert basis_eval(400, 0) == 0


def test_basis_table_matches_basis_eval():
    z = np.array([0.3 - 1j, 2.0, -1.5j])
    T = basis_table(20, z)
    for n in range(20):
        np.testing.assert_allclose(T[n], basis_eval(n, z), rtol=1e-13)


def test_basis_eval_rejects_negative_index():
    with pytest.raises(ValidationError):
        basis_eval(-1, 1.0)


# --- falling factorials ---------------------------------------------------------

def test_falling_factorial_examples():
    assert falling_factorial(5, 1) == 5
    assert falling_factorial(2, 3) == 0
    assert falling_factorial(5, 3) == 60
    assert falling_factorial(7, 0) == 1


def test_falling_factorial_difference_identity():
    for k in range(1, 9):
        for n in range(k, 201):
            assert falling_factorial(n + 1, k) - falling_factorial(n, k) == k * falling_factorial(n, k - 1)


def test_falling_factorials_vectorized_agrees():
    n = np.arange(60)
    for k in range(5):
        exact = np.array([falling_factorial(int(x), k) for x in n], dtype=float)
        np.testing.assert_array_equal(falling_factorials(n, k), exact)


# --- monomial entries -----------------------------------------------------------

@pytest.mark.parametrize("n", [0, 1, 2, 7, 30])
def test_monomial_entry_examples(n):
    assert monomial_entry(n, 1, 1) == approx(n)
    assert monomial_entry(n, 2, 1) == approx(n * math.sqrt(n + 1))


def test_monomial_entry_derived_value():
    assert monomial_entry(4, 0, 2) == approx(math.sqrt(12), rel=1e-15)
    assert monomial_entry(1, 0, 2) == 0


def test_monomial_entry_growth_bound():
    n = np.arange(10_001)
    for i in range(4):
        for j in range(4):
            vals = np.array([monomial_entry(int(x), i, j) for x in n[::97]])
            beta = vals / (n[::97] + 1.0) ** ((i + j) / 2)
            assert np.max(beta) <= 2.0 ** (i + j)


# --- build_matrix ----------------------------------------------------------------

def test_build_matrix_examples():
    M = build_matrix(HamiltonianSpec(0, (MonomialTerm(0, 1, 1),)), 2).to_dense()
    np.testing.assert_array_equal(M, [[0, 1], [0, 0]])
    np.testing.assert_array_equal(build_matrix(number_spec(), 4).to_dense(), np.diag([0, 1, 2, 3]))


def test_build_matrix_heun_columns():
    spec = HamiltonianSpec(0, (MonomialTerm(1, 2, 1), MonomialTerm(2, 1, 1)))
    M = build_matrix(spec, 6).to_dense()
    for n in range(6):
        if n >= 1:
            assert M[n - 1, n] == approx((n - 1) * math.sqrt(n))
        if n + 1 < 6:
            assert M[n + 1, n] == approx(n * math.sqrt(n + 1))


def test_build_matrix_zero_spec_and_bad_dim():
    np.testing.assert_array_equal(build_matrix(HamiltonianSpec(), 3).to_dense(), np.zeros((3, 3)))
    with pytest.raises(ValidationError):
        build_matrix(number_spec(), 0)


@given(st.integers(0, 3), st.integers(0, 3), st.integers(1, 15),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_build_matrix_matches_ladder_products(i, j, N, a):
    spec = HamiltonianSpec(0, (MonomialTerm(i, j, a),))
    np.testing.assert_allclose(build_matrix(spec, N).to_dense(), a * dense_monomial(i, j, N), atol=1e-9)


@given(st.integers(0, 3), st.integers(0, 3), st.integers(6, 20),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_adjoint_on_interior_block(i, j, N, a):
    M = build_matrix(HamiltonianSpec(0, (MonomialTerm(i, j, a),)), N).to_dense()
    Madj = build_matrix(HamiltonianSpec(0, (MonomialTerm(j, i, np.conj(a)),)), N).to_dense()
    b = N - max(i, j)
    np.testing.assert_allclose(M[:b, :b], Madj[:b, :b].conj().T, atol=1e-9)


def test_banded_storage_and_adjoint():
    spec = spec_from_terms(2, [(1, 2, 0.3j), (2, 1, 0.3j), (0, 1, 1.0), (3, 0, -0.5)])
    B = build_matrix(spec, 12)
    D = B.to_dense()
    np.testing.assert_allclose(B.adjoint().to_dense(), D.conj().T)
    (lo, up), ab = B.to_banded_storage()
    for r in range(12):
        for c in range(12):
            if -up <= r - c <= lo:
                assert ab[up + r - c, c] == D[r, c]
            else:
                assert D[r, c] == 0


# --- apply_op ----------------------------------------------------------------------

def test_apply_op_examples():
    A = ladder_spec(0, 1)
    np.testing.assert_array_equal(apply_op(A, [0, 1, 0]), [1, 0, 0])
    np.testing.assert_array_equal(apply_op(number_spec(), np.zeros(4)), np.zeros(4))
    np.testing.assert_allclose(apply_op(ladder_spec(1, 1), np.ones(3) / math.sqrt(3)),
                               np.array([0, 1, 2]) / math.sqrt(3))


@given(complex_vec)
def test_apply_op_matches_matrix(v):
    spec = spec_from_terms(2, [(1, 2, 0.5j), (2, 1, 0.5j), (1, 1, 1.0), (0, 0, -2.0), (0, 3, 0.1)])
    ref = build_matrix(spec, v.size).matvec(v)
    np.testing.assert_allclose(apply_op(spec, v), ref, rtol=1e-13, atol=1e-13 * (1 + np.abs(ref).max()))


def test_apply_op_dimension_mismatch():
    with pytest.raises(ValidationError):
        build_matrix(number_spec(), 3).matvec(np.ones(4))


# --- inner product and commutation --------------------------------------------------

def test_inner_examples():
    assert inner(CoeffVec.unit(2, 4), CoeffVec.unit(2, 4)) == 1
    assert inner(CoeffVec.unit(1, 4), CoeffVec.unit(3, 4)) == 0
    assert inner([1, 1j], [1j, 1]) == 0


def test_inner_linearity():
    rng = np.random.default_rng(3)
    u, v = rng.normal(size=(2, 6)) + 1j * rng.normal(size=(2, 6))
    c = 0.3 - 2j
    assert inner(c * u, v) == approx(c * inner(u, v))
    assert inner(u, c * v) == approx(np.conj(c) * inner(u, v))
    with pytest.raises(ValidationError):
        inner(u, v[:3])


@settings(max_examples=200)
@given(complex_vec)
def test_commutation_identity(v):
    phi = pad(v)
    lhs = np.linalg.norm(creation(phi)) ** 2
    rhs = np.linalg.norm(phi) ** 2 + np.linalg.norm(annihilation(phi)) ** 2
    assert lhs == approx(rhs, rel=1e-12, abs=1e-300)


@settings(max_examples=100)
@given(complex_vec, st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_pointwise_growth_bound(v, z):
    assert abs(evaluate(v, z)) <= math.exp(abs(z) ** 2 / 2) * np.linalg.norm(v) * (1 + 1e-12) + 1e-300


# --- CoeffVec and JSON -------------------------------------------------------------

def test_coeffvec_invariants():
    v = CoeffVec([1, 2j, 0])
    assert v.dim == 3
    assert v.norm() == approx(math.sqrt(5))
    with pytest.raises(ValueError):
        v.coeffs[0] = 5
    with pytest.raises(ValidationError):
        CoeffVec([])


terms_st = st.lists(st.builds(MonomialTerm, st.integers(0, 4), st.integers(0, 4),
                              st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)),
                    max_size=6)


@given(st.integers(0, 4), terms_st)
def test_spec_json_round_trip(k, terms):
    spec = HamiltonianSpec(k, tuple(terms))
    assert HamiltonianSpec.from_json(spec.to_json()) == spec


def test_spec_flags_and_errors():
    spec = spec_from_terms(3, [(1, 1, 1.0), (1, 2, 0.2j), (2, 1, 0.2j)])
    assert spec.m == 3 and spec.dominated and spec.trace_admissible
    assert not spec_from_terms(2, [(1, 2, 1.0)]).trace_admissible
    with pytest.raises(ValidationError):
        HamiltonianSpec.from_json("{not json")
    with pytest.raises(ValidationError):
        HamiltonianSpec.from_json('{"k": 1, "terms": [{"i": 1}]}')
    with pytest.raises(ValidationError):
        MonomialTerm(-1, 0)
