import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from pytest import approx

from focknum.errors import ValidationError
from focknum.fock_core import CoeffVec, annihilation, basis_eval, creation, evaluate, inner
from focknum.tridiag import Tridiag, eigen_sym_tridiag
from focknum.xform import (CLASSICAL, HermiteSeries, TransformKernel, adjoint_transform, bargmann_from_gabor,
                           bargmann_gram, bargmann_kernel, gabor_point, gabor_transform, gabor_window,
                           gauss_hermite, hermite_eval, hermite_operator_expectation, hermite_table,
                           integrate_line, kernel_gram, kernel_vector, projection_kernel_apply, taylor_coefficients,
                           tensor_grid, transform, transform_coefficients, transform_samples)

RULE = gauss_hermite(64)


def random_series(rng, n):
    return HermiteSeries(rng.normal(size=n) + 1j * rng.normal(size=n))


# --- quadrature ------------------------------------------------------------------

def test_gauss_hermite_examples():
    r1 = gauss_hermite(1)
    assert r1.nodes.tolist() == [0.0] and r1.weights[0] == approx(math.sqrt(math.pi))
    r2 = gauss_hermite(2)
    assert np.sum(r2.weights * r2.nodes**2) == approx(math.sqrt(math.pi) / 2, rel=1e-14)


@pytest.mark.parametrize("Q", [1, 2, 5, 17, 64, 100])
def test_gauss_hermite_invariants(Q):
    r = gauss_hermite(Q)
    assert np.sum(r.weights) == approx(math.sqrt(math.pi), rel=1e-12)
    np.testing.assert_array_equal(r.nodes, -r.nodes[::-1])
    assert np.all(np.diff(r.nodes) > 0)


@given(st.integers(1, 30), st.data())
def test_gauss_hermite_exact_to_degree_2q_minus_1(Q, data):
    p = data.draw(st.integers(0, Q - 1))            # even degree 2p <= 2Q - 2
    r = gauss_hermite(Q)
    exact = math.gamma(p + 0.5)
    assert np.sum(r.weights * r.nodes ** (2 * p)) == approx(exact, rel=1e-11)
    assert abs(np.sum(r.weights * r.nodes ** (2 * p + 1))) <= 1e-11 * max(1.0, exact)


def test_gauss_hermite_matches_numpy_rule():
    x, w = np.polynomial.hermite.hermgauss(40)
    r = gauss_hermite(40)
    np.testing.assert_allclose(r.nodes, x, atol=1e-13)
    np.testing.assert_allclose(r.weights, w, rtol=1e-10)


def test_golub_welsch_equivalence():
    J = Tridiag.symmetric(np.zeros(5), np.sqrt(np.arange(1, 5) / 2.0))
    np.testing.assert_allclose(eigen_sym_tridiag(J).eigenvalues, gauss_hermite(5).nodes, atol=1e-12)


def test_gauss_hermite_rejects_zero_order():
    with pytest.raises(ValidationError):
        gauss_hermite(0)


# --- Hermite functions ---------------------------------------------------------------

def test_hermite_eval_examples():
    assert hermite_eval(1, 0.0) == 0
    assert hermite_eval(0, 0.0) == approx(0.7511255444649425, rel=1e-15)
    r16 = gauss_hermite(16)
    assert abs(integrate_line(lambda u: hermite_eval(3, u) * hermite_eval(5, u), r16)) < 1e-13


def test_hermite_orthonormality_and_parity():
    u = RULE.nodes
    H = hermite_table(12, u)
    G = (H * RULE.weights * np.exp(u * u)) @ H.T
    np.testing.assert_allclose(G, np.eye(13), atol=1e-10)
    for n in range(8):
        np.testing.assert_allclose(hermite_eval(n, -u), (-1) ** n * hermite_eval(n, u), atol=1e-14)


@pytest.mark.parametrize("n", range(7))
def test_hermite_operator_expectation(n):
    assert hermite_operator_expectation(n) == approx(2 * (n + 1), abs=1e-6)


def test_series_ladder_actions_match_pointwise():
    rng = np.random.default_rng(0)
    f = random_series(rng, 7)
    u = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(f.times_u()(u), u * f(u), atol=1e-12)
    h = 1e-5
    fd = (f(u + h) - f(u - h)) / (2 * h)
    np.testing.assert_allclose(f.derivative()(u), fd, atol=1e-7)


# --- kernel ---------------------------------------------------------------------------

def test_bargmann_kernel_examples():
    assert bargmann_kernel(CLASSICAL, 0, 0) == approx(math.pi ** -0.25)
    u = np.linspace(-4, 4, 9)
    np.testing.assert_allclose(bargmann_kernel(CLASSICAL, 0, u), hermite_eval(0, u), rtol=1e-15)
    assert TransformKernel(0.5).constant == approx(math.pi ** -0.25)
    assert TransformKernel(2.0).constant == approx((4 / math.pi) ** 0.25)


def test_kernel_gram_examples():
    assert kernel_gram(CLASSICAL, 0, 0) == approx(1, rel=1e-13)
    assert kernel_gram(CLASSICAL, 1, 1) == approx(math.e, rel=1e-12)
    assert kernel_gram(CLASSICAL, 1j, -1j) == approx(math.exp(-1), rel=1e-12)


@settings(max_examples=50)
@given(st.complex_numbers(max_magnitude=2), st.complex_numbers(max_magnitude=2))
def test_kernel_gram_is_exponential(z, w):
    assert kernel_gram(CLASSICAL, z, w, RULE) == approx(np.exp(z * np.conj(w)), rel=1e-8)


def test_kernel_rejects_nonpositive_alpha():
    with pytest.raises(ValidationError):
        TransformKernel(0.0)


# --- transform ---------------------------------------------------------------------

def test_transform_examples():
    z = np.array([0.0, 1 - 1j, 0.5j])
    np.testing.assert_allclose(transform(lambda u: hermite_eval(0, u), z), 1.0, rtol=1e-12)
    # the unnormalized Gaussian maps to the constant pi^{1/4}
    np.testing.assert_allclose(transform(lambda u: np.exp(-u * u / 2), z), math.pi ** 0.25, rtol=1e-12)
    assert transform(lambda u: np.zeros_like(u), 1.0) == 0
    with pytest.raises(ValidationError):
        transform(lambda u: np.full_like(u, np.nan), 1.0)


def test_hermite_functions_map_to_basis():
    C = np.array([transform_coefficients(lambda u, n=n: hermite_eval(n, u), 16) for n in range(11)])
    diag = np.array([C[n, n] for n in range(11)])
    np.testing.assert_allclose(diag, diag[0], atol=1e-8)
    assert diag[0] == approx(1.0, abs=1e-8)
    off = C[:, :11] - np.diag(diag)
    assert np.max(np.abs(off)) < 1e-8


def test_intertwining_identities():
    rng = np.random.default_rng(1)
    for _ in range(3):
        f = random_series(rng, 7)
        c = transform_coefficients(f, 32)
        cu = transform_coefficients(f.times_u(), 32)
        cd = transform_coefficients(f.derivative(), 32)
        # (z + d/dz) Bf = sqrt(2) B[u f]
        lhs = creation(c) + annihilation(c)
        np.testing.assert_allclose(lhs[:25], math.sqrt(2) * cu[:25], atol=1e-8)
        # sqrt(2) z Bf = B[(u - d/du) f]
        np.testing.assert_allclose(math.sqrt(2) * creation(c)[:25], (cu - cd)[:25], atol=1e-8)


def test_zhu_dictionary_alpha_one():
    kern = TransformKernel(1.0)
    rng = np.random.default_rng(2)
    f = random_series(rng, 7)
    c = transform_coefficients(f, 32, kern=kern)
    cu = transform_coefficients(f.times_u(), 32, kern=kern)
    cd = transform_coefficients(f.derivative(), 32, kern=kern)
    np.testing.assert_allclose(0.5 * (annihilation(c) + creation(c))[:25], cu[:25], atol=1e-8)
    np.testing.assert_allclose((annihilation(c) - creation(c))[:25], cd[:25], atol=1e-8)


@pytest.mark.parametrize("alpha,N", [(None, 32), (1.0, 48), (0.5, 32), (0.25, 64)])
def test_isometry(alpha, N):
    """The alpha transform is the classical one after a dilation of the line by
    1/(2 sqrt(alpha)); the further alpha is from 1/2, the more coefficients the
    dilated Hermite expansion needs, hence the larger N."""
    kern = TransformKernel(alpha)
    rng = np.random.default_rng(4)
    f = random_series(rng, 9)
    c = transform_coefficients(f, N, kern=kern)
    l2 = math.sqrt(integrate_line(lambda u: np.abs(f(u)) ** 2).real)
    assert np.linalg.norm(c) == approx(l2, rel=1e-8)


def test_hermite_series_pass_through_agrees_with_quadrature():
    rng = np.random.default_rng(5)
    f = random_series(rng, 6)
    z = np.array([0.2 + 0.1j, -1.0, 1.5j])
    for kern in (CLASSICAL, TransformKernel(0.5)):
        np.testing.assert_allclose(transform(f, z, kern=kern), transform(lambda u: f(u), z, kern=kern), rtol=1e-11)


def test_transform_samples_recovers_basis_vector():
    u = np.linspace(-12, 12, 2401)
    vals = hermite_eval(2, u)
    c = taylor_coefficients(lambda z: transform_samples(u, vals, z), 12)
    np.testing.assert_allclose(c, np.eye(12)[2], atol=1e-9)
    with pytest.raises(ValidationError):
        transform_samples(u, vals[:-1], 0.0)


# --- adjoint and projection -----------------------------------------------------------

def test_adjoint_left_inverse_alpha_half():
    kern = TransformKernel(0.5)
    f = HermiteSeries([1.0])
    u = np.array([-1.5, -0.3, 0.0, 0.8, 2.0])
    back = adjoint_transform(kern, lambda z: transform(f, z, kern=kern), u)
    np.testing.assert_allclose(back, hermite_eval(0, u), atol=1e-6)


def test_adjoint_left_inverse_classical_coefficients():
    rng = np.random.default_rng(6)
    f = random_series(rng, 5)
    u = np.linspace(-2, 2, 5)
    back = adjoint_transform(CLASSICAL, CoeffVec(f.coeffs), u)
    np.testing.assert_allclose(back, f(u), atol=1e-8)


def test_adjoint_kills_antiholomorphic_and_zero():
    u = np.linspace(-2, 2, 7)
    for kern in (CLASSICAL, TransformKernel(0.5), TransformKernel(1.0)):
        np.testing.assert_allclose(adjoint_transform(kern, lambda z: np.conj(z), u), 0, atol=1e-10)
        np.testing.assert_allclose(adjoint_transform(kern, lambda z: np.zeros_like(z), u), 0, atol=0)


def test_projection_examples():
    z = np.array([0.0, 0.5, -0.7 + 0.6j, 1j])
    np.testing.assert_allclose(projection_kernel_apply(lambda w: basis_eval(2, w), z), basis_eval(2, z), atol=1e-6)
    np.testing.assert_allclose(projection_kernel_apply(lambda w: np.conj(w), z), 0, atol=1e-10)
    np.testing.assert_allclose(projection_kernel_apply(lambda w: np.zeros_like(w), z), 0, atol=0)


def test_projection_is_idempotent():
    z = np.array([0.3 - 0.2j, -0.5j, 0.9])
    phi = lambda w: np.conj(w) * w + w**3 / math.sqrt(6)
    once = lambda w: projection_kernel_apply(phi, w)
    np.testing.assert_allclose(projection_kernel_apply(once, z, grid=tensor_grid(48, 0.5)), once(z), atol=1e-6)


def test_bargmann_gram_orthonormal():
    np.testing.assert_allclose(bargmann_gram(13, tensor_grid(40, 1.0)), np.eye(13), atol=1e-10)


def test_reproducing_kernel():
    rng = np.random.default_rng(7)
    phi = np.zeros(40, dtype=complex)
    phi[:6] = rng.normal(size=6) + 1j * rng.normal(size=6)
    for z in (0.3 + 0.4j, -1.2, 2j):
        assert inner(phi, kernel_vector(z, 40)) == approx(evaluate(phi[:6], z), rel=1e-10)


# --- Gabor ---------------------------------------------------------------------------

def test_gabor_examples():
    assert gabor_transform(lambda u: gabor_window(0, 0, u), 0, 0) == approx(1, rel=1e-12)
    assert gabor_transform(lambda u: np.zeros_like(u), 0.4, -1) == 0


@pytest.mark.parametrize("p,q", [(0, 0), (1, 0.5), (-0.7, 1.2), (2, -1), (0.3, 0.3)])
def test_bargmann_gabor_relation(p, q):
    h1 = lambda u: hermite_eval(1, u)
    assert bargmann_from_gabor(h1, p, q) == approx(transform(h1, gabor_point(p, q)), rel=1e-8, abs=1e-12)


def test_gabor_point_sign_matters():
    """The matching point is (q - i p)/sqrt(2); the conjugate point breaks the relation."""
    h1 = lambda u: hermite_eval(1, u)
    p, q = 1.0, 0.5
    wrong = transform(h1, complex(q, p) / math.sqrt(2))
    assert abs(bargmann_from_gabor(h1, p, q) - wrong) > 1e-2


def test_grid_warning_on_wide_integrand():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        adjoint_transform(CLASSICAL, lambda z: np.exp(0.45 * np.abs(z) ** 2), 0.0, grid=tensor_grid(12, 0.5))
    assert any("grid radius" in str(w.message) for w in rec)
