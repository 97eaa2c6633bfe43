import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from pytest import approx

from focknum.errors import ValidationError
from focknum.evolve import (EvolutionProblem, dilation_solution, heun_back_substitution, heun_coefficient_system,
                            heun_generator, heun_substitution, norm_bound, rk4_evolve, top_mass)
from focknum.fock_core import CoeffVec, HamiltonianSpec, MonomialTerm, build_matrix, evaluate, number_spec
from focknum.spectra import GribovParams, gribov_spec, numerical_range_bound


def geometric(N, q=0.5):
    return CoeffVec(q ** np.arange(N))


# --- dilation solution ---------------------------------------------------------------------

def test_dilation_examples():
    v = geometric(10)
    np.testing.assert_array_equal(dilation_solution(v, 1.3, 0.0).coeffs, v.coeffs)
    np.testing.assert_array_equal(dilation_solution(v, 0.0, 5.0).coeffs, v.coeffs)
    assert dilation_solution(CoeffVec.unit(2, 5), 1.0, math.log(2)).coeffs[2] == approx(0.25)


@settings(max_examples=30)
@given(st.floats(0, 2), st.floats(0, 2), st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False))
def test_dilation_is_composition_with_scaling(mu, t, z):
    v = geometric(60, 0.4)
    lhs = evaluate(dilation_solution(v, mu, t), z)
    rhs = evaluate(v, z * math.exp(-mu * t))
    assert lhs == approx(rhs, rel=1e-12, abs=1e-14)


# --- RK4 ---------------------------------------------------------------------------------

def test_rk4_matches_dilation():
    mu = 1.0
    v0 = geometric(32)
    p = EvolutionProblem(number_spec(), v0, t_final=1.0, dt=1e-3, sign=-mu)
    out = rk4_evolve(p)
    assert np.max(np.abs(out.final.coeffs - dilation_solution(v0, mu, 1.0).coeffs)) < 1e-8
    assert not out.flagged


def test_rk4_zero_generator_and_zero_time():
    v0 = geometric(6)
    out = rk4_evolve(EvolutionProblem(np.zeros((6, 6)), v0, t_final=0.7, dt=0.1))
    np.testing.assert_array_equal(out.final.coeffs, v0.coeffs)
    out = rk4_evolve(EvolutionProblem(number_spec(), v0, t_final=0.0, dt=0.01))
    np.testing.assert_array_equal(out.final.coeffs, v0.coeffs)
    assert out.times.tolist() == [0.0]


def test_rk4_step_halving_ratio():
    v0 = geometric(8)
    exact = dilation_solution(v0, 1.0, 1.0).coeffs
    errs = [np.linalg.norm(rk4_evolve(EvolutionProblem(number_spec(), v0, 1.0, dt, sign=-1.0)).final.coeffs - exact)
            for dt in (0.01, 0.005)]
    assert 12 <= errs[0] / errs[1] <= 20


def test_rk4_stride_and_final_step():
    p = EvolutionProblem(number_spec(), geometric(8), t_final=0.105, dt=0.01, sign=-1.0)
    out = rk4_evolve(p, stride=5)
    assert out.times[0] == 0 and out.times[-1] == 0.105
    assert out.times.tolist()[:3] == approx([0.0, 0.05, 0.1])
    np.testing.assert_allclose(out.final.coeffs, dilation_solution(geometric(8), 1.0, 0.105).coeffs, atol=1e-8)
    assert out.snapshots.shape == (out.times.size, 8)


def test_rk4_stability_guard_and_validation():
    with pytest.raises(ValidationError):
        rk4_evolve(EvolutionProblem(number_spec(), geometric(64), 1.0, dt=0.01))
    with pytest.raises(ValidationError):
        EvolutionProblem(number_spec(), geometric(4), 1.0, dt=0.0)
    with pytest.raises(ValidationError):
        EvolutionProblem(number_spec(), geometric(4), -1.0, dt=0.1)
    with pytest.raises(ValidationError):
        EvolutionProblem(np.eye(3), geometric(4), 1.0, dt=0.1).matrix()


def test_norm_bound_dominates_spectral_norm():
    rng = np.random.default_rng(30)
    M = rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10))
    assert norm_bound(M) >= np.linalg.norm(M, 2)


# --- truncation audit ----------------------------------------------------------------------

def test_top_mass_and_audit_flag():
    assert top_mass(np.zeros(5)) == 0.0
    assert top_mass(np.array([0, 0, 0, 0, 0, 0, 0, 0, 0, 1.0])) == 1.0
    # the creation operator pushes mass towards the boundary
    creation = HamiltonianSpec(0, (MonomialTerm(1, 0, 1.0),))
    out = rk4_evolve(EvolutionProblem(creation, CoeffVec.unit(0, 12), t_final=2.0, dt=0.005))
    assert out.flagged and out.top_mass >= 1e-8
    calm = rk4_evolve(EvolutionProblem(number_spec(), geometric(40, 0.2), 1.0, 1e-3, sign=-1.0))
    assert not calm.flagged


# --- semigroup bound ---------------------------------------------------------------------------

def test_semigroup_bound_from_numerical_range():
    """Re<H phi, phi> >= beta ||phi||^2 gives ||exp(-tH) phi|| <= exp(-beta t) ||phi||."""
    spec = gribov_spec(GribovParams(mu=1.0, lam=0.5, lam_prime=1.0))
    N = 24
    beta = numerical_range_bound(spec, N)
    rng = np.random.default_rng(31)
    v0 = CoeffVec((rng.normal(size=N) + 1j * rng.normal(size=N)) * 0.6 ** np.arange(N))
    dt = 0.05 / norm_bound(build_matrix(spec, N).to_dense())
    out = rk4_evolve(EvolutionProblem(spec, v0, t_final=0.3, dt=dt, sign=-1.0), stride=50)
    norms = np.linalg.norm(out.snapshots, axis=1)
    assert np.all(norms <= np.exp(-beta * out.times) * v0.norm() * (1 + 1e-10))


# --- cubic diffusion generator -------------------------------------------------------------------

def test_heun_generator_rows():
    G = heun_generator(12).to_dense()
    e1 = np.zeros(12)
    e1[1] = 1
    e2 = np.zeros(12)
    e2[2] = 1
    assert (G @ e1)[0] == approx(1.0)                       # d/dt a_0 = a_1
    assert (G @ e2)[1] == approx(2 * math.sqrt(2))          # d/dt a_1 = 2 sqrt(2) a_2
    for n in range(1, 11):
        assert G[n, n + 1] == approx((n + 1) * math.sqrt(n + 1))
        assert G[n, n - 1] == approx(-(n - 1) * math.sqrt(n))


def test_heun_coefficient_system():
    J = heun_coefficient_system(8).to_dense()
    assert J[3, 4] == 10.0 and J[4, 3] == 10.0              # omega_4 between n = 4 and n = 5
    np.testing.assert_array_equal(J, J.T)
    assert np.all(np.diag(J) == 0) and np.all(J.imag == 0)
    with pytest.raises(ValidationError):
        heun_coefficient_system(2)
    np.testing.assert_allclose(heun_substitution(4), [1j, -1 / math.sqrt(2), -1j / math.sqrt(3), 0.5])


@pytest.mark.parametrize("N", [3, 8, 40])
def test_heun_back_substitution_reproduces_coefficient_equations(N):
    back = heun_back_substitution(N)
    direct = heun_generator(N + 1).to_dense()[1:, 1:]      # rows and columns n = 1..N
    np.testing.assert_allclose(back, direct, atol=1e-12 * np.abs(direct).max())


def test_heun_jacobi_evolution_conserves_norm():
    N = 8
    J = heun_coefficient_system(N)
    rng = np.random.default_rng(32)
    b0 = CoeffVec(rng.normal(size=N) + 1j * rng.normal(size=N))
    out = rk4_evolve(EvolutionProblem(J, b0, t_final=1.0, dt=1e-3, sign=1j), stride=100)
    norms = np.linalg.norm(out.snapshots, axis=1)
    assert np.max(np.abs(norms - b0.norm())) / b0.norm() < 1e-6
