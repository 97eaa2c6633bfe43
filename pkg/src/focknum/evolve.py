"""Linear Cauchy problems d/dt v = G v on truncated coefficient space.

Includes the exact dilation solution of the number-operator flow, a fixed
step RK4 integrator with a stability guard and a truncation audit, and the
real Jacobi form of the cubic diffusion generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .fock_core import BandedMatrix, CoeffVec, HamiltonianSpec, build_matrix
from .spectra import heun_spec
from .tridiag import jacobi_omega


@dataclass(frozen=True)
class EvolutionProblem:
    """d/dt v = sign * G v from ``initial`` up to t_final with step dt.

    ``generator`` is a HamiltonianSpec (compiled at the dimension of the
    initial vector) or an explicit BandedMatrix / dense array.
    """

    generator: object
    initial: CoeffVec
    t_final: float
    dt: float
    sign: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if not self.t_final >= 0:
            raise ValidationError("t_final must be nonnegative")
        if not isinstance(self.initial, CoeffVec):
            object.__setattr__(self, "initial", CoeffVec(np.asarray(self.initial, dtype=complex)))

    def matrix(self) -> np.ndarray:
        N = self.initial.dim
        G = self.generator
        if isinstance(G, HamiltonianSpec):
            M = build_matrix(G, N).to_dense()
        elif isinstance(G, BandedMatrix):
            M = G.to_dense()
        else:
            M = np.asarray(G, dtype=complex)
        if M.shape != (N, N):
            raise ValidationError(f"generator shape {M.shape} does not match initial dimension {N}")
        return self.sign * M


@dataclass(frozen=True)
class EvolutionResult:
    final: CoeffVec
    times: np.ndarray
    snapshots: np.ndarray          # rows are coefficient vectors at ``times``
    top_mass: float                # max over steps of the relative weight in the top 10% of indices
    flagged: bool                  # top_mass exceeded the audit threshold


def dilation_solution(initial, mu: float, t: float) -> CoeffVec:
    """a_n(t) = a_n(0) exp(-mu n t): the flow phi(t, z) = phi(z exp(-mu t))."""
    a = initial.coeffs if isinstance(initial, CoeffVec) else np.asarray(initial, dtype=complex)
    return CoeffVec(a * np.exp(-mu * t * np.arange(a.size)))


def norm_bound(M: np.ndarray) -> float:
    """sqrt(||M||_1 ||M||_inf), an upper bound on the spectral norm."""
    return math.sqrt(np.abs(M).sum(axis=0).max() * np.abs(M).sum(axis=1).max())


def top_mass(v: np.ndarray, fraction: float = 0.1) -> float:
    """Share of ||v||^2 carried by the highest ceil(fraction * N) indices."""
    total = float(np.sum(np.abs(v) ** 2))
    if total == 0.0:
        return 0.0
    cut = max(1, math.ceil(fraction * v.size))
    return float(np.sum(np.abs(v[-cut:]) ** 2)) / total


def rk4_evolve(p: EvolutionProblem, stride: int | None = None, audit_tol: float = 1e-8,
               guard: float = 0.1) -> EvolutionResult:
    """Classical fixed-step RK4; the last step is shortened to land on t_final.

    Raises ValidationError when sqrt(||M||_1 ||M||_inf) dt exceeds ``guard``.
    Snapshots are kept every ``stride`` steps (and at the end) when stride is set.
    """
    M = p.matrix()
    if norm_bound(M) * p.dt > guard:
        raise ValidationError(
            f"stability guard: ||G|| dt = {norm_bound(M) * p.dt:.3g} exceeds {guard}")
    v = p.initial.coeffs.astype(complex)
    steps = int(math.ceil(p.t_final / p.dt - 1e-12)) if p.t_final > 0 else 0
    times, snaps = [0.0], [v.copy()]
    worst = top_mass(v)
    t = 0.0
    for s in range(steps):
        h = min(p.dt, p.t_final - t)
        k1 = M @ v
        k2 = M @ (v + 0.5 * h * k1)
        k3 = M @ (v + 0.5 * h * k2)
        k4 = M @ (v + h * k3)
        v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = p.t_final if s == steps - 1 else t + h
        worst = max(worst, top_mass(v))
        if stride and ((s + 1) % stride == 0 or s == steps - 1):
            times.append(t)
            snaps.append(v.copy())
    if not stride and steps:
        times.append(t)
        snaps.append(v.copy())
    return EvolutionResult(CoeffVec(v), np.array(times), np.array(snaps), worst, worst >= audit_tol)


# ---------------------------------------------------------------------------
# cubic diffusion generator and its Jacobi form
# ---------------------------------------------------------------------------

def heun_generator(N: int) -> BandedMatrix:
    """Coefficient system d/dt a_n = (n+1) sqrt(n+1) a_{n+1} - (n-1) sqrt(n) a_{n-1}, n = 0..N-1."""
    return build_matrix(heun_spec("diffusion"), N)


def heun_coefficient_system(N: int) -> BandedMatrix:
    """Real symmetric Jacobi matrix J on indices n = 1..N with off-diagonals omega_n = (n+1) sqrt(n).

    With a_n = (i^n / sqrt(n)) b_n the coefficient system for n >= 1 becomes
    d/dt b = i J b, where (J b)_n = omega_{n-1} b_{n-1} + omega_n b_{n+1}.
    """
    if N < 3:
        raise ValidationError("N must be at least 3")
    w = jacobi_omega(np.arange(1, N))            # omega_1 .. omega_{N-1}
    off = np.zeros(N, dtype=complex)
    off[:N - 1] = w
    up = np.zeros(N, dtype=complex)
    up[1:] = w
    return BandedMatrix(N, {1: off, -1: up})


def heun_substitution(N: int) -> np.ndarray:
    """Diagonal of the map b -> a, a_n = (i^n / sqrt(n)) b_n, for n = 1..N."""
    n = np.arange(1, N + 1)
    return (1j ** (n % 4)) / np.sqrt(n)


def heun_back_substitution(N: int) -> np.ndarray:
    """D (i J) D^{-1} with D = diag(i^n / sqrt(n)): the coefficient system on n = 1..N."""
    d = heun_substitution(N)
    J = heun_coefficient_system(N).to_dense()
    return d[:, None] * (1j * J) / d[None, :]
