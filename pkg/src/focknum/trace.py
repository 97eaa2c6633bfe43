"""Regularized trace sums for H = S_k + B on the truncated Fock basis.

The reference operator S_k = A*^k A^k is diagonal with eigenvalues
lambda_n = n(n-1)...(n-k+1). Two regularizations are provided:

* first-order sums  S_n = sum_{j<=n} (sigma_j - lambda_j - <B e_j, e_j>);
* contour sums      sum_{lambda_n < r} (sigma_n - lambda_n)
                    + (1/2 pi i) oint_{|sigma|=r} sum_{t<=l} (-1)^{t-1}/t Tr (B R_0)^t d sigma,
  with R_0(sigma) = (S_k - sigma)^{-1}.

With this orientation the contour term for l = 1 and diagonal B equals
-sum_{lambda_n < r} b_nn, which cancels the first-order shift exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ContourCollisionError, ValidationError
from .fock_core import BandedMatrix, HamiltonianSpec, build_matrix, falling_factorials, monomial_entries
from .spectra import eigen_complex, inverse_iteration, spectrum


class TruncationWarning(UserWarning):
    """The contour term did not settle to the tail tolerance under doubling."""


@dataclass(frozen=True)
class TraceConfig:
    """Parameters of a regularized trace run.

    delta = m / (2k) measures the relative order of B; omega defaults to the
    midpoint of [delta / l, 1 / (2k)). Admissible runs need m <= 2k - 3,
    l >= 2(k - 1), delta / l < 1 / (2k) and delta + omega < 1.
    """

    k: int
    m: int
    l: int
    N: int = 400
    contour_first: int | None = None
    contour_count: int = 10
    contour_samples: int = 256
    contour_dim: int | None = None
    omega: float | None = None
    refine: bool = True
    tail_tol: float = 1e-10
    enforce_admissibility: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("k must be at least 1")
        if self.m < 0 or self.l < 1 or self.N < 1:
            raise ValidationError("m must be nonnegative, l and N positive")
        if self.contour_count < 1:
            raise ValidationError("contour_count must be at least 1")
        if self.contour_samples < 256:
            raise ValidationError("contour_samples must be at least 256")
        if self.enforce_admissibility and not self.admissible:
            raise ValidationError(
                f"configuration (k={self.k}, m={self.m}, l={self.l}) is not admissible: "
                f"needs m <= 2k-3 = {2 * self.k - 3} and l >= {2 * (self.k - 1)}")

    @property
    def delta(self) -> float:
        return self.m / (2 * self.k)

    @property
    def omega_value(self) -> float:
        if self.omega is not None:
            return self.omega
        return 0.5 * (self.delta / self.l + 1.0 / (2 * self.k))

    @property
    def admissible(self) -> bool:
        k, m, l = self.k, self.m, self.l
        return (m <= 2 * k - 3 and l >= 2 * (k - 1) and self.delta / l < 1.0 / (2 * k)
                and self.delta + self.omega_value < 1.0)


@dataclass(frozen=True)
class TraceSeries:
    partial_sums: np.ndarray                 # first-order sums, or inside sums per contour
    radii: np.ndarray = field(default_factory=lambda: np.zeros(0))
    contour_values: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    def __post_init__(self):
        if self.radii.size > 1 and np.any(np.diff(self.radii) <= 0):
            raise ValidationError("radii must be strictly increasing")

    def ratios(self) -> np.ndarray:
        """|v_{s+1}| / |v_s| for the main sequence (values if present, else partial sums)."""
        a = np.abs(self.values if self.values.size else self.partial_sums)
        with np.errstate(divide="ignore", invalid="ignore"):
            return a[1:] / a[:-1]

    def monotone_fraction(self) -> float:
        a = np.abs(self.values if self.values.size else self.partial_sums)
        if a.size < 2:
            return 1.0
        return float(np.mean(np.diff(a) < 0))


# ---------------------------------------------------------------------------
# first-order sums
# ---------------------------------------------------------------------------

def diagonal_correction(B: HamiltonianSpec, n) -> np.ndarray | complex:
    """<B e_n, e_n> = sum over diagonal monomials of a_ii lambda_{n,i}."""
    arr = np.asarray(n, dtype=float)
    out = np.zeros(arr.shape, dtype=complex)
    for t in B.terms:
        if t.i == t.j:
            out = out + t.a * falling_factorials(arr, t.i)
    return out[()] if out.ndim == 0 else out


def _check_perturbation(B: HamiltonianSpec):
    if B.k != 0:
        raise ValidationError("B must be a pure perturbation (leading power 0)")


def reference_matrix(k: int, B: HamiltonianSpec, N: int) -> tuple[np.ndarray, BandedMatrix, BandedMatrix]:
    """(lambda, B matrix, S_k + B matrix) at truncation N."""
    _check_perturbation(B)
    lam = falling_factorials(np.arange(N), k)
    Bm = build_matrix(B, N)
    diags = {d: v.copy() for d, v in Bm.diagonals.items()}
    diags[0] = diags.get(0, np.zeros(N, dtype=complex)) + lam
    return lam, Bm, BandedMatrix(N, diags)


def eigen_shifts(k: int, B: HamiltonianSpec, N: int, count: int, refine: bool = True) -> np.ndarray:
    """sigma_n - lambda_n for the count lowest eigenvalues (sorted by real part).

    With refine=True each eigenvalue estimate is polished by a two-sided
    Rayleigh quotient built from right and left inverse-iteration vectors x, y:

        sigma_n - lambda_n = [sum_j (lambda_j - lambda_n) conj(y_j) x_j + y^H B x] / (y^H x),

    which keeps the large diagonal lambda and the perturbation B apart so the
    difference carries no cancellation error from rounding of lambda + b.
    """
    if count > N:
        raise ValidationError(f"count {count} exceeds truncation {N}")
    lam, Bm, M = reference_matrix(k, B, N)
    if not B.terms:
        return np.zeros(count, dtype=complex)
    sig = eigen_complex(M).eigenvalues[:count]
    if not refine:
        return sig - lam[:count]
    out = np.empty(count, dtype=complex)
    for n in range(count):
        x = inverse_iteration(M, sig[n])
        y = inverse_iteration(M, sig[n], adjoint=True)
        yx = np.vdot(y, x)
        if abs(yx) < 1e-14:
            out[n] = sig[n] - lam[n]
            continue
        out[n] = (np.vdot(y, (lam - lam[n]) * x) + np.vdot(y, Bm.matvec(x))) / yx
    return out


def first_order_series(k: int, B: HamiltonianSpec, N: int, n_max: int, refine: bool = True,
                       check_convergence: bool = False) -> TraceSeries:
    """S_n = sum_{j=0..n} (sigma_j - lambda_{j,k} - <B e_j, e_j>) for n = 0..n_max."""
    if n_max < 0 or n_max >= N:
        raise ValidationError("need 0 <= n_max < N")
    _check_perturbation(B)
    if check_convergence:
        cc = spectrum(HamiltonianSpec(k, B.terms), N, double_check=True).converged_count
        if n_max >= cc:
            raise ValidationError(f"n_max = {n_max} exceeds converged_count = {cc}")
    shifts = eigen_shifts(k, B, N, n_max + 1, refine=refine)
    corr = diagonal_correction(B, np.arange(n_max + 1))
    return TraceSeries(np.cumsum(shifts - corr), indices=np.arange(n_max + 1))


# ---------------------------------------------------------------------------
# contour terms
# ---------------------------------------------------------------------------

def choose_contours(k: int, count: int, first: int | None = None) -> np.ndarray:
    """r_s = (lambda_{s,k} + lambda_{s+1,k}) / 2 for s = first .. first + count - 1.

    first defaults to max(k - 1, 0), the first s with lambda_{s+1,k} > 0.
    """
    if count < 1:
        raise ValidationError("count must be at least 1")
    s0 = max(k - 1, 0) if first is None else first
    if s0 < max(k - 1, 0):
        raise ValidationError(f"first must be at least {max(k - 1, 0)} so that radii are positive")
    s = np.arange(s0, s0 + count)
    return 0.5 * (falling_factorials(s, k) + falling_factorials(s + 1, k))


def _contour_geometry(k: int, radius: float) -> tuple[int, float]:
    """(number of lambda_n inside the circle, worst pole-to-circle ratio q < 1)."""
    if radius <= 0:
        raise ValidationError("radius must be positive")
    n = 0
    while falling_factorials(n, k) < radius:
        n += 1
    lam_out = float(falling_factorials(n, k))
    lam_in = float(falling_factorials(n - 1, k)) if n > 0 else 0.0
    gap = min(abs(lam_out - radius), abs(radius - lam_in) if n > 0 else math.inf)
    if gap <= 1e-9 * max(1.0, radius):
        raise ContourCollisionError(f"radius {radius!r} collides with a reference eigenvalue")
    q = max(lam_in / radius, radius / lam_out)
    return n, q


def _sample_count(q: float, l: int, base: int) -> int:
    """Trapezoid size with q^M M^l below about e^-35, as a power of two >= base."""
    M = 1 << max(8, int(math.ceil(math.log2(base))))
    while M * (-math.log(q)) < 35.0 + l * math.log(M):
        M *= 2
    return M


def _neumann_trace(Bm: BandedMatrix, lam: np.ndarray, sig: np.ndarray, l: int) -> np.ndarray:
    """sum_{t<=l} (-1)^{t-1}/t Tr (B R_0(sigma))^t for each sample sigma."""
    N = Bm.dim
    D = 1.0 / (lam[None, :] - sig[:, None])
    X = {d: v[None, :] * D for d, v in Bm.diagonals.items() if np.any(v)}
    acc = np.zeros(sig.size, dtype=complex)
    if not X:
        return acc
    if 0 in X:
        acc += X[0].sum(axis=1)
    P = X
    for t in range(2, l + 1):
        # trace of P X: pairs of offsets summing to 0
        tr = np.zeros(sig.size, dtype=complex)
        for d2, vY in X.items():
            vX = P.get(-d2)
            if vX is None:
                continue
            tr += _band_product(vX, vY, d2, N).sum(axis=1)
        acc += (-1) ** (t - 1) / t * tr
        if t < l:
            Q: dict[int, np.ndarray] = {}
            for d1, vX in P.items():
                for d2, vY in X.items():
                    w = _band_product(vX, vY, d2, N)
                    d = d1 + d2
                    Q[d] = Q[d] + w if d in Q else w
            P = Q
    return acc


def _band_product(vX: np.ndarray, vY: np.ndarray, d2: int, N: int) -> np.ndarray:
    """Diagonal of offset d1 + d2 of X Y from X's offset-d1 and Y's offset-d2 diagonals."""
    w = np.zeros_like(vY)
    if abs(d2) >= N:
        return w
    if d2 >= 0:
        w[:, :N - d2] = vX[:, d2:] * vY[:, :N - d2]
    else:
        w[:, -d2:] = vX[:, :N + d2] * vY[:, -d2:]
    return w


def _contour_at(k: int, B: HamiltonianSpec, l: int, radius: float, M: int, N: int,
                chunk: int = 512) -> complex:
    lam = falling_factorials(np.arange(N), k)
    Bm = build_matrix(B, N)
    theta = 2.0 * np.pi * np.arange(M) / M
    sig = radius * np.exp(1j * theta)
    total = 0j
    for a in range(0, M, chunk):
        s = sig[a:a + chunk]
        total += np.sum(_neumann_trace(Bm, lam, s, l) * s)
    # (1/2 pi i) oint f d sigma with sigma = r e^{i theta} is the mean of f sigma
    return complex(total / M)


def contour_correction(k: int, B: HamiltonianSpec, l: int, radius: float, samples: int = 256,
                       N: int | None = None, tail_tol: float = 1e-10, max_doublings: int = 4) -> complex:
    """(1/2 pi i) oint_{|sigma| = radius} sum_{t<=l} (-1)^{t-1}/t Tr (B R_0)^t d sigma.

    The trapezoid size grows from ``samples`` until the geometric error
    q^M M^l is negligible (q is the worst pole-to-circle radius ratio). The
    truncation starts at max(N, 2 * inside count, 8) and doubles until two
    successive values differ by less than tail_tol * max(1, |value|);
    otherwise a TruncationWarning is issued.
    """
    _check_perturbation(B)
    if samples < 256:
        raise ValidationError("samples must be at least 256")
    if l < 1:
        raise ValidationError("l must be at least 1")
    inside, q = _contour_geometry(k, radius)
    if not B.terms:
        return 0j
    M = _sample_count(q, l, samples)
    dim = max(N or 0, 2 * inside, 8)
    prev = _contour_at(k, B, l, radius, M, dim)
    for _ in range(max_doublings):
        dim *= 2
        cur = _contour_at(k, B, l, radius, M, dim)
        if abs(cur - prev) <= tail_tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    warnings.warn(f"contour term at radius {radius:g} still moving at truncation {dim}",
                  TruncationWarning, stacklevel=2)
    return prev


def inside_count(k: int, radius: float) -> int:
    return _contour_geometry(k, radius)[0]


def regularized_value(k: int, B: HamiltonianSpec, l: int, radius: float, shifts: np.ndarray,
                      samples: int = 256, tail_tol: float = 1e-10) -> tuple[complex, complex]:
    """(inside sum, contour term) at one radius, given sigma_n - lambda_n for enough n."""
    n_in, _ = _contour_geometry(k, radius)
    if n_in > shifts.size:
        raise ValidationError(f"{n_in} eigenvalues lie inside radius {radius:g}; only {shifts.size} given")
    inside = complex(np.sum(shifts[:n_in]))
    return inside, contour_correction(k, B, l, radius, samples, tail_tol=tail_tol)


def regularized_trace_check(cfg: TraceConfig, B: HamiltonianSpec) -> TraceSeries:
    """sum_{lambda_n < r_s} (sigma_n - lambda_n) + contour_correction(r_s) for each contour s."""
    _check_perturbation(B)
    if B.m > cfg.m:
        raise ValidationError(f"B has order {B.m}, configuration allows m = {cfg.m}")
    radii = choose_contours(cfg.k, cfg.contour_count, cfg.contour_first)
    s_idx = np.arange(cfg.contour_count) + (max(cfg.k - 1, 0) if cfg.contour_first is None else cfg.contour_first)
    need = _contour_geometry(cfg.k, float(radii[-1]))[0]
    if need > cfg.N:
        raise ValidationError(f"truncation N = {cfg.N} holds fewer than the {need} eigenvalues needed")
    shifts = eigen_shifts(cfg.k, B, cfg.N, need, refine=cfg.refine) if B.terms else np.zeros(need, complex)
    inside = np.empty(radii.size, dtype=complex)
    corr = np.empty(radii.size, dtype=complex)
    for idx, r in enumerate(radii):
        n_in = _contour_geometry(cfg.k, float(r))[0]
        inside[idx] = np.sum(shifts[:n_in])
        corr[idx] = contour_correction(cfg.k, B, cfg.l, float(r), cfg.contour_samples,
                                       N=cfg.contour_dim, tail_tol=cfg.tail_tol)
    return TraceSeries(inside, radii, corr, inside + corr, s_idx)


# ---------------------------------------------------------------------------
# exponent bookkeeping
# ---------------------------------------------------------------------------

def relative_bound_profile(B: HamiltonianSpec, k: int, n_max: int, delta: float | None = None) -> np.ndarray:
    """||B (S_k + I)^{-delta} e_n|| for n = 0..n_max (delta defaults to m / 2k).

    Bounded in n exactly when B is relatively bounded with exponent delta.
    """
    if delta is None:
        delta = B.m / (2 * k)
    n = np.arange(n_max + 1, dtype=float)
    bands: dict[int, np.ndarray] = {}
    for t in B.terms:
        bands[t.offset] = bands.get(t.offset, 0.0) + t.a * monomial_entries(n, t.i, t.j)
    col = np.sqrt(sum(np.abs(v) ** 2 for v in bands.values())) if bands else np.zeros_like(n)
    return col / (falling_factorials(n, k) + 1.0) ** delta
