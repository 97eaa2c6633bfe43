"""Hamiltonian assembly and spectral computations on truncations.

The complex eigensolver (Householder Hessenberg reduction followed by a
Wilkinson-shifted QR iteration with deflation) is implemented here; numpy is
used only for dense building blocks such as SVDs and Hermitian eigenvalues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, ValidationError
from .fock_core import (BandedMatrix, HamiltonianSpec, MonomialTerm, build_matrix,
                        combine_terms, falling_factorials, monomial_entries)

_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# named operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GribovParams:
    mu: float = 0.0
    lam: float = 0.0
    lam_prime: float = 0.0
    lam_second: float = 0.0


def gribov_perturbation(p: GribovParams) -> HamiltonianSpec:
    """lam'' A*^3A^3 + lam' A*^2A^2 + mu A*A + i lam (A*A^2 + A*^2A), with no leading part."""
    terms = [(3, 3, p.lam_second), (2, 2, p.lam_prime), (1, 1, p.mu),
             (1, 2, 1j * p.lam), (2, 1, 1j * p.lam)]
    return HamiltonianSpec(0, combine_terms(MonomialTerm(i, j, a) for i, j, a in terms))


def gribov_spec(p: GribovParams) -> HamiltonianSpec:
    """Gribov operator with its highest diagonal power promoted to the leading part.

    k is the largest power among (lam'', lam', mu) with a nonzero coefficient.
    The leading part S_k carries coefficient 1, so a leading coefficient c
    leaves a residual term (k, k, c - 1), which vanishes in the usual case c = 1.
    """
    lead = [(3, p.lam_second), (2, p.lam_prime), (1, p.mu)]
    k, c = next(((q, c) for q, c in lead if c != 0), (0, 0.0))
    terms = []
    for i, j, a in [(3, 3, p.lam_second), (2, 2, p.lam_prime), (1, 1, p.mu),
                    (1, 2, 1j * p.lam), (2, 1, 1j * p.lam)]:
        if k and i == j == k:
            a = c - 1.0
        terms.append(MonomialTerm(i, j, a))
    return HamiltonianSpec(k, combine_terms(terms))


def heun_spec(variant: str = "cubic") -> HamiltonianSpec:
    """Cubic operators built from A*A^2 and A*^2A.

    "cubic":     A*(A + A*)A   -> column n: (n-1)sqrt(n) at row n-1, n sqrt(n+1) at row n+1
    "diffusion": A + A*(A - A*)A -> column n: n sqrt(n) at row n-1, -n sqrt(n+1) at row n+1
    """
    if variant == "cubic":
        return HamiltonianSpec(0, (MonomialTerm(1, 2, 1.0), MonomialTerm(2, 1, 1.0)))
    if variant == "diffusion":
        return HamiltonianSpec(0, (MonomialTerm(0, 1, 1.0), MonomialTerm(1, 2, 1.0),
                                   MonomialTerm(2, 1, -1.0)))
    raise ValidationError(f"unknown Heun variant {variant!r}")


# ---------------------------------------------------------------------------
# complex eigensolver
# ---------------------------------------------------------------------------

def hessenberg(A: np.ndarray) -> np.ndarray:
    """Upper Hessenberg form by Householder reflections (similarity, eigenvalues kept)."""
    H = np.array(A, dtype=complex)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k]
        tail = np.linalg.norm(x[1:])
        if tail == 0.0:
            continue
        nx = math.hypot(abs(x[0]), tail)
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        H[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H


def _wilkinson_shift(a, b, c, d):
    """Eigenvalue of [[a, b], [c, d]] closest to d."""
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    m1 = d - b * c / (half + disc) if (half + disc) != 0 else d
    m2 = d - b * c / (half - disc) if (half - disc) != 0 else d
    return m1 if abs(m1 - d) <= abs(m2 - d) else m2


def hessenberg_qr_eigenvalues(H: np.ndarray, max_sweeps_per_value: int = 60) -> tuple[np.ndarray, list[int]]:
    """All eigenvalues of an upper Hessenberg matrix.

    Explicit single-shift QR sweeps with Givens rotations on the active
    window, Wilkinson shifts, an exceptional shift every 10 stalled sweeps,
    and deflation when |h_{l,l-1}| <= eps (|h_{l,l}| + |h_{l-1,l-1}|).
    Returns the eigenvalues and the indices that hit the sweep cap.
    """
    H = np.array(H, dtype=complex)
    n = H.shape[0]
    vals = np.empty(n, dtype=complex)
    failed: list[int] = []
    hnorm = float(np.max(np.abs(H))) if n else 0.0
    hi = n - 1
    sweeps = 0
    while hi >= 0:
        if hi == 0:
            vals[0] = H[0, 0]
            break
        l = hi
        while l > 0:
            ref = abs(H[l, l]) + abs(H[l - 1, l - 1])
            if ref == 0.0:
                ref = hnorm
            if abs(H[l, l - 1]) <= _EPS * ref:
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            vals[hi] = H[hi, hi]
            hi -= 1
            sweeps = 0
            continue
        if sweeps >= max_sweeps_per_value:
            failed.append(hi)
            vals[hi] = H[hi, hi]
            H[hi, hi - 1] = 0.0
            hi -= 1
            sweeps = 0
            continue
        sweeps += 1
        if sweeps % 10 == 0:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1])
        else:
            mu = _wilkinson_shift(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        W = H[l:hi + 1, l:hi + 1]
        m = W.shape[0]
        W[np.diag_indices(m)] -= mu
        rots = []
        for j in range(m - 1):
            x, y = W[j, j], W[j + 1, j]
            r = math.hypot(abs(x), abs(y))
            if r == 0.0:
                c, s = 1.0, 0.0
            else:
                c, s = x / r, y / r
            G = np.array([[np.conj(c), np.conj(s)], [-s, c]])
            W[j:j + 2, j:] = G @ W[j:j + 2, j:]
            rots.append(G)
        for j, G in enumerate(rots):
            top = min(j + 2, m - 1) + 1
            W[:top, j:j + 2] = W[:top, j:j + 2] @ G.conj().T
        W[np.diag_indices(m)] += mu
    return vals, failed


def sort_spectrum(vals: np.ndarray) -> np.ndarray:
    """Order by real part, then imaginary part, then magnitude."""
    vals = np.asarray(vals, dtype=complex)
    order = np.lexsort((np.abs(vals), vals.imag, vals.real))
    return vals[order]


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    N: int
    converged_count: int | None = None
    nonconverged: tuple[int, ...] = ()
    vectors: np.ndarray | None = None
    residuals: np.ndarray | None = None


def _as_dense(M) -> np.ndarray:
    if isinstance(M, BandedMatrix):
        return M.to_dense()
    return np.asarray(M, dtype=complex)


def eigen_complex(M, vectors: bool = False, strict: bool = True) -> SpectrumResult:
    """All eigenvalues of a (banded or dense) complex matrix, sorted by real part.

    With ``vectors=True`` eigenvectors come from inverse iteration and their
    residuals ||Mv - sigma v|| are reported. ``strict`` raises on sweep-cap hits.
    """
    A = _as_dense(M)
    n = A.shape[0]
    if n < 1:
        raise ValidationError("empty matrix")
    vals, failed = hessenberg_qr_eigenvalues(hessenberg(A))
    if failed and strict:
        raise ConvergenceError(f"QR iteration did not converge for {len(failed)} eigenvalue(s)")
    vals = sort_spectrum(vals)
    if not vectors:
        return SpectrumResult(vals, n, nonconverged=tuple(failed))
    V = np.empty((n, n), dtype=complex)
    res = np.empty(n)
    for idx, s in enumerate(vals):
        v = inverse_iteration(M, s)
        V[:, idx] = v
        res[idx] = np.linalg.norm(A @ v - s * v)
    return SpectrumResult(vals, n, nonconverged=tuple(failed), vectors=V, residuals=res)


def _solve_shifted(M, sigma: complex, rhs: np.ndarray, adjoint: bool = False) -> np.ndarray:
    """Solve (M - sigma I) x = rhs, or the adjoint system; banded storage when available."""
    if isinstance(M, BandedMatrix):
        (lo, up), ab = (M.adjoint() if adjoint else M).to_banded_storage()
        ab[up, :] -= np.conj(sigma) if adjoint else sigma
        return scipy.linalg.solve_banded((lo, up), ab, rhs)
    A = np.asarray(M, dtype=complex) - sigma * np.eye(len(M))
    return np.linalg.solve(A.conj().T if adjoint else A, rhs)


def inverse_iteration(M, sigma: complex, iters: int = 3, adjoint: bool = False) -> np.ndarray:
    """Unit eigenvector (or left eigenvector with adjoint=True) for an eigenvalue estimate."""
    n = M.dim if isinstance(M, BandedMatrix) else len(M)
    s = sigma + 4 * _EPS * max(1.0, abs(sigma)) * (1 + 1j)
    x = np.ones(n, dtype=complex) / math.sqrt(n)
    for _ in range(iters):
        try:
            x = _solve_shifted(M, s, x, adjoint=adjoint)
        except (np.linalg.LinAlgError, ValueError):
            s = s + 1e3 * _EPS * max(1.0, abs(s))
            x = _solve_shifted(M, s, x, adjoint=adjoint)
        x /= np.linalg.norm(x)
    return x


def refine_eigenvalues(M: BandedMatrix, vals: np.ndarray) -> np.ndarray:
    """Two-sided Rayleigh quotients y^H M x / y^H x from inverse-iteration vectors.

    QR eigenvalues carry absolute errors of order eps ||M||, which swamps the
    small eigenvalues of graded matrices; the quotient brings each one to an
    error of order eps times the entries its eigenvectors actually touch.
    Values whose left and right vectors are numerically orthogonal, or that
    move by less than rounding, are kept.
    """
    out = np.array(vals, dtype=complex)
    for idx, s in enumerate(out):
        x = inverse_iteration(M, s)
        y = inverse_iteration(M, s, adjoint=True)
        yx = np.vdot(y, x)
        if abs(yx) > 1e-8:
            t = np.vdot(y, M.matvec(x)) / yx
            if abs(t - s) > 4 * _EPS * max(1.0, abs(s)):     # keep values already exact
                out[idx] = t
    return out


def spectrum(spec: HamiltonianSpec, N: int, double_check: bool = False, tol: float = 1e-6,
             refine: bool = True) -> SpectrumResult:
    """Eigenvalues of the truncation; with double_check the 2N truncation sets converged_count.

    converged_count is the length of the leading run of sorted eigenvalues
    that agree within tol * max(1, |sigma|) between N and 2N. With refine the
    eigenvalues are polished by refine_eigenvalues before sorting.
    """
    def solve(n):
        M = build_matrix(spec, n)
        res = eigen_complex(M, strict=False)
        vals = refine_eigenvalues(M, res.eigenvalues) if refine else res.eigenvalues
        if res.nonconverged:
            raise ConvergenceError(f"QR iteration did not converge for {len(res.nonconverged)} eigenvalue(s)")
        return sort_spectrum(vals)

    vals = solve(N)
    if not double_check:
        return SpectrumResult(vals, N)
    big = solve(2 * N)[:N]
    ok = np.abs(vals - big) <= tol * np.maximum(1.0, np.abs(big))
    count = int(np.argmin(ok)) if not ok.all() else N
    return SpectrumResult(vals, N, count)


# ---------------------------------------------------------------------------
# domination and subordination
# ---------------------------------------------------------------------------

def row_weights(spec: HamiltonianSpec, n) -> np.ndarray:
    """u(n) = sum |a| (alpha_{n,i,j} + alpha_{n-(i-j),i,j}) / 2 over the terms.

    Bounds the quadratic form: |<P phi, phi>| <= sum_n u(n) |phi_n|^2.
    """
    n = np.asarray(n, dtype=float)
    w = np.zeros_like(n)
    for t in spec.terms:
        d = t.offset
        src = n - d
        own = monomial_entries(n, t.i, t.j)
        incoming = np.where(src >= 0, monomial_entries(np.maximum(src, 0), t.i, t.j), 0.0)
        w += abs(t.a) * 0.5 * (own + incoming)
    return w


@dataclass(frozen=True)
class DominationResult:
    C: float
    argmax: int
    N: int
    eps: float


def domination_profile(spec: HamiltonianSpec, eps: float, N: int) -> DominationResult:
    """Certified C_eps(N) with |<P phi, phi>| <= eps <S_k phi, phi> + C_eps ||phi||^2 on span{e_0..e_{N-1}}."""
    if spec.k < 1:
        raise ValidationError("domination needs a leading part (k >= 1)")
    if spec.m >= 2 * spec.k:
        raise ValidationError(f"m = {spec.m} is not dominated by S_{spec.k} (needs m <= 2k - 1)")
    if eps <= 0:
        raise ValidationError("eps must be positive")
    n = np.arange(N)
    slack = row_weights(spec, n) - eps * falling_factorials(n, spec.k)
    idx = int(np.argmax(slack))
    return DominationResult(float(max(0.0, slack[idx])), idx, N, eps)


def domination_plateau(spec: HamiltonianSpec, eps: float, sizes) -> np.ndarray:
    return np.array([domination_profile(spec, eps, int(N)).C for N in sizes])


@dataclass(frozen=True)
class AuditResult:
    samples: int
    violations: int
    worst_margin: float      # min over samples of bound - |<P phi, phi>| (>= 0 when no violation)


def domination_audit(spec: HamiltonianSpec, eps: float, C: float, N: int, samples: int = 1000,
                     seed: int = 0) -> AuditResult:
    """Monte-Carlo check of the quadratic-form bound on random unit vectors.

    Half the vectors are plain complex Gaussians; the rest are Gaussian bumps
    in n placed uniformly over [0, N), which probe the crossover region.
    """
    rng = np.random.default_rng(seed)
    P = build_matrix(spec.perturbation(), N)
    lam = falling_factorials(np.arange(N), spec.k)
    n = np.arange(N)
    worst = math.inf
    bad = 0
    for s in range(samples):
        phi = rng.normal(size=N) + 1j * rng.normal(size=N)
        if s % 2:
            centre = rng.uniform(0, N)
            width = rng.uniform(0.5, max(1.0, N / 8))
            phi = phi * np.exp(-0.5 * ((n - centre) / width) ** 2)
        phi /= np.linalg.norm(phi)
        lhs = abs(np.vdot(phi, P.matvec(phi)))
        rhs = eps * float(np.sum(lam * np.abs(phi) ** 2)) + C
        margin = rhs - lhs
        worst = min(worst, margin)
        if margin < -1e-12 * max(1.0, rhs):
            bad += 1
    return AuditResult(samples, bad, worst)


def norm_domination_constant(spec: HamiltonianSpec, eps: float, N: int) -> float:
    """C with ||P phi|| <= eps ||S_k phi|| + C ||phi|| certified on span{e_0..e_{N-1}}.

    Uses ||P phi||^2 <= sum_n r(n)^2 |phi_n|^2 with r(n)^2 = T sum_t |a_t|^2 alpha_{n,t}^2
    (Cauchy-Schwarz over the T distinct bands).
    """
    n = np.arange(N, dtype=float)
    by_band: dict[int, np.ndarray] = {}
    for t in spec.terms:
        by_band[t.offset] = by_band.get(t.offset, 0.0) + abs(t.a) * monomial_entries(n, t.i, t.j)
    if not by_band:
        return 0.0
    T = len(by_band)
    r = np.sqrt(T * sum(v**2 for v in by_band.values()))
    slack = r - eps * falling_factorials(n, spec.k)
    return float(max(0.0, np.max(slack)))


@dataclass(frozen=True)
class SubordinationResult:
    sup: float
    argmax: int
    n: np.ndarray
    ratios: np.ndarray


def subordination_ratio(spec: HamiltonianSpec, k: int, N: int) -> SubordinationResult:
    """max over e_n (k <= n < N) of ||P e_n|| / ||S_k e_n||^{1/2}, P given by spec.terms."""
    if k < 1:
        raise ValidationError("k must be at least 1")
    if spec.m > k:
        raise ValidationError(f"m = {spec.m} exceeds k = {k}")
    n = np.arange(k, N, dtype=float)
    if n.size == 0:
        raise ValidationError("N must exceed k")
    bands: dict[int, np.ndarray] = {}
    for t in spec.terms:
        bands[t.offset] = bands.get(t.offset, 0.0) + t.a * monomial_entries(n, t.i, t.j)
    norm_p = np.sqrt(sum(np.abs(v) ** 2 for v in bands.values())) if bands else np.zeros_like(n)
    ratios = norm_p / np.sqrt(falling_factorials(n, k))
    idx = int(np.argmax(ratios))
    return SubordinationResult(float(ratios[idx]), int(n[idx]), n.astype(int), ratios)


@dataclass(frozen=True)
class InvertibilityResult:
    margin: float             # smallest singular value of M + beta I
    neumann_norm: float       # ||P (S_k + beta I)^{-1}||_2
    contraction: bool         # neumann_norm < 1
    resolvent_norm: float     # ||(S_k + beta I)^{-1}|| = 1 / beta
    threshold: float | None = None   # C / (1 - 2 eps) from the norm-domination constant


def invertibility_margin(spec: HamiltonianSpec, beta: float, N: int, eps: float | None = None) -> InvertibilityResult:
    if beta <= 0:
        raise ValidationError("beta must be positive")
    M = build_matrix(spec, N).to_dense() + beta * np.eye(N)
    margin = float(np.min(np.linalg.svd(M, compute_uv=False)))
    lam = falling_factorials(np.arange(N), spec.k)
    P = build_matrix(spec.perturbation(), N).to_dense()
    neumann = float(np.linalg.norm(P / (lam + beta)[None, :], 2)) if spec.terms else 0.0
    resolvent = float(np.max(1.0 / (lam + beta)))
    threshold = None
    if eps is not None:
        if not 0 < eps < 0.5:
            raise ValidationError("eps must lie in (0, 1/2)")
        threshold = norm_domination_constant(spec, eps, N) / (1.0 - 2.0 * eps)
    return InvertibilityResult(margin, neumann, neumann < 1.0, resolvent, threshold)


def schatten_partial(k: int, p: float, N: int) -> float:
    """sum_{n=k..N} lambda_{n,k}^{-p}."""
    if k < 1:
        raise ValidationError("k must be at least 1")
    if p <= 0:
        raise ValidationError("p must be positive")
    n = np.arange(k, N + 1, dtype=float)
    return float(np.sum(falling_factorials(n, k) ** (-p)))


def numerical_range_bound(spec: HamiltonianSpec, N: int) -> float:
    """Smallest eigenvalue of the Hermitian part of the truncation: Re<H phi, phi> >= this * ||phi||^2."""
    M = build_matrix(spec, N).to_dense()
    return float(np.linalg.eigvalsh(0.5 * (M + M.conj().T))[0])
