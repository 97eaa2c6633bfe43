"""Tridiagonal and Jacobi-matrix tools.

Index conventions follow the usual 1-based statement of the formulas, stored
0-based: for an n x n matrix T, ``a[i] = T[i, i]``, ``b[i] = T[i, i+1]`` and
``c[i] = T[i+1, i]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularMatrixError, ValidationError

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Tridiag:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a).reshape(-1)
        b = np.asarray(self.b).reshape(-1)
        c = np.asarray(self.c).reshape(-1)
        if a.size < 1:
            raise ValidationError("empty tridiagonal matrix")
        if b.size != a.size - 1 or c.size != a.size - 1:
            raise ValidationError(f"off-diagonals must have length {a.size - 1}, got {b.size} and {c.size}")
        dtype = np.result_type(a, b, c, float)
        for name, arr in (("a", a), ("b", b), ("c", c)):
            arr = arr.astype(dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def symmetric(cls, a, b) -> "Tridiag":
        return cls(a, b, b)

    @property
    def n(self) -> int:
        return self.a.size

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.b, self.c))

    @property
    def is_symmetrizable(self) -> bool:
        prod = self.b * self.c
        if np.iscomplexobj(prod) and np.any(prod.imag != 0):
            return False
        return bool(np.all(prod.real > 0))

    def to_dense(self) -> np.ndarray:
        out = np.diag(self.a)
        if self.n > 1:
            out = out + np.diag(self.b, 1) + np.diag(self.c, -1)
        return out

    def norm_max(self) -> float:
        return float(max(np.max(np.abs(self.a)),
                         np.max(np.abs(self.b), initial=0.0),
                         np.max(np.abs(self.c), initial=0.0)))

    def to_json(self) -> str:
        def enc(x):
            if np.iscomplexobj(x):
                return [[float(v.real), float(v.imag)] for v in x]
            return [float(v) for v in x]
        return json.dumps({"a": enc(self.a), "b": enc(self.b), "c": enc(self.c)})

    @classmethod
    def from_json(cls, text: str) -> "Tridiag":
        try:
            d = json.loads(text)

            def dec(x):
                return np.array([complex(*v) if isinstance(v, list) else v for v in x])
            return cls(dec(d["a"]), dec(d["b"]), dec(d.get("c", d["b"])))
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ValidationError(f"malformed tridiagonal JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# determinants and inverse
# ---------------------------------------------------------------------------

def char_poly_seq(T: Tridiag, lam) -> np.ndarray:
    """Leading principal minors P_0 .. P_n of det(T - lam I).

    P_i = (a_i - lam) P_{i-1} - b_{i-1} c_{i-1} P_{i-2}, P_0 = 1.
    """
    n = T.n
    dtype = np.result_type(T.a, np.asarray(lam), float)
    P = np.empty(n + 1, dtype=dtype)
    P[0] = 1.0
    P[1] = T.a[0] - lam
    for i in range(2, n + 1):
        P[i] = (T.a[i - 1] - lam) * P[i - 1] - T.b[i - 2] * T.c[i - 2] * P[i - 2]
    return P


def _scaled_recurrence(diag, prods, reverse=False):
    """Run x_i = d_i x_{i-1} - p_{i-1} x_{i-2} with rescaling.

    Returns log-magnitudes and unit phases of x_0 .. x_n (x_0 = 1,
    x_1 = d_1). With reverse=True the recursion runs from the bottom,
    which is the phi-recurrence after relabelling.
    """
    d = diag[::-1] if reverse else diag
    p = prods[::-1] if reverse else prods
    n = d.size
    dtype = np.result_type(d, float)
    logmag = np.full(n + 1, -np.inf)
    phase = np.zeros(n + 1, dtype=dtype)
    prev, cur = np.ones((), dtype=dtype), np.asarray(d[0], dtype=dtype)
    scale = 0.0
    logmag[0], phase[0] = 0.0, 1.0

    def store(idx, val, sc):
        mag = abs(val)
        if mag > 0:
            logmag[idx] = math.log(mag) + sc
            phase[idx] = val / mag

    store(1, cur, scale)
    for i in range(2, n + 1):
        nxt = d[i - 1] * cur - p[i - 2] * prev
        prev, cur = cur, nxt
        big = max(abs(prev), abs(cur))
        if big > 1e150 or (0 < big < 1e-150):
            prev, cur = prev / big, cur / big
            scale += math.log(big)
        store(i, cur, scale)
    if reverse:
        return logmag[::-1], phase[::-1]
    return logmag, phase


def determinant(T: Tridiag) -> complex | float:
    """det T through the theta recurrence (may overflow for huge inputs)."""
    return char_poly_seq(T, 0.0)[-1]


def usmani_inverse(T: Tridiag, rtol: float = 1e-12) -> np.ndarray:
    """Closed-form inverse of a tridiagonal matrix.

    theta_i = a_i theta_{i-1} - b_{i-1} c_{i-1} theta_{i-2}  (theta_0 = 1, theta_1 = a_1)
    phi_i   = a_i phi_{i+1}   - b_i c_i phi_{i+2}            (phi_{n+1} = 1, phi_n = a_n)

    (T^-1)_ij = (-1)^{i+j} b_i..b_{j-1} theta_{i-1} phi_{j+1} / theta_n   for i <= j
    (T^-1)_ij = (-1)^{i+j} c_j..c_{i-1} theta_{j-1} phi_{i+1} / theta_n   for i > j

    Products and the two recurrences are carried in log-magnitude/phase form.
    """
    n = T.n
    bc = T.b * T.c
    lt, pt = _scaled_recurrence(T.a, bc)             # theta_0..theta_n
    lp_rev, pp_rev = _scaled_recurrence(T.a, bc, reverse=True)
    # lp_rev[m] holds phi_{m+1} for m = 0..n  (phi_{n+1} = 1 sits at m = n)
    lphi = np.concatenate([[np.nan], lp_rev])        # lphi[i] = log|phi_i|, i = 1..n+1
    pphi = np.concatenate([[np.nan], pp_rev])

    # singular when theta_n is at the rounding level of the two terms that produced it
    terms = [lt[n - 1] + math.log(abs(T.a[-1])) if T.a[-1] != 0 else -np.inf]
    if n > 1 and bc[-1] != 0:
        terms.append(lt[n - 2] + math.log(abs(bc[-1])))
    if not np.isfinite(lt[n]) or lt[n] <= math.log(rtol) + max(terms):
        raise SingularMatrixError("tridiagonal matrix is singular to working precision (theta_n ~ 0)")

    def cum_log_phase(x):
        mag = np.abs(x)
        zero = mag == 0
        lg = np.where(zero, 0.0, np.log(np.where(zero, 1.0, mag)))
        ph = np.where(zero, 1.0, x / np.where(zero, 1.0, mag))
        L = np.concatenate([[0.0], np.cumsum(lg)])
        Z = np.concatenate([[0], np.cumsum(zero)])
        if np.iscomplexobj(x):
            A = np.concatenate([[0.0], np.cumsum(np.angle(ph))])
        else:
            A = np.concatenate([[0.0], np.cumsum(np.where(ph < 0, math.pi, 0.0))])
        return L, Z, A

    Lb, Zb, Ab = cum_log_phase(T.b)
    Lc, Zc, Ac = cum_log_phase(T.c)

    I = np.arange(1, n + 1)[:, None]
    J = np.arange(1, n + 1)[None, :]
    lo = np.minimum(I, J)
    hi = np.maximum(I, J)
    upper = I <= J
    # product over t = lo .. hi-1 of b_t (upper) or c_t (lower); b_t sits at b[t-1]
    Lprod = np.where(upper, Lb[hi - 1] - Lb[lo - 1], Lc[hi - 1] - Lc[lo - 1])
    Zprod = np.where(upper, Zb[hi - 1] - Zb[lo - 1], Zc[hi - 1] - Zc[lo - 1])
    Aprod = np.where(upper, Ab[hi - 1] - Ab[lo - 1], Ac[hi - 1] - Ac[lo - 1])

    logmag = Lprod + lt[lo - 1] + lphi[hi + 1] - lt[n]
    with np.errstate(invalid="ignore", over="ignore"):
        mag = np.where((Zprod > 0) | ~np.isfinite(logmag), 0.0, np.exp(logmag))
    sign = np.where((I + J) % 2 == 0, 1.0, -1.0)
    ph = pt[lo - 1] * pphi[hi + 1] / pt[n]
    if np.iscomplexobj(ph) or np.iscomplexobj(T.b):
        out = sign * mag * ph * np.exp(1j * Aprod)
    else:
        out = sign * mag * ph * np.cos(Aprod)
    return out


# ---------------------------------------------------------------------------
# symmetrization, Sturm sequences and eigenpairs
# ---------------------------------------------------------------------------

def symmetrize(T: Tridiag) -> tuple[np.ndarray, Tridiag]:
    """Diagonal similarity D T D^-1 with off-diagonals sqrt(b_i c_i).

    d_1 = 1, d_k = sqrt(b_1..b_{k-1} / c_1..c_{k-1}).
    """
    if not T.is_symmetrizable:
        raise ValidationError("symmetrize needs b_i * c_i > 0 for every i")
    b = np.real(T.b).astype(float)
    c = np.real(T.c).astype(float)
    logd = np.concatenate([[0.0], 0.5 * np.cumsum(np.log(np.abs(b)) - np.log(np.abs(c)))])
    d = np.exp(logd)
    off = np.sign(b) * np.sqrt(b * c)
    return d, Tridiag.symmetric(np.real(T.a).astype(float), off)


def sturm_count(a, b, x) -> np.ndarray:
    """Number of eigenvalues strictly below each x, symmetric tridiagonal (a, b).

    Uses the LDL^T pivots q_i = a_i - x - b_{i-1}^2 / q_{i-1}; a negative
    pivot marks a sign agreement lost in the Sturm sequence.
    """
    a = np.asarray(a, dtype=float)
    b2 = np.asarray(b, dtype=float) ** 2
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pivmin = np.finfo(float).tiny * max(1.0, float(np.max(b2, initial=0.0))) / _EPS
    q = a[0] - x
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    count = (q < 0).astype(int)
    for i in range(1, a.size):
        q = a[i] - x - b2[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        count += q < 0
    return count


def sign_agreements(P: np.ndarray) -> int:
    """Number of consecutive sign agreements in a Sturm sequence (zeros take the previous sign).

    For the minors of det(T - lam I) of a symmetric irreducible T this is the
    number of eigenvalues greater than lam.
    """
    signs = []
    last = 1.0
    for v in np.real(P):
        s = np.sign(v) if v != 0 else last
        signs.append(s)
        last = s
    signs = np.array(signs)
    return int(np.sum(signs[1:] == signs[:-1]))


def _bisect_all(a, b, tol_abs):
    n = a.size
    r = np.zeros(n)
    ab = np.abs(b)
    r[:-1] += ab
    r[1:] += ab
    lo0 = float(np.min(a - r)) - tol_abs
    hi0 = float(np.max(a + r)) + tol_abs
    lo = np.full(n, lo0)
    hi = np.full(n, hi0)
    idx = np.arange(n)
    for _ in range(200):
        width = hi - lo
        active = width > np.maximum(tol_abs, 2 * _EPS * np.maximum(np.abs(lo), np.abs(hi)))
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        cnt = sturm_count(a, b, mid[active])
        k = idx[active]
        go_left = cnt > k
        hi[active] = np.where(go_left, mid[active], hi[active])
        lo[active] = np.where(go_left, lo[active], mid[active])
    return 0.5 * (lo + hi)


def _solve_shifted(a, b, shifts, rhs):
    """Solve (T - s I) x = rhs for several shifts at once (LU with partial pivoting).

    ``rhs`` has shape (K, n); returns the same shape.
    """
    K, n = rhs.shape
    if n == 1:
        piv = a[0] - shifts
        piv = np.where(piv == 0, _EPS, piv)
        return rhs / piv[:, None]
    d = np.tile(a, (K, 1)) - shifts[:, None]
    dl = np.tile(b, (K, 1)).astype(float)
    du = np.tile(b, (K, 1)).astype(float)
    du2 = np.zeros((K, max(n - 2, 0)))
    x = rhs.astype(float).copy()
    swapped = np.zeros((K, n - 1), dtype=bool)
    tiny = _EPS * max(1.0, float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
    for i in range(n - 1):
        sw = np.abs(dl[:, i]) > np.abs(d[:, i])
        swapped[:, i] = sw
        # no swap: eliminate with multiplier dl/d
        piv = np.where(d[:, i] == 0, tiny, d[:, i])
        fact_ns = dl[:, i] / piv
        # swap rows i and i+1
        fact_s = np.where(dl[:, i] == 0, 0.0, d[:, i] / np.where(dl[:, i] == 0, 1.0, dl[:, i]))
        new_d_next = np.where(sw, du[:, i] - fact_s * d[:, i + 1], d[:, i + 1] - fact_ns * du[:, i])
        new_du_i = np.where(sw, d[:, i + 1], du[:, i])
        new_d_i = np.where(sw, dl[:, i], piv)
        if i < n - 2:
            new_du2 = np.where(sw, du[:, i + 1], 0.0)
            new_du_next = np.where(sw, -fact_s * du[:, i + 1], du[:, i + 1])
            du2[:, i] = new_du2
            du[:, i + 1] = new_du_next
        xi, xn = x[:, i].copy(), x[:, i + 1].copy()
        x[:, i] = np.where(sw, xn, xi)
        x[:, i + 1] = np.where(sw, xi - fact_s * xn, xn - fact_ns * xi)
        d[:, i] = new_d_i
        du[:, i] = new_du_i
        d[:, i + 1] = new_d_next
    d = np.where(d == 0, tiny, d)
    out = np.empty_like(x)
    out[:, n - 1] = x[:, n - 1] / d[:, n - 1]
    out[:, n - 2] = (x[:, n - 2] - du[:, n - 2] * out[:, n - 1]) / d[:, n - 2]
    for i in range(n - 3, -1, -1):
        out[:, i] = (x[:, i] - du[:, i] * out[:, i + 1] - du2[:, i] * out[:, i + 2]) / d[:, i]
    return out


def _inverse_iteration(a, b, lam, iters=3):
    n = a.size
    K = lam.size
    rng = np.random.default_rng(12345)
    x = rng.uniform(0.5, 1.5, size=(K, n))
    # clusters of close eigenvalues get reorthogonalized together
    gaps = np.diff(lam)
    cluster = np.concatenate([[0], np.cumsum(gaps > 1e-3)])
    shifts = lam + 2 * _EPS * np.maximum(1.0, np.abs(lam))
    for _ in range(iters):
        x = _solve_shifted(a, b, shifts, x)
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        for cid in np.unique(cluster):
            members = np.flatnonzero(cluster == cid)
            if members.size < 2:
                continue
            for p, m in enumerate(members):
                for q in members[:p]:
                    x[m] -= np.dot(x[q], x[m]) * x[q]
                x[m] /= np.linalg.norm(x[m])
    return x


@dataclass(frozen=True)
class SpectralData:
    """Sorted eigenvalues and norming constants (first eigenvector components)."""

    eigenvalues: np.ndarray
    norming_constants: np.ndarray
    vectors: np.ndarray | None = None   # columns are eigenvectors


def eigen_sym_tridiag(S: Tridiag, vectors: bool = True) -> SpectralData:
    """Eigenvalues by Sturm bisection, eigenvectors by inverse iteration.

    The matrix is scaled by its largest entry first. Exactly decoupled
    blocks (b_i == 0) are solved separately. Eigenvectors are normalized with
    first nonzero component positive, so the norming constants are >= 0.
    """
    if not S.is_symmetric or np.iscomplexobj(S.a):
        raise ValidationError("eigen_sym_tridiag needs a real symmetric tridiagonal matrix")
    a = np.asarray(S.a, dtype=float)
    b = np.asarray(S.b, dtype=float)
    n = a.size
    scale = S.norm_max()
    if scale == 0:
        return SpectralData(np.zeros(n), np.eye(n)[0], np.eye(n) if vectors else None)
    a_s, b_s = a / scale, b / scale

    splits = np.flatnonzero(b_s == 0) + 1
    bounds = np.concatenate([[0], splits, [n]])
    vals = np.empty(n)
    vecs = np.zeros((n, n))
    col = 0
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        ab, bb = a_s[lo:hi], b_s[lo:hi - 1]
        lam = ab.copy() if ab.size == 1 else _bisect_all(ab, bb, 4 * _EPS)
        vals[col:col + lam.size] = lam
        if vectors:
            x = _inverse_iteration(ab, bb, lam)
            vecs[lo:hi, col:col + lam.size] = x.T
        col += lam.size
    order = np.argsort(vals, kind="stable")
    vals = vals[order] * scale
    if not vectors:
        return SpectralData(vals, np.full(n, np.nan), None)
    vecs = vecs[:, order]
    for k in range(n):
        nz = np.flatnonzero(np.abs(vecs[:, k]) > 0)
        if nz.size and vecs[nz[0], k] < 0:
            vecs[:, k] = -vecs[:, k]
    return SpectralData(vals, vecs[0].copy(), vecs)


def polynomial_values(S: Tridiag, lam) -> np.ndarray:
    """Orthonormal-polynomial vectors p_0(lam) .. p_{n-1}(lam), p_0 = 1.

    b_j p_j = (lam - a_j) p_{j-1} - b_{j-1} p_{j-2}; for an eigenvalue this
    is the (unnormalized) eigenvector. Shape (n, len(lam)).
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    a = np.asarray(S.a, dtype=float)
    b = np.asarray(S.b, dtype=float)
    n = a.size
    P = np.empty((n, lam.size))
    P[0] = 1.0
    if n > 1:
        P[1] = (lam - a[0]) / b[0]
    for j in range(2, n):
        P[j] = ((lam - a[j - 1]) * P[j - 1] - b[j - 2] * P[j - 2]) / b[j - 1]
    return P


def normalizing_coefficients(S: Tridiag, eigenvalues) -> np.ndarray:
    """alpha_k = sum_j p_j(lam_k)^2, so that gamma_k^2 = 1 / alpha_k.

    Only valid for an irreducible Jacobi matrix (all b_i != 0). Small
    gamma_k come out with full relative accuracy, unlike eigenvector entries.
    """
    P = polynomial_values(S, eigenvalues)
    return np.sum(P * P, axis=0)


def golub_intervals(S: Tridiag) -> list[tuple[float, float]]:
    """[a_k - s_k, a_k + s_k] with s_k^2 = b_k^2 + b_{k-1}^2 (missing neighbour = 0)."""
    a = np.real(S.a).astype(float)
    b = np.abs(np.real(S.b).astype(float))
    s2 = np.zeros(a.size)
    s2[:-1] += b**2
    s2[1:] += b**2
    s = np.sqrt(s2)
    return [(float(x - r), float(x + r)) for x, r in zip(a, s)]


# ---------------------------------------------------------------------------
# the Jacobi operator of the cubic coefficient system
# ---------------------------------------------------------------------------

def jacobi_omega(n) -> np.ndarray | float:
    """omega_n = (n + 1) sqrt(n), n >= 1."""
    n_arr = np.asarray(n, dtype=float)
    if np.any(n_arr < 1):
        raise ValidationError("omega_n is defined for n >= 1")
    out = (n_arr + 1.0) * np.sqrt(n_arr)
    return float(out) if out.ndim == 0 else out


def jacobi_matrix(N: int) -> Tridiag:
    """Symmetric tridiagonal J on indices 1..N: zero diagonal, off-diagonals omega_1..omega_{N-1}."""
    if N < 1:
        raise ValidationError("N must be positive")
    off = jacobi_omega(np.arange(1, N)) if N > 1 else np.zeros(0)
    return Tridiag.symmetric(np.zeros(N), off)


@dataclass(frozen=True)
class JacobiKernelSolution:
    """Entries a~_1 .. a~_N of the solution of J a~ = 0 with a~_1 = 1 (entries[0] is a~_1)."""

    entries: np.ndarray

    @property
    def N(self) -> int:
        return self.entries.size

    def value(self, n: int) -> float:
        """a~_n, 1-based."""
        return float(self.entries[n - 1])

    def residual(self) -> float:
        """max |(J a~)_n| over rows 2..N-1, evaluated in extended precision."""
        N = self.N
        if N < 3:
            return 0.0
        x = self.entries.astype(np.longdouble)
        w = jacobi_omega(np.arange(1, N)).astype(np.longdouble)   # w[n-1] = omega_n
        n = np.arange(2, N)                                         # rows 2..N-1
        rows = w[n - 2] * x[n - 2] + w[n - 1] * x[n]
        return float(np.max(np.abs(rows)))

    def decay_profile(self, p_min: int, p_max: int) -> tuple[np.ndarray, np.ndarray]:
        """(p, |a~_{2p+1}| p^{3/4}) for p in [p_min, p_max]."""
        p = np.arange(p_min, p_max + 1)
        if 2 * p_max + 1 > self.N:
            raise ValidationError(f"need N >= {2 * p_max + 1} for p up to {p_max}")
        vals = np.abs(self.entries[2 * p]) * p.astype(float) ** 0.75
        return p, vals


def kernel_solution(N: int) -> JacobiKernelSolution:
    """a~_1 = 1, a~_2 = 0, a~_{n+1} = -(omega_{n-1} a~_{n-1}) / omega_n.

    That is a~_{n+1} = -(sqrt(n(n-1)) / (n+1)) a~_{n-1}; every even entry
    vanishes. The recursion runs in extended precision and is rounded once.
    """
    if N < 1:
        raise ValidationError("N must be positive")
    x = np.zeros(N, dtype=np.longdouble)
    x[0] = 1
    if N > 2:
        w = jacobi_omega(np.arange(1, N)).astype(np.longdouble)
        for n in range(2, N):            # fills a~_{n+1} = x[n]
            x[n] = -(w[n - 2] * x[n - 2]) / w[n - 1]
    return JacobiKernelSolution(x.astype(float))
