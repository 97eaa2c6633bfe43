"""Truncated Fock-space representation.

Vectors are coefficient arrays in the orthonormal basis e_n = z^n / sqrt(n!)
of the Bargmann space, so the space inner product is the plain l2 product.
Operators are finite sums of monomials a * A*^i A^j (A = d/dz, A* = mult. by z),
optionally plus the leading part S_k = A*^k A^k, compiled to banded matrices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError

# beyond this, sqrt(n!) is evaluated through log-gamma
_FACTORIAL_CUTOFF = 150


# ---------------------------------------------------------------------------
# vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoeffVec:
    """Coefficients (a_0 .. a_{N-1}) of a Bargmann-space element."""

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=complex).reshape(-1)
        if arr.size == 0:
            raise ValidationError("a CoeffVec needs at least one coefficient")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def dim(self) -> int:
        return self.coeffs.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    @classmethod
    def unit(cls, n: int, dim: int) -> "CoeffVec":
        if not 0 <= n < dim:
            raise ValidationError(f"basis index {n} outside [0, {dim})")
        v = np.zeros(dim, dtype=complex)
        v[n] = 1.0
        return cls(v)

    @classmethod
    def zeros(cls, dim: int) -> "CoeffVec":
        return cls(np.zeros(dim, dtype=complex))


def _as_array(v) -> np.ndarray:
    if isinstance(v, CoeffVec):
        return v.coeffs
    return np.asarray(v, dtype=complex).reshape(-1)


def inner(u, v) -> complex:
    """<u, v> = sum u_n conj(v_n): linear in u, conjugate-linear in v."""
    a, b = _as_array(u), _as_array(v)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.size} vs {b.size}")
    return complex(np.vdot(b, a))


# ---------------------------------------------------------------------------
# scalar building blocks
# ---------------------------------------------------------------------------

def log_sqrt_factorial(n) -> np.ndarray | float:
    """log sqrt(n!) for scalar or array n."""
    if np.isscalar(n):
        return 0.5 * math.lgamma(n + 1.0)
    n = np.asarray(n, dtype=float)
    return 0.5 * np.array([math.lgamma(x + 1.0) for x in n.ravel()]).reshape(n.shape)


def sqrt_factorial(n: int) -> float:
    if n < 0:
        raise ValidationError("negative factorial argument")
    if n <= _FACTORIAL_CUTOFF:
        return math.sqrt(math.factorial(n))
    return math.exp(0.5 * math.lgamma(n + 1.0))


def basis_eval(n: int, z) -> complex | np.ndarray:
    """e_n(z) = z^n / sqrt(n!); z may be an array."""
    if n < 0:
        raise ValidationError("basis index must be nonnegative")
    z = np.asarray(z, dtype=complex)
    if n <= _FACTORIAL_CUTOFF:
        out = z**n / math.sqrt(math.factorial(n))
    else:
        with np.errstate(divide="ignore"):
            out = np.where(z == 0, 0.0,
                           np.exp(n * np.log(np.where(z == 0, 1.0, z)) - 0.5 * math.lgamma(n + 1.0)))
    return complex(out) if out.ndim == 0 else out


def basis_table(N: int, z) -> np.ndarray:
    """Rows e_0(z) .. e_{N-1}(z), built by e_{n+1} = z e_n / sqrt(n+1)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty((N,) + z.shape, dtype=complex)
    out[0] = 1.0
    for n in range(1, N):
        out[n] = out[n - 1] * z / math.sqrt(n)
    return out


def evaluate(v, z) -> complex | np.ndarray:
    """phi(z) = sum a_n e_n(z) for a coefficient vector."""
    a = _as_array(v)
    z = np.asarray(z, dtype=complex)
    val = np.tensordot(a, basis_table(a.size, z), axes=(0, 0))
    return complex(val) if np.ndim(val) == 0 else val


def falling_factorial(n: int, k: int) -> int:
    """lambda_{n,k} = n (n-1) ... (n-k+1), exact; 0 when k > n, 1 when k = 0."""
    if n < 0 or k < 0:
        raise ValidationError("falling_factorial needs n, k >= 0")
    if k > n:
        return 0
    out = 1
    for r in range(k):
        out *= n - r
    return out


def falling_factorials(n, k: int) -> np.ndarray:
    """Vectorized float lambda_{n,k}; a zero factor appears automatically when k > n."""
    n = np.asarray(n, dtype=float)
    out = np.ones_like(n)
    for r in range(k):
        out = out * (n - r)
    return np.where(n >= k, out, 0.0)


def monomial_entry(n: int, i: int, j: int) -> float:
    """Coefficient of e_{n+i-j} in A*^i A^j e_n."""
    if j > n:
        return 0.0
    return math.sqrt(falling_factorial(n + i - j, i) * falling_factorial(n, j))


def monomial_entries(n, i: int, j: int) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    vals = falling_factorials(n + i - j, i) * falling_factorials(n, j)
    return np.where(n >= j, np.sqrt(np.maximum(vals, 0.0)), 0.0)


# ---------------------------------------------------------------------------
# operator specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonomialTerm:
    """a * A*^i A^j."""

    i: int
    j: int
    a: complex = 1.0

    def __post_init__(self):
        if int(self.i) != self.i or int(self.j) != self.j or self.i < 0 or self.j < 0:
            raise ValidationError(f"monomial powers must be nonnegative integers, got ({self.i}, {self.j})")
        object.__setattr__(self, "i", int(self.i))
        object.__setattr__(self, "j", int(self.j))
        object.__setattr__(self, "a", complex(self.a))

    @property
    def offset(self) -> int:
        """Row minus column of the band this term occupies."""
        return self.i - self.j


@dataclass(frozen=True)
class HamiltonianSpec:
    """S_k + sum of monomial terms. k = 0 means no leading part."""

    k: int = 0
    terms: tuple[MonomialTerm, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValidationError(f"k must be a nonnegative integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        terms = tuple(t if isinstance(t, MonomialTerm) else MonomialTerm(*t) for t in self.terms)
        object.__setattr__(self, "terms", terms)

    @property
    def m(self) -> int:
        """Largest total degree i + j among the terms (0 if there are none)."""
        return max((t.i + t.j for t in self.terms), default=0)

    @property
    def dominated(self) -> bool:
        return self.k > 0 and self.m <= 2 * self.k - 1

    @property
    def trace_admissible(self) -> bool:
        return self.k > 0 and self.m <= 2 * self.k - 3

    @property
    def bandwidth(self) -> int:
        return max((abs(t.offset) for t in self.terms), default=0)

    def perturbation(self) -> "HamiltonianSpec":
        """The same terms without the leading S_k part."""
        return HamiltonianSpec(0, self.terms)

    def adjoint(self) -> "HamiltonianSpec":
        return HamiltonianSpec(self.k, tuple(MonomialTerm(t.j, t.i, np.conj(t.a)) for t in self.terms))

    def to_dict(self) -> dict:
        return {"k": self.k,
                "terms": [{"i": t.i, "j": t.j, "re": float(t.a.real), "im": float(t.a.imag)}
                          for t in self.terms]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping) -> "HamiltonianSpec":
        try:
            k = d.get("k", 0)
            terms = [MonomialTerm(t["i"], t["j"], complex(t.get("re", 0.0), t.get("im", 0.0)))
                     for t in d.get("terms", [])]
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed spec: {exc}") from exc
        return cls(k, tuple(terms))

    @classmethod
    def from_json(cls, text: str) -> "HamiltonianSpec":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"spec is not valid JSON: {exc}") from exc


def number_spec() -> HamiltonianSpec:
    return HamiltonianSpec(1, ())


def ladder_spec(creation: int = 0, annihilation: int = 0, a: complex = 1.0) -> HamiltonianSpec:
    return HamiltonianSpec(0, (MonomialTerm(creation, annihilation, a),))


# ---------------------------------------------------------------------------
# banded matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BandedMatrix:
    """Square matrix stored by diagonals.

    ``diagonals[d][c]`` is the entry at row c + d, column c; positions whose
    row falls outside [0, N) hold zero.
    """

    dim: int
    diagonals: dict

    @property
    def lower(self) -> int:
        return max([d for d in self.diagonals if d > 0], default=0)

    @property
    def upper(self) -> int:
        return max([-d for d in self.diagonals if d < 0], default=0)

    @property
    def bandwidth(self) -> int:
        return max(self.lower, self.upper)

    def diagonal(self, d: int) -> np.ndarray:
        """Entries (c + d, c) for the valid columns c."""
        v = self.diagonals.get(d)
        lo, hi = max(0, -d), min(self.dim, self.dim - d)
        if v is None:
            return np.zeros(max(hi - lo, 0), dtype=complex)
        return v[lo:hi]

    def to_dense(self) -> np.ndarray:
        N = self.dim
        out = np.zeros((N, N), dtype=complex)
        cols = np.arange(N)
        for d, v in self.diagonals.items():
            ok = (cols + d >= 0) & (cols + d < N)
            out[cols[ok] + d, cols[ok]] = v[ok]
        return out

    def matvec(self, x) -> np.ndarray:
        x = _as_array(x)
        if x.size != self.dim:
            raise ValidationError(f"dimension mismatch: matrix {self.dim}, vector {x.size}")
        out = np.zeros(self.dim, dtype=complex)
        for d, v in self.diagonals.items():
            if abs(d) >= self.dim:
                continue
            if d >= 0:
                out[d:] += v[:self.dim - d] * x[:self.dim - d]
            else:
                out[:self.dim + d] += v[-d:] * x[-d:]
        return out

    def adjoint(self) -> "BandedMatrix":
        """Conjugate transpose, still stored by diagonals."""
        N = self.dim
        out = {}
        for d, v in self.diagonals.items():
            w = np.zeros(N, dtype=complex)
            if d >= 0:
                w[d:] = np.conj(v[:N - d])
            else:
                w[:N + d] = np.conj(v[-d:])
            out[-d] = w
        return BandedMatrix(N, out)

    def to_banded_storage(self) -> tuple[tuple[int, int], np.ndarray]:
        """(l, u), ab in the LAPACK general-band layout used by scipy.linalg.solve_banded."""
        lo, up = self.lower, self.upper
        ab = np.zeros((lo + up + 1, self.dim), dtype=complex)
        N = self.dim
        for d, v in self.diagonals.items():
            # entry (c + d, c) goes to ab[up + d, c]
            ab[up + d, :] = v
            if d > 0:
                ab[up + d, N - d:] = 0.0
            elif d < 0:
                ab[up + d, :-d] = 0.0
        return (lo, up), ab


def build_matrix(spec: HamiltonianSpec, N: int) -> BandedMatrix:
    """Galerkin truncation P_N H P_N of S_k + sum a A*^i A^j on span{e_0..e_{N-1}}."""
    if N < 1:
        raise ValidationError("truncation dimension must be at least 1")
    cols = np.arange(N, dtype=float)
    diags: dict[int, np.ndarray] = {}
    for t in spec.terms:
        if t.a == 0:
            continue
        d = t.offset
        vals = t.a * monomial_entries(cols, t.i, t.j)
        rows = np.arange(N) + d
        vals = np.where((rows >= 0) & (rows < N), vals, 0.0)
        diags[d] = diags.get(d, 0.0) + vals
    if spec.k > 0:
        diags[0] = diags.get(0, 0.0) + falling_factorials(cols, spec.k)
    if not diags:
        diags[0] = np.zeros(N, dtype=complex)
    diags = {d: np.asarray(v, dtype=complex) for d, v in diags.items()}
    return BandedMatrix(N, diags)


def apply_op(spec: HamiltonianSpec, v) -> np.ndarray:
    """Matrix-free action of the truncated operator on a coefficient vector."""
    x = _as_array(v)
    N = x.size
    out = np.zeros(N, dtype=complex)
    n = np.arange(N)
    for t in spec.terms:
        if t.a == 0:
            continue
        d = t.offset
        src = n[(n + d >= 0) & (n + d < N)]
        out[src + d] += t.a * monomial_entries(src, t.i, t.j) * x[src]
    if spec.k > 0:
        out += falling_factorials(n, spec.k) * x
    return out


def creation(v) -> np.ndarray:
    """A* on the truncation (the top coefficient is pushed out)."""
    return apply_op(ladder_spec(1, 0), v)


def annihilation(v) -> np.ndarray:
    return apply_op(ladder_spec(0, 1), v)


def pad(v, extra: int = 1) -> np.ndarray:
    """Append zeros so that creation terms stay inside the truncation."""
    return np.concatenate([_as_array(v), np.zeros(extra, dtype=complex)])


def combine_terms(terms: Iterable[MonomialTerm]) -> tuple[MonomialTerm, ...]:
    """Merge repeated (i, j) pairs and drop zero coefficients."""
    acc: dict[tuple[int, int], complex] = {}
    for t in terms:
        acc[(t.i, t.j)] = acc.get((t.i, t.j), 0.0) + t.a
    return tuple(MonomialTerm(i, j, a) for (i, j), a in acc.items() if a != 0)


def spec_from_terms(k: int, terms: Sequence[tuple[int, int, complex]]) -> HamiltonianSpec:
    return HamiltonianSpec(k, combine_terms(MonomialTerm(i, j, a) for i, j, a in terms))
