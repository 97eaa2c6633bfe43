"""Segal-Bargmann transform by quadrature, Hermite functions, Gabor/FBI links.

Line integrals use Gauss-Hermite rules with weight e^{-u^2}; integrands are
re-expanded by e^{u^2} inside a single exponential so nothing overflows.
Plane integrals use a tensor Gauss-Hermite grid in (x, y).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import fock_core
from .errors import ValidationError
from .tridiag import Tridiag, eigen_sym_tridiag, normalizing_coefficients

_PI_QUARTER = math.pi ** -0.25
DEFAULT_ORDER = 64


class GridWarning(UserWarning):
    """The integrand is not negligible at the edge of a quadrature grid."""


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self) -> int:
        return self.nodes.size


def _hermite_poly_normalized(Q: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal Hermite polynomials p_Q(x), p_{Q-1}(x) for weight e^{-x^2}/sqrt(pi)."""
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    for j in range(Q):
        p_next = (x * p - math.sqrt(j / 2.0) * p_prev) / math.sqrt((j + 1) / 2.0)
        p_prev, p = p, p_next
    return p, p_prev


def gauss_hermite(Q: int = DEFAULT_ORDER) -> QuadratureRule:
    """Gauss-Hermite rule for weight e^{-u^2}, exact up to degree 2Q - 1.

    Nodes are the eigenvalues of the Jacobi matrix (zero diagonal,
    off-diagonals sqrt(j/2)), polished by Newton steps on the orthonormal
    polynomial p_Q. Weights are sqrt(pi) / sum_j p_j(node)^2, which keeps
    the tiny outer weights accurate to full relative precision.
    """
    if Q < 1:
        raise ValidationError("quadrature order must be at least 1")
    if Q == 1:
        return QuadratureRule(np.zeros(1), np.array([math.sqrt(math.pi)]))
    J = Tridiag.symmetric(np.zeros(Q), np.sqrt(np.arange(1, Q) / 2.0))
    x = eigen_sym_tridiag(J, vectors=False).eigenvalues
    for _ in range(2):
        pQ, pQm1 = _hermite_poly_normalized(Q, x)
        dx = pQ / (math.sqrt(2.0 * Q) * pQm1)
        x = x - dx
    x = 0.5 * (x - x[::-1])
    w = math.sqrt(math.pi) / normalizing_coefficients(J, x)
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(x, w)


def integrate_line(g: Callable[[np.ndarray], np.ndarray], rule: QuadratureRule | None = None):
    """Integral over the real line of g, which is expected to decay like a Gaussian."""
    rule = rule or gauss_hermite()
    u = rule.nodes
    vals = g(u)
    return np.tensordot(rule.weights * np.exp(u * u), vals, axes=(0, -1)) if np.ndim(vals) > 1 \
        else np.sum(rule.weights * np.exp(u * u) * vals)


@dataclass(frozen=True)
class TensorGrid:
    """Tensor rule for the plane with weight e^{-gamma |z|^2}."""

    points: np.ndarray      # complex, shape (Q, Q)
    weights: np.ndarray     # shape (Q, Q), already including the 1/gamma scaling
    gamma: float
    edge: np.ndarray        # boolean mask of the outermost ring

    @property
    def radius(self) -> float:
        return float(np.max(np.abs(self.points.real)))


def tensor_grid(Q: int = DEFAULT_ORDER, gamma: float = 1.0) -> TensorGrid:
    if gamma <= 0:
        raise ValidationError("grid weight exponent must be positive")
    r = gauss_hermite(Q)
    s = r.nodes / math.sqrt(gamma)
    w = r.weights / math.sqrt(gamma)
    X, Y = np.meshgrid(s, s, indexing="ij")
    W = np.outer(w, w)
    edge = np.zeros((Q, Q), dtype=bool)
    edge[[0, -1], :] = True
    edge[:, [0, -1]] = True
    return TensorGrid(X + 1j * Y, W, gamma, edge)


def _grid_sum(grid: TensorGrid, log_amp: np.ndarray, factor: np.ndarray, what: str):
    """sum W exp(gamma|z|^2 + log_amp) factor over the last two axes, with an edge check."""
    z = grid.points
    vals = grid.weights * np.exp(grid.gamma * np.abs(z) ** 2 + log_amp) * factor
    total = np.sum(vals, axis=(-2, -1))
    scale = np.sum(np.abs(vals), axis=(-2, -1))
    edge = np.max(np.abs(vals[..., grid.edge]), axis=-1)
    if np.any(edge > 1e-10 * np.maximum(scale, 1e-300)):
        warnings.warn(f"{what}: integrand still significant at grid radius {grid.radius:.3g}",
                      GridWarning, stacklevel=3)
    return total


# ---------------------------------------------------------------------------
# Hermite functions
# ---------------------------------------------------------------------------

def hermite_table(nmax: int, u) -> np.ndarray:
    """h_0(u) .. h_nmax(u), orthonormal on the line.

    h_0 = pi^{-1/4} e^{-u^2/2};
    h_{n+1} = sqrt(2/(n+1)) u h_n - sqrt(n/(n+1)) h_{n-1}.
    """
    u = np.asarray(u, dtype=float)
    out = np.empty((nmax + 1,) + u.shape)
    out[0] = _PI_QUARTER * np.exp(-0.5 * u * u)
    if nmax >= 1:
        out[1] = math.sqrt(2.0) * u * out[0]
    for n in range(1, nmax):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * u * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_eval(n: int, u):
    if n < 0:
        raise ValidationError("Hermite index must be nonnegative")
    val = hermite_table(n, u)[n]
    return float(val) if np.ndim(val) == 0 else val


def hermite_derivative_table(nmax: int, u) -> np.ndarray:
    """h_n' = sqrt(n/2) h_{n-1} - sqrt((n+1)/2) h_{n+1}."""
    h = hermite_table(nmax + 1, u)
    out = np.empty((nmax + 1,) + np.shape(u))
    for n in range(nmax + 1):
        lower = math.sqrt(n / 2.0) * h[n - 1] if n > 0 else 0.0
        out[n] = lower - math.sqrt((n + 1) / 2.0) * h[n + 1]
    return out


def hermite_second_derivative(n: int, u):
    """h_n'' from applying the derivative ladder twice."""
    d = hermite_derivative_table(n + 1, u)
    lower = math.sqrt(n / 2.0) * d[n - 1] if n > 0 else 0.0
    return lower - math.sqrt((n + 1) / 2.0) * d[n + 1]


@dataclass(frozen=True)
class HermiteSeries:
    """f = sum c_n h_n, usable wherever a line function is expected."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex).reshape(-1))

    def __call__(self, u):
        return np.tensordot(self.coeffs, hermite_table(self.coeffs.size - 1, u), axes=(0, 0))

    def times_u(self) -> "HermiteSeries":
        """u f, using u h_n = sqrt((n+1)/2) h_{n+1} + sqrt(n/2) h_{n-1}."""
        c = self.coeffs
        out = np.zeros(c.size + 1, dtype=complex)
        n = np.arange(c.size)
        out[n + 1] += np.sqrt((n + 1) / 2.0) * c
        out[n[1:] - 1] += np.sqrt(n[1:] / 2.0) * c[1:]
        return HermiteSeries(out)

    def derivative(self) -> "HermiteSeries":
        c = self.coeffs
        out = np.zeros(c.size + 1, dtype=complex)
        n = np.arange(c.size)
        out[n + 1] -= np.sqrt((n + 1) / 2.0) * c
        out[n[1:] - 1] += np.sqrt(n[1:] / 2.0) * c[1:]
        return HermiteSeries(out)


# ---------------------------------------------------------------------------
# kernels and the transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransformKernel:
    """Gaussian transform kernel.

    alpha = None is the classical kernel
        pi^{-1/4} exp(-u^2/2 + sqrt(2) u z - z^2/2),
    mapping onto the space with measure (1/pi) e^{-|z|^2}. A positive alpha gives
        (2 alpha/pi)^{1/4} exp(-alpha u^2 + 2 alpha u z - (alpha/2) z^2),
    mapping onto the space with measure (alpha/pi) e^{-alpha |z|^2}.
    """

    alpha: float | None = None

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0:
            raise ValidationError("alpha must be positive")

    @property
    def classical(self) -> bool:
        return self.alpha is None

    @property
    def constant(self) -> float:
        if self.classical:
            return _PI_QUARTER
        return (2.0 * self.alpha / math.pi) ** 0.25

    @property
    def measure_alpha(self) -> float:
        """alpha of the target Gaussian measure (1 for the classical kernel)."""
        return 1.0 if self.classical else float(self.alpha)

    def log_kernel(self, z, u):
        """Exponent of the kernel without the constant; broadcasts z against u."""
        z = np.asarray(z, dtype=complex)
        u = np.asarray(u, dtype=float)
        if self.classical:
            return -0.5 * u * u + math.sqrt(2.0) * u * z - 0.5 * z * z
        a = self.alpha
        return -a * u * u + 2.0 * a * u * z - 0.5 * a * z * z

    def basis_norms(self, N: int) -> np.ndarray:
        """sqrt(n!) / sqrt(alpha^n): monomial z^n divided by this is orthonormal."""
        n = np.arange(N)
        a = self.measure_alpha
        return np.exp(fock_core.log_sqrt_factorial(n) - 0.5 * n * math.log(a))


CLASSICAL = TransformKernel()


def bargmann_kernel(kern: TransformKernel, z, u):
    val = kern.constant * np.exp(kern.log_kernel(z, u))
    return complex(val) if np.ndim(val) == 0 else val


def kernel_gram(kern: TransformKernel, z, w, rule: QuadratureRule | None = None) -> complex:
    """Integral of K(z,u) conj(K(w,u)) du; exactly e^{z conj(w)} for the classical kernel."""
    rule = rule or gauss_hermite()
    u = rule.nodes
    expo = u * u + kern.log_kernel(z, u) + np.conj(kern.log_kernel(w, u))
    return complex(kern.constant ** 2 * np.sum(rule.weights * np.exp(expo)))


def _line_values(f, u):
    vals = np.asarray(f(u), dtype=complex)
    if vals.shape != u.shape:
        raise ValidationError("line function must return one value per node")
    if not np.all(np.isfinite(vals)):
        raise ValidationError("line function is not finite at every quadrature node")
    return vals


def transform(f, z, rule: QuadratureRule | None = None, kern: TransformKernel = CLASSICAL):
    """Bargmann transform of f at z (scalar or array).

    f is a callable on the line or a ``HermiteSeries``. For Hermite input with
    the classical kernel the result is the exact pass-through sum c_n e_n(z).
    """
    z_arr = np.asarray(z, dtype=complex)
    if isinstance(f, HermiteSeries) and kern.classical:
        out = fock_core.evaluate(f.coeffs, z_arr)
    elif isinstance(f, HermiteSeries) and kern.alpha == 0.5:
        out = fock_core.evaluate(f.coeffs, z_arr / math.sqrt(2.0))
    else:
        rule = rule or gauss_hermite()
        u = rule.nodes
        fv = _line_values(f, u)
        expo = u * u + kern.log_kernel(z_arr[..., None], u)
        out = kern.constant * np.sum(rule.weights * np.exp(expo) * fv, axis=-1)
    return complex(out) if np.ndim(out) == 0 else out


def transform_samples(u, values, z, kern: TransformKernel = CLASSICAL):
    """Transform of a sampled function (trapezoid rule on the given abscissae)."""
    u = np.asarray(u, dtype=float)
    values = np.asarray(values, dtype=complex)
    if u.ndim != 1 or u.shape != values.shape or u.size < 2:
        raise ValidationError("samples need matching 1-D u and value arrays with at least 2 points")
    if not np.all(np.isfinite(values)):
        raise ValidationError("sample values must be finite")
    order = np.argsort(u)
    u, values = u[order], values[order]
    z_arr = np.asarray(z, dtype=complex)
    integrand = kern.constant * np.exp(kern.log_kernel(z_arr[..., None], u)) * values
    out = np.trapezoid(integrand, u, axis=-1)
    return complex(out) if np.ndim(out) == 0 else out


def taylor_coefficients(F: Callable, N: int, kern: TransformKernel = CLASSICAL,
                        radius: float | None = None, samples: int | None = None) -> np.ndarray:
    """Coefficients of an entire function in the orthonormal basis of the target space.

    Samples F on a circle and reads off the Taylor coefficients with an FFT,
    then rescales z^n by the basis norms. The default radius sqrt(N / (2a))
    balances rounding noise (amplified by sqrt(n!)/r^n) against aliasing.
    """
    if radius is None:
        radius = max(1.0, math.sqrt(N / (2.0 * kern.measure_alpha)))
    M = samples or max(128, 8 * N)
    if M < N:
        raise ValidationError("need at least N samples on the circle")
    z = radius * np.exp(2j * math.pi * np.arange(M) / M)
    vals = np.asarray(F(z), dtype=complex)
    c = np.fft.fft(vals)[:N] / M
    n = np.arange(N)
    return c / radius**n * kern.basis_norms(N)


def transform_coefficients(f, N: int, rule: QuadratureRule | None = None,
                           kern: TransformKernel = CLASSICAL, radius: float | None = None) -> np.ndarray:
    """Coefficient vector of the transform of f, through quadrature plus circle sampling."""
    rule = rule or gauss_hermite()
    if isinstance(f, HermiteSeries):
        g = f
        f = lambda u: g(u)            # force the quadrature path
    return taylor_coefficients(lambda z: transform(f, z, rule, kern), N, kern, radius)


# ---------------------------------------------------------------------------
# adjoint and projection
# ---------------------------------------------------------------------------

def _plane_function(phi, kern: TransformKernel):
    """Callable on complex arrays from a callable or a coefficient vector."""
    if callable(phi):
        return phi
    coeffs = np.asarray(phi.coeffs if isinstance(phi, fock_core.CoeffVec) else phi, dtype=complex)
    norms = kern.basis_norms(coeffs.size)

    def evaluate(z):
        z = np.asarray(z, dtype=complex)
        acc = np.zeros(z.shape, dtype=complex)
        for n in range(coeffs.size - 1, -1, -1):      # Horner in z
            acc = acc * z + coeffs[n] / norms[n]
        return acc
    return evaluate


def adjoint_transform(kern: TransformKernel, phi, u, grid: TensorGrid | None = None):
    """(B* phi)(u) = integral of conj(K(z,u)) phi(z) d mu(z) over the plane.

    d mu = (a/pi) e^{-a|z|^2} dx dy with a the target-measure exponent; for the
    alpha-family the constant in front is 2^{1/4} alpha^{5/4} / pi^{5/4}.
    """
    a = kern.measure_alpha
    grid = grid or tensor_grid(DEFAULT_ORDER, a / 2.0)
    f = _plane_function(phi, kern)
    z = grid.points
    fz = np.asarray(f(z), dtype=complex)
    u_arr = np.asarray(u, dtype=float)
    uu = u_arr.reshape(-1, 1, 1)
    log_amp = np.conj(kern.log_kernel(z[None], uu)) - a * np.abs(z[None]) ** 2
    out = (a / math.pi) * kern.constant * _grid_sum(grid, log_amp, fz[None], "adjoint_transform")
    out = out.reshape(u_arr.shape)
    return complex(out) if out.ndim == 0 else out


def projection_kernel_apply(phi, z, alpha: float = 1.0, grid: TensorGrid | None = None):
    """(alpha/pi) integral of e^{alpha z conj(w)} phi(w) e^{-alpha |w|^2} over the plane."""
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    grid = grid or tensor_grid(DEFAULT_ORDER, alpha / 2.0)
    kern = TransformKernel(alpha)
    f = _plane_function(phi, kern)
    w = grid.points
    fw = np.asarray(f(w), dtype=complex)
    z_arr = np.asarray(z, dtype=complex)
    zz = z_arr.reshape(-1, 1, 1)
    log_amp = alpha * zz * np.conj(w[None]) - alpha * np.abs(w[None]) ** 2
    out = (alpha / math.pi) * _grid_sum(grid, log_amp, fw[None], "projection_kernel_apply")
    out = out.reshape(z_arr.shape)
    return complex(out) if out.ndim == 0 else out


def bargmann_gram(N: int, grid: TensorGrid | None = None) -> np.ndarray:
    """<e_n, e_m> under (1/pi) e^{-|z|^2} dx dy, computed on a tensor grid."""
    grid = grid or tensor_grid(max(N + 1, 16), 1.0)
    E = fock_core.basis_table(N, grid.points)                    # (N, Q, Q)
    W = grid.weights * np.exp(grid.gamma * np.abs(grid.points) ** 2 - np.abs(grid.points) ** 2) / math.pi
    return np.einsum("nij,mij,ij->nm", E, np.conj(E), W)


def kernel_vector(z: complex, N: int) -> np.ndarray:
    """Coefficients of K(., z) = e^{. conj(z)} truncated at degree N - 1."""
    return np.conj(fock_core.basis_table(N, complex(z)))


# ---------------------------------------------------------------------------
# Gabor / FBI
# ---------------------------------------------------------------------------

def gabor_window(p: float, q: float, u):
    u = np.asarray(u, dtype=float)
    return _PI_QUARTER * np.exp(1j * p * u - 0.5 * (u - q) ** 2)


def gabor_transform(f, p: float, q: float, rule: QuadratureRule | None = None) -> complex:
    """W(f)(p, q) = integral of conj(window_{p,q}(u)) f(u) du."""
    rule = rule or gauss_hermite()
    u = rule.nodes
    fv = _line_values(f, u)
    expo = u * u - 1j * p * u - 0.5 * (u - q) ** 2
    return complex(_PI_QUARTER * np.sum(rule.weights * np.exp(expo) * fv))


def fbi_transform(f, p: float, q: float, rule: QuadratureRule | None = None) -> complex:
    """Integral of e^{-ipu} e^{-(u-q)^2/2} f(u) du (= pi^{1/4} times the Gabor transform)."""
    return math.pi ** 0.25 * gabor_transform(f, p, q, rule)


def gabor_point(p: float, q: float) -> complex:
    """Point of the plane matched to the phase-space point (p, q)."""
    return complex(q, -p) / math.sqrt(2.0)


def bargmann_from_gabor(f, p: float, q: float, rule: QuadratureRule | None = None) -> complex:
    """Transform of f at gabor_point(p, q), obtained from the Gabor transform:
    e^{(p^2 + q^2 + 2ipq)/4} W(f)(p, q)."""
    return complex(np.exp((p * p + q * q + 2j * p * q) / 4.0)) * gabor_transform(f, p, q, rule)


# ---------------------------------------------------------------------------
# misc checks used by tests and scripts
# ---------------------------------------------------------------------------

def hermite_operator_expectation(n: int, rule: QuadratureRule | None = None) -> float:
    """<-h_n'' + (1 + u^2) h_n, h_n> by quadrature."""
    rule = rule or gauss_hermite()
    u = rule.nodes
    h = hermite_table(n, u)[n]
    Lh = -hermite_second_derivative(n, u) + (1.0 + u * u) * h
    return float(np.sum(rule.weights * np.exp(u * u) * Lh * h))
