"""Command-line front end.

Subcommands: spectrum, trace, transform, evolve, jacobi. Output is CSV (or
JSON) with floats written at 17 significant digits, so identical inputs
give byte-identical files. Exit status: 0 success, 2 validation error,
3 numerical failure.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import click
import numpy as np

from .errors import NumericalError, ValidationError
from .fock_core import CoeffVec, HamiltonianSpec

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

OPERATION = {
    "spectrum": "spectra.eigen_complex",
    "trace": "trace.regularized_trace_check",
    "transform": "xform.transform",
    "evolve": "evolve.rk4_evolve",
    "jacobi": "tridiag.kernel_solution",
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    spec: str | None = None
    dim: int | None = None
    k: int | None = None
    l: int | None = None
    contours: int = 10
    first: int | None = None
    samples: int = 256
    t: float = 1.0
    dt: float = 1e-3
    sign: float = 1.0
    stride: int | None = None
    alpha: float | None = None
    order: int = 64
    initial: str | None = None
    samples_csv: str | None = None
    hermite: int | None = None
    kernel_solution: int | None = None
    jacobi_spectrum: int | None = None
    double_check: bool = False
    enforce: bool = True
    output: str | None = None
    fmt: str = "csv"

    def validate(self):
        if self.command not in OPERATION:
            raise ValidationError(f"unknown command {self.command!r}")
        for name in ("dim", "k", "l", "contours", "samples", "order", "stride",
                     "kernel_solution", "jacobi_spectrum"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValidationError(f"--{name.replace('_', '-')} must be positive")
        if self.dt <= 0 or self.t < 0:
            raise ValidationError("--dt must be positive and --t nonnegative")
        if self.fmt not in ("csv", "json"):
            raise ValidationError("--format must be csv or json")


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in (resources.files("focknum") / "presets").iterdir() if p.name.endswith(".json"))


def load_spec(ref: str | None) -> HamiltonianSpec:
    """Spec from a JSON file path or a preset name."""
    if ref is None:
        raise ValidationError("--spec is required")
    path = Path(ref)
    if path.is_file():
        return HamiltonianSpec.from_json(path.read_text())
    if ref in preset_names():
        return HamiltonianSpec.from_json((resources.files("focknum") / "presets" / (ref + ".json")).read_text())
    raise ValidationError(f"spec {ref!r} is neither a file nor a preset ({', '.join(preset_names())})")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x) + 0.0, ".17g")


def _read_table(path: str) -> tuple[list[str], np.ndarray]:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    header: list[str] = []
    if rows and not _is_number(rows[0][0]):
        header, rows = [h.strip() for h in rows[0]], rows[1:]
    try:
        data = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"non-numeric entry in {path}: {exc}") from exc
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValidationError(f"{path} holds no rows")
    return header, data


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# subcommand bodies: each returns (columns, rows)
# ---------------------------------------------------------------------------

def _spectrum(cfg: RunConfig):
    from .spectra import spectrum
    if cfg.dim is None:
        raise ValidationError("--dim is required")
    res = spectrum(load_spec(cfg.spec), cfg.dim, double_check=cfg.double_check)
    cc = res.converged_count
    rows = [(i, v.real, v.imag, (cc is None) or i < cc) for i, v in enumerate(res.eigenvalues)]
    return ["index", "re", "im", "converged"], rows


def _trace(cfg: RunConfig):
    from .trace import TraceConfig, regularized_trace_check
    if cfg.k is None or cfg.l is None:
        raise ValidationError("--k and --l are required")
    spec = load_spec(cfg.spec)
    if spec.k not in (0, cfg.k):
        raise ValidationError(f"spec leading power {spec.k} differs from --k {cfg.k}")
    B = spec.perturbation()
    tc = TraceConfig(k=cfg.k, m=B.m, l=cfg.l, N=cfg.dim or 400, contour_first=cfg.first,
                     contour_count=cfg.contours, contour_samples=cfg.samples,
                     enforce_admissibility=cfg.enforce)
    ts = regularized_trace_check(tc, B)
    rows = [(s, r, v.real, v.imag) for s, r, v in zip(ts.indices, ts.radii, ts.values)]
    return ["s", "r_s", "re_value", "im_value"], rows


def _transform(cfg: RunConfig):
    from .xform import (HermiteSeries, TransformKernel, gauss_hermite, taylor_coefficients,
                        transform_coefficients, transform_samples)
    N = cfg.dim or 16
    kern = TransformKernel(cfg.alpha)
    if cfg.hermite is not None:
        c = np.zeros(cfg.hermite + 1)
        c[-1] = 1.0
        coeffs = transform_coefficients(HermiteSeries(c), N, gauss_hermite(cfg.order), kern)
    elif cfg.samples_csv is not None:
        _, data = _read_table(cfg.samples_csv)
        if data.shape[1] < 2:
            raise ValidationError("sample CSV needs columns u,re[,im]")
        u = data[:, 0]
        f = data[:, 1] + (1j * data[:, 2] if data.shape[1] > 2 else 0.0)
        coeffs = taylor_coefficients(lambda z: transform_samples(u, f, z, kern), N, kern)
    else:
        raise ValidationError("give --samples-csv or --hermite")
    return ["n", "re", "im"], [(n, c.real, c.imag) for n, c in enumerate(coeffs)]


def _evolve(cfg: RunConfig):
    from .evolve import EvolutionProblem, rk4_evolve
    spec = load_spec(cfg.spec)
    if cfg.initial is None:
        raise ValidationError("--initial is required")
    header, data = _read_table(cfg.initial)
    if "n" in header:
        idx = data[:, header.index("n")].astype(int)
        re = data[:, header.index("re")]
        im = data[:, header.index("im")] if "im" in header else np.zeros(len(data))
    else:
        idx = np.arange(len(data))
        re = data[:, 0]
        im = data[:, 1] if data.shape[1] > 1 else np.zeros(len(data))
    if np.any(idx < 0):
        raise ValidationError("initial indices must be nonnegative")
    N = max(cfg.dim or 0, int(idx.max()) + 1)
    a = np.zeros(N, dtype=complex)
    a[idx] = re + 1j * im
    res = rk4_evolve(EvolutionProblem(spec, CoeffVec(a), cfg.t, cfg.dt, cfg.sign), stride=cfg.stride)
    if res.flagged:
        click.echo(f"warning: truncation audit flagged (top-decile mass {res.top_mass:.3g})", err=True)
    rows = [(t, n, v.real, v.imag) for t, snap in zip(res.times, res.snapshots) for n, v in enumerate(snap)]
    return ["t", "n", "re", "im"], rows


def _jacobi(cfg: RunConfig):
    from .tridiag import eigen_sym_tridiag, jacobi_matrix, kernel_solution
    if cfg.kernel_solution is not None:
        sol = kernel_solution(cfg.kernel_solution)
        return ["n", "value"], [(n + 1, v) for n, v in enumerate(sol.entries)]
    if cfg.jacobi_spectrum is not None:
        sd = eigen_sym_tridiag(jacobi_matrix(cfg.jacobi_spectrum), vectors=True)
        return ["index", "eigenvalue", "norming_constant"], \
            [(i, e, g) for i, (e, g) in enumerate(zip(sd.eigenvalues, sd.norming_constants))]
    raise ValidationError("give --kernel-solution N or --spectrum N")


BODIES = {"spectrum": _spectrum, "trace": _trace, "transform": _transform,
          "evolve": _evolve, "jacobi": _jacobi}


def render(columns: list[str], rows, fmt: str) -> str:
    if fmt == "json":
        recs = [{c: (_fmt(v) if not isinstance(v, (bool, np.bool_)) else bool(v)) for c, v in zip(columns, r)}
                for r in rows]
        return json.dumps(recs, indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def run(cfg: RunConfig) -> int:
    """Execute one subcommand; returns the process exit status."""
    op = OPERATION.get(cfg.command, cfg.command)
    try:
        cfg.validate()
        columns, rows = BODIES[cfg.command](cfg)
        text = render(columns, rows, cfg.fmt)
    except ValidationError as exc:
        click.echo(f"{op}: validation error: {exc}", err=True)
        return EXIT_VALIDATION
    except NumericalError as exc:
        click.echo(f"{op}: numerical failure: {exc}", err=True)
        return EXIT_NUMERICAL
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        click.echo(text, nl=False)
    return EXIT_OK


# ---------------------------------------------------------------------------
# click wiring
# ---------------------------------------------------------------------------

_output = [click.option("--output", "-o", default=None, help="output file (default stdout)"),
           click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")]


def _with_output(f):
    for opt in reversed(_output):
        f = opt(f)
    return f


@click.group()
def main():
    """Truncated Fock-space numerics."""


@main.command()
@click.option("--spec", required=True, help="spec JSON path or preset name")
@click.option("--dim", type=int, required=True)
@click.option("--double-check", is_flag=True, help="compare with the 2N truncation")
@_with_output
def spectrum(spec, dim, double_check, output, fmt):
    """Eigenvalues of the truncated operator, sorted by real part."""
    sys.exit(run(RunConfig("spectrum", spec=spec, dim=dim, double_check=double_check, output=output, fmt=fmt)))


@main.command()
@click.option("--k", type=int, required=True)
@click.option("--spec", required=True, help="perturbation B (JSON path or preset)")
@click.option("--l", type=int, required=True, help="number of Neumann terms")
@click.option("--contours", type=int, default=10)
@click.option("--first", type=int, default=None, help="first contour index s")
@click.option("--samples", type=int, default=256)
@click.option("--dim", type=int, default=400)
@click.option("--no-admissibility", "relaxed", is_flag=True, help="allow configs outside m <= 2k-3")
@_with_output
def trace(k, spec, l, contours, first, samples, dim, relaxed, output, fmt):
    """Regularized trace sums on circles between reference eigenvalues."""
    sys.exit(run(RunConfig("trace", spec=spec, k=k, l=l, contours=contours, first=first, samples=samples,
                           dim=dim, enforce=not relaxed, output=output, fmt=fmt)))


@main.command()
@click.option("--samples-csv", default=None, help="CSV of u,re,im samples on the line")
@click.option("--hermite", type=int, default=None, help="transform the Hermite function h_n")
@click.option("--dim", type=int, default=16, help="number of output coefficients")
@click.option("--alpha", type=float, default=None, help="kernel parameter (default classical)")
@click.option("--order", type=int, default=64, help="Gauss-Hermite order")
@_with_output
def transform(samples_csv, hermite, dim, alpha, order, output, fmt):
    """Coefficients of the transform in the orthonormal monomial basis."""
    sys.exit(run(RunConfig("transform", samples_csv=samples_csv, hermite=hermite, dim=dim, alpha=alpha,
                           order=order, output=output, fmt=fmt)))


@main.command()
@click.option("--spec", required=True)
@click.option("--sign", type=float, default=1.0, help="d/dt v = sign * G v")
@click.option("--initial", required=True, help="CSV of re,im (optionally n,re,im)")
@click.option("--dim", type=int, default=None)
@click.option("--t", "t_final", type=float, default=1.0)
@click.option("--dt", type=float, default=1e-3)
@click.option("--stride", type=int, default=None, help="snapshot every STRIDE steps")
@_with_output
def evolve(spec, sign, initial, dim, t_final, dt, stride, output, fmt):
    """Fixed-step RK4 evolution of a coefficient vector."""
    sys.exit(run(RunConfig("evolve", spec=spec, sign=sign, initial=initial, dim=dim, t=t_final, dt=dt,
                           stride=stride, output=output, fmt=fmt)))


@main.command()
@click.option("--kernel-solution", type=int, default=None, help="entries 1..N of the kernel solution")
@click.option("--spectrum", "jac_spectrum", type=int, default=None, help="eigenvalues and norming constants")
@_with_output
def jacobi(kernel_solution, jac_spectrum, output, fmt):
    """Jacobi matrix of the cubic operator: kernel solution or spectral data."""
    sys.exit(run(RunConfig("jacobi", kernel_solution=kernel_solution, jacobi_spectrum=jac_spectrum,
                           output=output, fmt=fmt)))


if __name__ == "__main__":
    main()
