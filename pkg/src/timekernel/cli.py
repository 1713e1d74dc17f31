"""``timekernel`` command-line front end.

Every subcommand reads one JSON config, runs a single job and writes JSON or
CSV.  Exit codes: 0 success, 2 invalid input, 3 non-convergence, 4 a
mathematical check came out false.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction

import numpy as np

from .coeff_tables import build_c_table, leading_shift_table, power_identity_check
from .errors import ConsistencyError, GradeError, NonConvergenceError, TimeKernelError, ValidationError
from .frobenius import (
    BoundaryConditionSpec,
    ShiftSpec,
    boundary_from_json,
    classify_symmetry,
    conjugacy_check,
    solve_tke,
    toa_spec,
)
from .mtke import DistributionBoundary, delta_jump_check, mtke_classify, mtke_free_solution, mtke_ho_solution, weyl_transform_distribution
from .phase_space import PhaseSpaceSeries, inverse_hamiltonian_series, local_toa_series, weyl_transform_sgn, within_kernel_order
from .picard import Grid, fmt_float, grid_reference, harmonic_toa_closed_form, parse_grid_counts, picard_solve, picard_solve_mtke
from .potential import PolynomialPotential
from .scalar import as_fraction, format_fraction
from .series import evaluate_uv

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGENCE = 3
EXIT_CHECK_FAILED = 4

COMMANDS = (
    "solve-tke",
    "check",
    "weyl",
    "classical-toa",
    "inverse-h",
    "picard",
    "mtke",
    "c-table",
    "identity-check",
    "plot-data",
)

PLOT_SOURCES = ("weyl", "classical-toa", "inverse-h", "mtke", "series")


class CheckFailed(TimeKernelError):
    """The job ran but the mathematical check it performs is false."""

    def __init__(self, payload):
        super().__init__("check failed")
        self.payload = payload


@dataclass(frozen=True)
class JobConfig:
    """Validated job description.  ``boundary`` is exactly one of the three variants."""

    command: str
    potential: PolynomialPotential = field(default_factory=lambda: PolynomialPotential({}))
    boundary: BoundaryConditionSpec | ShiftSpec | DistributionBoundary = field(default_factory=toa_spec)
    order: int = 12
    tol: float = 1e-12
    max_iter: int = 200
    domain: tuple[Fraction, Fraction, Fraction, Fraction] = (Fraction(-1), Fraction(1), Fraction(-1), Fraction(1))
    grid: tuple[int, int] = (101, 101)
    mu: Fraction = Fraction(1)
    hbar: Fraction = Fraction(1)
    omega: Fraction | None = None
    k_max: int = 5
    m_max: int = 15
    j_max: int = 6
    N: int = 1
    reference: str | None = None
    source: str = "weyl"
    q_samples: tuple[float, float, int] = (-1.0, 1.0, 5)
    p_samples: tuple[float, float, int] = (0.5, 2.0, 4)
    p_margin: float = 1e-6
    format: str = "json"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"command: unknown subcommand {self.command!r}")
        if self.format not in ("json", "csv"):
            raise ValidationError(f"format: must be json or csv, got {self.format!r}")
        if not (isinstance(self.tol, float) and self.tol > 0 and math.isfinite(self.tol)):
            raise ValidationError(f"tol: must be a positive number, got {self.tol!r}")
        if not self.p_margin > 0:
            raise ValidationError("p_margin: must be > 0")
        for name in ("order", "max_iter", "k_max", "m_max", "j_max", "N"):
            val = getattr(self, name)
            if not isinstance(val, int) or isinstance(val, bool) or val < 0:
                raise ValidationError(f"{name}: must be a non-negative integer, got {val!r}")
        if self.order < 1 or self.max_iter < 1 or self.N < 1:
            raise ValidationError("order, max_iter and N must be >= 1")
        if self.mu <= 0 or self.hbar <= 0:
            raise ValidationError("mu and hbar must be positive")
        if self.reference not in (None, "harmonic", "series"):
            raise ValidationError(f"reference: must be harmonic or series, got {self.reference!r}")
        if self.source not in PLOT_SOURCES:
            raise ValidationError(f"source: must be one of {', '.join(PLOT_SOURCES)}")
        for name in ("q_samples", "p_samples"):
            lo, hi, n = getattr(self, name)
            if not isinstance(n, int) or n < 1 or hi < lo:
                raise ValidationError(f"{name}: expected [start, stop, count] with start <= stop and count >= 1")
        _field("grid", lambda _: self.grid_spec, None)

    @property
    def grid_spec(self) -> Grid:
        u0, u1, v0, v1 = self.domain
        return Grid(u0, u1, v0, v1, *self.grid)

    @property
    def mu_value(self) -> float:
        return float(self.mu)

    @property
    def hbar_value(self) -> float:
        return float(self.hbar)

    def to_json(self) -> dict:
        f = format_fraction
        return {
            "command": self.command,
            "potential": self.potential.to_json(),
            "boundary": self.boundary.to_json(),
            "order": self.order,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "domain": [[f(self.domain[0]), f(self.domain[1])], [f(self.domain[2]), f(self.domain[3])]],
            "grid": f"{self.grid[0]}x{self.grid[1]}",
            "mu": f(self.mu),
            "hbar": f(self.hbar),
            "omega": None if self.omega is None else f(self.omega),
            "k_max": self.k_max,
            "m_max": self.m_max,
            "j_max": self.j_max,
            "N": self.N,
            "reference": self.reference,
            "source": self.source,
            "q_samples": list(self.q_samples),
            "p_samples": list(self.p_samples),
            "p_margin": self.p_margin,
            "format": self.format,
        }

    @classmethod
    def from_json(cls, obj, command: str | None = None) -> JobConfig:
        if not isinstance(obj, dict):
            raise ValidationError("config: top level must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValidationError(f"config: unknown fields {sorted(unknown)}")
        cmd = command or obj.get("command")
        if cmd is None:
            raise ValidationError("command: missing")
        if command and obj.get("command") not in (None, command):
            raise ValidationError(f"command: config says {obj['command']!r} but {command!r} was requested")
        kw = {"command": cmd}
        if "potential" in obj:
            kw["potential"] = _field("potential", PolynomialPotential.from_json, obj["potential"])
        if "boundary" in obj:
            kw["boundary"] = _field("boundary", parse_boundary, obj["boundary"])
        for name in ("order", "max_iter", "k_max", "m_max", "j_max", "N"):
            if name in obj:
                kw[name] = obj[name]
        if "tol" in obj:
            kw["tol"] = _field("tol", _as_float, obj["tol"])
        if "p_margin" in obj:
            kw["p_margin"] = _field("p_margin", _as_float, obj["p_margin"])
        for name in ("mu", "hbar"):
            if name in obj:
                kw[name] = _field(name, as_fraction, obj[name])
        if obj.get("omega") is not None:
            kw["omega"] = _field("omega", as_fraction, obj["omega"])
        if "domain" in obj:
            kw["domain"] = _field("domain", _parse_domain, obj["domain"])
        if "grid" in obj:
            g = obj["grid"]
            kw["grid"] = _field("grid", parse_grid_counts, g) if isinstance(g, str) else _field("grid", _pair, g)
        for name in ("reference", "source", "format"):
            if name in obj:
                kw[name] = obj[name]
        for name in ("q_samples", "p_samples"):
            if name in obj:
                kw[name] = _field(name, _samples, obj[name])
        return cls(**kw)


def _field(name, fn, value):
    try:
        return fn(value)
    except ValidationError as exc:
        raise ValidationError(f"{name}: {exc}") from None
    except (TypeError, ValueError, KeyError, ZeroDivisionError) as exc:
        raise ValidationError(f"{name}: {exc}") from None


def _as_float(x) -> float:
    if isinstance(x, bool):
        raise ValidationError("expected a number")
    return float(x)


def _pair(x) -> tuple[int, int]:
    a, b = x
    return int(a), int(b)


def _parse_domain(x):
    (u0, u1), (v0, v1) = x
    return tuple(as_fraction(t) for t in (u0, u1, v0, v1))


def _samples(x):
    lo, hi, n = x
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValidationError("count must be an integer")
    return float(lo), float(hi), n


def parse_boundary(obj):
    if isinstance(obj, dict) and ("alpha" in obj or "beta" in obj):
        return DistributionBoundary.from_json(obj)
    return boundary_from_json(obj)


def _require(config: JobConfig, kinds, what: str):
    if not isinstance(config.boundary, kinds):
        raise ValidationError(f"boundary: {what} needs a {' or '.join(k.__name__ for k in kinds)}")
    return config.boundary


def _oscillator_frequency(V: PolynomialPotential, omega: Fraction | None) -> Fraction:
    """Frequency of a pure ``mu omega^2 q^2 / 2`` potential; 0 for the free particle."""
    if not V.coeffs:
        return Fraction(0)
    a2 = V.coeffs.get(2)
    if set(V.coeffs) != {2} or a2.grade != (1, 0) or not a2.is_real() or a2.re <= 0:
        raise ValidationError("potential: closed-form modified kernels exist only for V = 0 or mu omega^2 q^2 / 2")
    w2 = 2 * a2.re
    if omega is not None:
        if omega * omega != w2:
            raise ValidationError(f"omega: {omega} does not match the potential (omega^2 = {w2})")
        return omega
    num, den = math.isqrt(w2.numerator), math.isqrt(w2.denominator)
    if num * num != w2.numerator or den * den != w2.denominator:
        raise ValidationError("omega: potential frequency is irrational; give omega explicitly")
    return Fraction(num, den)


# results --------------------------------------------------------------------

def _scalar_row(c):
    return [format_fraction(c.re), format_fraction(c.im), c.mu_exp, c.hbar_exp]


def _series_result(config: JobConfig):
    bc = _require(config, (BoundaryConditionSpec, ShiftSpec), "solve-tke")
    return solve_tke(config.potential, bc, config.order)


def _phase_output(S: PhaseSpaceSeries, fmt: str):
    if fmt == "json":
        return S.to_json()
    return PhaseSpaceSeries.CSV_HEADER, S.csv_rows()


def run_solve_tke(config: JobConfig):
    T = _series_result(config)
    if config.format == "json":
        return T.to_json()
    return ["m", "n", "re", "im", "mu", "hbar"], [[m, n, *_scalar_row(c)] for (m, n), c in T]


def run_check(config: JobConfig):
    T = _series_result(config)
    sym = classify_symmetry(T)
    report = {
        "conjugate": bool(conjugacy_check(T)),
        "hermitian": sym.hermitian,
        "time_reversal": sym.time_reversal,
    }
    if config.format == "json":
        return report
    return ["property", "value"], [[k, str(v).lower()] for k, v in report.items()]


def weyl_series(config: JobConfig) -> PhaseSpaceSeries:
    T = _series_result(config)
    return within_kernel_order(weyl_transform_sgn(T), T.truncation_order)


def run_weyl(config: JobConfig):
    return _phase_output(weyl_series(config), config.format)


def run_classical_toa(config: JobConfig):
    return _phase_output(local_toa_series(config.potential, config.k_max), config.format)


def run_inverse_h(config: JobConfig):
    return _phase_output(inverse_hamiltonian_series(config.potential, config.N, config.j_max), config.format)


def run_picard(config: JobConfig):
    grid = config.grid_spec
    mu, hbar = config.mu_value, config.hbar_value
    if isinstance(config.boundary, DistributionBoundary):
        K = picard_solve_mtke(config.potential, config.boundary, grid, config.tol, config.max_iter, mu, hbar)
    else:
        K = picard_solve(config.potential, config.boundary, grid, config.tol, config.max_iter, mu, hbar)
    reference = None
    if config.reference == "harmonic":
        if isinstance(config.boundary, DistributionBoundary) or config.boundary != toa_spec():
            raise ValidationError("reference: the harmonic closed form needs the time-of-arrival boundary")
        w = float(_oscillator_frequency(config.potential, config.omega))
        reference = grid_reference(lambda U, W: harmonic_toa_closed_form(U, W, w, mu, hbar), grid)
    elif config.reference == "series":
        if isinstance(config.boundary, DistributionBoundary):
            raise ValidationError("reference: series comparison needs axis boundary data")
        T = solve_tke(config.potential, config.boundary, config.order)
        reference = grid_reference(lambda U, W: evaluate_uv(T, U, W, mu, hbar), grid)
    if config.format == "json":
        return K.summary(reference)
    return ["u", "v", "re", "im"], K.csv_rows()


def mtke_kernel(config: JobConfig):
    dbc = _require(config, (DistributionBoundary,), "mtke")
    w = _oscillator_frequency(config.potential, config.omega)
    if w == 0:
        return dbc, mtke_free_solution(dbc)
    return dbc, mtke_ho_solution(dbc, w, config.j_max)


def run_mtke(config: JobConfig):
    dbc, K = mtke_kernel(config)
    mu, hbar = config.mu_value, config.hbar_value
    ww = weyl_transform_distribution(K)
    cls = mtke_classify(dbc)
    jump = delta_jump_check(K, mu, hbar)
    expected = (dbc.alpha + dbc.beta).value(mu, hbar) * mu / (2j * hbar)
    ok = abs(jump - expected) <= 1e-12 * max(1.0, abs(expected))
    result = {
        "kernel": K.to_json(),
        "weyl": ww.to_json(),
        "classification": {"hermitian": cls.hermitian, "time_reversal": cls.time_reversal, "both": cls.both},
        "delta_jump": {"re": fmt_float(jump.real), "im": fmt_float(jump.imag), "matches": ok},
    }
    if config.format == "csv":
        result = _phase_output(ww, "csv")
    if not ok:
        raise CheckFailed(result)
    return result


def run_c_table(config: JobConfig):
    V = config.potential
    table = build_c_table(V, config.m_max, config.j_max)
    rows = [["C", *r] for r in table.csv_rows()]
    if isinstance(config.boundary, ShiftSpec):
        lead = leading_shift_table(V, config.boundary.N, config.boundary.beta, config.m_max, config.j_max)
        rows += [["alpha0", *r] for r in lead.csv_rows()]
    if config.format == "csv":
        return ["table", "m", "j", "re", "im", "mu", "hbar"], rows
    out = {}
    for name, m, j, re, im, mu, hbar in rows:
        out.setdefault(name, []).append([m, j, {"re": re, "im": im, "mu": mu, "hbar": hbar}])
    return out


def run_identity_check(config: JobConfig):
    report = power_identity_check(config.potential, config.k_max, config.m_max)
    result = {"identity": "holds"} if report else {"identity": "fails", "failures": list(report.failures)}
    if config.format == "csv":
        result = (["identity"], [[result["identity"]]])
    if not report:
        raise CheckFailed(result)
    return result


def plot_source(config: JobConfig) -> PhaseSpaceSeries:
    if config.source == "weyl":
        return weyl_series(config)
    if config.source == "classical-toa":
        return local_toa_series(config.potential, config.k_max)
    if config.source == "inverse-h":
        return inverse_hamiltonian_series(config.potential, config.N, config.j_max)
    if config.source == "mtke":
        return weyl_transform_distribution(mtke_kernel(config)[1])
    raise ValidationError("source: 'series' data must be passed to emit_plot_data directly")


def _linspace(lo, hi, n):
    return [lo] if n == 1 else [float(x) for x in np.linspace(lo, hi, n)]


def emit_plot_data(series: PhaseSpaceSeries, q_samples, p_samples, mu_value=1.0, hbar_value=1.0, p_margin=1e-6):
    """Sampled values of the regular part on a (q, p) lattice.

    Rows are ``(q, p, re, im)``; delta terms vanish off ``p = 0``, which the
    p range must avoid by at least ``p_margin``.
    """
    plo, phi, _ = p_samples
    if plo <= p_margin and phi >= -p_margin:
        raise ValidationError(f"p_samples: range [{plo}, {phi}] comes within {p_margin} of p = 0")
    rows = []
    for q in _linspace(*q_samples):
        for p in _linspace(*p_samples):
            z = series.evaluate(q, p, mu_value, hbar_value)
            rows.append([fmt_float(q), fmt_float(p), fmt_float(z.real), fmt_float(z.imag)])
    return ["q", "p", "re", "im"], rows


def run_plot_data(config: JobConfig):
    header, rows = emit_plot_data(
        plot_source(config), config.q_samples, config.p_samples, config.mu_value, config.hbar_value, config.p_margin
    )
    if config.format == "json":
        return {"columns": header, "rows": rows}
    return header, rows


RUNNERS = {
    "solve-tke": run_solve_tke,
    "check": run_check,
    "weyl": run_weyl,
    "classical-toa": run_classical_toa,
    "inverse-h": run_inverse_h,
    "picard": run_picard,
    "mtke": run_mtke,
    "c-table": run_c_table,
    "identity-check": run_identity_check,
    "plot-data": run_plot_data,
}


def render(result, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(result, indent=2, sort_keys=True) + "\n"
    header, rows = result
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def run(config: JobConfig) -> tuple[int, str]:
    """Execute a validated job; returns ``(exit code, rendered output)``."""
    try:
        return EXIT_OK, render(RUNNERS[config.command](config), config.format)
    except CheckFailed as exc:
        return EXIT_CHECK_FAILED, render(exc.payload, config.format)
    except ConsistencyError as exc:
        return EXIT_CHECK_FAILED, render({"error": str(exc)}, "json")


def load_config(text: str, command: str) -> JobConfig:
    try:
        obj = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return JobConfig.from_json(obj, command)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="timekernel", description="Time kernel series, transforms and grid solvers.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON job file (default: empty config)")
    parser.add_argument("--format", choices=("json", "csv"))
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument("--order", type=int, help="series truncation order K")
    parser.add_argument("--tol", type=float, help="grid iteration tolerance")
    parser.add_argument("--grid", help="grid point counts as NxM")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        text = ""
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ValidationError(f"config: cannot read {args.config}: {exc.strerror}") from None
        config = load_config(text, args.command)
        overrides = {}
        if args.format:
            overrides["format"] = args.format
        if args.order is not None:
            overrides["order"] = args.order
        if args.tol is not None:
            overrides["tol"] = args.tol
        if args.grid:
            overrides["grid"] = parse_grid_counts(args.grid)
        if overrides:
            config = replace(config, **overrides)
        code, output = run(config)
    except NonConvergenceError as exc:
        print(f"timekernel: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ValidationError, GradeError, TimeKernelError) as exc:
        print(f"timekernel: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(output)
    else:
        sys.stdout.write(output)
    return code


if __name__ == "__main__":
    sys.exit(main())
