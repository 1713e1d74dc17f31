"""Successive approximation of the canonical kernel equation on a grid.

The Goursat problem is recast as the integral equation

    T(u, v) = T0(u, v) + (mu / 2 hbar^2) int_0^u int_0^v dV(x, y) T(x, y) dy dx,

with ``dV(x, y) = V((x+y)/2) - V((x-y)/2)``.  The four quadrants around the
origin are independent problems, so each one is iterated on its own nodes
with signed steps.  Keeping the v > 0 and v < 0 halves apart preserves the
jump that the modified equation puts on the line v = 0.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NonConvergenceError, PreconditionError, ValidationError
from .frobenius import BoundaryConditionSpec, ShiftSpec, boundary_to_axis_coefficients
from .mtke import DistributionBoundary
from .potential import PolynomialPotential, potential_difference_expand
from .scalar import as_fraction

QUADRANTS = ((1, 1), (-1, 1), (1, -1), (-1, -1))


def thread_count() -> int:
    """Worker cap from ``TIMEKERNEL_THREADS`` (default: up to 4 quadrant workers)."""
    raw = os.environ.get("TIMEKERNEL_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"TIMEKERNEL_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError("TIMEKERNEL_THREADS must be >= 1")
    return n


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on ``[u_min, u_max] x [v_min, v_max]`` with 0 a node on both axes."""

    u_min: Fraction
    u_max: Fraction
    v_min: Fraction
    v_max: Fraction
    nu: int
    nv: int

    def __post_init__(self):
        for name in ("u_min", "u_max", "v_min", "v_max"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        for lo, hi, n, axis in ((self.u_min, self.u_max, self.nu, "u"), (self.v_min, self.v_max, self.nv, "v")):
            if not isinstance(n, int) or n < 3 or n % 2 == 0:
                raise ValidationError(f"{axis} point count must be an odd integer >= 3, got {n!r}")
            if not lo <= 0 <= hi or lo == hi:
                raise ValidationError(f"{axis} range [{lo}, {hi}] must contain 0 and be non-degenerate")
            h = (hi - lo) / (n - 1)
            if (-lo / h).denominator != 1:
                raise ValidationError(f"0 is not a node of the {axis} grid")

    @classmethod
    def square(cls, half_width=1, n: int = 201) -> Grid:
        w = as_fraction(half_width)
        return cls(-w, w, -w, w, n, n)

    @property
    def hu(self) -> Fraction:
        return (self.u_max - self.u_min) / (self.nu - 1)

    @property
    def hv(self) -> Fraction:
        return (self.v_max - self.v_min) / (self.nv - 1)

    @property
    def u(self) -> np.ndarray:
        return np.array([float(self.u_min + i * self.hu) for i in range(self.nu)])

    @property
    def v(self) -> np.ndarray:
        return np.array([float(self.v_min + j * self.hv) for j in range(self.nv)])

    @property
    def iu0(self) -> int:
        return int(-self.u_min / self.hu)

    @property
    def iv0(self) -> int:
        return int(-self.v_min / self.hv)

    def with_counts(self, nu: int, nv: int) -> Grid:
        return Grid(self.u_min, self.u_max, self.v_min, self.v_max, nu, nv)

    def quadrant_index(self, su: int, sv: int) -> tuple[np.ndarray, np.ndarray]:
        """Node indices walking away from the origin in the given direction."""
        iu = np.arange(self.iu0, self.nu) if su > 0 else np.arange(self.iu0, -1, -1)
        iv = np.arange(self.iv0, self.nv) if sv > 0 else np.arange(self.iv0, -1, -1)
        return iu, iv

    def to_json(self) -> dict:
        f = lambda x: f"{x.numerator}/{x.denominator}"
        return {"u": [f(self.u_min), f(self.u_max)], "v": [f(self.v_min), f(self.v_max)], "nu": self.nu, "nv": self.nv}

    @classmethod
    def from_json(cls, obj) -> Grid:
        try:
            (u0, u1), (v0, v1) = obj["u"], obj["v"]
            return cls(u0, u1, v0, v1, obj["nu"], obj["nv"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"grid needs u, v ranges and nu, nv counts: {exc}") from None


def parse_grid_counts(text: str) -> tuple[int, int]:
    """``"201x201"`` -> ``(201, 201)``."""
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise ValidationError(f"grid must look like NxM, got {text!r}") from None


def cumulative_simpson(f: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """``int_{x_0}^{x_k} f`` at every node; ``h`` may be negative.

    Even nodes use composite Simpson from the start.  Odd nodes add one
    interval with the three-point rule ``h/12 (5 f0 + 8 f1 - f2)`` (or its
    mirror at the last node), so every value is fourth-order accurate.
    """
    f = np.moveaxis(np.asarray(f), axis, 0)
    n = f.shape[0]
    out = np.zeros_like(f, dtype=np.result_type(f, float))
    if n < 3:
        if n == 2:
            out[1] = h * (f[0] + f[1]) / 2
        return np.moveaxis(out, 0, axis)
    pair = h / 3 * (f[0:-2:2] + 4 * f[1:-1:2] + f[2::2])
    out[2::2] = np.cumsum(pair, axis=0)
    odd = np.arange(1, n, 2)
    interior = odd[odd + 1 < n]
    out[interior] = out[interior - 1] + h / 12 * (5 * f[interior - 1] + 8 * f[interior] - f[interior + 1])
    if odd.size and odd[-1] == n - 1:
        k = n - 1
        out[k] = out[k - 1] + h / 12 * (-f[k - 2] + 8 * f[k - 1] + 5 * f[k])
    return np.moveaxis(out, 0, axis)


def _difference_values(V: PolynomialPotential, x: np.ndarray, y: np.ndarray, mu_value, hbar_value) -> np.ndarray:
    X, Y = np.meshgrid(x, y, indexing="ij")
    out = np.zeros(X.shape, dtype=complex)
    for (i, l), d in potential_difference_expand(V):
        out = out + d.value(mu_value, hbar_value) * X**i * Y**l
    return out


@dataclass
class GridKernel:
    """Converged grid values indexed ``values[i, j] = T(u_i, v_j)``.

    On the line ``v = 0`` the stored value is the mean of the one-sided
    limits ``v0_plus`` and ``v0_minus``, which are kept separately.
    """

    grid: Grid
    u: np.ndarray
    v: np.ndarray
    values: np.ndarray
    iterations_used: int
    final_delta: float
    v0_plus: np.ndarray
    v0_minus: np.ndarray
    increments: list[np.ndarray] = field(default_factory=list)

    def max_abs_error(self, reference: np.ndarray) -> float:
        return float(np.max(np.abs(self.values - reference)))

    def one_sided(self, side: int) -> np.ndarray:
        """Values with the ``v = 0`` row replaced by the limit from ``side``."""
        out = self.values.copy()
        out[:, self.grid.iv0] = self.v0_plus if side > 0 else self.v0_minus
        return out

    def csv_rows(self) -> list[list[str]]:
        return [
            [fmt_float(self.u[i]), fmt_float(self.v[j]), fmt_float(z.real), fmt_float(z.imag)]
            for i in range(len(self.u))
            for j, z in enumerate(self.values[i])
        ]

    def summary(self, reference: np.ndarray | None = None) -> dict:
        out = {
            "grid": self.grid.to_json(),
            "iterations_used": self.iterations_used,
            "final_delta": fmt_float(self.final_delta),
        }
        if reference is not None:
            out["max_abs_error"] = fmt_float(self.max_abs_error(reference))
        return out

    def summary_json(self, reference: np.ndarray | None = None) -> str:
        return json.dumps(self.summary(reference), indent=2, sort_keys=True)


def fmt_float(x: float) -> str:
    """17 significant digits; enough to round-trip any double."""
    return f"{float(x):.17g}"


def _iterate(grid: Grid, D_of, T0_of, tol, max_iter, factor, initial, record):
    """Lockstep iteration over the four quadrants; returns per-quadrant arrays."""
    hu, hv = float(grid.hu), float(grid.hv)
    quads = {}
    for su, sv in QUADRANTS:
        iu, iv = grid.quadrant_index(su, sv)
        T0 = T0_of(iu, iv, su, sv)
        D = D_of(iu, iv)
        start = T0 if initial is None else initial(iu, iv, su, sv)
        quads[(su, sv)] = [iu, iv, T0, D, np.array(start, dtype=complex), su * hu, sv * hv]

    def sweep(key):
        iu, iv, T0, D, T, dx, dy = quads[key]
        inner = cumulative_simpson(D * T, dy, axis=1)
        new = T0 + factor * cumulative_simpson(inner, dx, axis=0)
        return key, new

    workers = min(thread_count(), len(quads))
    increments = []
    delta = math.inf
    it = 0
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while it < max_iter:
            it += 1
            results = dict(pool.map(sweep, quads)) if pool else dict(map(sweep, quads))
            step = {}
            delta = 0.0
            for key in QUADRANTS:
                diff = results[key] - quads[key][4]
                delta = max(delta, float(np.max(np.abs(diff))))
                step[key] = diff
                quads[key][4] = results[key]
            if record:
                increments.append(step)
            if delta <= tol:
                break
    finally:
        if pool:
            pool.shutdown()
    return quads, it, delta, increments


def _assemble(grid: Grid, pieces: dict) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Merge quadrant arrays; shared axis nodes take the mean over the two sides."""
    full = np.zeros((grid.nu, grid.nv), dtype=complex)
    count = np.zeros((grid.nu, grid.nv))
    plus = np.zeros(grid.nu, dtype=complex)
    minus = np.zeros(grid.nu, dtype=complex)
    pcount = np.zeros(grid.nu)
    mcount = np.zeros(grid.nu)
    for su, sv in QUADRANTS:
        iu, iv, arr = pieces[(su, sv)]
        full[np.ix_(iu, iv)] += arr
        count[np.ix_(iu, iv)] += 1
        if sv > 0:
            plus[iu] += arr[:, 0]
            pcount[iu] += 1
        else:
            minus[iu] += arr[:, 0]
            mcount[iu] += 1
    return full / count, plus / pcount, minus / mcount


def _finish(grid, quads, it, delta, increments, tol, max_iter) -> GridKernel:
    if delta > tol:
        raise NonConvergenceError(
            f"no convergence after {it} iterations (last update {delta:.3e} > tol {tol:.3e})", delta, it
        )
    values, plus, minus = _assemble(grid, {k: (q[0], q[1], q[4]) for k, q in quads.items()})
    incs = []
    for step in increments:
        full, _, _ = _assemble(grid, {k: (quads[k][0], quads[k][1], np.abs(s)) for k, s in step.items()})
        incs.append(full.real)
    return GridKernel(grid, grid.u, grid.v, values, it, delta, plus, minus, incs)


def _check_tol(tol, max_iter):
    if not tol > 0:
        raise ValidationError("tol must be > 0")
    if not isinstance(max_iter, int) or max_iter < 1:
        raise ValidationError("max_iter must be an integer >= 1")


def tke_initial(bc, u, v, mu_value=1.0, hbar_value=1.0) -> np.ndarray:
    """``T0 = slope*u + c + g(v)`` on the tensor grid of ``u`` and ``v``."""
    row, column = boundary_to_axis_coefficients(bc)
    U, W = np.meshgrid(np.asarray(u, float), np.asarray(v, float), indexing="ij")
    out = np.zeros(U.shape, dtype=complex)
    for m, a in row.items():
        out = out + a.value(mu_value, hbar_value) * U**m
    for n, b in column.items():
        out = out + b.value(mu_value, hbar_value) * W**n
    return out


def picard_solve(
    V: PolynomialPotential,
    bc: BoundaryConditionSpec | ShiftSpec,
    grid: Grid,
    tol: float = 1e-12,
    max_iter: int = 200,
    mu_value: float = 1.0,
    hbar_value: float = 1.0,
    initial=None,
    record_increments: bool = False,
) -> GridKernel:
    """Grid solution of the kernel equation for axis data ``bc``.

    ``initial(u, v)`` optionally replaces the starting iterate; the data
    term ``T0`` in the integral equation is unchanged.
    """
    _check_tol(tol, max_iter)
    u, v = grid.u, grid.v
    factor = mu_value / (2 * hbar_value**2)

    def T0_of(iu, iv, su, sv):
        return tke_initial(bc, u[iu], v[iv], mu_value, hbar_value)

    def D_of(iu, iv):
        return _difference_values(V, u[iu], v[iv], mu_value, hbar_value)

    start = None
    if initial is not None:
        def start(iu, iv, su, sv):
            U, W = np.meshgrid(u[iu], v[iv], indexing="ij")
            return initial(U, W)

    quads, it, delta, incs = _iterate(grid, D_of, T0_of, tol, max_iter, factor, start, record_increments)
    return _finish(grid, quads, it, delta, incs, tol, max_iter)


def mtke_initial(dbc: DistributionBoundary, u, v, su: int, sv: int, mu_value=1.0, hbar_value=1.0) -> np.ndarray:
    """``(mu/2i hbar) u [alpha H(v) - beta H(-v)] + f(u) + g(v)`` on one closed quadrant."""
    U, W = np.meshgrid(np.asarray(u, float), np.asarray(v, float), indexing="ij")
    step = dbc.alpha.value(mu_value, hbar_value) if sv > 0 else -dbc.beta.value(mu_value, hbar_value)
    out = mu_value / (2j * hbar_value) * U * step
    for t in dbc.f_terms:
        out = out + t.evaluate(U, su, mu_value, hbar_value)
    for t in dbc.g_terms:
        out = out + t.evaluate(W, sv, mu_value, hbar_value)
    return out


def picard_solve_mtke(
    V: PolynomialPotential,
    dbc: DistributionBoundary,
    grid: Grid,
    tol: float = 1e-12,
    max_iter: int = 200,
    mu_value: float = 1.0,
    hbar_value: float = 1.0,
    initial=None,
    record_increments: bool = False,
) -> GridKernel:
    """Grid solution of the modified equation; ``initial(u, v, su, sv)`` may seed each quadrant."""
    _check_tol(tol, max_iter)
    u, v = grid.u, grid.v
    factor = mu_value / (2 * hbar_value**2)

    def T0_of(iu, iv, su, sv):
        return mtke_initial(dbc, u[iu], v[iv], su, sv, mu_value, hbar_value)

    def D_of(iu, iv):
        return _difference_values(V, u[iu], v[iv], mu_value, hbar_value)

    start = None
    if initial is not None:
        def start(iu, iv, su, sv):
            U, W = np.meshgrid(u[iu], v[iv], indexing="ij")
            return initial(U, W, su, sv)

    quads, it, delta, incs = _iterate(grid, D_of, T0_of, tol, max_iter, factor, start, record_increments)
    return _finish(grid, quads, it, delta, incs, tol, max_iter)


def difference_bound(V: PolynomialPotential, U: float, W: float, mu_value=1.0, hbar_value=1.0) -> float:
    """``M``: triangle-inequality bound on ``|dV|`` over ``|u| <= U``, ``|v| <= W``."""
    return float(sum(abs(d.value(mu_value, hbar_value)) * U**i * W**l for (i, l), d in potential_difference_expand(V)))


def picard_bound(
    V: PolynomialPotential,
    bc: BoundaryConditionSpec | ShiftSpec,
    domain: tuple[float, float],
    j: int,
    mu_value: float = 1.0,
    hbar_value: float = 1.0,
    u=None,
    v=None,
):
    """Envelope of the j-th increment ``|T_j - T_(j-1)|``.

    ``(mu M / 2 hbar^2)^j |u|^j |v|^j / j! * (|u| + sum_k |beta_k| |v|^k / ((k+1)...(k+j)))``

    with ``beta_0 = c`` and ``M`` bounding ``|dV|`` on the box
    ``|u| <= domain[0]``, ``|v| <= domain[1]``.  Without ``u``, ``v`` the
    envelope is evaluated at the box corner, which is its maximum.
    """
    if j < 1:
        raise PreconditionError("j must be >= 1")
    Ub, Wb = (float(abs(as_fraction(x))) if not isinstance(x, float) else abs(x) for x in domain)
    M = difference_bound(V, Ub, Wb, mu_value, hbar_value)
    au = np.abs(np.asarray(Ub if u is None else u, dtype=float))
    av = np.abs(np.asarray(Wb if v is None else v, dtype=float))
    row, column = boundary_to_axis_coefficients(bc)
    betas = dict(column)
    if 0 in row:
        betas[0] = row[0]
    tail = au + 0.0 * av
    for k, b in betas.items():
        tail = tail + abs(b.value(mu_value, hbar_value)) * av**k / math.prod(range(k + 1, k + j + 1))
    rate = mu_value * M / (2 * hbar_value**2)
    out = rate**j * au**j * av**j / math.factorial(j) * tail
    return float(out) if np.ndim(out) == 0 else out


def harmonic_toa_closed_form(u, v, omega=1.0, mu_value=1.0, hbar_value=1.0) -> np.ndarray:
    """``(u/4) sinh(z)/z`` with ``z = mu omega u v / (2 hbar)``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    z = mu_value * omega * u * v / (2 * hbar_value)
    safe = np.where(z == 0, 1.0, z)
    return u / 4 * np.where(z == 0, 1.0, np.sinh(safe) / safe)


def grid_reference(fn, grid: Grid) -> np.ndarray:
    """``fn(U, V)`` on the tensor grid."""
    U, W = np.meshgrid(grid.u, grid.v, indexing="ij")
    return np.asarray(fn(U, W), dtype=complex)
