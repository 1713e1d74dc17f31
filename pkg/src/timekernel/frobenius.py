"""Coefficient-recurrence solutions of the time kernel equation in canonical form.

In ``u = q + q'``, ``v = q - q'`` the kernel factor obeys

    -(2 hbar^2 / mu) T_uv + [V((u+v)/2) - V((u-v)/2)] T = 0,

with data on the two characteristic axes.  Writing ``T = sum alpha_{m,n} u^m v^n``
each interior coefficient is fixed by strictly lower total degree::

    alpha_{m,n} = (mu / 2 hbar^2) / (m n) * sum_{(i,l)} d_{i,l} alpha_{m-1-i, n-1-l}

where ``d_{i,l}`` are the coefficients of the potential difference.  Series are
built antidiagonal by antidiagonal, so extending K never changes lower terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ValidationError
from .potential import PolynomialPotential, potential_difference_expand
from .scalar import GradedScalar, ZERO, as_fraction
from .series import BivariatePolynomial, GradedPoly, KernelSeries

TOA_SLOPE = Fraction(1, 4)


@dataclass(frozen=True)
class BoundaryConditionSpec:
    """Axis data ``T(u, 0) = slope*u + c`` and ``T(0, v) = g(v) + c``.

    ``slope`` is 1/4 for a Hamiltonian conjugate and 0 for a solution that
    commutes with the Hamiltonian.  ``g_coeffs`` maps k >= 1 to beta_k.
    """

    c: GradedScalar = ZERO
    g_coeffs: dict[int, GradedScalar] = field(default_factory=dict)
    diagonal_slope: Fraction = TOA_SLOPE

    def __post_init__(self):
        slope = as_fraction(self.diagonal_slope)
        if slope not in (TOA_SLOPE, 0):
            raise ValidationError(f"diagonal slope must be 1/4 or 0, got {slope}")
        object.__setattr__(self, "diagonal_slope", slope)
        object.__setattr__(self, "c", GradedScalar.coerce(self.c))
        g = {}
        for k, b in dict(self.g_coeffs).items():
            if not isinstance(k, int) or isinstance(k, bool) or k < 1:
                raise ValidationError(f"g coefficients need integer k >= 1 (g(0) = 0), got {k!r}")
            b = GradedScalar.coerce(b)
            if not b.is_zero():
                g[k] = b
        object.__setattr__(self, "g_coeffs", dict(sorted(g.items())))

    @property
    def is_conjugate(self) -> bool:
        return self.diagonal_slope == TOA_SLOPE

    def __add__(self, other: BoundaryConditionSpec) -> BoundaryConditionSpec:
        """Superpose two specs; the slopes must add up to 1/4 or 0."""
        g = dict(self.g_coeffs)
        for k, b in other.g_coeffs.items():
            g[k] = g.get(k, ZERO) + b
        return BoundaryConditionSpec(self.c + other.c, g, self.diagonal_slope + other.diagonal_slope)

    def to_json(self) -> dict:
        return {
            "slope": f"{self.diagonal_slope.numerator}/{self.diagonal_slope.denominator}",
            "c": self.c.to_json(),
            "g": [[k, b.to_json()] for k, b in self.g_coeffs.items()],
        }


def toa_spec() -> BoundaryConditionSpec:
    """Time-of-arrival data: ``T(q, q) = q/2``, ``T(q, -q) = 0``."""
    return BoundaryConditionSpec()


def commutant_spec(c=ZERO, g_coeffs=None) -> BoundaryConditionSpec:
    return BoundaryConditionSpec(c, g_coeffs or {}, 0)


@dataclass(frozen=True)
class ShiftSpec:
    """Data for the arrival time shifted by a multiple of ``H**-N``.

    ``T(0, v) = -i**(2N-1) * beta * mu**(-2(N-1)) * v**(2N-1)``.
    """

    N: int
    beta: Fraction

    def __post_init__(self):
        if not isinstance(self.N, int) or isinstance(self.N, bool) or self.N < 1:
            raise ValidationError(f"shift power N must be an integer >= 1, got {self.N!r}")
        object.__setattr__(self, "beta", as_fraction(self.beta))

    @property
    def axis_degree(self) -> int:
        return 2 * self.N - 1

    def axis_coefficient(self) -> GradedScalar:
        """``-i**(2N-1) * beta / mu**(2N-2)``."""
        return GradedScalar.real(-self.beta, mu=-2 * (self.N - 1)).times_i_power(2 * self.N - 1)

    def to_boundary(self, include_toa: bool = True) -> BoundaryConditionSpec:
        slope = TOA_SLOPE if include_toa else 0
        return BoundaryConditionSpec(ZERO, {self.axis_degree: self.axis_coefficient()}, slope)

    def to_json(self) -> dict:
        return {"shift": {"N": self.N, "beta": f"{self.beta.numerator}/{self.beta.denominator}"}}


def boundary_from_json(obj) -> BoundaryConditionSpec | ShiftSpec:
    if not isinstance(obj, dict):
        raise ValidationError("boundary must be a JSON object")
    if "shift" in obj:
        s = obj["shift"]
        if not isinstance(s, dict) or "N" not in s or "beta" not in s:
            raise ValidationError("boundary.shift needs fields N and beta")
        return ShiftSpec(s["N"], as_fraction(s["beta"]))
    unknown = set(obj) - {"slope", "c", "g"}
    if unknown:
        raise ValidationError(f"unknown boundary fields {sorted(unknown)}")
    g = {}
    for i, rec in enumerate(obj.get("g", [])):
        if not isinstance(rec, list) or len(rec) != 2:
            raise ValidationError(f"boundary.g[{i}]: expected [k, scalar]")
        g[rec[0]] = GradedScalar.from_json(rec[1])
    return BoundaryConditionSpec(
        GradedScalar.from_json(obj.get("c", "0")), g, as_fraction(obj.get("slope", "1/4"))
    )


def _as_boundary(bc) -> BoundaryConditionSpec:
    if isinstance(bc, ShiftSpec):
        return bc.to_boundary()
    return bc


def boundary_to_axis_coefficients(bc) -> tuple[dict[int, GradedScalar], dict[int, GradedScalar]]:
    """Axis coefficients ``alpha_{m,0}`` (row) and ``alpha_{0,n}`` (column).

    ``alpha_{0,0} = c`` is reported once, in the row.
    """
    bc = _as_boundary(bc)
    row: dict[int, GradedScalar] = {}
    if not bc.c.is_zero():
        row[0] = bc.c
    if bc.diagonal_slope:
        row[1] = GradedScalar.real(bc.diagonal_slope)
    column = dict(bc.g_coeffs)
    return row, column


def solve_tke(V: PolynomialPotential, bc, K: int) -> KernelSeries:
    """Series solution complete through total degree K.

    Each interior coefficient is a sum over graded contributions; one
    application of the recurrence multiplies by ``mu / hbar**2``.
    """
    if K < 1:
        raise ValidationError("truncation order K must be >= 1")
    row, column = boundary_to_axis_coefficients(bc)
    diff = list(potential_difference_expand(V))

    coeffs: dict[tuple[int, int], list[GradedScalar]] = {}
    for m, a in row.items():
        if m <= K:
            coeffs[(m, 0)] = [a]
    for n, b in column.items():
        if n <= K:
            coeffs[(0, n)] = [b]

    for d in range(2, K + 1):
        for m in range(1, d):
            n = d - m
            factor = GradedScalar.real(Fraction(1, 2 * m * n), mu=1, hbar=-2)
            acc: dict[tuple[int, int], GradedScalar] = {}
            for (i, l), dv in diff:
                src = coeffs.get((m - 1 - i, n - 1 - l))
                if not src:
                    continue
                w = dv * factor
                for a in src:
                    t = w * a
                    acc[t.grade] = acc.get(t.grade, ZERO) + t
            vals = [c for _, c in sorted(acc.items()) if not c.is_zero()]
            if vals:
                coeffs[(m, n)] = vals

    return KernelSeries(((mn, c) for mn, vals in coeffs.items() for c in vals), K)


def _mixed_derivative(T: GradedPoly) -> BivariatePolynomial:
    return BivariatePolynomial(((m - 1, n - 1), c * (m * n)) for (m, n), c in T if m and n)


def tke_residual(T: GradedPoly, V: PolynomialPotential) -> BivariatePolynomial:
    """``-(2 hbar^2/mu) T_uv + [V((u+v)/2) - V((u-v)/2)] T`` computed exactly."""
    kinetic = _mixed_derivative(T).scale(GradedScalar.real(-2, mu=-1, hbar=2))
    diff = potential_difference_expand(V)
    return kinetic + diff * BivariatePolynomial(list(T))


def residual_vanishes(T: KernelSeries, V: PolynomialPotential) -> bool:
    """True when the residual has no term of total degree ``<= K - max(2, deg V)``."""
    bound = T.truncation_order - max(2, V.max_degree)
    return all(sum(e) > bound for e, _ in tke_residual(T, V))


@dataclass(frozen=True)
class ConjugacyReport:
    holds: bool
    lhs: GradedPoly
    violations: tuple[tuple[int, GradedScalar], ...]

    def __bool__(self) -> bool:
        return self.holds


def conjugacy_check(T: GradedPoly) -> ConjugacyReport:
    """Check the diagonal condition ``sum_m alpha_{m,0} 2^{m+1} m q^{m-1} = 1``.

    Holds exactly when ``alpha_{1,0} = 1/4`` at grade zero and every other
    ``alpha_{m,0}`` (m >= 1) vanishes.  ``alpha_{0,0}`` is unconstrained.
    """
    lhs = GradedPoly(1, (((m - 1,), c * (2 ** (m + 1) * m)) for (m, n), c in T if n == 0 and m >= 1))
    one = GradedPoly(1, [((0,), GradedScalar.real(1))])
    violations = []
    for (m, n), c in T:
        if n != 0 or m == 0:
            continue
        if m == 1 and c == GradedScalar.real(TOA_SLOPE):
            continue
        violations.append((m, c))
    if not any(m == 1 for m, _ in violations) and not T.coefficients(1, 0):
        violations.insert(0, (1, ZERO))
    return ConjugacyReport(lhs == one, lhs, tuple(violations))


@dataclass(frozen=True)
class SymmetryClass:
    hermitian: bool
    time_reversal: bool


def classify_symmetry(T: GradedPoly) -> SymmetryClass:
    """Coefficient-level Hermiticity ``T(u,v) = T*(u,-v)`` and time reversal ``T = T*``."""
    hermitian = all(
        (c.conjugate() if n % 2 == 0 else -c.conjugate()) == c for (m, n), c in T
    )
    time_reversal = all(c.is_real() for _, c in T)
    return SymmetryClass(hermitian, time_reversal)
