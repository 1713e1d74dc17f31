"""Tables behind the leading-order inverse-Hamiltonian shift for general potentials.

``C_{m,j}`` obeys ``C_{m,0} = delta_{m,0}`` and
``C_{m,j} = (1/m) sum_{s=1}^m s a_s C_{m-s,j-1}``; it satisfies
``j! sum_m C_{m,j} q^m = V(q)^j``.  The leading shift coefficients are

    alpha0_{m,j} = -i^(2N-1) beta / mu^(2N-2) * G_j * C_{m,j} / 2^m,
    G_j = Gamma(N+1/2) / Gamma(N+1/2+j) = prod_{r<j} 2 / (2N+1+2r),

and enter the kernel as ``(mu / 2 hbar^2)^j alpha0_{m,j} u^m v^(2N-1+2j)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConsistencyError, PreconditionError
from .frobenius import ShiftSpec
from .phase_space import (
    PhaseSpaceSeries,
    inverse_hamiltonian_series,
    shift_prefactor,
    weyl_transform_sgn,
)
from .potential import PolynomialPotential
from .scalar import GradedScalar
from .series import GradedPoly, KernelSeries

_ONE = GradedPoly(0, [((), GradedScalar.real(1))])
_ZERO = GradedPoly(0)


@dataclass(frozen=True)
class CoefficientTable:
    entries: dict[tuple[int, int], GradedPoly]
    potential: PolynomialPotential
    m_max: int
    j_max: int

    def __getitem__(self, key: tuple[int, int]) -> GradedPoly:
        return self.entries.get(key, _ZERO)

    def csv_rows(self) -> list[list]:
        return [
            [m, j, _fmt(c.re), _fmt(c.im), c.mu_exp, c.hbar_exp]
            for (m, j), e in sorted(self.entries.items())
            for _, c in e
        ]


def _fmt(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def build_c_table(V: PolynomialPotential, m_max: int, j_max: int) -> CoefficientTable:
    a = {s: GradedPoly(0, [((), c)]) for s, c in V.coeffs.items()}
    entries: dict[tuple[int, int], GradedPoly] = {}
    for m in range(m_max + 1):
        entries[(m, 0)] = _ONE if m == 0 else _ZERO
    for j in range(1, j_max + 1):
        entries[(0, j)] = _ZERO
        for m in range(1, m_max + 1):
            acc = _ZERO
            for s in range(1, m + 1):
                if s in a:
                    prev = entries[(m - s, j - 1)]
                    if prev:
                        acc = acc + (a[s] * prev).scale(Fraction(s, m))
            entries[(m, j)] = acc
    return CoefficientTable({k: v for k, v in entries.items() if v}, V, m_max, j_max)


@dataclass(frozen=True)
class IdentityReport:
    holds: bool
    failures: tuple[int, ...]
    max_discrepancy_terms: int

    def __bool__(self) -> bool:
        return self.holds


def _brute_power(V: PolynomialPotential, k: int, m_max: int) -> GradedPoly:
    """``V(q)^k`` by repeated schoolbook multiplication, truncated at degree m_max."""
    coeffs = [(s, c) for s, c in V.coeffs.items()]
    result = {0: [GradedScalar.real(1)]}
    for _ in range(k):
        nxt: dict[int, list[GradedScalar]] = {}
        for deg, cs in result.items():
            for s, a in coeffs:
                if deg + s <= m_max:
                    nxt.setdefault(deg + s, []).extend(c * a for c in cs)
        result = nxt
    return GradedPoly(1, (((d,), c) for d, cs in result.items() for c in cs))


def power_identity_check(V: PolynomialPotential, k_max: int, m_max: int) -> IdentityReport:
    """Compare ``k! sum_m C_{m,k} q^m`` with ``V(q)^k`` for every ``k <= k_max``."""
    table = build_c_table(V, m_max, k_max)
    failures = []
    worst = 0
    for k in range(k_max + 1):
        lhs = GradedPoly(
            1,
            (((m,), c * math.factorial(k)) for m in range(m_max + 1) for _, c in table[(m, k)]),
        )
        rhs = _brute_power(V, k, m_max)
        diff = lhs - rhs
        if diff:
            failures.append(k)
            worst = max(worst, len(diff))
    return IdentityReport(not failures, tuple(failures), worst)


def gamma_ratio(N: int, j: int) -> Fraction:
    """``Gamma(N + 1/2) / Gamma(N + 1/2 + j)`` as an exact rational."""
    out = Fraction(1)
    for r in range(j):
        out *= Fraction(2, 2 * N + 1 + 2 * r)
    return out


@dataclass(frozen=True)
class LeadingShiftTable:
    entries: dict[tuple[int, int], GradedPoly]
    potential: PolynomialPotential
    N: int
    beta: Fraction
    m_max: int
    j_max: int

    def __getitem__(self, key: tuple[int, int]) -> GradedPoly:
        return self.entries.get(key, _ZERO)

    def series_coefficient(self, m: int, j: int) -> GradedPoly:
        """Coefficient of ``u^m v^(2N-1+2j)`` in the kernel: ``(mu/2hbar^2)^j alpha0_{m,j}``."""
        return self[(m, j)].scale(GradedScalar.real(Fraction(1, 2**j), mu=j, hbar=-2 * j))

    def as_kernel_series(self, j_max: int | None = None) -> KernelSeries:
        j_max = self.j_max if j_max is None else j_max
        n0 = 2 * self.N - 1
        terms = [
            ((m, n0 + 2 * j), c)
            for (m, j) in self.entries
            if j <= j_max
            for _, c in self.series_coefficient(m, j)
        ]
        order = max((sum(e) for e, _ in terms), default=0)
        return KernelSeries(terms, order)

    def csv_rows(self) -> list[list]:
        return [
            [m, j, _fmt(c.re), _fmt(c.im), c.mu_exp, c.hbar_exp]
            for (m, j), e in sorted(self.entries.items())
            for _, c in e
        ]


def _leading_by_recurrence(V, N, lead, m_max, j_max):
    """Direct iteration of ``alpha0_{m,j} = sum_n n a_n / 2^(n-1) alpha0_{m-n,j-1} / (m (2N-1+2j))``."""
    a = {s: GradedPoly(0, [((), c)]) for s, c in V.coeffs.items()}
    table = {(0, 0): lead}
    for j in range(1, j_max + 1):
        for m in range(1, m_max + 1):
            acc = _ZERO
            for n in range(1, m + 1):
                prev = table.get((m - n, j - 1))
                if n in a and prev:
                    w = Fraction(n, 2 ** (n - 1) * m * (2 * N - 1 + 2 * j))
                    acc = acc + (a[n] * prev).scale(w)
            if acc:
                table[(m, j)] = acc
    return table


def leading_shift_table(V: PolynomialPotential, N: int, beta, m_max: int, j_max: int) -> LeadingShiftTable:
    """Leading-order shift coefficients, computed twice and cross-checked.

    Raises :class:`ConsistencyError` if the closed form through ``C_{m,j}``
    and the direct recurrence disagree anywhere.
    """
    if N < 1:
        raise PreconditionError("N must be >= 1")
    shift = ShiftSpec(N, beta)
    lead = GradedPoly(0, [((), shift.axis_coefficient())])
    c_table = build_c_table(V, m_max, j_max)
    closed = {}
    for (m, j), c in c_table.entries.items():
        val = (lead * c).scale(gamma_ratio(N, j) / 2**m)
        if val:
            closed[(m, j)] = val
    direct = _leading_by_recurrence(V, N, lead, m_max, j_max)
    if closed != direct:
        bad = sorted(set(closed) ^ set(direct) | {k for k in closed if k in direct and closed[k] != direct[k]})
        raise ConsistencyError(f"closed form and recurrence disagree at {bad[:5]}")
    return LeadingShiftTable(closed, V, N, shift.beta, m_max, j_max)


@dataclass(frozen=True)
class ShiftCheckReport:
    holds: bool
    transformed: PhaseSpaceSeries
    expected: PhaseSpaceSeries

    def __bool__(self) -> bool:
        return self.holds


def leading_shift_ww_check(table: LeadingShiftTable, j_max: int) -> ShiftCheckReport:
    """Transform the leading shift kernel and compare it with the scaled ``H^-N`` expansion.

    Both sides are restricted to ``j <= j_max`` (p-power ``<= 2(N + j_max)``)
    and ``m <= table.m_max``; the table must cover ``m_max >= j_max * deg V``
    for the comparison to be complete.
    """
    if j_max > table.j_max:
        raise PreconditionError(f"j_max {j_max} exceeds table range {table.j_max}")
    N = table.N
    p_cap = 2 * (N + j_max)

    def keep(m, j, c):
        return j <= p_cap and m <= table.m_max

    kernel = table.as_kernel_series(j_max)
    ww = weyl_transform_sgn(kernel).grade_part(2 * N - 1).filter(keep)
    target = inverse_hamiltonian_series(table.potential, N, j_max)
    target = target.scale(shift_prefactor(N, table.beta)).filter(keep)
    return ShiftCheckReport(ww == target, ww, target)
