"""Wigner-Weyl images of kernels as formal phase-space series.

A :class:`PhaseSpaceSeries` holds regular terms ``c q^m p^-j`` (formal in
1/p, valid off ``p = 0``) and delta terms ``c q^m w(q) delta^(d)(p)``.  All
transforms are exact term rewriting; nothing is integrated numerically.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from fractions import Fraction
from math import comb

from .errors import DivergenceError, PreconditionError, ValidationError
from .potential import PolynomialPotential
from .scalar import GradedScalar
from .series import GradedPoly
from .weights import WEIGHT_ORDER, Weight


class PhaseSpaceSeries:
    """Sum of regular terms keyed by (m, j) and delta terms keyed by (m, d, q-weight)."""

    __slots__ = ("regular", "_delta")

    def __init__(self, regular: Iterable = (), delta: Iterable = ()):
        """``regular``: ``((m, j), scalar)`` pairs; ``delta``: ``((m, d, weight), scalar)`` pairs."""
        self.regular = regular if isinstance(regular, GradedPoly) else GradedPoly(2, regular)
        grouped: dict[Weight, list] = {}
        if isinstance(delta, dict):
            for w, poly in delta.items():
                grouped.setdefault(Weight(w), []).extend(poly)
        else:
            for key, c in delta:
                m, d, *rest = key
                w = Weight(rest[0]) if rest else Weight.ONE
                grouped.setdefault(w, []).append(((m, d), c))
        self._delta = {}
        for w in sorted(grouped, key=WEIGHT_ORDER.get):
            poly = GradedPoly(2, grouped[w])
            if poly:
                self._delta[w] = poly

    # access
    @property
    def delta(self) -> dict[Weight, GradedPoly]:
        return dict(self._delta)

    def delta_items(self):
        for w, poly in self._delta.items():
            for (m, d), c in poly:
                yield (m, d, w), c

    def has_delta_terms(self) -> bool:
        return bool(self._delta)

    def is_zero(self) -> bool:
        return not self.regular and not self._delta

    def all_scalars(self):
        yield from (c for _, c in self.regular)
        yield from (c for _, c in self.delta_items())

    def is_real(self) -> bool:
        return all(c.is_real() for c in self.all_scalars())

    def hbar_grades(self) -> set[int]:
        return {c.hbar_exp for c in self.all_scalars()}

    # algebra
    def _combine(self, other: PhaseSpaceSeries, sign: int) -> PhaseSpaceSeries:
        if not isinstance(other, PhaseSpaceSeries):
            return NotImplemented
        regular = self.regular + other.regular if sign > 0 else self.regular - other.regular
        delta = list(self.delta_items()) + [(k, c if sign > 0 else -c) for k, c in other.delta_items()]
        return PhaseSpaceSeries(regular, delta)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return self.scale(GradedScalar.real(-1))

    def scale(self, factor) -> PhaseSpaceSeries:
        factor = GradedScalar.coerce(factor)
        return PhaseSpaceSeries(self.regular.scale(factor), [(k, c * factor) for k, c in self.delta_items()])

    def filter(self, regular=None, delta=None) -> PhaseSpaceSeries:
        """Keep regular terms with ``regular(m, j, c)`` and delta terms with ``delta(m, d, w, c)``."""
        reg = [((m, j), c) for (m, j), c in self.regular if regular is None or regular(m, j, c)]
        dl = [(k, c) for k, c in self.delta_items() if delta is None or delta(*k, c)]
        return PhaseSpaceSeries(reg, dl)

    def grade_part(self, hbar_exp: int) -> PhaseSpaceSeries:
        return self.filter(lambda m, j, c: c.hbar_exp == hbar_exp, lambda m, d, w, c: c.hbar_exp == hbar_exp)

    def regular_part(self) -> PhaseSpaceSeries:
        return PhaseSpaceSeries(self.regular)

    def delta_part(self) -> PhaseSpaceSeries:
        return PhaseSpaceSeries((), list(self.delta_items()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhaseSpaceSeries):
            return NotImplemented
        return self.regular == other.regular and self._delta == other._delta

    def __hash__(self):
        return hash((self.regular, tuple(self._delta.items())))

    def __repr__(self) -> str:
        reg = " + ".join(f"{c!r}*q^{m}/p^{j}" for (m, j), c in self.regular) or "0"
        if not self._delta:
            return f"PhaseSpaceSeries({reg})"
        dl = " + ".join(
            f"{c!r}*q^{m}{'' if w is Weight.ONE else '*' + w.value}(q)*delta^({d})(p)"
            for (m, d, w), c in self.delta_items()
        )
        return f"PhaseSpaceSeries({reg} | {dl})"

    # numerics
    def evaluate(self, q: float, p: float, mu_value: float = 1.0, hbar_value: float = 1.0) -> complex:
        """Value at a point with ``p != 0``, where every delta term vanishes."""
        if p == 0:
            raise PreconditionError("phase-space series are formal in 1/p; p = 0 is excluded")
        total = 0j
        for (m, j), c in self.regular:
            total += c.value(mu_value, hbar_value) * q**m / p**j
        return total

    # serialization
    def to_json(self) -> dict:
        return {
            "regular": [[m, j, c.hbar_exp, c.to_json()] for (m, j), c in self.regular],
            "delta": [[m, d, w.value, c.hbar_exp, c.to_json()] for (m, d, w), c in self.delta_items()],
        }

    @classmethod
    def from_json(cls, obj) -> PhaseSpaceSeries:
        if not isinstance(obj, dict):
            raise ValidationError("phase-space series must be a JSON object")
        regular = GradedPoly.terms_from_json(2, obj.get("regular", []))
        delta = []
        for i, rec in enumerate(obj.get("delta", [])):
            if not isinstance(rec, list) or len(rec) != 5:
                raise ValidationError(f"delta[{i}]: expected [m, d, weight, hbar, scalar]")
            m, d, w, h, s = rec
            c = GradedScalar.from_json(s)
            if not c.is_zero() and c.hbar_exp != h:
                raise ValidationError(f"delta[{i}]: hbar {h} disagrees with scalar grade")
            delta.append(((m, d, Weight.parse(w)), c))
        return cls(regular, delta)

    def csv_rows(self) -> list[list]:
        """Rows ``(m, j_or_d, kind, hbar, mu, re, im, q_weight)``."""
        rows = []
        for (m, j), c in self.regular:
            rows.append([m, j, "regular", c.hbar_exp, c.mu_exp, _fmt(c.re), _fmt(c.im), "one"])
        for (m, d, w), c in self.delta_items():
            rows.append([m, d, "delta", c.hbar_exp, c.mu_exp, _fmt(c.re), _fmt(c.im), w.value])
        return rows

    CSV_HEADER = ["m", "j_or_d", "kind", "hbar", "mu", "re", "im", "q_weight"]


def _fmt(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


ClassicalTOASeries = PhaseSpaceSeries


def weyl_transform_sgn(T: GradedPoly) -> PhaseSpaceSeries:
    """Image of the kernel ``(mu / i hbar) T(u, v) sgn(v)``.

    Each monomial maps as::

        alpha u^m v^n  ->  mu alpha 2^(m+1) n! hbar^n q^m / (i^(n+2) p^(n+1))
    """
    out = []
    for (m, n), c in T:
        if m < 0 or n < 0:
            raise ValidationError(f"malformed series term u^{m} v^{n}")
        k = c * (2 ** (m + 1) * math.factorial(n))
        k = GradedScalar(k.re, k.im, c.mu_exp + 1, c.hbar_exp + n).times_i_power(-(n + 2))
        out.append(((m, n + 1), k))
    return PhaseSpaceSeries(out)


def local_toa_series(V: PolynomialPotential, k_max: int) -> PhaseSpaceSeries:
    """Local classical arrival time at the origin, ``sum_{k<=k_max} (-1)^k T_k``.

    ``T_0 = -mu q / p`` and ``T_k = (mu/p) int_q^0 V'(q') d_p T_{k-1}(q', p) dq'``.
    """
    if k_max < 0:
        raise PreconditionError("k_max must be >= 0")
    dV = list(V.derivative_poly())
    term = GradedPoly(2, [((1, 1), GradedScalar.real(-1, mu=1))])
    total = list(term)
    for k in range(1, k_max + 1):
        nxt = []
        for (m, j), c in term:
            dp = c * (-j)  # d/dp of p^-j
            for (r,), a in dV:
                power = m + r
                # int_q^0 q'^power dq' = -q^(power+1)/(power+1); times mu/p
                coeff = dp * a * Fraction(-1, power + 1)
                coeff = coeff.with_grade(coeff.mu_exp + 1, coeff.hbar_exp)
                nxt.append(((power + 1, j + 2), coeff))
        term = GradedPoly(2, nxt)
        sign = -1 if k % 2 else 1
        total.extend((e, c * sign) for e, c in term)
        if not term:
            break
    return PhaseSpaceSeries(total)


def inverse_hamiltonian_series(V: PolynomialPotential, N: int, j_max: int) -> PhaseSpaceSeries:
    """``H^-N`` expanded about the free Hamiltonian ``p^2 / 2 mu`` through ``V^j_max``.

    ``(2mu/p^2)^N sum_k (-1)^k C(N+k-1, k) (2mu/p^2)^k V(q)^k``
    """
    if N < 1:
        raise PreconditionError("N must be >= 1")
    if j_max < 0:
        raise PreconditionError("j_max must be >= 0")
    Vq = V.as_poly()
    power = GradedPoly(1, [((0,), GradedScalar.real(1))])
    out = []
    for k in range(j_max + 1):
        if k:
            power = power * Vq
            if not power:
                break
        pref = GradedScalar.real((-1) ** k * comb(N + k - 1, k) * 2 ** (N + k), mu=N + k)
        out.extend(((m, 2 * (N + k)), c * pref) for (m,), c in power)
    return PhaseSpaceSeries(out)


def classical_limit(S: PhaseSpaceSeries) -> PhaseSpaceSeries:
    """Grade-zero part; raises if any term carries a negative power of hbar."""
    negative = sorted(h for h in S.hbar_grades() if h < 0)
    if negative:
        raise DivergenceError(f"series has negative hbar grades {negative}; no classical limit")
    return S.grade_part(0)


def quantum_corrections(S: PhaseSpaceSeries) -> PhaseSpaceSeries:
    """Everything that :func:`classical_limit` discards."""
    return S.filter(lambda m, j, c: c.hbar_exp != 0, lambda m, d, w, c: c.hbar_exp != 0)


def shift_prefactor(N: int, beta) -> GradedScalar:
    """``beta (2N-1)! / 2^(N-1) * hbar^(2N-1) / mu^(3(N-1))``."""
    beta = Fraction(beta)
    return GradedScalar.real(
        beta * math.factorial(2 * N - 1) / 2 ** (N - 1), mu=-3 * (N - 1), hbar=2 * N - 1
    )


def within_kernel_order(S: PhaseSpaceSeries, order: int) -> PhaseSpaceSeries:
    """Regular terms that a kernel series complete through total degree ``order`` determines.

    A kernel monomial ``u^m v^n`` lands on ``q^m p^-(n+1)``, so the bound is ``m + j - 1 <= order``.
    """
    return S.filter(lambda m, j, c: m + j - 1 <= order, lambda *a: False)
