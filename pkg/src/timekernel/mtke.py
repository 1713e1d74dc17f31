"""Closed-form solutions of the modified time kernel equation.

The modified equation carries the source ``i hbar delta(v)`` instead of a
diagonal condition.  Integrating the source once gives the step data
``alpha H(v) - beta H(-v)`` with ``alpha + beta = 1``, and the general
solution is built from

    (mu / 2 i hbar) u [alpha H(v) - beta H(-v)] + f(u) + g(v)

by successive approximation.  Here ``f`` and ``g`` are restricted to sums of
``c x^k w(x)`` with ``w`` in {1, sgn, H(x), H(-x)}; that family is closed under
the moment integral ``x -> int_0^x y F(y) dy`` needed by the oscillator case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import PreconditionError, ValidationError
from .phase_space import PhaseSpaceSeries
from .scalar import GradedScalar, ZERO, as_fraction
from .series import GradedPoly
from .weights import WEIGHT_ORDER, Weight


@dataclass(frozen=True)
class PiecewiseTerm:
    """``coeff * x**degree * weight(x)`` in the variable ``var`` ('u' or 'v')."""

    var: str
    degree: int
    weight: Weight
    coeff: GradedScalar

    def __post_init__(self):
        if self.var not in ("u", "v"):
            raise ValidationError(f"piecewise variable must be 'u' or 'v', got {self.var!r}")
        if not isinstance(self.degree, int) or self.degree < 0:
            raise ValidationError(f"piecewise degree must be an integer >= 0, got {self.degree!r}")
        object.__setattr__(self, "weight", Weight.parse(self.weight))
        object.__setattr__(self, "coeff", GradedScalar.coerce(self.coeff))

    def moment(self) -> PiecewiseTerm:
        """``int_0^x y * term(y) dy``; the weight keeps its support."""
        k = self.degree + 2
        return PiecewiseTerm(self.var, k, self.weight, self.coeff * Fraction(1, k))

    def evaluate(self, x, side, mu_value: float = 1.0, hbar_value: float = 1.0):
        """Numeric value; ``side`` (+1/-1, scalar or array) picks the one-sided limit at 0."""
        x = np.asarray(x, dtype=float)
        side = np.broadcast_to(np.asarray(side), x.shape)
        w = np.where(side > 0, self.weight.sided(1), self.weight.sided(-1))
        return self.coeff.value(mu_value, hbar_value) * x**self.degree * w

    def to_json(self) -> dict:
        return {"degree": self.degree, "weight": self.weight.value, "coeff": self.coeff.to_json()}

    @classmethod
    def from_json(cls, var: str, obj) -> PiecewiseTerm:
        if not isinstance(obj, dict) or "degree" not in obj:
            raise ValidationError(f"piecewise term needs degree, weight, coeff: {obj!r}")
        deg = obj["degree"]
        if not isinstance(deg, int) or isinstance(deg, bool):
            raise ValidationError(f"piecewise degree must be an integer, got {deg!r}")
        return cls(var, deg, Weight.parse(obj.get("weight", "one")), GradedScalar.from_json(obj.get("coeff", "1")))


def moment_family(terms, J: int) -> list[list[PiecewiseTerm]]:
    """``[F_0, ..., F_J]`` with ``F_0 = terms`` and ``F_s`` the moment integral of ``F_{s-1}``."""
    family = [list(terms)]
    for _ in range(J):
        family.append([t.moment() for t in family[-1]])
    return family


def _sided_polys(terms) -> tuple[GradedPoly, GradedPoly]:
    """Restrictions of a piecewise function to x > 0 and x < 0 as polynomials."""
    plus, minus = [], []
    for t in terms:
        plus.append(((t.degree,), t.coeff * t.weight.sided(1)))
        minus.append(((t.degree,), t.coeff * t.weight.sided(-1)))
    return GradedPoly(1, plus), GradedPoly(1, minus)


def _reflect(poly: GradedPoly) -> GradedPoly:
    """``P(x) -> P(-x)``."""
    return GradedPoly(1, ((e, c if e[0] % 2 == 0 else -c) for e, c in poly))


@dataclass(frozen=True)
class DistributionBoundary:
    """Step weights (alpha, beta) and the piecewise data f(u), g(v).

    With ``require_f_vanishing_at_origin`` set, ``f(0) = 0`` is enforced so
    that the delta term of the image reads as a stationary particle at the
    arrival point.
    """

    alpha: GradedScalar
    beta: GradedScalar
    f_terms: tuple[PiecewiseTerm, ...] = ()
    g_terms: tuple[PiecewiseTerm, ...] = ()
    require_f_vanishing_at_origin: bool = False

    def __post_init__(self):
        alpha = GradedScalar.coerce(self.alpha)
        beta = GradedScalar.coerce(self.beta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "f_terms", tuple(self.f_terms))
        object.__setattr__(self, "g_terms", tuple(self.g_terms))
        for c in (alpha, beta):
            if c.grade != (0, 0):
                raise ValidationError("alpha and beta must be pure numbers (grade 0)")
        if alpha + beta != GradedScalar.real(1):
            raise ValidationError(f"alpha + beta must equal 1, got {alpha + beta!r}")
        if any(t.var != "u" for t in self.f_terms):
            raise ValidationError("f terms must be functions of u")
        if any(t.var != "v" for t in self.g_terms):
            raise ValidationError("g terms must be functions of v")
        if self.require_f_vanishing_at_origin:
            plus, minus = _sided_polys(self.f_terms)
            if plus.coefficients(0) or minus.coefficients(0):
                raise ValidationError("f(0) must vanish for the stationary-particle reading")

    @classmethod
    def symmetric(cls, f_terms=(), g_terms=()) -> DistributionBoundary:
        half = GradedScalar.real(Fraction(1, 2))
        return cls(half, half, tuple(f_terms), tuple(g_terms))

    def to_json(self) -> dict:
        out = {
            "alpha": self.alpha.to_json(),
            "beta": self.beta.to_json(),
            "f": [t.to_json() for t in self.f_terms],
            "g": [t.to_json() for t in self.g_terms],
        }
        if self.require_f_vanishing_at_origin:
            out["stationary"] = True
        return out

    @classmethod
    def from_json(cls, obj) -> DistributionBoundary:
        if not isinstance(obj, dict) or "alpha" not in obj or "beta" not in obj:
            raise ValidationError("distribution boundary needs alpha and beta")
        unknown = set(obj) - {"alpha", "beta", "f", "g", "stationary"}
        if unknown:
            raise ValidationError(f"unknown distribution boundary fields {sorted(unknown)}")
        return cls(
            GradedScalar.from_json(obj["alpha"]),
            GradedScalar.from_json(obj["beta"]),
            tuple(PiecewiseTerm.from_json("u", t) for t in obj.get("f", [])),
            tuple(PiecewiseTerm.from_json("v", t) for t in obj.get("g", [])),
            bool(obj.get("stationary", False)),
        )


PARTS = ("heaviside", "f", "g")


class DistributionKernel:
    """Sum of ``c u^m v^n w_u(u) w_v(v)`` terms tagged by the part they come from.

    ``heaviside`` holds the step-data sums, ``f`` the ``v^(2j) F_j(u)`` sums
    and ``g`` the ``u^(2j) G_j(v)`` sums.  ``truncation_order`` is the last
    successive-approximation index J kept, or None for an exact solution.
    """

    def __init__(self, terms, truncation_order: int | None = None):
        groups: dict[tuple[str, Weight, Weight], list] = {}
        for (part, m, n, wu, wv), c in terms:
            if part not in PARTS:
                raise ValidationError(f"unknown kernel part {part!r}")
            groups.setdefault((part, Weight(wu), Weight(wv)), []).append(((m, n), c))
        order = sorted(groups, key=lambda k: (PARTS.index(k[0]), WEIGHT_ORDER[k[1]], WEIGHT_ORDER[k[2]]))
        self.groups: dict[tuple[str, Weight, Weight], GradedPoly] = {}
        for key in order:
            poly = GradedPoly(2, groups[key])
            if poly:
                self.groups[key] = poly
        self.truncation_order = truncation_order

    def terms(self):
        for (part, wu, wv), poly in self.groups.items():
            for (m, n), c in poly:
                yield (part, m, n, wu, wv), c

    def part(self, name: str) -> DistributionKernel:
        return DistributionKernel(((k, c) for k, c in self.terms() if k[0] == name), self.truncation_order)

    def has_heaviside_part(self) -> bool:
        return any(k[0] == "heaviside" for k in self.groups)

    def sgn_part(self) -> tuple[GradedPoly, GradedPoly]:
        """Split the heaviside part into ``a u^m v^n sgn(v)`` plus a remainder.

        Returns ``(sgn_coefficients, remainder)`` where the remainder is the
        symmetric combination ``b u^m v^n [H(v) + H(-v)]`` left over.
        """
        plus = self.groups.get(("heaviside", Weight.ONE, Weight.HPLUS), GradedPoly(2))
        minus = self.groups.get(("heaviside", Weight.ONE, Weight.HMINUS), GradedPoly(2))
        half = Fraction(1, 2)
        sgn = (plus - minus).scale(half)
        rest = (plus + minus).scale(half)
        return sgn, rest

    def evaluate(self, u, v, mu_value: float = 1.0, hbar_value: float = 1.0, u_side=None, v_side=None):
        """Numeric values on arrays; sides default to ``sign`` with 0 mapped to +1."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        shape = np.broadcast(u, v).shape
        us = np.where(u < 0, -1, 1) if u_side is None else np.broadcast_to(u_side, u.shape)
        vs = np.where(v < 0, -1, 1) if v_side is None else np.broadcast_to(v_side, v.shape)
        out = np.zeros(shape, dtype=complex)
        for (part, wu, wv), poly in self.groups.items():
            fu = np.where(us > 0, wu.sided(1), wu.sided(-1))
            fv = np.where(vs > 0, wv.sided(1), wv.sided(-1))
            acc = np.zeros(shape, dtype=complex)
            for (m, n), c in poly:
                acc = acc + c.value(mu_value, hbar_value) * u**m * v**n
            out = out + acc * fu * fv
        return out

    def to_json(self) -> dict:
        return {
            "truncation_order": self.truncation_order,
            "terms": [[part, m, n, wu.value, wv.value, c.hbar_exp, c.to_json()] for (part, m, n, wu, wv), c in self.terms()],
        }

    @classmethod
    def from_json(cls, obj) -> DistributionKernel:
        terms = []
        for i, rec in enumerate(obj.get("terms", [])):
            if not isinstance(rec, list) or len(rec) != 7:
                raise ValidationError(f"terms[{i}]: expected [part, m, n, wu, wv, hbar, scalar]")
            part, m, n, wu, wv, _, s = rec
            terms.append(((part, m, n, Weight.parse(wu), Weight.parse(wv)), GradedScalar.from_json(s)))
        return cls(terms, obj.get("truncation_order"))

    def __eq__(self, other):
        if not isinstance(other, DistributionKernel):
            return NotImplemented
        return self.groups == other.groups and self.truncation_order == other.truncation_order

    def __repr__(self):
        return f"DistributionKernel({len(list(self.terms()))} terms, J={self.truncation_order})"


def _step_prefactor() -> GradedScalar:
    """``mu / (2 i hbar)``."""
    return GradedScalar.imag(Fraction(-1, 2), mu=1, hbar=-1)


def mtke_free_solution(dbc: DistributionBoundary) -> DistributionKernel:
    """Exact free-particle solution ``(mu/2i hbar) u [alpha H(v) - beta H(-v)] + f(u) + g(v)``."""
    return mtke_ho_solution(dbc, 0, 0, _free=True)


def mtke_ho_solution(dbc: DistributionBoundary, omega, J: int, _free: bool = False) -> DistributionKernel:
    """Oscillator solution through successive-approximation index J.

    With ``k = (mu omega / 2 hbar)^2``::

        (mu/2i hbar) sum_j k^j u^(2j+1) v^(2j) / (2j+1)! [alpha H(v) - beta H(-v)]
        + sum_j k^j v^(2j) F_j(u) / (2^j j!) + sum_j k^j u^(2j) G_j(v) / (2^j j!)
    """
    if J < 0:
        raise PreconditionError("J must be >= 0")
    omega = as_fraction(omega)
    pref = _step_prefactor()
    F = moment_family(dbc.f_terms, J)
    G = moment_family(dbc.g_terms, J)
    terms = []
    for j in range(J + 1):
        kj = GradedScalar.real((omega / 2) ** (2 * j), mu=2 * j, hbar=-2 * j)
        step = pref * kj * Fraction(1, math.factorial(2 * j + 1))
        terms.append((("heaviside", 2 * j + 1, 2 * j, Weight.ONE, Weight.HPLUS), step * dbc.alpha))
        terms.append((("heaviside", 2 * j + 1, 2 * j, Weight.ONE, Weight.HMINUS), -(step * dbc.beta)))
        w = kj * Fraction(1, 2**j * math.factorial(j))
        for t in F[j]:
            terms.append((("f", t.degree, 2 * j, t.weight, Weight.ONE), w * t.coeff))
        for t in G[j]:
            terms.append((("g", 2 * j, t.degree, Weight.ONE, t.weight), w * t.coeff))
    return DistributionKernel(terms, None if _free else J)


@dataclass(frozen=True)
class MTKESymmetry:
    hermitian: bool
    time_reversal: bool
    both: bool


def mtke_classify(dbc: DistributionBoundary) -> MTKESymmetry:
    """Exact symmetry classification of the boundary data.

    Hermitian: ``alpha = beta*`` (so both real parts are 1/2), ``f = f*``,
    ``g(v) = g*(-v)``.  Time reversal: alpha, beta real, ``f = -f*``, ``g = -g*``.
    """
    f_plus, f_minus = _sided_polys(dbc.f_terms)
    g_plus, g_minus = _sided_polys(dbc.g_terms)
    a, b = dbc.alpha, dbc.beta

    hermitian = (
        a == b.conjugate()
        and f_plus == f_plus.conjugate()
        and f_minus == f_minus.conjugate()
        and g_plus == _reflect(g_minus).conjugate()
    )
    time_reversal = (
        a.is_real()
        and b.is_real()
        and f_plus == -f_plus.conjugate()
        and f_minus == -f_minus.conjugate()
        and g_plus == -g_plus.conjugate()
        and g_minus == -g_minus.conjugate()
    )
    return MTKESymmetry(hermitian, time_reversal, hermitian and time_reversal)


def delta_jump_check(K: DistributionKernel, mu_value=1.0, hbar_value=1.0) -> complex:
    """Jump of ``d T / d u`` across ``v = 0`` next to ``u = 0``.

    Only ``c u w_u(u) w_v(v)`` terms (m = 1, n = 0) contribute; for every
    valid solution the result is ``mu (alpha + beta) / (2 i hbar)``.
    """
    if not K.has_heaviside_part():
        raise PreconditionError("kernel has no step (heaviside) part")
    total = ZERO
    jumps = {}
    for (part, m, n, wu, wv), c in K.terms():
        if m != 1 or n != 0:
            continue
        t = c * (wu.sided(1) * wv.jump())
        jumps[t.grade] = jumps.get(t.grade, ZERO) + t
    return complex(sum(t.value(mu_value, hbar_value) for t in jumps.values()))


def weyl_transform_distribution(K: DistributionKernel) -> PhaseSpaceSeries:
    """Image of the kernel itself (no sgn prefactor) under the Wigner-Weyl map.

    With ``u = 2q`` and the Fourier variable ``p / hbar``::

        v^n        -> 2 pi i^n hbar^(n+1) delta^(n)(p)
        v^n sgn v  -> 2 n! hbar^(n+1) / (i p)^(n+1)
        v^n H(+-v) -> pi i^n hbar^(n+1) delta^(n)(p) +- n! hbar^(n+1) / (i p)^(n+1)

    Delta terms of the returned series carry an implicit factor of pi.
    """
    regular = []
    delta = []
    for (part, m, n, wu, wv), c in K.terms():
        base = c * 2**m
        base = base.with_grade(base.mu_exp, base.hbar_exp + n + 1)
        reg = {Weight.ONE: 0, Weight.SGN: 2, Weight.HPLUS: 1, Weight.HMINUS: -1}[wv]
        dl = {Weight.ONE: 2, Weight.SGN: 0, Weight.HPLUS: 1, Weight.HMINUS: 1}[wv]
        if reg:
            if wu is not Weight.ONE:
                raise ValidationError("a q-weighted regular term cannot be represented")
            regular.append(((m, n + 1), (base * (reg * math.factorial(n))).times_i_power(-(n + 1))))
        if dl:
            delta.append(((m, n, wu), (base * dl).times_i_power(n)))
    return PhaseSpaceSeries(regular, delta)
