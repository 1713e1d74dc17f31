"""Sparse polynomials whose coefficients are graded Gaussian rationals.

Every term is stored under the key ``(*exponents, hbar_exp, mu_exp)`` so that
contributions of different (mu, hbar) grade at the same monomial live side by
side.  Iteration always follows the canonical order: total degree, then the
exponents lexicographically, then hbar_exp, then mu_exp.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from fractions import Fraction

import numpy as np

from .errors import PreconditionError, ValidationError
from .scalar import GradedScalar, ZERO


def _sort_key(key: tuple[int, ...]) -> tuple:
    exps = key[:-2]
    return (sum(exps), *exps, key[-2], key[-1])


class GradedPoly:
    """Immutable sparse polynomial in ``nvars`` variables over graded scalars.

    Build one from ``(exponents, scalar)`` pairs; duplicate monomials of
    equal grade are summed and zero results are dropped.
    """

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms: Iterable[tuple[tuple[int, ...], GradedScalar]] = ()):
        self.nvars = nvars
        acc: dict[tuple[int, ...], GradedScalar] = {}
        for exps, coeff in terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != nvars:
                raise ValidationError(f"expected {nvars} exponents, got {exps}")
            coeff = GradedScalar.coerce(coeff)
            if coeff.is_zero():
                continue
            key = (*exps, coeff.hbar_exp, coeff.mu_exp)
            acc[key] = acc.get(key, ZERO) + coeff
        self._terms = {k: acc[k] for k in sorted(acc, key=_sort_key) if not acc[k].is_zero()}

    @classmethod
    def _from_sorted(cls, nvars: int, terms: dict) -> GradedPoly:
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj._terms = terms
        return obj

    def _rewrap(self, terms: Iterable[tuple[tuple[int, ...], GradedScalar]]):
        return GradedPoly(self.nvars, terms)

    # access
    def __iter__(self) -> Iterator[tuple[tuple[int, ...], GradedScalar]]:
        for key, coeff in self._terms.items():
            yield key[:-2], coeff

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def keys(self) -> list[tuple[int, ...]]:
        """Full storage keys ``(*exponents, hbar_exp, mu_exp)`` in canonical order."""
        return list(self._terms)

    def coefficients(self, *exps: int) -> list[GradedScalar]:
        """All graded contributions at one monomial (possibly empty)."""
        exps = tuple(exps)
        return [c for key, c in self._terms.items() if key[:-2] == exps]

    def coefficient(self, *exps: int, hbar_exp: int | None = None) -> GradedScalar:
        """The single contribution at a monomial.

        With ``hbar_exp`` given, selects that hbar grade.  Raises if more than
        one grade remains.
        """
        found = [c for c in self.coefficients(*exps) if hbar_exp is None or c.hbar_exp == hbar_exp]
        if not found:
            return ZERO
        if len(found) > 1:
            raise PreconditionError(f"monomial {exps} carries several grades: {found}")
        return found[0]

    def total_degree(self) -> int:
        return max((sum(k[:-2]) for k in self._terms), default=-1)

    def hbar_grades(self) -> set[int]:
        return {k[-2] for k in self._terms}

    # algebra
    def __add__(self, other: GradedPoly):
        self._check_compatible(other)
        return self._rewrap(list(self) + list(other))

    def __sub__(self, other: GradedPoly):
        self._check_compatible(other)
        return self._rewrap(list(self) + [(e, -c) for e, c in other])

    def __neg__(self):
        return self._rewrap((e, -c) for e, c in self)

    def scale(self, factor) -> GradedPoly:
        factor = GradedScalar.coerce(factor)
        return self._rewrap((e, c * factor) for e, c in self)

    def __mul__(self, other):
        if isinstance(other, GradedPoly):
            self._check_compatible(other)
            out = []
            for e1, c1 in self:
                for e2, c2 in other:
                    out.append((tuple(a + b for a, b in zip(e1, e2)), c1 * c2))
            return self._rewrap(out)
        return self.scale(other)

    __rmul__ = scale

    def __pow__(self, k: int) -> GradedPoly:
        if k < 0:
            raise PreconditionError("negative power of a polynomial")
        result = self._rewrap([((0,) * self.nvars, GradedScalar.real(1))])
        for _ in range(k):
            result = result * self
        return result

    def conjugate(self):
        return self._rewrap((e, c.conjugate()) for e, c in self)

    def filter(self, predicate) -> GradedPoly:
        """Keep terms for which ``predicate(exponents, coeff)`` is true."""
        return self._rewrap((e, c) for e, c in self if predicate(e, c))

    def grade_part(self, hbar_exp: int):
        return self.filter(lambda e, c: c.hbar_exp == hbar_exp)

    def map_exponents(self, fn) -> GradedPoly:
        return self._rewrap((fn(e), c) for e, c in self)

    def _check_compatible(self, other):
        if not isinstance(other, GradedPoly) or other.nvars != self.nvars:
            raise ValidationError("incompatible polynomial operands")

    def __eq__(self, other) -> bool:
        if not isinstance(other, GradedPoly):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        return hash((self.nvars, tuple(self._terms.items())))

    def __repr__(self) -> str:
        if not self._terms:
            return f"{type(self).__name__}(0)"
        body = " + ".join(f"{c!r}*{list(e)}" for e, c in self)
        return f"{type(self).__name__}({body})"

    # serialization
    def to_json(self) -> list:
        """Array of ``[*exponents, hbar_exp, scalar]`` records in canonical order."""
        return [[*key[:-2], key[-2], c.to_json()] for key, c in self._terms.items()]

    @classmethod
    def terms_from_json(cls, nvars: int, data) -> list[tuple[tuple[int, ...], GradedScalar]]:
        if not isinstance(data, list):
            raise ValidationError("series must be a JSON array of term records")
        out = []
        for i, rec in enumerate(data):
            if not isinstance(rec, list) or len(rec) != nvars + 2:
                raise ValidationError(f"term {i}: expected [{'exp, ' * nvars}hbar, scalar]")
            exps = rec[:nvars]
            if not all(isinstance(e, int) and not isinstance(e, bool) for e in exps + [rec[nvars]]):
                raise ValidationError(f"term {i}: exponents must be integers")
            coeff = GradedScalar.from_json(rec[nvars + 1])
            if not coeff.is_zero() and coeff.hbar_exp != rec[nvars]:
                raise ValidationError(f"term {i}: hbar_exp {rec[nvars]} disagrees with scalar grade {coeff.hbar_exp}")
            out.append((tuple(exps), coeff))
        return out


class BivariatePolynomial(GradedPoly):
    """Exact finite polynomial in the canonical coordinates ``u = q + q'``, ``v = q - q'``."""

    __slots__ = ()

    def __init__(self, terms: Iterable[tuple[tuple[int, int], GradedScalar]] = ()):
        super().__init__(2, terms)

    def _rewrap(self, terms):
        return BivariatePolynomial(terms)

    @classmethod
    def from_json(cls, data) -> BivariatePolynomial:
        return cls(cls.terms_from_json(2, data))

    def without_even_v(self) -> bool:
        return all(n % 2 == 1 for (m, n), _ in self)


class KernelSeries(BivariatePolynomial):
    """Truncated bivariate series ``sum alpha_{m,n} u^m v^n``.

    ``truncation_order`` is the total degree K through which every
    coefficient is known to be complete; no term beyond K is stored.
    """

    __slots__ = ("truncation_order",)

    def __init__(self, terms=(), truncation_order: int = 0):
        super().__init__(terms)
        self.truncation_order = int(truncation_order)
        if self.total_degree() > self.truncation_order:
            raise ValidationError(
                f"series has degree {self.total_degree()} beyond truncation order {self.truncation_order}"
            )

    def _rewrap(self, terms):
        return KernelSeries(terms, self.truncation_order)

    def truncate(self, order: int) -> KernelSeries:
        return KernelSeries(((e, c) for e, c in self if sum(e) <= order), min(order, self.truncation_order))

    def __add__(self, other):
        out = BivariatePolynomial.__add__(self, other)
        k = min(self.truncation_order, getattr(other, "truncation_order", self.truncation_order))
        return KernelSeries(list(out), k)

    def __sub__(self, other):
        out = BivariatePolynomial.__sub__(self, other)
        k = min(self.truncation_order, getattr(other, "truncation_order", self.truncation_order))
        return KernelSeries(list(out), k)

    def __eq__(self, other):
        if isinstance(other, KernelSeries):
            return self.truncation_order == other.truncation_order and GradedPoly.__eq__(self, other)
        return GradedPoly.__eq__(self, other)

    __hash__ = GradedPoly.__hash__

    def to_json(self) -> list:
        return GradedPoly.to_json(self)

    @classmethod
    def from_json(cls, data, truncation_order: int | None = None) -> KernelSeries:
        terms = cls.terms_from_json(2, data)
        if truncation_order is None:
            truncation_order = max((sum(e) for e, _ in terms), default=0)
        return cls(terms, truncation_order)


def series_evaluate(T: GradedPoly, q, qprime, mu_value=1, hbar_value=1) -> complex:
    """Evaluate a kernel series at ``(q, q')`` with numeric mu and hbar.

    The sum is carried out exactly in rationals, term by term in canonical
    order, and only the final result is converted to floating point.
    """
    q = Fraction(q)
    qprime = Fraction(qprime)
    mu_value = Fraction(mu_value)
    hbar_value = Fraction(hbar_value)
    if mu_value <= 0 or hbar_value <= 0:
        raise PreconditionError("mu and hbar must be positive")
    u = q + qprime
    v = q - qprime
    re = Fraction(0)
    im = Fraction(0)
    for (m, n), c in T:
        mono = u**m * v**n
        cr, ci = c.exact_value(mu_value, hbar_value)
        re += cr * mono
        im += ci * mono
    return complex(float(re), float(im))


def evaluate_uv(T: GradedPoly, u, v, mu_value: float = 1.0, hbar_value: float = 1.0) -> np.ndarray:
    """Floating-point evaluation of a series on arrays of canonical coordinates."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    out = np.zeros(np.broadcast(u, v).shape, dtype=complex)
    for (m, n), c in T:
        out = out + c.value(mu_value, hbar_value) * (u**m * v**n)
    return out


def series_equal(A: KernelSeries, B: KernelSeries, up_to_order: int) -> bool:
    """Exact comparison of every coefficient with ``m + n <= up_to_order``."""
    for s in (A, B):
        if isinstance(s, KernelSeries) and up_to_order > s.truncation_order:
            raise PreconditionError(
                f"order {up_to_order} exceeds truncation order {s.truncation_order}"
            )
    a = A.filter(lambda e, c: sum(e) <= up_to_order)
    b = B.filter(lambda e, c: sum(e) <= up_to_order)
    return GradedPoly.__eq__(a, b)
