"""Exact Gaussian-rational scalars graded by powers of the mass and of hbar.

A :class:`GradedScalar` represents ``(re + i*im) * mu**mu_exp * hbar**hbar_exp``
with ``re`` and ``im`` arbitrary-precision rationals.  Products add grades;
sums are only defined within a single grade.  The zero scalar is canonical
(grade ``(0, 0)``) and acts as the additive identity for every grade.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

from .errors import GradeError, ValidationError

RationalLike = Union[int, Fraction, str]


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats are rejected: every symbolic quantity must be exact.
    """
    if isinstance(value, bool):
        raise ValidationError(f"not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"not a rational: {value!r}") from exc
    raise ValidationError(f"not an exact rational: {value!r}")


def format_fraction(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True, slots=True)
class GradedScalar:
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)
    mu_exp: int = 0
    hbar_exp: int = 0

    def __post_init__(self):
        re = as_fraction(self.re)
        im = as_fraction(self.im)
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)
        if re == 0 and im == 0:
            object.__setattr__(self, "mu_exp", 0)
            object.__setattr__(self, "hbar_exp", 0)
        else:
            object.__setattr__(self, "mu_exp", int(self.mu_exp))
            object.__setattr__(self, "hbar_exp", int(self.hbar_exp))

    # construction helpers
    @classmethod
    def real(cls, value: RationalLike, mu: int = 0, hbar: int = 0) -> GradedScalar:
        return cls(as_fraction(value), Fraction(0), mu, hbar)

    @classmethod
    def imag(cls, value: RationalLike, mu: int = 0, hbar: int = 0) -> GradedScalar:
        return cls(Fraction(0), as_fraction(value), mu, hbar)

    @classmethod
    def coerce(cls, value) -> GradedScalar:
        if isinstance(value, GradedScalar):
            return value
        return cls.real(value)

    @property
    def grade(self) -> tuple[int, int]:
        """``(mu_exp, hbar_exp)``."""
        return (self.mu_exp, self.hbar_exp)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def is_real(self) -> bool:
        return self.im == 0

    def is_imaginary(self) -> bool:
        return self.re == 0

    def __bool__(self) -> bool:
        return not self.is_zero()

    # arithmetic
    def __neg__(self) -> GradedScalar:
        return GradedScalar(-self.re, -self.im, self.mu_exp, self.hbar_exp)

    def __add__(self, other) -> GradedScalar:
        if not isinstance(other, GradedScalar):
            other = GradedScalar.real(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        if self.grade != other.grade:
            raise GradeError(f"cannot add grades {self.grade} and {other.grade}")
        return GradedScalar(self.re + other.re, self.im + other.im, self.mu_exp, self.hbar_exp)

    __radd__ = __add__

    def __sub__(self, other) -> GradedScalar:
        if not isinstance(other, GradedScalar):
            other = GradedScalar.real(other)
        return self + (-other)

    def __rsub__(self, other) -> GradedScalar:
        return (-self) + other

    def __mul__(self, other) -> GradedScalar:
        if isinstance(other, GradedScalar):
            return GradedScalar(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
                self.mu_exp + other.mu_exp,
                self.hbar_exp + other.hbar_exp,
            )
        if isinstance(other, complex):
            return NotImplemented
        k = as_fraction(other)
        return GradedScalar(self.re * k, self.im * k, self.mu_exp, self.hbar_exp)

    __rmul__ = __mul__

    def __truediv__(self, other) -> GradedScalar:
        if isinstance(other, GradedScalar):
            return self * other.inverse()
        k = as_fraction(other)
        return GradedScalar(self.re / k, self.im / k, self.mu_exp, self.hbar_exp)

    def inverse(self) -> GradedScalar:
        if self.is_zero():
            raise ZeroDivisionError("inverse of the zero scalar")
        norm = self.re * self.re + self.im * self.im
        return GradedScalar(self.re / norm, -self.im / norm, -self.mu_exp, -self.hbar_exp)

    def __pow__(self, k: int) -> GradedScalar:
        if k < 0:
            return self.inverse() ** (-k)
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> GradedScalar:
        return GradedScalar(self.re, -self.im, self.mu_exp, self.hbar_exp)

    def times_i_power(self, k: int) -> GradedScalar:
        """Multiply by ``i**k``."""
        k %= 4
        if k == 0:
            return self
        if k == 1:
            return GradedScalar(-self.im, self.re, self.mu_exp, self.hbar_exp)
        if k == 2:
            return -self
        return GradedScalar(self.im, -self.re, self.mu_exp, self.hbar_exp)

    def with_grade(self, mu_exp: int, hbar_exp: int) -> GradedScalar:
        return GradedScalar(self.re, self.im, mu_exp, hbar_exp)

    def value(self, mu=1, hbar=1) -> complex:
        """Substitute numeric values for mu and hbar and return a complex float."""
        factor = Fraction(mu) ** self.mu_exp * Fraction(hbar) ** self.hbar_exp
        return complex(float(self.re * factor), float(self.im * factor))

    def exact_value(self, mu: Fraction, hbar: Fraction) -> tuple[Fraction, Fraction]:
        factor = Fraction(mu) ** self.mu_exp * Fraction(hbar) ** self.hbar_exp
        return self.re * factor, self.im * factor

    # serialization
    def to_json(self) -> dict:
        return {
            "re": format_fraction(self.re),
            "im": format_fraction(self.im),
            "mu": self.mu_exp,
            "hbar": self.hbar_exp,
        }

    @classmethod
    def from_json(cls, obj) -> GradedScalar:
        """Parse the ``{"re","im","mu","hbar"}`` form; a bare rational string is a real grade-0 value."""
        if isinstance(obj, (str, int)) and not isinstance(obj, bool):
            return cls.real(obj)
        if not isinstance(obj, dict):
            raise ValidationError(f"scalar must be an object or rational string, got {obj!r}")
        unknown = set(obj) - {"re", "im", "mu", "hbar"}
        if unknown:
            raise ValidationError(f"unknown scalar fields {sorted(unknown)}")
        mu = obj.get("mu", 0)
        hbar = obj.get("hbar", 0)
        if not isinstance(mu, int) or not isinstance(hbar, int) or isinstance(mu, bool) or isinstance(hbar, bool):
            raise ValidationError(f"scalar grades must be integers, got mu={mu!r} hbar={hbar!r}")
        return cls(as_fraction(obj.get("re", "0")), as_fraction(obj.get("im", "0")), mu, hbar)

    def __repr__(self) -> str:
        parts = []
        if self.re or not self.im:
            parts.append(str(self.re))
        if self.im:
            parts.append(f"{'+' if self.im > 0 and parts else ''}{self.im}i")
        body = "".join(parts)
        grade = ""
        if self.mu_exp:
            grade += f"*mu^{self.mu_exp}"
        if self.hbar_exp:
            grade += f"*hbar^{self.hbar_exp}"
        return f"({body}){grade}"


ZERO = GradedScalar()
ONE = GradedScalar.real(1)
I = GradedScalar.imag(1)
