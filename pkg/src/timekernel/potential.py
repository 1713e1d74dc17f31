"""Polynomial potentials ``V(q) = sum_s a_s q**s`` and their canonical-coordinate difference."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

from .errors import ValidationError
from .scalar import GradedScalar, as_fraction
from .series import BivariatePolynomial, GradedPoly


@dataclass(frozen=True)
class PolynomialPotential:
    """Coefficients ``a_s`` (s >= 1) of a polynomial potential.

    Zero coefficients are dropped on construction.  The constant term is
    absent by design: it cancels in every potential difference.
    """

    coeffs: dict[int, GradedScalar] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for s, a in dict(self.coeffs).items():
            if not isinstance(s, int) or isinstance(s, bool) or s < 1:
                raise ValidationError(f"potential degree must be an integer >= 1, got {s!r}")
            a = GradedScalar.coerce(a)
            if not a.is_zero():
                clean[s] = a
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @property
    def max_degree(self) -> int:
        return max(self.coeffs, default=0)

    def is_linear_system(self) -> bool:
        """True when the equations of motion are linear (degree <= 2)."""
        return self.max_degree <= 2

    def is_real(self) -> bool:
        return all(a.is_real() for a in self.coeffs.values())

    def as_poly(self) -> GradedPoly:
        """``V`` as a univariate graded polynomial in q."""
        return GradedPoly(1, (((s,), a) for s, a in self.coeffs.items()))

    def derivative_poly(self) -> GradedPoly:
        return GradedPoly(1, (((s - 1,), a * s) for s, a in self.coeffs.items()))

    def value(self, q, mu_value=1.0, hbar_value=1.0) -> complex:
        return sum(a.value(mu_value, hbar_value) * q**s for s, a in self.coeffs.items())

    def to_json(self) -> dict:
        return {"coeffs": [[s, a.to_json()] for s, a in self.coeffs.items()]}

    @classmethod
    def from_json(cls, obj) -> PolynomialPotential:
        if not isinstance(obj, dict):
            raise ValidationError("potential must be a JSON object")
        if "harmonic" in obj:
            h = obj["harmonic"]
            omega = h.get("omega") if isinstance(h, dict) else h
            return harmonic(as_fraction(omega))
        if "random" in obj:
            spec = obj["random"]
            return random_potential(int(spec.get("degree", 3)), int(spec.get("seed", 0)))
        coeffs = obj.get("coeffs", [])
        if not isinstance(coeffs, list):
            raise ValidationError("potential.coeffs must be an array of [s, scalar]")
        out = {}
        for i, rec in enumerate(coeffs):
            if not isinstance(rec, list) or len(rec) != 2:
                raise ValidationError(f"potential.coeffs[{i}]: expected [s, scalar]")
            s, a = rec
            if s in out:
                raise ValidationError(f"potential.coeffs[{i}]: duplicate degree {s}")
            out[s] = GradedScalar.from_json(a)
        return cls(out)


def harmonic(omega=1) -> PolynomialPotential:
    """``mu * omega**2 * q**2 / 2``; omega is folded into the coefficient, mu into the grade."""
    omega = as_fraction(omega)
    return PolynomialPotential({2: GradedScalar.real(omega**2 / 2, mu=1)})


def linear(a=1) -> PolynomialPotential:
    return PolynomialPotential({1: GradedScalar.real(a)})


def random_potential(degree: int = 3, seed: int = 0, max_num: int = 9, max_den: int = 7) -> PolynomialPotential:
    """Reproducible potential with random nonzero rational coefficients for ``s = 1..degree``."""
    rng = random.Random(seed)
    coeffs = {}
    for s in range(1, degree + 1):
        num = 0
        while num == 0:
            num = rng.randint(-max_num, max_num)
        coeffs[s] = GradedScalar.real(Fraction(num, rng.randint(1, max_den)))
    return PolynomialPotential(coeffs)


def potential_difference_expand(V: PolynomialPotential, max_total_degree: int | None = None) -> BivariatePolynomial:
    """Exact expansion of ``V((u+v)/2) - V((u-v)/2)``.

    Only odd powers of v survive::

        sum_s a_s / 2**(s-1) * sum_k C(s, 2k+1) u**(s-2k-1) v**(2k+1)
    """
    if max_total_degree is not None and max_total_degree < V.max_degree:
        raise ValidationError("max_total_degree is below the degree of the potential")
    terms = []
    for s, a in V.coeffs.items():
        scale = Fraction(1, 2 ** (s - 1))
        for odd in range(1, s + 1, 2):
            terms.append(((s - odd, odd), a * (scale * comb(s, odd))))
    return BivariatePolynomial(terms)
