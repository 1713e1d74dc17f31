"""Step-function weights ``1``, ``sgn(x)``, ``H(x)``, ``H(-x)`` used by piecewise terms."""

from __future__ import annotations

from enum import Enum

from .errors import ValidationError


class Weight(str, Enum):
    ONE = "one"
    SGN = "sgn"
    HPLUS = "hplus"
    HMINUS = "hminus"

    @classmethod
    def parse(cls, tag) -> Weight:
        try:
            return cls(tag)
        except ValueError:
            raise ValidationError(f"unknown weight tag {tag!r}; expected one|sgn|hplus|hminus") from None

    def sided(self, side: int) -> int:
        """Value on the open half-line ``sign(x) = side`` (side is +1 or -1)."""
        if self is Weight.ONE:
            return 1
        if self is Weight.SGN:
            return side
        if self is Weight.HPLUS:
            return 1 if side > 0 else 0
        return 1 if side < 0 else 0

    def jump(self) -> int:
        """``w(0+) - w(0-)``."""
        return self.sided(1) - self.sided(-1)

    def reflected(self) -> tuple[int, Weight]:
        """``w(-x) = sign * w'(x)``; returned as ``(sign, w')``."""
        if self is Weight.ONE:
            return 1, Weight.ONE
        if self is Weight.SGN:
            return -1, Weight.SGN
        if self is Weight.HPLUS:
            return 1, Weight.HMINUS
        return 1, Weight.HPLUS


WEIGHT_ORDER = {w: i for i, w in enumerate(Weight)}
