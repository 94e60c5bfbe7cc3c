"""Symbolic values ``base + k*delta`` with an infinity, for spans and delays.

``delta`` stands for an infinitesimally small positive amount, so comparison
is lexicographic with the base dominating.  Clock bounds use coefficients in
{-1, 0, +1} (strict bounds shave or pad by one delta); ranges and node spans
use {-2, -1, 0}.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .zones import Bound


@dataclass(frozen=True)
class SpanValue:
    base: Fraction | None  # None encodes infinity
    delta: int = 0

    @staticmethod
    def finite(base, delta: int = 0) -> "SpanValue":
        return SpanValue(Fraction(base), delta)

    @staticmethod
    def infinite() -> "SpanValue":
        return SpanValue(None, 0)

    @property
    def is_infinite(self) -> bool:
        return self.base is None

    def key(self):
        if self.is_infinite:
            return (1, 0, 0)
        return (0, self.base, self.delta)

    def __lt__(self, other: "SpanValue") -> bool:
        return self.key() < other.key()

    def __le__(self, other: "SpanValue") -> bool:
        return self.key() <= other.key()

    def __sub__(self, other) -> "SpanValue":
        if self.is_infinite:
            return self
        if isinstance(other, SpanValue):
            if other.is_infinite:
                raise ValueError("cannot subtract an infinite value from a finite one")
            return SpanValue(self.base - other.base, self.delta - other.delta)
        return SpanValue(self.base - Fraction(other), self.delta)

    def floor_part(self) -> int:
        """Integer portion, accounting for the infinitesimal offset."""
        if self.is_infinite:
            raise ValueError("infinite value has no integer portion")
        base_floor = self.base.numerator // self.base.denominator
        if self.base == base_floor and self.delta < 0:
            return base_floor - 1
        return base_floor

    def frac_is_zero(self) -> bool:
        if self.is_infinite:
            raise ValueError("infinite value has no fractional part")
        return self.base.denominator == 1 and self.delta == 0

    def text(self) -> str:
        if self.is_infinite:
            return "inf"
        if self.delta == 0:
            return str(self.base)
        mag = abs(self.delta)
        suffix = "δ" if mag == 1 else f"{mag}δ"
        sign = "-" if self.delta < 0 else "+"
        if self.base == 0 and self.delta > 0:
            return suffix
        return f"{self.base}{sign}{suffix}"

    def json_value(self):
        if self.is_infinite:
            return "inf"
        base = self.base if self.base.denominator != 1 else self.base.numerator
        return {"base": str(base), "delta": self.delta}


def floor_matched(a: SpanValue, b: SpanValue) -> bool:
    """Integer portions agree and zero-fractional-ness agrees (infinities match)."""
    if a.is_infinite or b.is_infinite:
        return a.is_infinite and b.is_infinite
    return a.floor_part() == b.floor_part() and a.frac_is_zero() == b.frac_is_zero()


def min_from_lower(bound: Bound) -> SpanValue:
    """Least clock value admitted by a DBM lower bound (an entry ``0 - x <= c``)."""
    if bound.infinite:
        raise ValueError("lower clock bounds are never infinite")
    return SpanValue.finite(-bound.value, 1 if bound.strict else 0)


def max_from_upper(bound: Bound) -> SpanValue:
    """Greatest clock value admitted by a DBM upper bound."""
    if bound.infinite:
        return SpanValue.infinite()
    return SpanValue.finite(bound.value, -1 if bound.strict else 0)
