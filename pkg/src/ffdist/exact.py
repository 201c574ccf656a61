"""Exact comparisons involving rational powers of integers."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational, Real


def as_fraction(x) -> Fraction:
    """Exact Fraction for ints, Fractions and floats (a float is a dyadic rational)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot represent {x!r} exactly")


@dataclass(frozen=True)
class QPower:
    """The positive real base ** exp for an integer base >= 1 and a rational exponent."""

    base: int
    exp: Fraction

    def __post_init__(self):
        if self.base < 1:
            raise ValueError("base must be a positive integer")
        object.__setattr__(self, "exp", as_fraction(self.exp))

    def exact(self) -> Fraction | None:
        """The value as a Fraction when it is rational, else None."""
        return qpow(self.base, self.exp)

    def __float__(self) -> float:
        return float(self.base) ** float(self.exp)

    def _cmp(self, r) -> int:
        """Sign of self - r, decided exactly."""
        r = as_fraction(r)
        if r <= 0:
            return 1
        # self > r  <=>  base^num > r^den  (den > 0, both sides positive)
        num, den = self.exp.numerator, self.exp.denominator
        lhs = Fraction(self.base) ** num
        rhs = r**den
        return (lhs > rhs) - (lhs < rhs)

    def __lt__(self, r):
        return self._cmp(r) < 0

    def __le__(self, r):
        return self._cmp(r) <= 0

    def __gt__(self, r):
        return self._cmp(r) > 0

    def __ge__(self, r):
        return self._cmp(r) >= 0


def qpow(base: int, exp) -> Fraction | None:
    """base ** exp as an exact Fraction when rational, else None."""
    exp = as_fraction(exp)
    num, den = exp.numerator, exp.denominator
    root = _exact_root(base, den)
    if root is None:
        return None
    return Fraction(root) ** num


def _exact_root(n: int, k: int) -> int | None:
    """The integer k-th root of n when n is a perfect k-th power."""
    if k == 1 or n < 2:
        return n
    lo, hi = 1, 1 << (n.bit_length() // k + 1)
    while lo < hi:
        mid = (lo + hi) // 2
        if mid**k < n:
            lo = mid + 1
        else:
            hi = mid
    return lo if lo**k == n else None


def le_scaled(r, theta: Real | QPower) -> bool:
    """r <= theta, exactly, for a rational r and a rational or QPower theta."""
    if isinstance(theta, QPower):
        return theta >= r
    return as_fraction(r) <= as_fraction(theta)
