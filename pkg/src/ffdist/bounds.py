"""Rigorous real arithmetic for theorem right-hand sides.

A :class:`Real` is an exact Fraction while every operation stays rational and
switches to a 128-bit mpmath interval as soon as an irrational quantity (a
fractional power of q, ln 2, a square root) enters.  Interval endpoints are
exposed as exact Fractions, so every reported bound is a rational enclosure.
"""

from __future__ import annotations

from fractions import Fraction

from mpmath import iv
from mpmath.libmp import to_rational

from .exact import as_fraction, qpow

PRECISION = 128
iv.prec = PRECISION


def _iv(x: Fraction):
    return iv.mpf(x.numerator) / iv.mpf(x.denominator)


def _rat(raw) -> Fraction:
    p, q = to_rational(raw)
    return Fraction(int(p), int(q))


class Real:
    """An exact rational or a rigorous interval enclosure of a real number."""

    __slots__ = ("v",)

    def __init__(self, v):
        if isinstance(v, Real):
            v = v.v
        elif not isinstance(v, iv.mpf):
            v = as_fraction(v)
        self.v = v

    @property
    def exact(self) -> bool:
        return isinstance(self.v, Fraction)

    def _ivv(self):
        return _iv(self.v) if self.exact else self.v

    @property
    def lo(self) -> Fraction:
        return self.v if self.exact else _rat(self.v._mpi_[0])

    @property
    def hi(self) -> Fraction:
        return self.v if self.exact else _rat(self.v._mpi_[1])

    def __float__(self) -> float:
        if self.exact:
            return float(self.v)
        return float((self.lo + self.hi) / 2)

    def _binop(self, other, op):
        o = other if isinstance(other, Real) else Real(other)
        if self.exact and o.exact:
            return Real(op(self.v, o.v))
        return Real(op(self._ivv(), o._ivv()))

    def __add__(self, o):
        return self._binop(o, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, o):
        return self._binop(o, lambda a, b: a - b)

    def __rsub__(self, o):
        return Real(o) - self

    def __mul__(self, o):
        return self._binop(o, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return self._binop(o, lambda a, b: a / b)

    def __rtruediv__(self, o):
        return Real(o) / self

    def __neg__(self):
        return Real(-self.v)

    def __abs__(self):
        return Real(abs(self.v))

    def __pow__(self, e: int):
        if not isinstance(e, int):
            raise TypeError("use qp() for fractional powers")
        return Real(self.v**e)

    def __reduce__(self):
        if self.exact:
            return Real, (self.v,)
        return _from_bounds, (self.lo, self.hi)

    def sign(self) -> int | None:
        """+1, 0 or -1 when decided; None when the enclosure straddles zero."""
        lo, hi = self.lo, self.hi
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        if lo == hi == 0:
            return 0
        return None

    def to_json(self) -> str:
        if self.exact:
            return frac_str(self.v)
        return f"[{frac_str(self.lo)},{frac_str(self.hi)}]"

    def __repr__(self):
        return f"Real({self.to_json()})"


def _from_bounds(lo: Fraction, hi: Fraction) -> Real:
    """Rebuild an interval from its (dyadic, hence exactly representable) endpoints."""
    return Real(iv.mpf([_iv(lo).a, _iv(hi).b]))


def frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def qp(q: int, e) -> Real:
    """q ** e for a rational exponent, exact when the value is rational."""
    e = as_fraction(e)
    exact = qpow(q, e)
    if exact is not None:
        return Real(exact)
    return Real(iv.mpf(q) ** (_iv(e)))


def sqrt(x) -> Real:
    x = Real(x)
    if x.exact:
        v = x.v
        if v < 0:
            raise ValueError("square root of a negative number")
        n, d = qpow(v.numerator, Fraction(1, 2)), qpow(v.denominator, Fraction(1, 2))
        if n is not None and d is not None:
            return Real(n / d)
    return Real(iv.sqrt(x._ivv()))


def ln2() -> Real:
    return Real(iv.log(2))


def at_least(a, b, strict: bool = False) -> bool:
    """a >= b (a > b when strict), True only when decided with certainty."""
    s = (Real(a) - Real(b)).sign()
    if s is None:
        return False
    return s > 0 if strict else s >= 0
