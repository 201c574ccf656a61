"""Gauss, Kloosterman and Salie sums, and the quadratic Gauss-sum evaluation.

Every sum is carried exactly in Z[zeta_p]; :class:`SumValue` adds the complex
embedding and an optional rational scale (used for averages such as
``E_y = q^-d sum_y``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .field import CyclotomicInt, FiniteField, character_sum
from .forms import BILINEAR, DistanceFn, FormError, canonical_diagonal

WEIL_TOLERANCE = 1e-9


class ZeroParameterA(ValueError):
    pass


class NonCanonicalForm(FormError):
    pass


@dataclass(frozen=True)
class SumValue:
    """``scale * exact`` with its complex value and magnitude."""

    exact: CyclotomicInt
    scale: Fraction = Fraction(1)

    @property
    def approx(self) -> complex:
        return complex(self.exact) * float(self.scale)

    @property
    def magnitude(self) -> float:
        return abs(self.approx)

    def norm_squared(self) -> Fraction:
        """|value|^2 as an exact rational (the norm is always a rational integer here)."""
        n = self.exact.norm_squared()
        if not n.is_integer():
            raise ValueError("norm is not rational")
        return int(n) * self.scale**2

    def __eq__(self, other):
        if not isinstance(other, SumValue):
            return NotImplemented
        # compare scale * exact without dividing inside Z[zeta]
        s, o = self.scale, other.scale
        return self.exact * (s.numerator * o.denominator) == other.exact * (o.numerator * s.denominator)

    def __hash__(self):
        return hash((self.exact, self.scale))


def _nonzero(field: FiniteField) -> np.ndarray:
    return np.arange(1, field.q, dtype=np.int64)


def gauss_sum(field: FiniteField) -> SumValue:
    """G(chi, eta) = sum_{a != 0} eta(a) chi(a)."""
    a = _nonzero(field)
    return SumValue(character_sum(field, a, field.eta_table[a]))


def _check_a(a: int):
    if int(a) == 0:
        raise ZeroParameterA("the parameter a must be nonzero")


def _twisted_inverse_sum(field: FiniteField, a: int, b: int, twist: bool) -> SumValue:
    _check_a(a)
    s = _nonzero(field)
    arg = field.add(field.mul(int(a), s), field.mul(int(b), field.inv_table[s]))
    weights = field.eta_table[s] if twist else None
    return SumValue(character_sum(field, arg, weights))


def kloosterman_sum(field: FiniteField, a: int, b: int) -> SumValue:
    """sum_{s != 0} chi(a s + b / s)."""
    return _twisted_inverse_sum(field, a, b, twist=False)


def salie_sum(field: FiniteField, a: int, b: int) -> SumValue:
    """sum_{s != 0} chi(a s + b / s) eta(s)."""
    return _twisted_inverse_sum(field, a, b, twist=True)


def weil_bound(q: int) -> float:
    return 2 * math.sqrt(q)


def max_weil_ratio(field: FiniteField) -> tuple[float, float]:
    """Largest |Kloosterman| and |Salie| over all a != 0 and all b."""
    kmax = smax = 0.0
    for a in range(1, field.q):
        for b in range(field.q):
            kmax = max(kmax, kloosterman_sum(field, a, b).magnitude)
            smax = max(smax, salie_sum(field, a, b).magnitude)
    return kmax, smax


# -- the quadratic Gauss sum ------------------------------------------------

def _require_canonical(fn: DistanceFn) -> int:
    a = canonical_diagonal(fn)
    if a is None:
        raise NonCanonicalForm("form must be diagonal X_1^2 + ... + X_{d-1}^2 + a X_d^2")
    return a


def _check_field(field: FiniteField, fn: DistanceFn):
    if field is not fn.field and (field.p, field.k) != (fn.field.p, fn.field.k):
        raise FormError("form lives over a different field")


def quadratic_weil(field: FiniteField, fn: DistanceFn, ell: int, xi) -> SumValue:
    """E_y chi(ell Q(y) + y . xi), by direct summation over F_q^d."""
    _check_field(field, fn)
    _check_a(ell)
    _require_canonical(fn)
    sp = fn.space
    xi = int(xi) if np.ndim(xi) == 0 else sp.vector(*xi)
    y = sp.all()
    arg = field.add(field.mul(int(ell), fn.quadratic_values()), sp.dot(y, xi))
    return SumValue(character_sum(field, arg), Fraction(1, sp.size))


def quadratic_weil_closed(field: FiniteField, fn: DistanceFn, ell: int, xi) -> SumValue:
    """q^-d G^d chi(-Q'(xi) / (4 ell)) eta(ell)^{d-1} eta(a ell)."""
    _check_field(field, fn)
    _check_a(ell)
    a = _require_canonical(fn)
    sp = fn.space
    xi = int(xi) if np.ndim(xi) == 0 else sp.vector(*xi)
    ell = int(ell)
    return SumValue(_closed_form(field, a, sp.d, ell, int(fn.dual_values(xi))), Fraction(1, sp.size))


def _closed_form(field: FiniteField, a: int, d: int, ell: int, dual: int,
                 g_pow: CyclotomicInt | None = None) -> CyclotomicInt:
    if g_pow is None:
        g_pow = gauss_sum(field).exact ** d
    four_ell = field.mul(field.scalar(4).value, ell)
    arg = int(field.neg(field.div(dual, four_ell)))
    sign = int(field.eta_table[ell]) ** (d - 1) * int(field.eta_table[field.mul(a, ell)])
    return g_pow * CyclotomicInt.zeta(field.p, int(field.trace_table[arg])) * sign


def quadratic_weil_table(fn: DistanceFn, ell: int) -> list[CyclotomicInt]:
    """Unnormalised direct sums sum_y chi(ell Q(y) + y . xi) for every xi."""
    _check_a(ell)
    _require_canonical(fn)
    F, sp = fn.field, fn.space
    p = F.p
    lq = F.mul(int(ell), fn.quadratic_values())
    y = sp.all()
    counts = np.zeros((sp.size, p), dtype=np.int64)
    chunk = max(1, 4_000_000 // sp.size)
    for start in range(0, sp.size, chunk):
        xs = np.arange(start, min(sp.size, start + chunk), dtype=np.int64)
        tr = F.trace_table[F.add(lq[None, :], sp.dot(y[None, :], xs[:, None]))]
        rows = np.repeat(np.arange(len(xs)), sp.size)
        block = np.bincount(rows * p + tr.ravel(), minlength=len(xs) * p)
        counts[start:start + len(xs)] = block.reshape(len(xs), p)
    return [CyclotomicInt.from_counts(p, c) for c in counts]


def quadratic_weil_identity(fn: DistanceFn, ell: int) -> bool:
    """Whether the closed form matches the direct sum exactly for every xi."""
    F, sp = fn.field, fn.space
    a = _require_canonical(fn)
    direct = quadratic_weil_table(fn, ell)
    g_pow = gauss_sum(F).exact ** sp.d
    duals = fn.dual_values(sp.all())
    return all(direct[x] == _closed_form(F, a, sp.d, int(ell), int(duals[x]), g_pow)
               for x in range(sp.size))


def orthogonality_check(fn: DistanceFn, y) -> CyclotomicInt:
    """sum_x chi(phi(x, y)) exactly; q^d for y = 0 and 0 otherwise."""
    if fn.kind != BILINEAR:
        raise FormError("orthogonality is stated for bilinear forms")
    sp = fn.space
    y = int(y) if np.ndim(y) == 0 else sp.vector(*y)
    return character_sum(fn.field, fn.values(sp.all(), y))


__all__ = [
    "NonCanonicalForm", "SumValue", "WEIL_TOLERANCE", "ZeroParameterA",
    "gauss_sum", "kloosterman_sum", "max_weil_ratio", "orthogonality_check",
    "quadratic_weil", "quadratic_weil_closed", "quadratic_weil_identity",
    "quadratic_weil_table", "salie_sum", "weil_bound",
]
