"""Arithmetic in GF(p^k) for odd p, plus the additive and quadratic characters.

Elements are identified with integers in ``[0, q)`` through the little-endian
base-p digits of their coefficient vector: index ``c_0 + c_1 p + ... +
c_{k-1} p^{k-1}`` is the polynomial ``c_0 + c_1 x + ... + c_{k-1} x^{k-1}``
reduced modulo the field's defining polynomial.  All vectorised helpers on
:class:`FiniteField` operate on numpy arrays of such indices.
"""

from __future__ import annotations

import cmath
import functools
from typing import Iterable, Iterator, Sequence

import numpy as np

DEFAULT_MAX_Q = 2048


class FieldError(ValueError):
    pass


class NotPrime(FieldError):
    pass


class EvenCharacteristic(FieldError):
    pass


class TooLarge(FieldError):
    pass


class IndexOutOfRange(FieldError, IndexError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def prime_power(q: int) -> tuple[int, int]:
    """Split ``q = p**k``; raises NotPrime when q is not a prime power."""
    if q < 2:
        raise NotPrime(f"{q} is not a prime power")
    p = next(f for f in range(2, q + 1) if q % f == 0)
    k, r = 0, q
    while r % p == 0:
        r //= p
        k += 1
    if r != 1:
        raise NotPrime(f"{q} is not a prime power")
    return p, k


# -- polynomials over F_p: little-endian coefficient lists, trimmed ----------

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _polymod(a: Sequence[int], m: Sequence[int], p: int) -> list[int]:
    a = [c % p for c in a]
    _trim(a)
    dm = len(m) - 1
    inv_lead = pow(m[-1], p - 2, p)
    while len(a) - 1 >= dm:
        c = a[-1] * inv_lead % p
        shift = len(a) - 1 - dm
        for i, mc in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mc) % p
        _trim(a)
    return a


def _polymulmod(a: Sequence[int], b: Sequence[int], m: Sequence[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ac in enumerate(a):
        if ac:
            for j, bc in enumerate(b):
                out[i + j] += ac * bc
    return _polymod(out, m, p)


def _polypowmod(a: Sequence[int], e: int, m: Sequence[int], p: int) -> list[int]:
    result, base = [1], _polymod(a, m, p)
    while e:
        if e & 1:
            result = _polymulmod(result, base, m, p)
        base = _polymulmod(base, base, m, p)
        e >>= 1
    return result


def _polygcd(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    a, b = _trim([c % p for c in a]), _trim([c % p for c in b])
    while b:
        a, b = b, _polymod(a, b, p)
    return a


def is_irreducible(poly: Sequence[int], p: int) -> bool:
    """Rabin-style test: gcd(x^(p^i) - x, f) = 1 for i <= deg/2."""
    f = _trim([c % p for c in poly])
    k = len(f) - 1
    if k < 1:
        return False
    if k == 1:
        return True
    xp = [0, 1]
    for _ in range(k // 2):
        xp = _polypowmod(xp, p, f, p)
        diff = list(xp) + [0] * max(0, 2 - len(xp))
        diff[1] = (diff[1] - 1) % p
        if len(_polygcd(f, _trim(diff), p)) > 1:
            return False
    return True


def least_irreducible(p: int, k: int) -> tuple[int, ...]:
    """Least monic irreducible of degree k, ordering by the base-p value of the
    lower coefficients with ``c_{k-1}`` most significant."""
    if k == 1:
        return (0, 1)
    for n in range(p**k):
        low = [(n // p**i) % p for i in range(k)]
        if low[0] == 0:
            continue
        poly = low + [1]
        if is_irreducible(poly, p):
            return tuple(poly)
    raise AssertionError("no irreducible polynomial found")  # pragma: no cover


class FiniteField:
    """GF(p^k) with precomputed addition, multiplication and character tables.

    Instances are immutable and shared: use :func:`make_field`.
    """

    def __init__(self, p: int, k: int, modulus: Sequence[int]):
        self.p = p
        self.k = k
        self.q = p**k
        self.modulus = tuple(modulus)
        q = self.q
        idx = np.arange(q, dtype=np.int64)
        self.digit_weights = p ** np.arange(k, dtype=np.int64)
        digits = (idx[:, None] // self.digit_weights[None, :]) % p

        if k == 1:
            add = np.add.outer(idx, idx) % p
            mul = np.multiply.outer(idx, idx) % p
        else:
            add = ((digits[:, None, :] + digits[None, :, :]) % p) @ self.digit_weights
            mul = None  # from log/exp below

        # discrete logarithm tables w.r.t. the least primitive element
        for g in range(2, q):
            exp, log = self._power_tables(g, digits)
            if exp is not None:
                self.primitive = g
                break
        self._exp, self._log = exp, log

        if mul is None:
            la = log[idx]
            mul = exp[(la[:, None] + la[None, :]) % (q - 1)]
            mul[0, :] = 0
            mul[:, 0] = 0
        self.add_table = add.astype(np.int64)
        self.mul_table = mul.astype(np.int64)
        self.neg_table = ((-digits) % p) @ self.digit_weights
        inv = np.zeros(q, dtype=np.int64)
        inv[1:] = exp[(-log[1:]) % (q - 1)]
        self.inv_table = inv

        eta = np.zeros(q, dtype=np.int64)
        eta[1:] = np.where(log[1:] % 2 == 0, 1, -1)
        self.eta_table = eta

        # Tr(a) = sum_i a^(p^i); lands in the prime field (index < p)
        tr = np.zeros(q, dtype=np.int64)
        for i in range(k):
            powed = np.zeros(q, dtype=np.int64)
            powed[1:] = exp[(log[1:] * p**i) % (q - 1)]
            tr = add[tr, powed]
        assert np.all(tr < p)
        self.trace_table = tr

        sq = np.full(q, -1, dtype=np.int64)
        squares, first = np.unique(mul[idx, idx], return_index=True)
        sq[squares] = first  # least-index root
        self.sqrt_table = sq
        self.nonsquare = int(np.flatnonzero(eta == -1)[0])

        for arr in (self.add_table, self.mul_table, self.neg_table, self.inv_table,
                    self.eta_table, self.trace_table, self.sqrt_table):
            arr.setflags(write=False)
        self._digits = digits

    def _power_tables(self, g: int, digits: np.ndarray):
        q, p = self.q, self.p
        exp = np.zeros(q - 1, dtype=np.int64)
        log = np.zeros(q, dtype=np.int64)
        poly = [1]
        gpoly = [int(c) for c in digits[g]]
        for i in range(q - 1):
            val = sum(c * p**j for j, c in enumerate(poly))
            if i > 0 and val == 1:
                return None, None
            exp[i] = val
            log[val] = i
            poly = _polymulmod(poly, gpoly, self.modulus, p)
        return exp, log

    # -- scalar API --------------------------------------------------------

    def __repr__(self) -> str:
        return f"GF({self.p}^{self.k})" if self.k > 1 else f"GF({self.p})"

    def __len__(self) -> int:
        return self.q

    def __iter__(self) -> Iterator[FieldElement]:
        return (FieldElement(self, i) for i in range(self.q))

    def __reduce__(self):
        return make_field, (self.p, self.k)

    def element(self, i: int) -> FieldElement:
        i = int(i)
        if not 0 <= i < self.q:
            raise IndexOutOfRange(f"index {i} outside [0, {self.q})")
        return FieldElement(self, i)

    __call__ = element

    def index(self, a: FieldElement) -> int:
        if a.field is not self:
            raise FieldError("element belongs to a different field")
        return a.value

    def elements(self) -> list[FieldElement]:
        return list(self)

    def scalar(self, n: int) -> FieldElement:
        """Image of the integer n under Z -> F_q."""
        return FieldElement(self, n % self.p)

    def from_coeffs(self, coeffs: Iterable[int]) -> FieldElement:
        coeffs = list(coeffs)
        if len(coeffs) > self.k:
            coeffs = _polymod(coeffs, self.modulus, self.p)
        return FieldElement(self, sum((c % self.p) * self.p**i for i, c in enumerate(coeffs)))

    def coeffs(self, i: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self._digits[i])

    @property
    def zero(self) -> FieldElement:
        return FieldElement(self, 0)

    @property
    def one(self) -> FieldElement:
        return FieldElement(self, 1)

    @property
    def generator(self) -> FieldElement:
        """The class of x (or 1 in a prime field)."""
        return FieldElement(self, self.p if self.k > 1 else 1)

    # -- vectorised API on index arrays ------------------------------------

    def add(self, a, b):
        return self.add_table[a, b]

    def sub(self, a, b):
        return self.add_table[a, self.neg_table[b]]

    def mul(self, a, b):
        return self.mul_table[a, b]

    def neg(self, a):
        return self.neg_table[a]

    def inv(self, a):
        a = np.asarray(a)
        if np.any(a == 0):
            raise ZeroDivisionError("inverse of zero")
        return self.inv_table[a]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def power(self, a, e: int):
        a = np.asarray(a, dtype=np.int64)
        if e == 0:
            return np.ones_like(a)
        out = np.zeros_like(a)
        nz = a != 0
        if e < 0 and not np.all(nz):
            raise ZeroDivisionError("negative power of zero")
        out[nz] = self._exp[(self._log[a[nz]] * e) % (self.q - 1)]
        return out

    def trace(self, a):
        return self.trace_table[a]

    def eta(self, a):
        return self.eta_table[a]

    def sqrt(self, a):
        r = self.sqrt_table[a]
        if np.any(np.asarray(r) < 0):
            raise ValueError("not a square")
        return r

    def is_square(self, a):
        return self.eta_table[a] >= 0


class FieldElement:
    __slots__ = ("field", "value")

    def __init__(self, field: FiniteField, value: int):
        self.field = field
        self.value = int(value)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.field is not self.field:
                raise FieldError("elements of different fields")
            return other.value
        if isinstance(other, (int, np.integer)):
            return int(other) % self.field.p
        return NotImplemented

    def _wrap(self, v) -> FieldElement:
        return FieldElement(self.field, int(v))

    def __add__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.field.add_table[self.value, o])

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.field.sub(self.value, o))

    def __rsub__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.field.sub(o, self.value))

    def __mul__(self, other):
        o = self._coerce(other)
        return NotImplemented if o is NotImplemented else self._wrap(self.field.mul_table[self.value, o])

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self._wrap(self.field.div(self.value, o))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self._wrap(self.field.div(o, self.value))

    def __neg__(self):
        return self._wrap(self.field.neg_table[self.value])

    def __pow__(self, e: int):
        return self._wrap(self.field.power(self.value, e))

    def inverse(self) -> FieldElement:
        return self._wrap(self.field.inv(self.value))

    def __eq__(self, other):
        if isinstance(other, FieldElement):
            return self.field is other.field and self.value == other.value
        if isinstance(other, (int, np.integer)):
            return self.value == int(other) % self.field.p
        return NotImplemented

    def __hash__(self):
        return hash((self.field.p, self.field.k, self.value))

    def __int__(self):
        return self.value

    __index__ = __int__

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"{self.field!r}({self.value})"

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.field.coeffs(self.value)

    def trace(self) -> FieldElement:
        return trace(self)

    def chi(self) -> CyclotomicInt:
        return chi(self)

    def eta(self) -> int:
        return eta(self)


@functools.lru_cache(maxsize=None)
def make_field(p: int, k: int = 1, max_q: int = DEFAULT_MAX_Q) -> FiniteField:
    """Construct GF(p^k) with the least monic irreducible modulus of degree k."""
    if k < 1:
        raise FieldError("extension degree must be >= 1")
    if not is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if p == 2:
        raise EvenCharacteristic("characteristic 2 is not supported")
    if p**k > max_q:
        raise TooLarge(f"q = {p}^{k} exceeds the budget of {max_q}")
    return FiniteField(p, k, least_irreducible(p, k))


def field_of_order(q: int, max_q: int = DEFAULT_MAX_Q) -> FiniteField:
    p, k = prime_power(q)
    return make_field(p, k, max_q)


def trace(a: FieldElement) -> FieldElement:
    return FieldElement(a.field, a.field.trace_table[a.value])


def eta(a: FieldElement) -> int:
    return int(a.field.eta_table[a.value])


def chi(a: FieldElement) -> CyclotomicInt:
    """Canonical additive character zeta_p^Tr(a), as an exact cyclotomic integer."""
    return CyclotomicInt.zeta(a.field.p, int(a.field.trace_table[a.value]))


class CyclotomicInt:
    """Exact element sum_j c_j zeta_p^j of Z[zeta_p].

    Stored reduced so that ``c_{p-1} == 0``, using sum_j zeta^j = 0; equal values
    then have equal coefficient tuples.
    """

    __slots__ = ("p", "coeffs")

    def __init__(self, p: int, coeffs: Iterable[int]):
        c = [int(v) for v in coeffs]
        if len(c) != p:
            raise ValueError(f"expected {p} coefficients, got {len(c)}")
        top = c[-1]
        self.p = p
        self.coeffs = tuple(v - top for v in c)

    @classmethod
    def zero(cls, p: int) -> CyclotomicInt:
        return cls(p, [0] * p)

    @classmethod
    def integer(cls, p: int, n: int) -> CyclotomicInt:
        return cls(p, [n] + [0] * (p - 1))

    @classmethod
    def zeta(cls, p: int, j: int = 1) -> CyclotomicInt:
        c = [0] * p
        c[j % p] = 1
        return cls(p, c)

    @classmethod
    def from_counts(cls, p: int, counts) -> CyclotomicInt:
        """sum_j counts[j] zeta^j; counts may be shorter than p."""
        c = [0] * p
        for j, v in enumerate(counts):
            c[j] += int(v)
        return cls(p, c)

    def _other(self, other) -> CyclotomicInt:
        if isinstance(other, CyclotomicInt):
            if other.p != self.p:
                raise ValueError("mismatched cyclotomic orders")
            return other
        if isinstance(other, (int, np.integer)):
            return CyclotomicInt.integer(self.p, int(other))
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return CyclotomicInt(self.p, (a + b for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicInt(self.p, (-a for a in self.coeffs))

    def __sub__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        p = self.p
        out = [0] * p
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(o.coeffs):
                    if b:
                        out[(i + j) % p] += a * b
        return CyclotomicInt(p, out)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers are not cyclotomic integers")
        result, base = CyclotomicInt.integer(self.p, 1), self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def conj(self) -> CyclotomicInt:
        p = self.p
        return CyclotomicInt(p, (self.coeffs[(-j) % p] for j in range(p)))

    def galois(self, s: int) -> CyclotomicInt:
        """Apply the automorphism zeta -> zeta^s (s prime to p)."""
        p = self.p
        out = [0] * p
        for j, c in enumerate(self.coeffs):
            out[(j * s) % p] += c
        return CyclotomicInt(p, out)

    def norm_squared(self) -> CyclotomicInt:
        return self * self.conj()

    def is_integer(self) -> bool:
        return not any(self.coeffs[1:])

    def __int__(self):
        if not self.is_integer():
            raise ValueError(f"{self!r} is not a rational integer")
        return self.coeffs[0]

    def __complex__(self):
        p = self.p
        return sum((c * cmath.exp(2j * cmath.pi * j / p) for j, c in enumerate(self.coeffs) if c),
                   0j)

    def __abs__(self):
        return abs(complex(self))

    def __eq__(self, other):
        o = self._other(other)
        if o is NotImplemented:
            return o
        return self.coeffs == o.coeffs

    def __hash__(self):
        return hash((self.p, self.coeffs))

    def __repr__(self):
        terms = [f"{c}" if j == 0 else f"{c}*z^{j}" for j, c in enumerate(self.coeffs) if c]
        return f"CyclotomicInt(p={self.p}: {' + '.join(terms) or '0'})"


def character_sum(field: FiniteField, values, weights=None) -> CyclotomicInt:
    """Exact sum of chi(v) (times integer weights) over an array of field indices."""
    tr = field.trace_table[np.asarray(values).ravel()]
    if weights is None:
        counts = np.bincount(tr, minlength=field.p)
        return CyclotomicInt.from_counts(field.p, counts)
    w = np.asarray(weights).ravel()
    c = [0] * field.p
    for j in range(field.p):
        c[j] = int(w[tr == j].astype(object).sum()) if w.dtype == object else int(w[tr == j].sum())
    return CyclotomicInt(field.p, c)
