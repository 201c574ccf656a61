"""Exact t-adjacency operators on F_q^d.

``Adjacency(fn, t).apply(w)`` returns ``v[x] = sum_y w[y] [phi(x, y) = t]`` for a
nonnegative integer vector ``w`` (``transpose=True`` uses ``phi(y, x)``).  Two
independent engines back it:

* ``sparse``: explicit neighbour lists in a CSR matrix;
* ``fourier``: the additive-group DFT of (Z/p)^{kd} evaluated modulo word-size
  primes P = 1 (mod p) and recombined by CRT, so the result is exact.

Vectors stay ``int64`` while their values allow it and fall back to Python-int
object arrays otherwise.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sps

from .field import is_prime
from .forms import BILINEAR, DistanceFn, Space, transpose as mat_transpose

INT64_SAFE = 2**62
SPARSE_NNZ_LIMIT = 40_000_000


class BudgetExceeded(RuntimeError):
    pass


# -- exact integer vector helpers -------------------------------------------

def exact_sum(v) -> int:
    v = np.asarray(v)
    if v.dtype == object:
        return int(sum(int(x) for x in v.ravel()))
    v = v.astype(np.int64, copy=False).ravel()
    if v.size == 0:
        return 0
    if v.min() < 0:
        return int(v.astype(object).sum())
    # split into 31-bit limbs so the partial sums cannot overflow
    lo = v & (2**31 - 1)
    hi = v >> 31
    return int(lo.sum()) + (int(hi.sum()) << 31)


def max_abs(v) -> int:
    v = np.asarray(v)
    if v.size == 0:
        return 0
    if v.dtype == object:
        return max(abs(int(x)) for x in v.ravel())
    return int(np.abs(v).max())


def normalize(v) -> np.ndarray:
    """int64 when every value is below 2^62, else an object array of Python ints."""
    v = np.asarray(v)
    if v.dtype == object:
        if max_abs(v) < INT64_SAFE:
            return v.astype(np.int64)
        return v
    if v.dtype == bool:
        return v.astype(np.int64)
    return v.astype(np.int64, copy=False)


def multiply(a, b) -> np.ndarray:
    a, b = normalize(a), normalize(b)
    if a.dtype != object and b.dtype != object:
        if float(max_abs(a)) * float(max_abs(b)) < INT64_SAFE:
            return a * b
    return normalize(a.astype(object) * b.astype(object))


def _residues(v: np.ndarray, P: int) -> np.ndarray:
    if v.dtype == object:
        return np.array([int(x) % P for x in v.ravel()], dtype=np.int64).reshape(v.shape)
    return v % P


# -- CRT ----------------------------------------------------------------------

def _primes_one_mod(p: int, limit: int):
    """Primes P = 1 (mod p), descending from ``limit``."""
    P = limit - (limit - 1) % p
    while P > p:
        if is_prime(P):
            yield P
        P -= p


_PRIME_CACHE: dict[int, list[int]] = {}


def crt_primes(p: int, count: int) -> list[int]:
    """Primes P = 1 (mod p) small enough that p * P^2 < 2^63."""
    cached = _PRIME_CACHE.setdefault(p, [])
    if len(cached) < count:
        limit = int((2**62 // p) ** 0.5)
        gen = _primes_one_mod(p, limit)
        cached[:] = [next(gen) for _ in range(count)]
    return cached[:count]


def _root_of_unity(p: int, P: int) -> int:
    for g in range(2, P):
        w = pow(g, (P - 1) // p, P)
        if w != 1:
            return w
    raise AssertionError("no root of unity")  # pragma: no cover


def crt_combine(residues: list[np.ndarray], primes: list[int]) -> np.ndarray:
    """Values in [0, prod(primes)) from their residues (Garner)."""
    digits = [residues[0]]
    for i in range(1, len(primes)):
        Pi = primes[i]
        acc = digits[-1] % Pi
        for j in range(i - 2, -1, -1):
            acc = (acc * (primes[j] % Pi) + digits[j]) % Pi
        mod_prod = 1
        for j in range(i):
            mod_prod = mod_prod * primes[j] % Pi
        inv = pow(mod_prod, -1, Pi)
        digits.append(((residues[i] - acc) % Pi) * inv % Pi)
    if len(primes) <= 2:
        out = digits[0].astype(np.int64)
        if len(primes) == 2:
            out = out + primes[0] * digits[1]
        return out
    out = digits[-1].astype(object)
    for j in range(len(primes) - 2, -1, -1):
        out = out * primes[j] + digits[j].astype(object)
    return normalize(out)


class GroupDFT:
    """DFT on (Z/p)^{kd} modulo a prime P = 1 (mod p)."""

    def __init__(self, space: Space, P: int):
        self.space = space
        self.P = P
        p = space.field.p
        self.p = p
        w = _root_of_unity(p, P)
        self.omega = w
        self.omega_pows = np.array([pow(w, j, P) for j in range(p)], dtype=np.int64)
        jk = np.outer(np.arange(p), np.arange(p)) % p
        self.W = self.omega_pows[jk]
        self.W_inv = self.omega_pows[(-jk) % p]
        self.n_inv = pow(space.size % P, -1, P)

    def _transform(self, a: np.ndarray, W: np.ndarray) -> np.ndarray:
        p, P = self.p, self.P
        nd = self.space.n_digits
        x = a.reshape((p,) * nd) if nd else a
        for axis in range(nd):
            x = np.moveaxis(x, axis, 0)
            out = np.zeros_like(x)
            for i in range(p):
                acc = W[i, 0] * x[0]
                for j in range(1, p):
                    acc = acc + W[i, j] * x[j]
                out[i] = acc % P
            x = np.moveaxis(out, 0, axis)
        return np.ascontiguousarray(x).reshape(-1)

    def forward(self, residues: np.ndarray) -> np.ndarray:
        """hat w[l] = sum_y w[y] omega^{<l, digits(y)>} (mod P)."""
        return self._transform(residues, self.W)

    def inverse(self, spectrum: np.ndarray) -> np.ndarray:
        return self._transform(spectrum, self.W_inv) * self.n_inv % self.P


_DFT_CACHE: dict[tuple, GroupDFT] = {}


def group_dft(space: Space, P: int) -> GroupDFT:
    key = (space.field.p, space.field.k, space.d, P)
    if key not in _DFT_CACHE:
        _DFT_CACHE[key] = GroupDFT(space, P)
    return _DFT_CACHE[key]


def _trace_dual(field) -> np.ndarray:
    """dual[c] = sum_b Tr(c * x^b) p^b, so that chi(c * y) = zeta^{<digits(dual[c]), digits(y)>}."""
    q, p, k = field.q, field.p, field.k
    c = np.arange(q, dtype=np.int64)
    out = np.zeros(q, dtype=np.int64)
    for b in range(k):
        basis = p**b  # index of x^b
        out += field.trace_table[field.mul_table[c, basis]] * p**b
    return out


def primes_for_bound(p: int, bound: int) -> list[int]:
    count = 1
    while True:
        primes = crt_primes(p, count)
        prod = 1
        for P in primes:
            prod *= P
        if prod > bound:
            return primes
        count += 1


class Adjacency:
    """The t-adjacency operator of a distance function on the whole space."""

    def __init__(self, fn: DistanceFn, t: int, engine: str = "auto"):
        t = int(t)
        if not 0 <= t < fn.field.q:
            raise ValueError("label outside the field")
        self.fn = fn
        self.t = t
        self.space = fn.space
        self.engine = self._choose(engine)
        self._csr: dict[bool, sps.csr_matrix] = {}
        self._spectra: dict[int, np.ndarray] = {}

    def _choose(self, engine: str) -> str:
        if engine in ("sparse", "fourier"):
            return engine
        if engine != "auto":
            raise ValueError(f"unknown engine {engine!r}")
        return "sparse" if self.estimated_nnz() <= SPARSE_NNZ_LIMIT else "fourier"

    def estimated_nnz(self) -> int:
        sp = self.space
        if self.fn.kind == BILINEAR:
            return sp.size * sp.q ** (sp.d - 1)
        return sp.size * int(np.count_nonzero(self.fn.quadratic_values() == self.t))

    # -- neighbour lists ----------------------------------------------------

    def neighbors(self, x: int, transpose: bool = False) -> np.ndarray:
        """Sorted indices y with phi(x, y) = t (phi(y, x) = t when transposed)."""
        if self.engine == "sparse" or transpose in self._csr:
            m = self.csr(transpose)
            return m.indices[m.indptr[x]:m.indptr[x + 1]]
        return np.sort(self._neighbor_block(np.array([x]), transpose)[0])

    def _offsets(self) -> np.ndarray:
        return np.flatnonzero(self.fn.quadratic_values() == self.t)

    def neighbor_block(self, xs, transpose: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """(rows, block): the positions in xs that have any neighbour and a
        (len(rows), deg) array of their neighbours (unsorted)."""
        xs = np.asarray(xs, dtype=np.int64)
        if self.t == 0 and self.fn.kind == BILINEAR:
            raise ValueError("label 0 is not supported")
        rows = np.flatnonzero(xs != 0) if self.fn.kind == BILINEAR else np.arange(len(xs))
        block = self._neighbor_block(xs[rows], transpose)
        return rows, np.asarray(block, dtype=np.int64).reshape(len(rows), self.degree)

    @property
    def degree(self) -> int:
        """Neighbour count of every nonzero x (every x for the quadratic kind)."""
        if self.fn.kind == BILINEAR:
            return self.space.q ** (self.space.d - 1)
        return int(np.count_nonzero(self.fn.quadratic_values() == self.t))

    def _neighbor_block(self, xs: np.ndarray, transpose: bool) -> np.ndarray:
        """Neighbour lists for the rows xs, as a (len(xs), deg) array (constant degree
        per row block is guaranteed: spheres are translation invariant, hyperplanes
        have q^{d-1} points)."""
        sp, F = self.space, self.fn.field
        if self.fn.kind != BILINEAR:
            offs = self._offsets()
            return sp.add(xs[:, None], offs[None, :])
        A = self.fn.matrix if transpose else mat_transpose(self.fn.matrix)
        u = sp.coords(sp.matvec(A, xs))  # rows of u . y = t
        d, q = sp.d, sp.q
        free = sp.coords(np.arange(q ** (d - 1), dtype=np.int64))[:, : d - 1] if d > 1 else np.zeros((1, 0), np.int64)
        out = np.empty((len(xs), q ** (d - 1)), dtype=np.int64)
        zero_rows = ~np.any(u, axis=1)
        pivot = np.where(zero_rows, 0, np.argmax(u != 0, axis=1))
        for i in range(d):
            rows = np.flatnonzero((pivot == i) & ~zero_rows)
            if rows.size == 0:
                continue
            ui = u[rows]
            others = [j for j in range(d) if j != i]
            acc = np.zeros((len(rows), free.shape[0]), dtype=np.int64)
            for col, j in enumerate(others):
                acc = F.add(acc, F.mul(ui[:, j][:, None], free[None, :, col]))
            yi = F.mul(F.sub(self.t, acc), F.inv_table[ui[:, i]][:, None])
            coords = np.empty((len(rows), free.shape[0], d), dtype=np.int64)
            for col, j in enumerate(others):
                coords[:, :, j] = free[None, :, col]
            coords[:, :, i] = yi
            out[rows] = coords @ sp.coord_weights
        if np.any(zero_rows):
            # x with A^T x = 0 only for x = 0: phi(0, y) = 0 != t
            out = [r if not z else np.empty(0, dtype=np.int64) for r, z in zip(out, zero_rows)]
            if self.t == 0:
                raise ValueError("label 0 is not supported")
        return out

    def csr(self, transpose: bool = False) -> sps.csr_matrix:
        if transpose not in self._csr:
            nnz = self.estimated_nnz()
            if nnz > SPARSE_NNZ_LIMIT:
                raise BudgetExceeded(f"adjacency with ~{nnz} entries exceeds the sparse limit")
            N = self.space.size
            indptr = [0]
            indices = []
            chunk = max(1, 4_000_000 // max(1, nnz // N + 1))
            for start in range(0, N, chunk):
                xs = np.arange(start, min(N, start + chunk), dtype=np.int64)
                block = self._neighbor_block(xs, transpose)
                for row in block:
                    row = np.sort(np.asarray(row, dtype=np.int64))
                    indices.append(row)
                    indptr.append(indptr[-1] + len(row))
            ind = np.concatenate(indices) if indices else np.zeros(0, np.int64)
            data = np.ones(len(ind), dtype=np.int64)
            self._csr[transpose] = sps.csr_matrix((data, ind, np.array(indptr)), shape=(N, N))
        return self._csr[transpose]

    # -- application -----------------------------------------------------------

    def apply(self, w, transpose: bool = False) -> np.ndarray:
        w = normalize(w)
        if w.shape != (self.space.size,):
            raise ValueError("vector length must be q^d")
        if self.engine == "sparse":
            return self._apply_sparse(w, transpose)
        return self._apply_fourier(w, transpose)

    def _apply_sparse(self, w: np.ndarray, transpose: bool) -> np.ndarray:
        m = self.csr(transpose)
        if w.dtype != object and max_abs(w) * max(1, int(np.diff(m.indptr).max(initial=0))) < INT64_SAFE:
            return np.asarray(m @ w, dtype=np.int64)
        # 30-bit limbs keep every partial product inside int64
        w = w.astype(object)
        out = np.zeros(len(w), dtype=object)
        shift = 0
        rest = w
        while any(int(v) for v in rest):
            limb = np.array([int(v) & (2**30 - 1) for v in rest], dtype=np.int64)
            out = out + (np.asarray(m @ limb, dtype=np.int64).astype(object) << shift)
            rest = np.array([int(v) >> 30 for v in rest], dtype=object)
            shift += 30
        return normalize(out)

    def _apply_fourier(self, w: np.ndarray, transpose: bool) -> np.ndarray:
        bound = exact_sum(np.abs(w) if w.dtype != object else w)
        primes = primes_for_bound(self.space.field.p, bound)
        residues = [self._apply_mod(w, transpose, P) for P in primes]
        return crt_combine(residues, primes)

    def _apply_mod(self, w: np.ndarray, transpose: bool, P: int) -> np.ndarray:
        dft = group_dft(self.space, P)
        spec = dft.forward(_residues(w, P))
        if self.fn.kind != BILINEAR:
            if P not in self._spectra:
                kern = (self.fn.quadratic_values() == self.t).astype(np.int64)
                self._spectra[P] = dft.forward(kern)
            return dft.inverse(spec * self._spectra[P] % P)
        sp, F = self.space, self.fn.field
        A = self.fn.matrix if transpose else mat_transpose(self.fn.matrix)
        u = sp.coords(sp.matvec(A, sp.all()))
        dual = _trace_dual(F)
        acc = np.zeros(sp.size, dtype=np.int64)
        for j in range(F.q):
            L = dual[F.mul(j, u)] @ sp.coord_weights
            phase = int(dft.omega_pows[(-int(F.trace_table[F.mul_table[j, self.t]])) % F.p])
            acc = (acc + spec[L] * phase) % P
        return acc * pow(F.q, -1, P) % P

    def degrees(self, mask=None, transpose: bool = False) -> np.ndarray:
        """Number of t-neighbours of each x inside ``mask`` (all points if None)."""
        w = np.ones(self.space.size, dtype=np.int64) if mask is None else np.asarray(mask, dtype=np.int64)
        return self.apply(w, transpose)


_ADJ_CACHE: dict[tuple, Adjacency] = {}


def adjacency(fn: DistanceFn, t: int, engine: str = "auto") -> Adjacency:
    """Cached :class:`Adjacency` per (form, label, engine)."""
    key = (id(fn), int(t), engine)
    hit = _ADJ_CACHE.get(key)
    if hit is None or hit.fn is not fn:
        if len(_ADJ_CACHE) > 256:
            _ADJ_CACHE.clear()
        hit = Adjacency(fn, t, engine)
        _ADJ_CACHE[key] = hit
    return hit


def clear_cache():
    """Drop every cached adjacency operator (frees CSR matrices and spectra)."""
    _ADJ_CACHE.clear()
