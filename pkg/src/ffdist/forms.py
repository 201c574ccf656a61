"""Vectors in F_q^d, non-degenerate bilinear/quadratic distance functions, spheres."""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import FieldElement, FiniteField, character_sum

BILINEAR = "bilinear"
QUADRATIC = "quadratic"


class FormError(ValueError):
    pass


class DimensionMismatch(FormError):
    pass


class DegenerateForm(FormError):
    pass


class ZeroLabel(FormError):
    pass


class FormSpecError(FormError):
    pass


class Space:
    """F_q^d with vectors encoded as base-q integers, coordinate 0 least significant.

    Equivalently an index is the little-endian base-p digit string of length k*d,
    so vector addition is digitwise addition mod p.
    """

    def __init__(self, field: FiniteField, d: int):
        if d < 1:
            raise DimensionMismatch("dimension must be >= 1")
        self.field = field
        self.d = d
        self.q = field.q
        self.size = field.q**d
        self.coord_weights = field.q ** np.arange(d, dtype=np.int64)
        self.n_digits = field.k * d
        self.digit_weights = field.p ** np.arange(self.n_digits, dtype=np.int64)

    def __repr__(self):
        return f"Space({self.field!r}, d={self.d})"

    def __eq__(self, other):
        return isinstance(other, Space) and other.field is self.field and other.d == self.d

    def __hash__(self):
        return hash((self.field.p, self.field.k, self.d))

    def __reduce__(self):
        return make_space, (self.field.p, self.field.k, self.d)

    def all(self) -> np.ndarray:
        return np.arange(self.size, dtype=np.int64)

    def coords(self, idx) -> np.ndarray:
        """Field-index coordinates, shape ``idx.shape + (d,)``."""
        idx = np.asarray(idx, dtype=np.int64)
        return (idx[..., None] // self.coord_weights) % self.q

    def index(self, coords) -> np.ndarray:
        c = np.asarray(coords, dtype=np.int64)
        if c.shape[-1] != self.d:
            raise DimensionMismatch(f"expected {self.d} coordinates, got {c.shape[-1]}")
        if np.any((c < 0) | (c >= self.q)):
            raise FormError("coordinate outside the field")
        return c @ self.coord_weights

    def vector(self, *coords) -> int:
        """Index of the vector with the given field-index coordinates."""
        if len(coords) == 1 and not isinstance(coords[0], (int, np.integer, FieldElement)):
            coords = tuple(coords[0])
        return int(self.index([int(c) for c in coords]))

    def digits(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64)
        return (idx[..., None] // self.digit_weights) % self.field.p

    def add(self, x, y):
        p = self.field.p
        return ((self.digits(x) + self.digits(y)) % p) @ self.digit_weights

    def sub(self, x, y):
        p = self.field.p
        return ((self.digits(x) - self.digits(y)) % p) @ self.digit_weights

    def neg(self, x):
        return ((-self.digits(x)) % self.field.p) @ self.digit_weights

    def scale(self, c, x):
        """c * x for field index c (scalar or array broadcast against x)."""
        F = self.field
        return self.index(F.mul(np.asarray(c)[..., None], self.coords(x)))

    def dot(self, x, y):
        """Standard dot product sum_i x_i y_i (field indices)."""
        F = self.field
        cx, cy = self.coords(x), self.coords(y)
        cx, cy = np.broadcast_arrays(cx, cy)
        out = F.mul(cx[..., 0], cy[..., 0])
        for i in range(1, self.d):
            out = F.add(out, F.mul(cx[..., i], cy[..., i]))
        return out

    def matvec(self, matrix, x):
        """Matrix (d x d field indices) times the vectors x, as vector indices."""
        F = self.field
        c = self.coords(x)
        rows = []
        for i in range(self.d):
            acc = F.mul(matrix[i, 0], c[..., 0])
            for j in range(1, self.d):
                acc = F.add(acc, F.mul(matrix[i, j], c[..., j]))
            rows.append(acc)
        return np.stack(rows, axis=-1) @ self.coord_weights


@functools.lru_cache(maxsize=None)
def make_space(p: int, k: int, d: int) -> Space:
    from .field import make_field

    return Space(make_field(p, k), d)


# -- linear algebra over F_q on small matrices of field indices -------------

def _as_matrix(field: FiniteField, m) -> np.ndarray:
    a = np.array([[int(v) for v in row] for row in m], dtype=np.int64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch("matrix must be square")
    if np.any((a < 0) | (a >= field.q)):
        raise FormError("matrix entry outside the field")
    return a


def matmul(field: FiniteField, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = a.shape[0], b.shape[1]
    out = np.zeros((n, m), dtype=np.int64)
    for i in range(n):
        for j in range(m):
            acc = 0
            for t in range(a.shape[1]):
                acc = field.add_table[acc, field.mul_table[a[i, t], b[t, j]]]
            out[i, j] = acc
    return out


def transpose(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a.T)


def rank_and_det(field: FiniteField, a: np.ndarray) -> tuple[int, int]:
    """Rank and determinant (field index) by Gaussian elimination."""
    F = field
    m = a.copy()
    n = m.shape[0]
    det, rank = 1, 0
    for col in range(n):
        piv = next((r for r in range(rank, n) if m[r, col] != 0), None)
        if piv is None:
            det = 0
            continue
        if piv != rank:
            m[[rank, piv]] = m[[piv, rank]]
            det = int(F.neg_table[det])
        det = int(F.mul_table[det, m[rank, col]])
        inv = F.inv_table[m[rank, col]]
        for r in range(rank + 1, n):
            if m[r, col]:
                f = F.mul_table[m[r, col], inv]
                m[r] = F.sub(m[r], F.mul(f, m[rank]))
        rank += 1
    return rank, (det if rank == n else 0)


def inverse(field: FiniteField, a: np.ndarray) -> np.ndarray:
    F = field
    n = a.shape[0]
    m = np.concatenate([a.copy(), np.eye(n, dtype=np.int64)], axis=1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r, col] != 0), None)
        if piv is None:
            raise DegenerateForm("matrix is singular")
        m[[col, piv]] = m[[piv, col]]
        m[col] = F.mul(F.inv_table[m[col, col]], m[col])
        for r in range(n):
            if r != col and m[r, col]:
                m[r] = F.sub(m[r], F.mul(m[r, col], m[col]))
    return m[:, n:].copy()


@dataclass(frozen=True, eq=False)
class DistanceFn:
    """phi(x, y) = x^T A y (bilinear) or Q(x - y) with Q(v) = v^T A v (quadratic).

    For the quadratic kind ``matrix`` is the symmetric Gram matrix of Q.  ``spec``
    records the textual form it was parsed from, when available.
    """

    kind: str
    space: Space
    matrix: np.ndarray
    spec: str = ""
    _cache: dict = dc_field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.kind not in (BILINEAR, QUADRATIC):
            raise FormError(f"unknown form kind {self.kind!r}")
        a = _as_matrix(self.space.field, self.matrix)
        if a.shape[0] != self.space.d:
            raise DimensionMismatch(f"matrix is {a.shape[0]}x{a.shape[0]}, space has d={self.space.d}")
        object.__setattr__(self, "matrix", a)
        a.setflags(write=False)
        rank, det = rank_and_det(self.space.field, a)
        if rank < self.space.d:
            raise DegenerateForm(f"form matrix has rank {rank} < {self.space.d}")
        if self.kind == QUADRATIC and not np.array_equal(a, a.T):
            raise FormError("quadratic form Gram matrix must be symmetric")
        object.__setattr__(self, "det", det)

    def __reduce__(self):
        return _rebuild_fn, (self.kind, self.space, self.matrix.tolist(), self.spec)

    @property
    def field(self) -> FiniteField:
        return self.space.field

    @property
    def symmetric(self) -> bool:
        return bool(np.array_equal(self.matrix, self.matrix.T))

    @property
    def constant(self) -> int:
        """The constant C_phi of the functional distance bound."""
        return 1 if self.kind == BILINEAR else 2

    def describe(self) -> str:
        if self.spec:
            return self.spec
        rows = ",".join("[" + ",".join(str(int(v)) for v in r) + "]" for r in self.matrix)
        return f"{self.kind}:matrix=[{rows}]"

    # -- evaluation --------------------------------------------------------

    def quadratic_values(self) -> np.ndarray:
        """Q(v) for every vector index v (quadratic kind only), cached."""
        if self.kind != QUADRATIC:
            raise FormError("quadratic_values needs a quadratic form")
        if "qvals" not in self._cache:
            self._cache["qvals"] = self.Q(self.space.all())
            self._cache["qvals"].setflags(write=False)
        return self._cache["qvals"]

    def Q(self, v):
        F, sp, A = self.field, self.space, self.matrix
        c = sp.coords(v)
        out = np.zeros(c.shape[:-1], dtype=np.int64)
        for i in range(sp.d):
            for j in range(sp.d):
                if A[i, j]:
                    out = F.add(out, F.mul(A[i, j], F.mul(c[..., i], c[..., j])))
        return out

    def bilinear(self, x, y):
        """x^T A y on index arrays (broadcast)."""
        return self.space.dot(x, self.space.matvec(self.matrix, y))

    def values(self, x, y):
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if self.kind == BILINEAR:
            return self.bilinear(x, y)
        x, y = np.broadcast_arrays(x, y)
        return self.quadratic_values()[self.space.sub(x, y)]

    def phi(self, x, y) -> FieldElement:
        xi, yi = _vec_index(self.space, x), _vec_index(self.space, y)
        return FieldElement(self.field, int(self.values(xi, yi)))

    def canonical(self) -> tuple[int, np.ndarray]:
        """Cached :func:`classify` result."""
        if "canon" not in self._cache:
            self._cache["canon"] = classify(self)
        return self._cache["canon"]

    @property
    def canonical_a(self) -> int:
        return self.canonical()[0]

    def dual_values(self, xi) -> np.ndarray:
        """Q'(xi) = xi_1^2 + ... + xi_{d-1}^2 + a^{-1} xi_d^2 for a diagonal canonical Q."""
        a = canonical_diagonal(self)
        if a is None:
            raise FormError("dual form is defined for canonical diagonal forms only")
        F, sp = self.field, self.space
        c = sp.coords(xi)
        out = np.zeros(c.shape[:-1], dtype=np.int64)
        for i in range(sp.d):
            w = 1 if i < sp.d - 1 else int(F.inv_table[a])
            out = F.add(out, F.mul(w, F.mul(c[..., i], c[..., i])))
        return out


def _rebuild_fn(kind, space, matrix, spec):
    return DistanceFn(kind, space, matrix, spec)


def _vec_index(space: Space, x) -> int:
    if isinstance(x, (int, np.integer)):
        if not 0 <= int(x) < space.size:
            raise DimensionMismatch(f"vector index {x} outside F_q^{space.d}")
        return int(x)
    coords = [int(c) for c in x]
    if len(coords) != space.d:
        raise DimensionMismatch(f"expected {space.d} coordinates, got {len(coords)}")
    return space.vector(coords)


def dot_product(space: Space) -> DistanceFn:
    return DistanceFn(BILINEAR, space, np.eye(space.d, dtype=np.int64), "bilinear:dot")


def bilinear_form(space: Space, matrix) -> DistanceFn:
    return DistanceFn(BILINEAR, space, _as_matrix(space.field, matrix))


def quadratic_form(space: Space, matrix) -> DistanceFn:
    return DistanceFn(QUADRATIC, space, _as_matrix(space.field, matrix))


def diagonal_form(space: Space, diag) -> DistanceFn:
    diag = [int(v) for v in diag]
    if len(diag) != space.d:
        raise DimensionMismatch(f"expected {space.d} diagonal entries")
    spec = "quadratic:diag=" + ",".join(str(v) for v in diag)
    return DistanceFn(QUADRATIC, space, np.diag(diag).astype(np.int64), spec)


def norm_form(space: Space) -> DistanceFn:
    """||x|| = x_1^2 + ... + x_d^2."""
    return diagonal_form(space, [1] * space.d)


def canonical_form(space: Space, a: int) -> DistanceFn:
    return diagonal_form(space, [1] * (space.d - 1) + [int(a)])


def canonical_diagonal(fn: DistanceFn):
    """The scalar a when fn is X_1^2 + ... + X_{d-1}^2 + a X_d^2, else None."""
    if fn.kind != QUADRATIC:
        return None
    A = fn.matrix
    d = A.shape[0]
    if np.count_nonzero(A - np.diag(np.diag(A))):
        return None
    if any(A[i, i] != 1 for i in range(d - 1)):
        return None
    return int(A[d - 1, d - 1])


_MATRIX_RE = re.compile(r"^\s*\[\s*\[.*\]\s*\]\s*$")


def parse_form(spec: str, space: Space) -> DistanceFn:
    """Parse ``bilinear:dot``, ``bilinear:matrix=[[..]]``, ``quadratic:diag=1,1,a``,
    ``quadratic:norm``, ``quadratic:canonical[=a]``, ``quadratic:matrix=[[..]]`` (``a`` denotes the field's canonical non-square)."""
    F = space.field
    try:
        kind, _, rest = spec.strip().partition(":")
        key, _, val = rest.partition("=")

        def entry(tok: str) -> int:
            tok = tok.strip()
            if tok == "a":
                return F.nonsquare
            v = int(tok)
            if not 0 <= v < F.q:
                raise FormSpecError(f"entry {v} outside the field in {spec!r}")
            return v

        if kind == BILINEAR and key == "dot" and not val:
            fn = dot_product(space)
        elif kind in (BILINEAR, QUADRATIC) and key == "matrix":
            if not _MATRIX_RE.match(val):
                raise FormSpecError(f"malformed matrix in {spec!r}")
            rows = re.findall(r"\[([^\[\]]*)\]", val)
            m = [[entry(t) for t in r.split(",")] for r in rows]
            fn = DistanceFn(kind, space, m)
        elif kind == QUADRATIC and key == "norm" and not val:
            fn = norm_form(space)
        elif kind == QUADRATIC and key == "canonical":
            fn = canonical_form(space, entry(val) if val else F.nonsquare)
        elif kind == QUADRATIC and key == "diag":
            fn = diagonal_form(space, [entry(t) for t in val.split(",")])
        else:
            raise FormSpecError(f"unrecognised form spec {spec!r}")
    except FormSpecError:
        raise
    except (FormError, ValueError) as exc:
        raise FormSpecError(f"{spec}: {exc}") from exc
    object.__setattr__(fn, "spec", spec.strip())
    return fn


def phi(fn: DistanceFn, x, y) -> FieldElement:
    return fn.phi(x, y)


def d_lambda(fn: DistanceFn, lam, x, y) -> int:
    """q if phi(x, y) = lam, else 0."""
    lam = int(lam)
    if lam == 0:
        raise ZeroLabel("edge label must be nonzero")
    return fn.field.q if fn.phi(x, y).value == lam else 0


# -- classification ---------------------------------------------------------

def _gram_value(F: FiniteField, A: np.ndarray, u: np.ndarray, v: np.ndarray) -> int:
    """u^T A v for coordinate vectors u, v."""
    Av = matmul(F, A, v.reshape(-1, 1)).ravel()
    acc = 0
    for a, b in zip(u, Av):
        acc = int(F.add_table[acc, F.mul_table[a, b]])
    return acc


def classify(fn: DistanceFn) -> tuple[int, np.ndarray]:
    """Canonical scalar a and invertible P with Q(P x) = x_1^2 + ... + a x_d^2.

    ``a`` is 1 when det A is a square and the field's least non-square otherwise.
    P's columns are the new basis vectors (field indices).
    """
    if fn.kind != QUADRATIC:
        raise FormError("classify needs a quadratic form")
    F = fn.field
    A = fn.matrix
    d = A.shape[0]
    if rank_and_det(F, A)[0] < d:
        raise DegenerateForm("form is degenerate")
    basis = [np.eye(d, dtype=np.int64)[:, i] for i in range(d)]

    def Bf(u, v):
        return _gram_value(F, A, u, v)

    def lin(c1, u, c2, v):
        return F.add(F.mul(c1, u), F.mul(c2, v))

    # orthogonal basis by symmetric elimination
    ortho: list[np.ndarray] = []
    rest = basis
    while rest:
        piv = next((v for v in rest if Bf(v, v) != 0), None)
        if piv is None:
            # all remaining vectors isotropic: u + w has B(u+w,u+w) = 2B(u,w) != 0
            u = rest[0]
            w = next(v for v in rest[1:] if Bf(u, v) != 0)
            piv = lin(1, u, 1, w)
        ortho.append(piv)
        bpp_inv = int(F.inv_table[Bf(piv, piv)])
        new_rest = []
        for v in rest:
            if v is piv:
                continue
            c = int(F.mul_table[Bf(piv, v), bpp_inv])
            r = lin(1, v, int(F.neg_table[c]), piv)
            if np.any(r):
                new_rest.append(r)
        # keep exactly d - len(ortho) independent vectors
        rest = _independent(F, new_rest, d - len(ortho))
    diag = [Bf(v, v) for v in ortho]

    # rotate pairs so every entry but the last becomes 1
    for i in range(d - 1):
        b1, b2 = diag[i], diag[i + 1]
        x, y = _represent_one(F, b1, b2)
        u, w = ortho[i], ortho[i + 1]
        ortho[i] = lin(x, u, y, w)
        ortho[i + 1] = lin(int(F.neg_table[F.mul_table[y, b2]]), u, int(F.mul_table[x, b1]), w)
        diag[i] = 1
        diag[i + 1] = int(F.mul_table[b1, b2])
    last = diag[d - 1]
    a = 1 if F.eta_table[last] == 1 else F.nonsquare
    c = int(F.sqrt(F.div(a, last)))
    ortho[d - 1] = F.mul(c, ortho[d - 1])
    P = np.stack(ortho, axis=1).astype(np.int64)
    return a, P


def _independent(F: FiniteField, vecs, count):
    out: list[np.ndarray] = []
    for v in vecs:
        if len(out) == count:
            break
        trial = out + [v]
        m = np.stack(trial, axis=1)
        if rank_and_det(F, _square_pad(m))[0] == len(trial):
            out.append(v)
    return out


def _square_pad(m: np.ndarray) -> np.ndarray:
    d, c = m.shape
    return np.concatenate([m, np.zeros((d, d - c), dtype=np.int64)], axis=1)


def _represent_one(F: FiniteField, b1: int, b2: int) -> tuple[int, int]:
    """Some (x, y) with b1 x^2 + b2 y^2 = 1."""
    for x in range(F.q):
        rem = F.sub(1, F.mul(b1, F.mul(x, x)))
        y2 = int(F.div(rem, b2))
        if F.eta_table[y2] >= 0:
            return x, int(F.sqrt_table[y2])
    raise AssertionError("binary form fails to represent 1")  # pragma: no cover


# -- spheres ------------------------------------------------------------------

@dataclass(frozen=True)
class Sphere:
    t: int
    points: np.ndarray  # boolean mask over [0, q^d)

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.points))

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.points)


def sphere(fn: DistanceFn, t) -> Sphere:
    """S_t = {x : Q(x) = t}."""
    t = int(t)
    mask = fn.quadratic_values() == t
    mask.setflags(write=False)
    return Sphere(t, mask)


def sphere_sizes(fn: DistanceFn) -> np.ndarray:
    """|S_t| for every t in F_q (indexed by field index)."""
    return np.bincount(fn.quadratic_values(), minlength=fn.field.q)


def sphere_fourier_sum(fn: DistanceFn, t, m):
    """Exact sum_{Q(x)=t} chi(x . m) as a cyclotomic integer."""
    t = int(t)
    if t == 0:
        raise ZeroLabel("sphere Fourier coefficients are taken at t != 0")
    pts = sphere(fn, t).indices()
    return character_sum(fn.field, fn.space.dot(pts, int(m)))


def sphere_fourier(fn: DistanceFn, t, m) -> complex:
    """Normalized coefficient q^{-d} sum_{Q(x)=t} chi(x . m)."""
    m = _vec_index(fn.space, m)
    return complex(sphere_fourier_sum(fn, t, m)) / fn.space.size


def sphere_fourier_all(fn: DistanceFn, t) -> np.ndarray:
    """sum_{Q(x)=t} chi(x . m) (complex) for every m, computed from exact trace histograms."""
    F, sp = fn.field, fn.space
    pts = sphere(fn, t).indices()
    p = F.p
    roots = np.exp(2j * np.pi * np.arange(p) / p)
    out = np.empty(sp.size, dtype=complex)
    chunk = max(1, 2_000_000 // max(1, len(pts)))
    for start in range(0, sp.size, chunk):
        ms = np.arange(start, min(sp.size, start + chunk), dtype=np.int64)
        tr = F.trace_table[sp.dot(pts[None, :], ms[:, None])]
        counts = np.zeros((len(ms), p), dtype=np.int64)
        for j in range(p):
            counts[:, j] = np.count_nonzero(tr == j, axis=1)
        out[start:start + len(ms)] = counts @ roots
    return out
