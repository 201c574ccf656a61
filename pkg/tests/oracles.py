"""Definitional reference implementations, independent of the package internals.

Field arithmetic goes through sympy's dense polynomials over GF(p); sums are
plain Python loops over coordinates with complex roots of unity.
"""

from __future__ import annotations

import cmath
import itertools
from fractions import Fraction

from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_add, gf_irreducible_p, gf_mul, gf_pow_mod, gf_rem


class NaiveField:
    """GF(p^k) with elements as little-endian base-p indices, arithmetic via sympy."""

    def __init__(self, p: int, k: int, modulus_low_to_high):
        self.p, self.k, self.q = p, k, p**k
        self.mod = [ZZ(c) for c in reversed(modulus_low_to_high)]

    def poly(self, i: int) -> list:
        digits = [(i // self.p**j) % self.p for j in range(self.k)]
        out = [ZZ(c) for c in reversed(digits)]
        while out and out[0] == 0:
            out.pop(0)
        return out

    def index(self, poly) -> int:
        return sum(int(c) * self.p**j for j, c in enumerate(reversed(poly)))

    def add(self, a: int, b: int) -> int:
        return self.index(gf_add(self.poly(a), self.poly(b), self.p, ZZ))

    def mul(self, a: int, b: int) -> int:
        return self.index(gf_rem(gf_mul(self.poly(a), self.poly(b), self.p, ZZ), self.mod, self.p, ZZ))

    def pow(self, a: int, e: int) -> int:
        return self.index(gf_pow_mod(self.poly(a), e, self.mod, self.p, ZZ))

    def neg(self, a: int) -> int:
        return self.index([(-c) % self.p for c in self.poly(a)])

    def trace(self, a: int) -> int:
        t = 0
        for j in range(self.k):
            t = self.add(t, self.pow(a, self.p**j))
        return t

    def eta(self, a: int) -> int:
        if a == 0:
            return 0
        return 1 if self.pow(a, (self.q - 1) // 2) == 1 else -1

    def chi(self, a: int) -> complex:
        return cmath.exp(2j * cmath.pi * self.trace(a) / self.p)

    def inv(self, a: int) -> int:
        return self.pow(a, self.q - 2)


def is_irreducible(poly_low_to_high, p: int) -> bool:
    return gf_irreducible_p([ZZ(c) for c in reversed(poly_low_to_high)], p, ZZ)


class NaiveSpace:
    """F_q^d as coordinate tuples; vector index = sum c_i q^i."""

    def __init__(self, F: NaiveField, d: int):
        self.F, self.d = F, d
        self.points = list(itertools.product(range(F.q), repeat=d))

    def index(self, v) -> int:
        return sum(c * self.F.q**i for i, c in enumerate(v))

    def vec(self, i: int) -> tuple:
        return tuple((i // self.F.q**j) % self.F.q for j in range(self.d))

    def sub(self, x, y):
        return tuple(self.F.add(a, self.F.neg(b)) for a, b in zip(x, y))

    def bilinear(self, M, x, y) -> int:
        F, acc = self.F, 0
        for i in range(self.d):
            for j in range(self.d):
                acc = F.add(acc, F.mul(x[i], F.mul(int(M[i][j]), y[j])))
        return acc


def phi_table(fn, F: NaiveField) -> dict:
    """phi(x, y) for all index pairs, from the form's matrix and sympy-built field tables."""
    q, d = F.q, fn.space.d
    add = [[F.add(a, b) for b in range(q)] for a in range(q)]
    mul = [[F.mul(a, b) for b in range(q)] for a in range(q)]
    neg = [F.neg(a) for a in range(q)]
    sp = NaiveSpace(F, d)
    M = [[int(v) for v in row] for row in fn.matrix]
    vecs = [sp.vec(i) for i in range(q**d)]

    def matvec(v):
        out = []
        for i in range(d):
            acc = 0
            for j in range(d):
                acc = add[acc][mul[M[i][j]][v[j]]]
            out.append(acc)
        return out

    def dot(u, v):
        acc = 0
        for a, b in zip(u, v):
            acc = add[acc][mul[a][b]]
        return acc

    table = {}
    if fn.kind == "bilinear":
        My = [matvec(v) for v in vecs]
        for x, vx in enumerate(vecs):
            for y in range(len(vecs)):
                table[x, y] = dot(vx, My[y])
    else:
        Qv = [dot(v, matvec(v)) for v in vecs]
        for x, vx in enumerate(vecs):
            for y, vy in enumerate(vecs):
                diff = tuple(add[a][neg[b]] for a, b in zip(vx, vy))
                table[x, y] = Qv[sp.index(diff)]
    return table


def naive_field_for(F) -> NaiveField:
    return NaiveField(F.p, F.k, F.modulus)


def count_tuples(points, n, edges, table, distinct=False) -> int:
    """Ordered n-tuples from points realising every (i, j, lam) edge."""
    total = 0
    for tup in itertools.product(points, repeat=n):
        if distinct and len(set(tup)) < n:
            continue
        if all(table[tup[i], tup[j]] == lam for i, j, lam in edges):
            total += 1
    return total


def count_tuples_pruned(points, n, edges, table, distinct=False) -> int:
    """Same count by nested loops: vertex v ranges over the points at the required label
    from an earlier neighbour (or over all points), then every edge back to the prefix is checked."""
    points = list(points)
    nbr = {}

    def candidates(prefix, v):
        for i, j, lam in edges:
            if j == v and i < v:
                key = (prefix[i], lam, 0)
                if key not in nbr:
                    nbr[key] = [y for y in points if table[prefix[i], y] == lam]
                return nbr[key]
            if i == v and j < v:
                key = (prefix[j], lam, 1)
                if key not in nbr:
                    nbr[key] = [y for y in points if table[y, prefix[j]] == lam]
                return nbr[key]
        return points

    back = {v: [(i, j, lam) for i, j, lam in edges if max(i, j) == v] for v in range(n)}

    def rec(prefix):
        v = len(prefix)
        if v == n:
            return 1
        total = 0
        for x in candidates(prefix, v):
            if distinct and x in prefix:
                continue
            cand = prefix + (x,)
            if all(table[cand[i], cand[j]] == lam for i, j, lam in back[v]):
                total += rec(cand)
        return total

    return rec(())


def cycle_edges(n: int, t: int) -> list:
    """phi(x_i, x_{i+1 mod n}) = t, with the closing edge oriented from x_{n-1} to x_0."""
    return [(i, (i + 1) % n, t) for i in range(n)]


def two_edge_oracle(f, g, t, table, N) -> int:
    """sum over phi(x,z) = phi(w,y) = t of f(x,y) g(z,w), by nested loops over the label-t pairs."""
    pairs = [(a, b) for a in range(N) for b in range(N) if table[a, b] == t]
    total = 0
    for x, z in pairs:
        for w, y in pairs:
            total += int(f[x][y]) * int(g[z][w])
    return total


def normalized(raw: int, n: int, m: int, q: int, d: int) -> Fraction:
    return Fraction(raw * q**m, q ** (n * d))
