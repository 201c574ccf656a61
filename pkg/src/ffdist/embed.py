"""Distance graphs, point sets and exact embedding counts.

Every counter returns the raw number of ordered vertex tuples (degenerate
tuples included unless the counter says otherwise) inside a
:class:`CountReport`, which also carries the averaged normalisation
``raw * q^m / q^(n d)`` used by the graph-count statements.

Counting strategy: connected components are counted separately and
multiplied; tree components use message passing with the exact adjacency
operators, components with cycles use a vectorised backtracking search that
extends partial placements along neighbour lists and filters by the remaining
edge constraints.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from numbers import Real
from typing import Iterable, Sequence

import numpy as np

from .exact import QPower, as_fraction, le_scaled
from .forms import BILINEAR, DistanceFn, Space, ZeroLabel
from .kernel import (BudgetExceeded, adjacency, crt_combine, exact_sum, group_dft, max_abs,
                     multiply, normalize, primes_for_bound)

DEFAULT_BUDGET = 50_000_000
_CHUNK = 1 << 21
DENSE_TWO_EDGE_LIMIT = 2500
DENSE_CYCLE_LIMIT = 1500


class NotATree(ValueError):
    pass


class GraphSpecError(ValueError):
    pass


# -- point sets ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PointSet:
    """A subset of F_q^d stored as a boolean mask over vector indices."""

    space: Space
    mask: np.ndarray
    descriptor: str = ""

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        if m.shape != (self.space.size,):
            raise ValueError(f"mask must have length q^d = {self.space.size}")
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def full(cls, space: Space) -> PointSet:
        return cls(space, np.ones(space.size, dtype=bool), "full")

    @classmethod
    def empty(cls, space: Space) -> PointSet:
        return cls(space, np.zeros(space.size, dtype=bool), "empty")

    @classmethod
    def from_indices(cls, space: Space, idx: Iterable[int], descriptor: str = "") -> PointSet:
        m = np.zeros(space.size, dtype=bool)
        m[np.asarray(list(idx), dtype=np.int64)] = True
        return cls(space, m, descriptor)

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.mask))

    def __len__(self) -> int:
        return self.size

    @property
    def density(self) -> Fraction:
        return Fraction(self.size, self.space.size)

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def indicator(self) -> np.ndarray:
        return self.mask.astype(np.int64)

    def __contains__(self, x) -> bool:
        return bool(self.mask[int(x)])

    def __eq__(self, other):
        return (isinstance(other, PointSet) and other.space == self.space
                and np.array_equal(other.mask, self.mask))

    def __hash__(self):
        return hash((self.space, self.mask.tobytes()))

    def translate(self, v) -> PointSet:
        v = int(v) if np.ndim(v) == 0 else self.space.vector(*v)
        return PointSet.from_indices(self.space, self.space.add(self.indices(), v),
                                     f"{self.descriptor}+{v}")

    def union(self, other: PointSet) -> PointSet:
        return PointSet(self.space, self.mask | other.mask, f"union({self.descriptor},{other.descriptor})")

    def intersection(self, other: PointSet) -> PointSet:
        return PointSet(self.space, self.mask & other.mask, f"intersect({self.descriptor},{other.descriptor})")

    def complement(self) -> PointSet:
        return PointSet(self.space, ~self.mask, f"complement({self.descriptor})")


# -- graphs ---------------------------------------------------------------------

@dataclass(frozen=True)
class DistanceGraph:
    """Vertices 0..n-1 and labelled edges (i, j, lam), i < j, meaning phi(x_i, x_j) = lam."""

    n: int
    edges: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        edges = tuple((int(i), int(j), int(lam)) for i, j, lam in self.edges)
        seen = set()
        for i, j, lam in edges:
            if not 0 <= i < j < self.n:
                raise GraphSpecError(f"edge ({i}, {j}) must satisfy 0 <= i < j < n = {self.n}")
            if lam == 0:
                raise ZeroLabel("edge labels must be nonzero")
            if (i, j) in seen:
                raise GraphSpecError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
        object.__setattr__(self, "edges", edges)

    @property
    def m(self) -> int:
        return len(self.edges)

    def degree(self, v: int) -> int:
        return sum((i == v) + (j == v) for i, j, _ in self.edges)

    @property
    def max_degree(self) -> int:
        """The maximum vertex degree (called t in the graph-count bounds)."""
        return max((self.degree(v) for v in range(self.n)), default=0)

    def components(self) -> list[list[int]]:
        return _components(self.n, self.edges)

    @property
    def is_tree(self) -> bool:
        return self.n >= 1 and self.m == self.n - 1 and len(self.components()) == 1

    def labels(self) -> set[int]:
        return {lam for _, _, lam in self.edges}

    def describe(self) -> str:
        body = "; ".join(f"e {i + 1} {j + 1} l={lam}" for i, j, lam in self.edges)
        return f"n={self.n}" + (f"; {body}" if body else "")


def path_graph(k: int, label: int = 1) -> DistanceGraph:
    return DistanceGraph(k + 1, tuple((i, i + 1, label) for i in range(k)))


def cycle_graph(n: int, label: int = 1) -> DistanceGraph:
    """The n-cycle with edges (i, i+1) and (0, n-1)."""
    if n < 3:
        raise GraphSpecError("a cycle needs at least 3 vertices")
    return DistanceGraph(n, tuple((i, i + 1, label) for i in range(n - 1)) + ((0, n - 1, label),))


def star_graph(r: int, label: int = 1) -> DistanceGraph:
    return DistanceGraph(r + 1, tuple((0, i, label) for i in range(1, r + 1)))


def matching_graph(m: int, label: int = 1) -> DistanceGraph:
    return DistanceGraph(2 * m, tuple((2 * i, 2 * i + 1, label) for i in range(m)))


def empty_graph(n: int) -> DistanceGraph:
    return DistanceGraph(n, ())


def random_tree(r: int, seed: int, label: int = 1) -> DistanceGraph:
    """A uniformly random labelled tree on r+1 vertices (Pruefer decoding)."""
    n = r + 1
    if n <= 2:
        return path_graph(r, label)
    rng = np.random.default_rng(seed)
    code = [int(v) for v in rng.integers(0, n, size=n - 2)]
    degree = [1] * n
    for v in code:
        degree[v] += 1
    edges = []
    for v in code:
        leaf = min(u for u in range(n) if degree[u] == 1)
        edges.append((min(leaf, v), max(leaf, v), label))
        degree[leaf] -= 1
        degree[v] -= 1
    u, w = [u for u in range(n) if degree[u] == 1]
    edges.append((u, w, label))
    return DistanceGraph(n, tuple(sorted(edges)))


_EDGE_RE = re.compile(r"^e\s+(\d+)\s+(\d+)(?:\s+l=(\d+))?$")


def parse_graph(spec: str, label: int = 1) -> DistanceGraph:
    """Builtins ``path:k``, ``cycle:n``, ``star:r``, ``random-tree:r:seed``,
    ``matching:m``, ``empty:n``, or an edge list ``n=4; e 1 2 l=1; e 2 3 l=2``
    (1-based vertices, labels as field indices, ``l`` defaults to ``label``)."""
    spec = spec.strip()
    builtins = {"path": path_graph, "cycle": cycle_graph, "star": star_graph,
                "matching": matching_graph}
    head, _, rest = spec.partition(":")
    try:
        if head in builtins:
            return builtins[head](int(rest), label)
        if head == "empty":
            return empty_graph(int(rest))
        if head == "random-tree":
            r, seed = rest.split(":")
            return random_tree(int(r), int(seed), label)
    except ValueError as exc:
        raise GraphSpecError(f"bad graph spec {spec!r}: {exc}") from exc
    parts = [s.strip() for s in spec.split(";") if s.strip()]
    if not parts or not parts[0].startswith("n="):
        raise GraphSpecError(f"bad graph spec {spec!r}")
    try:
        n = int(parts[0][2:])
    except ValueError as exc:
        raise GraphSpecError(f"bad vertex count in {spec!r}") from exc
    edges = []
    for part in parts[1:]:
        m = _EDGE_RE.match(part)
        if not m:
            raise GraphSpecError(f"bad edge {part!r}")
        i, j = int(m.group(1)) - 1, int(m.group(2)) - 1
        lam = int(m.group(3)) if m.group(3) is not None else label
        edges.append((i, j, lam))
    return DistanceGraph(n, tuple(edges))


# -- reports --------------------------------------------------------------------

@dataclass(frozen=True)
class CountReport:
    """Raw ordered-tuple count with its averaged normalisation."""

    raw: int
    n: int
    m: int
    q: int
    d: int
    kind: str = ""

    @property
    def q_power_factor(self) -> int:
        """Exponent e with normalized = raw * q^e."""
        return self.m - self.n * self.d

    @property
    def normalized(self) -> Fraction:
        return Fraction(self.raw * self.q**self.m, self.q ** (self.n * self.d))

    def to_dict(self) -> dict:
        nrm = self.normalized
        return {"kind": self.kind, "raw": int(self.raw), "normalized": f"{nrm.numerator}/{nrm.denominator}",
                "n": self.n, "m": self.m}


def _report(raw: int, n: int, m: int, fn: DistanceFn, kind: str) -> CountReport:
    return CountReport(int(raw), n, m, fn.field.q, fn.space.d, kind)


# -- the constraint engine -----------------------------------------------------

Constraint = tuple[int, int, int]  # phi(x_i, x_j) = lam; i == j allowed internally


def _components(n: int, constraints) -> list[list[int]]:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j, _ in constraints:
        parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


def _check_labels(constraints, fn: DistanceFn):
    q = fn.field.q
    for _, _, lam in constraints:
        if lam == 0:
            raise ZeroLabel("edge labels must be nonzero")
        if not 0 < lam < q:
            raise ValueError(f"label {lam} outside F_{q}")


def _check_space(A: PointSet, fn: DistanceFn):
    if A.space != fn.space:
        raise ValueError("point set and form live in different spaces")


def _apply_loops(mask: np.ndarray, n: int, constraints, fn: DistanceFn):
    """Per-vertex masks after folding loop constraints phi(x, x) = lam into them."""
    masks = [mask] * n
    rest = []
    diag = None
    for i, j, lam in constraints:
        if i != j:
            rest.append((i, j, lam))
            continue
        if fn.kind != BILINEAR:
            # phi(x, x) = Q(0) = 0 is never a nonzero label
            masks[i] = np.zeros_like(mask)
            continue
        if diag is None:
            all_ = fn.space.all()
            diag = fn.values(all_, all_)
        masks[i] = masks[i] & (diag == lam)
    return masks, rest


def _count(mask: np.ndarray, n: int, constraints, fn: DistanceFn, budget: float) -> int:
    """Number of x in F_q^{dn} with every x_i in mask and every constraint met."""
    masks, rest = _apply_loops(mask, n, constraints, fn)
    rest = _dedupe(rest, fn)
    if rest is None:
        return 0
    total = 1
    for comp in _components(n, rest):
        sub = [c for c in rest if c[0] in comp]
        if len(comp) == 1:
            c = int(np.count_nonzero(masks[comp[0]]))
        elif _is_simple_tree(comp, sub):
            c = exact_sum(_tree_messages(masks, sub, fn, comp[0]))
        else:
            local = {v: k for k, v in enumerate(comp)}
            c = _frontier([masks[v] for v in comp],
                          [(local[i], local[j], lam) for i, j, lam in sub], fn, budget, False)
        if c == 0:
            return 0
        total *= c
    return total


def _dedupe(constraints, fn: DistanceFn):
    """Drop repeated constraints; for a symmetric phi also merge reversed pairs.

    Returns None when two constraints on the same ordered pair disagree."""
    seen: dict[tuple[int, int], int] = {}
    out = []
    for i, j, lam in constraints:
        key = (min(i, j), max(i, j)) if fn.kind != BILINEAR or fn.symmetric else (i, j)
        if key in seen:
            if seen[key] != lam:
                return None
            continue
        seen[key] = lam
        out.append((i, j, lam))
    return out


def _is_simple_tree(comp, sub) -> bool:
    pairs = {frozenset((i, j)) for i, j, _ in sub}
    return len(pairs) == len(sub) == len(comp) - 1


def _tree_messages(masks, constraints, fn: DistanceFn, root: int) -> np.ndarray:
    """Per-placement counts at ``root`` for a tree of constraints (root's mask applied)."""
    adj: dict[int, list[tuple[int, int, bool]]] = {}
    for i, j, lam in constraints:
        # seen from i, neighbour j must satisfy phi(x_i, x_j) = lam: forward operator
        adj.setdefault(i, []).append((j, lam, False))
        adj.setdefault(j, []).append((i, lam, True))
    order, parent = [], {root: None}
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        for c, _, _ in adj.get(v, []):
            if c not in parent:
                parent[c] = v
                stack.append(c)
    msgs: dict[int, np.ndarray] = {}
    for v in reversed(order):
        msg = masks[v].astype(np.int64)
        for c, lam, tr in adj.get(v, []):
            if parent.get(c) == v:
                msg = multiply(msg, adjacency(fn, lam).apply(msgs.pop(c), tr))
        msgs[v] = msg
    return msgs[root]


def _placement_order(n: int, constraints) -> list[int]:
    """High-degree vertices first, each next vertex the one with most placed neighbours."""
    deg = [0] * n
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for i, j, _ in constraints:
        deg[i] += 1
        deg[j] += 1
        nbrs[i].add(j)
        nbrs[j].add(i)
    placed: list[int] = []
    left = set(range(n))
    while left:
        best = max(left, key=lambda v: (len(nbrs[v] & set(placed)), deg[v], -v))
        placed.append(best)
        left.remove(best)
    return placed


def _frontier_plan(n: int, constraints):
    order = _placement_order(n, constraints)
    pos = {v: k for k, v in enumerate(order)}
    steps = []
    for k, v in enumerate(order):
        rel = []
        for i, j, lam in constraints:
            if i == v and pos[j] < k:
                rel.append((pos[j], lam, False))  # phi(y, x_o) = lam
            elif j == v and pos[i] < k:
                rel.append((pos[i], lam, True))   # phi(x_o, y) = lam
        steps.append((v, rel))
    return order, steps


def _frontier_estimate(masks, constraints, fn: DistanceFn) -> float:
    n = len(masks)
    order, steps = _frontier_plan(n, constraints)
    N, q = fn.space.size, fn.field.q
    sizes = [int(np.count_nonzero(m)) for m in masks]
    rows = float(sizes[order[0]])
    work = rows
    for v, rel in steps[1:]:
        if rel:
            gen = rows * adjacency(fn, rel[0][1]).degree
            rows = gen * sizes[v] / N / float(q) ** (len(rel) - 1)
        else:
            gen = rows * sizes[v]
            rows = gen
        work += gen
    return work


def _frontier(masks, constraints, fn: DistanceFn, budget: float, distinct: bool) -> int:
    """Vectorised backtracking over placements in :func:`_placement_order`."""
    n = len(masks)
    est = _frontier_estimate(masks, constraints, fn)
    if est > budget:
        raise BudgetExceeded(f"search needs ~{est:.3g} candidate rows, budget is {budget:.3g}")
    order, steps = _frontier_plan(n, constraints)
    cands = [np.flatnonzero(m) for m in masks]

    def expand(R: np.ndarray, k: int) -> int:
        if k == n:
            return len(R)
        v, rel = steps[k]
        width = adjacency(fn, rel[0][1]).degree if rel else len(cands[v])
        step = max(1, _CHUNK // max(1, width))
        total = 0
        for s in range(0, len(R), step):
            Rc = R[s:s + step]
            if rel:
                po, lam, other_first = rel[0]
                keep, new = adjacency(fn, lam).neighbor_block(Rc[:, po], transpose=not other_first)
                Rc = Rc[keep]
                checks = rel[1:]
            else:
                new = np.broadcast_to(cands[v], (len(Rc), len(cands[v])))
                checks = rel
            ok = masks[v][new]
            for po, lam, other_first in checks:
                xo = Rc[:, po][:, None]
                vals = fn.values(xo, new) if other_first else fn.values(new, xo)
                ok &= vals == lam
            if distinct:
                for j in range(k):
                    ok &= new != Rc[:, j][:, None]
            if k == n - 1:
                total += int(np.count_nonzero(ok))
                continue
            r, c = np.nonzero(ok)
            if len(r):
                total += expand(np.concatenate([Rc[r], new[r, c][:, None]], axis=1), k + 1)
        return total

    return expand(cands[order[0]][:, None], 1)


def _set_partitions(n: int):
    """Restricted growth strings of length n (one per set partition)."""
    if n == 0:
        yield ()
        return
    a = [0] * n

    def rec(i, top):
        if i == n:
            yield tuple(a)
            return
        for b in range(top + 2):
            a[i] = b
            yield from rec(i + 1, max(top, b))

    a[0] = 0
    yield from rec(1, 0)


def _distinct_by_partitions(mask, n, constraints, fn, budget) -> int:
    """Injective count via Moebius inversion over set partitions of the vertices."""
    total = 0
    for rgs in _set_partitions(n):
        k = max(rgs) + 1
        sizes = np.bincount(rgs, minlength=k)
        mu = 1
        for s in sizes:
            mu *= (-1) ** (int(s) - 1) * math.factorial(int(s) - 1)
        contracted = [(rgs[i], rgs[j], lam) for i, j, lam in constraints]
        total += mu * _count(mask, k, contracted, fn, budget)
    return total


# -- public counters -------------------------------------------------------------

def count_graph(A: PointSet, G: DistanceGraph, fn: DistanceFn, budget: float = DEFAULT_BUDGET) -> CountReport:
    """N_G(A): ordered n-tuples in A realising every labelled edge."""
    _check_space(A, fn)
    _check_labels(G.edges, fn)
    raw = _count(A.mask, G.n, G.edges, fn, budget)
    return _report(raw, G.n, G.m, fn, "graph")


def count_graph_distinct(A: PointSet, G: DistanceGraph, fn: DistanceFn, budget: float = DEFAULT_BUDGET,
                         method: str = "auto") -> CountReport:
    """N*_G(A): as :func:`count_graph` with pairwise distinct vertices.

    ``method`` is ``search`` (backtracking with a used-set), ``partitions``
    (inclusion-exclusion over vertex identifications) or ``auto``.
    """
    _check_space(A, fn)
    _check_labels(G.edges, fn)
    if method == "auto":
        masks, _ = _apply_loops(A.mask, G.n, G.edges, fn)
        method = "search" if _frontier_estimate(masks, G.edges, fn) <= budget else "partitions"
    if method == "search":
        raw = _frontier([A.mask] * G.n, list(G.edges), fn, budget, True) if G.n else 1
    elif method == "partitions":
        raw = _distinct_by_partitions(A.mask, G.n, list(G.edges), fn, budget)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _report(raw, G.n, G.m, fn, "graph-distinct")


def count_paths(A: PointSet, k: int, t: int, fn: DistanceFn) -> CountReport:
    """P_k: tuples (x_0..x_k) in A^{k+1} with phi(x_i, x_{i+1}) = t."""
    if k < 1:
        raise ValueError("path length must be >= 1")
    return count_paths_labeled(A, [t] * k, fn)


def count_paths_labeled(A: PointSet, labels: Sequence[int], fn: DistanceFn) -> CountReport:
    """Paths whose i-th edge has its own label: phi(x_i, x_{i+1}) = labels[i]."""
    _check_space(A, fn)
    k = len(labels)
    _check_labels([(0, 1, int(t)) for t in labels], fn)
    ind = A.indicator()
    v = ind
    for t in labels:
        # v_{i+1}[y] = 1_A(y) sum_x v_i[x] [phi(x, y) = t]
        v = multiply(ind, adjacency(fn, int(t)).apply(v, transpose=True))
    return _report(exact_sum(v), k + 1, k, fn, "path")


def _tree_edges(T) -> tuple[int, list[tuple[int, int]]]:
    if isinstance(T, DistanceGraph):
        return T.n, [(i, j) for i, j, _ in T.edges]
    edges = [(int(i), int(j)) for i, j in T]
    n = 1 + max((max(e) for e in edges), default=0)
    return n, edges


def _validated_tree(T, t: int, fn: DistanceFn):
    n, edges = _tree_edges(T)
    if len(edges) != n - 1 or len(_components(n, [(i, j, 1) for i, j in edges])) != 1:
        raise NotATree("graph is not a tree")
    cons = [(i, j, int(t)) for i, j in edges]
    _check_labels(cons, fn)
    return n, cons


def tree_root_counts(A: PointSet, T, t: int, fn: DistanceFn, root: int = 0) -> np.ndarray:
    """T(x): embeddings of the tree into A with the root vertex placed at x."""
    _check_space(A, fn)
    n, cons = _validated_tree(T, t, fn)
    if n == 1:
        return A.indicator()
    return _tree_messages([A.mask] * n, cons, fn, root)


def count_tree(A: PointSet, T, t: int, fn: DistanceFn) -> CountReport:
    """n_T(A): embeddings of a tree with every edge at label t (edge (i, j) means phi(x_i, x_j) = t)."""
    n, _ = _validated_tree(T, t, fn)
    raw = exact_sum(tree_root_counts(A, T, t, fn))
    return _report(raw, n, n - 1, fn, "tree")


def cycle_constraints(n: int, t: int) -> list[Constraint]:
    """phi(x_i, x_{i+1 mod n}) = t."""
    return [(i, (i + 1) % n, int(t)) for i in range(n)]


def count_cycles(A: PointSet, n: int, t: int, fn: DistanceFn, budget: float = DEFAULT_BUDGET,
                 method: str = "auto") -> CountReport:
    """C_n: n-tuples in A with phi(x_i, x_{i+1 mod n}) = t (degenerate tuples included).

    Computed as the trace of the n-th power of the A-restricted adjacency
    operator.  ``spectral`` (full space, quadratic form) sums the n-th powers
    of the operator's eigenvalues modulo word-size primes; ``dense`` multiplies
    the restricted matrix in floating point while every entry stays below 2^53
    (so the products are exact); ``trace`` applies the restricted sparse matrix
    to batches of basis vectors modulo primes.
    """
    _check_space(A, fn)
    if n < 3:
        raise ValueError("cycles need n >= 3")
    _check_labels([(0, 1, int(t))], fn)
    if method == "auto":
        if fn.kind != BILINEAR and A.size == fn.space.size:
            method = "spectral"
        else:
            method = "dense" if A.size <= DENSE_CYCLE_LIMIT else "trace"
    if method == "spectral":
        raw = _cycles_spectral(n, int(t), fn)
    elif method == "dense":
        raw = _cycles_dense(A, n, int(t), fn)
    elif method == "trace":
        raw = _cycles_trace(A, n, int(t), fn, budget)
    elif method == "search":
        raw = _frontier([A.mask] * n, cycle_constraints(n, t), fn, budget, False)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _report(raw, n, n, fn, "cycle")


def _cycles_spectral(n: int, t: int, fn: DistanceFn) -> int:
    if fn.kind == BILINEAR:
        raise ValueError("the spectral route needs a translation-invariant (quadratic) form")
    sp = fn.space
    kern = (fn.quadratic_values() == t).astype(np.int64)
    deg = int(kern.sum())
    primes = primes_for_bound(sp.field.p, sp.size * deg**n + 1)
    residues = []
    for P in primes:
        lam = group_dft(sp, P).forward(kern % P)
        acc = np.ones_like(lam)
        base, e = lam, n
        while e:
            if e & 1:
                acc = acc * base % P
            base = base * base % P
            e >>= 1
        residues.append(np.array([exact_sum(acc) % P]))
    return int(crt_combine(residues, primes)[0])


def _cycles_dense(A: PointSet, n: int, t: int, fn: DistanceFn) -> int:
    idx = A.indices()
    if len(idx) == 0:
        return 0
    M = adjacency(fn, t).csr()[idx][:, idx].toarray().astype(np.float64)
    deg = float(M.sum(axis=1).max(initial=0))
    a, b = n // 2, n - n // 2
    if deg ** b >= 2.0**53:
        raise BudgetExceeded("dense cycle route would lose exactness")
    P = np.linalg.matrix_power(M, a)
    Q = P if a == b else P @ M
    # tr(M^n) = sum_ij P_ij Q_ji
    return exact_sum(multiply(P.astype(np.int64), Q.T.astype(np.int64)))


def _cycles_trace(A: PointSet, n: int, t: int, fn: DistanceFn, budget: float) -> int:
    idx = A.indices()
    if len(idx) == 0:
        return 0
    adj = adjacency(fn, t)
    est_nnz = len(idx) * adj.degree * float(A.density)
    work = n * len(idx) * max(est_nnz, len(idx)) / 16
    if work > budget:
        raise BudgetExceeded(f"cycle trace needs ~{work:.3g} steps, budget is {budget:.3g}")
    M = adj.csr()[idx][:, idx].tocsr().astype(np.int64)
    MT = M.T.tocsr()
    deg = int(np.diff(M.indptr).max(initial=0))
    if deg == 0:
        return 0
    primes = primes_for_bound(2, len(idx) * deg ** (n - 1) + 1)
    a, b = n // 2, n - n // 2
    N = len(idx)
    batch = max(1, 4_000_000 // N)
    residues = []
    for P in primes:
        total = 0
        for s in range(0, N, batch):
            cols = np.arange(s, min(N, s + batch))
            E = np.zeros((N, len(cols)), dtype=np.int64)
            E[cols, np.arange(len(cols))] = 1
            U, V = E, E
            for _ in range(a):
                U = np.asarray(MT @ U) % P
            for _ in range(b):
                V = np.asarray(M @ V) % P
            total = (total + int(((U * V) % P).sum() % P)) % P
        residues.append(np.array([total]))
    return int(crt_combine(residues, primes)[0])


def count_cycles_nondegenerate(A: PointSet, n: int, t: int, fn: DistanceFn,
                               budget: float = DEFAULT_BUDGET) -> CountReport:
    """C_n^*: cycles with all n vertices distinct (backtracking with a used-set)."""
    _check_space(A, fn)
    if n < 3:
        raise ValueError("cycles need n >= 3")
    _check_labels([(0, 1, int(t))], fn)
    raw = _frontier([A.mask] * n, cycle_constraints(n, t), fn, budget, True)
    return _report(raw, n, n, fn, "cycle-distinct")


def count_cycles_distinct_partitions(A: PointSet, n: int, t: int, fn: DistanceFn,
                                     budget: float = DEFAULT_BUDGET) -> CountReport:
    """C_n^* by inclusion-exclusion over vertex identifications (an independent route)."""
    _check_space(A, fn)
    raw = _distinct_by_partitions(A.mask, n, cycle_constraints(n, t), fn, budget)
    return _report(raw, n, n, fn, "cycle-distinct")


# -- regularisation -----------------------------------------------------------------

def t_degrees(A: PointSet, t: int, fn: DistanceFn) -> np.ndarray:
    """#{y in A : phi(x, y) = t} for every x."""
    _check_space(A, fn)
    return adjacency(fn, int(t)).apply(A.indicator())


def pair_count(A: PointSet, t: int, fn: DistanceFn) -> int:
    """#{(x, y) in A^2 : phi(x, y) = t}."""
    return exact_sum(t_degrees(A, t, fn)[A.mask])


def regularize(A: PointSet, t: int, theta: Real | QPower, fn: DistanceFn) -> PointSet:
    """E* = {x in E : #{y in E : phi(x, y) = t} <= theta |E| / q}.

    The neighbour count is taken with the plain indicator of phi(x, y) = t, the
    reading under which pair count <= 2|E|^2/q forces |E \\ E*| <= 2|E|/theta.
    """
    if not isinstance(theta, QPower) and as_fraction(theta) <= 0:
        raise ValueError("theta must be positive")
    deg = t_degrees(A, t, fn)
    q, size = fn.field.q, A.size
    keep = np.zeros(fn.space.size, dtype=bool)
    if size:
        idx = A.indices()
        # compare deg * q / |E| <= theta exactly, one distinct degree at a time
        for dv in np.unique(deg[idx]):
            if le_scaled(Fraction(int(dv) * q, size), theta):
                keep[idx[deg[idx] == dv]] = True
    return PointSet(fn.space, keep, f"regularize({A.descriptor},t={t})")


# -- the two-edge sum ---------------------------------------------------------------

def _integerize(values) -> tuple[np.ndarray, int]:
    """(integer numerators, common denominator) for nonnegative rational entries."""
    arr = np.asarray(values)
    if arr.dtype != object:
        if np.issubdtype(arr.dtype, np.floating):
            arr = arr.astype(object)
        else:
            if np.any(arr < 0):
                raise ValueError("functions must be nonnegative")
            return normalize(arr.astype(np.int64)), 1
    fr = [as_fraction(v) for v in arr.ravel()]
    if any(v < 0 for v in fr):
        raise ValueError("functions must be nonnegative")
    den = 1
    for v in fr:
        den = den * v.denominator // math.gcd(den, v.denominator)
    nums = np.array([int(v * den) for v in fr], dtype=object).reshape(arr.shape)
    return normalize(nums), den


@dataclass(frozen=True)
class TwoEdgeSum:
    """sum_{phi(x,z) = phi(w,y) = t} f(x,y) g(z,w) with the marginals of f and g.

    Marginals are integer numerator arrays over denominators ``f_den`` / ``g_den``:
    F(x) = sum_y f(x,y), F'(y) = sum_x f(x,y), G(z) = sum_w g(z,w), G'(w) = sum_z g(z,w).
    """

    value: Fraction
    F: np.ndarray
    Fp: np.ndarray
    G: np.ndarray
    Gp: np.ndarray
    f_l1: Fraction
    g_l1: Fraction
    f_l2sq: Fraction
    g_l2sq: Fraction
    f_den: int = 1
    g_den: int = 1
    extra: dict = dc_field(default_factory=dict, repr=False)

    def _sq(self, v: np.ndarray, den: int) -> Fraction:
        return Fraction(exact_sum(multiply(v, v)), den * den)

    @property
    def F_l2sq(self) -> Fraction:
        return self._sq(self.F, self.f_den)

    @property
    def Fp_l2sq(self) -> Fraction:
        return self._sq(self.Fp, self.f_den)

    @property
    def G_l2sq(self) -> Fraction:
        return self._sq(self.G, self.g_den)

    @property
    def Gp_l2sq(self) -> Fraction:
        return self._sq(self.Gp, self.g_den)


def _row_sums(m: np.ndarray, axis: int) -> np.ndarray:
    if m.dtype != object and float(max_abs(m)) * m.shape[axis] < 2**62:
        return m.sum(axis=axis)
    return normalize(m.astype(object).sum(axis=axis))


def two_edge_sum(f, g, t: int, fn: DistanceFn) -> TwoEdgeSum:
    """Exact two-edge sum for dense f, g given as q^d x q^d arrays (rows x, columns y)."""
    N = fn.space.size
    _check_labels([(0, 1, int(t))], fn)
    if N > DENSE_TWO_EDGE_LIMIT:
        raise BudgetExceeded(f"dense two-edge sum needs q^d <= {DENSE_TWO_EDGE_LIMIT}")
    fi, df = _integerize(f)
    gi, dg = _integerize(g)
    if fi.shape != (N, N) or gi.shape != (N, N):
        raise ValueError("f and g must be q^d x q^d arrays")
    K = adjacency(fn, int(t), "sparse").csr().astype(np.int64)
    deg = adjacency(fn, int(t)).degree
    # H[x, y] = sum_{z,w} K[x,z] g[z,w] K[w,y]
    if gi.dtype != object and float(np.abs(gi).max(initial=0)) * deg * deg < 2**62:
        H = np.asarray((K.T @ np.asarray(K @ gi).T).T, dtype=np.int64)
    else:
        H = _dense_object_kgk(K, gi.astype(object))
    value = Fraction(exact_sum(multiply(fi, H)), df * dg)
    F, Fp = _row_sums(fi, 1), _row_sums(fi, 0)
    G, Gp = _row_sums(gi, 1), _row_sums(gi, 0)
    return TwoEdgeSum(value, F, Fp, G, Gp,
                      Fraction(exact_sum(fi), df), Fraction(exact_sum(gi), dg),
                      Fraction(exact_sum(multiply(fi, fi)), df * df),
                      Fraction(exact_sum(multiply(gi, gi)), dg * dg), df, dg)


def _dense_object_kgk(K, g: np.ndarray) -> np.ndarray:
    rows = [K.indices[K.indptr[x]:K.indptr[x + 1]] for x in range(K.shape[0])]
    Kg = np.array([g[r].sum(axis=0) if len(r) else np.zeros(g.shape[1], dtype=object) for r in rows],
                  dtype=object)
    return np.array([Kg[:, r].sum(axis=1) if len(r) else np.zeros(g.shape[0], dtype=object) for r in rows],
                    dtype=object).T


def two_edge_sum_rank_one(u, v, u2, v2, t: int, fn: DistanceFn) -> TwoEdgeSum:
    """The two-edge sum for f(x,y) = u(x) v(y) and g(z,w) = u2(z) v2(w).

    Factorises as (sum_{phi(x,z)=t} u(x) u2(z)) (sum_{phi(w,y)=t} v2(w) v(y)).
    """
    _check_labels([(0, 1, int(t))], fn)
    (ui, du), (vi, dv), (u2i, du2), (v2i, dv2) = map(_integerize, (u, v, u2, v2))
    K = adjacency(fn, int(t))
    left = exact_sum(multiply(ui, K.apply(u2i)))
    right = exact_sum(multiply(v2i, K.apply(vi)))
    df, dg = du * dv, du2 * dv2
    su, sv, su2, sv2 = map(exact_sum, (ui, vi, u2i, v2i))
    return TwoEdgeSum(
        Fraction(left * right, df * dg),
        F=_scaled(ui, sv), Fp=_scaled(vi, su), G=_scaled(u2i, sv2), Gp=_scaled(v2i, su2),
        f_l1=Fraction(su * sv, df), g_l1=Fraction(su2 * sv2, dg),
        f_l2sq=Fraction(_sumsq(ui) * _sumsq(vi), df * df),
        g_l2sq=Fraction(_sumsq(u2i) * _sumsq(v2i), dg * dg),
        f_den=df, g_den=dg,
    )


def _scaled(v: np.ndarray, c: int) -> np.ndarray:
    return normalize(v.astype(object) * c)


def _sumsq(v: np.ndarray) -> int:
    return exact_sum(multiply(v, v))


__all__ = [
    "CountReport", "DistanceGraph", "GraphSpecError", "NotATree", "PointSet", "TwoEdgeSum",
    "count_cycles", "count_cycles_distinct_partitions", "count_cycles_nondegenerate",
    "count_graph", "count_graph_distinct", "count_paths", "count_paths_labeled", "count_tree",
    "cycle_constraints", "cycle_graph", "empty_graph", "matching_graph", "pair_count",
    "parse_graph", "path_graph", "random_tree", "regularize", "star_graph", "t_degrees",
    "tree_root_counts", "two_edge_sum", "two_edge_sum_rank_one",
]
