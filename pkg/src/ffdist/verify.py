"""Both sides of every theorem inequality, evaluated on concrete instances.

Each :class:`TheoremCheck` states a claim ``lhs <= rhs`` (identities claim
``lhs == rhs``) together with the hypothesis values that make the claim
applicable.  Sides are exact Fractions when rational, rigorous interval
enclosures (:mod:`ffdist.bounds`) when a fractional power of q or ln 2 enters,
and floats tagged with a tolerance only for character-sum magnitudes.

A check is reproducible from its witness alone: :func:`replay` rebuilds the
instance (field, form, label, point set, seed, parameters) and re-evaluates.
"""

from __future__ import annotations

import csv
import io
import json
import math
import multiprocessing
import re
from collections import defaultdict
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Iterable

import numpy as np

from . import kernel
from .bounds import Real, at_least, frac_str, ln2, qp, sqrt
from .charsums import (gauss_sum, max_weil_ratio, orthogonality_check, quadratic_weil_identity,
                       weil_bound)
from .embed import (DEFAULT_BUDGET, DistanceGraph, PointSet, TwoEdgeSum, _integerize, _report,
                    count_cycles, count_cycles_nondegenerate, count_graph, count_graph_distinct,
                    count_paths, count_tree, pair_count, parse_graph, regularize, two_edge_sum,
                    two_edge_sum_rank_one)
from .exact import QPower
from .field import CyclotomicInt, field_of_order
from .forms import BILINEAR, DistanceFn, ZeroLabel, canonical_diagonal, make_space, parse_form, sphere_fourier_all, sphere_sizes
from .kernel import BudgetExceeded, adjacency, exact_sum, multiply
from .sets import make_set

SCHEMA = "ffdist-report/1"
# per-check search budget used by campaigns (candidate rows); larger searches are logged as skipped
CAMPAIGN_BUDGET = 2_000_000
FLOAT_TOLERANCE = 1e-9

Value = Real | float | None


# -- records ------------------------------------------------------------------------

def _ser(v) -> str | None:
    if v is None:
        return None
    if isinstance(v, Real):
        return v.to_json()
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Fraction):
        return frac_str(v)
    if isinstance(v, int):
        return str(v)
    return str(v)


@dataclass
class TheoremCheck:
    """One evaluated claim ``lhs <= rhs`` (``lhs == rhs`` for identities)."""

    theorem_id: str
    witness: dict
    hypothesis_satisfied: bool
    lhs: Value
    rhs: Value
    hypothesis: dict = dc_field(default_factory=dict)
    identity: bool = False
    hard: bool = True
    counts: list = dc_field(default_factory=list)
    status: str = "ok"
    note: str = ""

    @property
    def kind(self) -> str:
        if self.identity:
            return "identity"
        if isinstance(self.lhs, float) or isinstance(self.rhs, float):
            return "float"
        if self.lhs is None:
            return "none"
        return "exact" if Real(self.lhs).exact and Real(self.rhs).exact else "interval"

    @property
    def margin(self) -> Value:
        if self.lhs is None or self.rhs is None:
            return None
        if self.kind == "float":
            return float(self.rhs) - float(self.lhs)
        return Real(self.rhs) - Real(self.lhs)

    @property
    def margin_float(self) -> float | None:
        m = self.margin
        return None if m is None else float(m)

    @property
    def holds(self) -> bool | None:
        """Whether the claim holds on this instance (None when undecidable or skipped)."""
        m = self.margin
        if m is None:
            return None
        if self.kind == "float":
            return m >= -FLOAT_TOLERANCE
        s = m.sign()
        if self.identity:
            return s == 0
        return None if s is None else s >= 0

    @property
    def violated(self) -> bool:
        """A hard, applicable claim that is decided false."""
        return (self.status == "ok" and self.hard and self.hypothesis_satisfied
                and self.holds is False)

    def key(self) -> tuple:
        w = self.witness
        return (w["q"], w["d"], w["form"], w["label"], w["set"], w["seed"], self.theorem_id,
                json.dumps(w.get("params", {}), sort_keys=True))

    def to_dict(self) -> dict:
        out = {
            "theorem_id": self.theorem_id,
            "witness": self.witness,
            "status": self.status,
            "hard": self.hard,
            "kind": self.kind,
            "hypothesis_satisfied": self.hypothesis_satisfied,
            "hypothesis": {k: _ser(v) for k, v in self.hypothesis.items()},
            "lhs": _ser(self.lhs),
            "rhs": _ser(self.rhs),
            "margin": _ser(self.margin),
            "holds": self.holds,
            "counts": self.counts,
        }
        if self.kind == "float":
            out["tolerance"] = FLOAT_TOLERANCE
        if self.note:
            out["note"] = self.note
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _w(witness: dict | None, theorem_id: str, **extra) -> dict:
    w = dict(witness or {})
    w["theorem"] = theorem_id
    params = dict(w.get("params", {}))
    params.update({k: _ser(v) if isinstance(v, Fraction) else v for k, v in extra.items()})
    w["params"] = params
    return w


def _counts(*reports) -> list[dict]:
    return [r.to_dict() for r in reports]


def _qd(fn: DistanceFn) -> tuple[int, int]:
    return fn.field.q, fn.space.d


def _nonzero_label(lam: int, fn: DistanceFn) -> int:
    lam = int(lam)
    if lam == 0:
        raise ZeroLabel("the label must be nonzero")
    if not 0 < lam < fn.field.q:
        raise ValueError(f"label {lam} outside F_{fn.field.q}")
    return lam


# -- functional distance --------------------------------------------------------------

def _functional_sums(f, g, lam: int, fn: DistanceFn):
    fi, df = _integerize(f)
    gi, dg = _integerize(g)
    S = Fraction(exact_sum(multiply(fi, adjacency(fn, lam).apply(gi))), df * dg)
    return (S, Fraction(exact_sum(fi), df), Fraction(exact_sum(gi), dg),
            Fraction(exact_sum(multiply(fi, fi)), df * df), Fraction(exact_sum(multiply(gi, gi)), dg * dg))


def check_functional_distance(f, g, lam: int, fn: DistanceFn, witness: dict | None = None) -> TheoremCheck:
    """|E_{x,y} f g d_lam - E f E g| <= C q^{-(d-1)/2} ||f||_2 ||g||_2 (averaged norms)."""
    lam = _nonzero_label(lam, fn)
    q, d = _qd(fn)
    N = fn.space.size
    S, sf, sg, sf2, sg2 = _functional_sums(f, g, lam, fn)
    C = 1 if fn.kind == BILINEAR else 2
    lhs = abs(q * S / N**2 - (sf / N) * (sg / N))
    rhs = C * qp(q, Fraction(-(d - 1), 2)) * sqrt(sf2 * sg2 / N**2)
    return TheoremCheck("functional-distance", _w(witness, "functional-distance"), True, Real(lhs), rhs,
                        {"C_phi": C})


def check_functional_distance_unnormalized(f, g, lam: int, fn: DistanceFn,
                                           witness: dict | None = None) -> TheoremCheck:
    """Bilinear forms: |sum_{phi=lam} f g - q^-1 sum f sum g| <= q^{(d-1)/2} (sum f^2 sum g^2)^{1/2}."""
    if fn.kind != BILINEAR:
        raise ValueError("the unnormalised variant is stated for bilinear forms")
    lam = _nonzero_label(lam, fn)
    q, d = _qd(fn)
    S, sf, sg, sf2, sg2 = _functional_sums(f, g, lam, fn)
    lhs = abs(S - sf * sg / q)
    rhs = qp(q, Fraction(d - 1, 2)) * sqrt(sf2 * sg2)
    return TheoremCheck("functional-distance-unnormalized",
                        _w(witness, "functional-distance-unnormalized"), True, Real(lhs), rhs)


# -- graph counts ----------------------------------------------------------------------

def check_degree_theorem(A: PointSet, G: DistanceGraph, fn: DistanceFn,
                         budget: float = DEFAULT_BUDGET, witness: dict | None = None) -> TheoremCheck:
    """|N_G(A) - alpha^n| <= 4 m alpha^{n-1} q^{t-(d+1)/2} when alpha >= 4 m q^{t-(d+1)/2}."""
    q, d = _qd(fn)
    rep = count_graph(A, G, fn, budget)
    alpha = A.density
    n, m, t = G.n, G.m, G.max_degree
    scale = qp(q, Fraction(2 * t - d - 1, 2))
    threshold = 4 * m * scale
    lhs = abs(rep.normalized - alpha**n)
    rhs = 4 * m * alpha ** max(n - 1, 0) * scale
    return TheoremCheck("degree-count", _w(witness, "degree-count"), at_least(alpha, threshold),
                        Real(lhs), rhs, {"alpha": alpha, "threshold": threshold, "n": n, "m": m, "t": t},
                        counts=_counts(rep))


def distinct_hypothesis(alpha, n: int, t: int, q: int, d: int) -> bool:
    """alpha >= 12 n^2 q^{t-(d+1)/2}."""
    return at_least(alpha, 12 * n * n * qp(q, Fraction(2 * t - d - 1, 2)))


def size_hypothesis(size: int, n: int, t: int, q: int, d: int) -> bool:
    """|A| >= 12 n^2 q^{(d-1)/2 + t}, the same condition stated for the raw set size."""
    return at_least(size, 12 * n * n * qp(q, Fraction(d - 1, 2) + t))


def check_distinct_theorem(A: PointSet, G: DistanceGraph, fn: DistanceFn,
                           budget: float = DEFAULT_BUDGET, witness: dict | None = None) -> list[TheoremCheck]:
    """The coincidence bound |N - N*| <= 2 n^2 alpha^{n-1} q^{t-d} and the count
    N*_raw >= |A|^n q^{-m} / 2, both under alpha >= 12 n^2 q^{t-(d+1)/2}."""
    q, d = _qd(fn)
    rep = count_graph(A, G, fn, budget)
    rep_s = count_graph_distinct(A, G, fn, budget)
    alpha = A.density
    n, m, t = G.n, G.m, G.max_degree
    threshold = 12 * n * n * qp(q, Fraction(2 * t - d - 1, 2))
    hyp = at_least(alpha, threshold)
    info = {"alpha": alpha, "threshold": threshold, "n": n, "m": m, "t": t}
    counts = _counts(rep, rep_s)
    coincidence = TheoremCheck(
        "distinct-coincidence", _w(witness, "distinct-coincidence"), hyp,
        Real(abs(rep.normalized - rep_s.normalized)),
        Real(2 * n * n * alpha ** max(n - 1, 0) * Fraction(q) ** (t - d)), info, counts=counts)
    lower = TheoremCheck(
        "distinct-count", _w(witness, "distinct-count"), hyp,
        Real(Fraction(A.size**n, 2 * q**m)), Real(rep_s.raw), info, counts=counts,
        note="claim: |A|^n q^-m / 2 <= distinct ordered copies")
    return [coincidence, lower]


def check_path_theorem(A: PointSet, k: int, t: int, fn: DistanceFn,
                       witness: dict | None = None) -> TheoremCheck:
    """|P_k - |A|^{k+1}/q^k| <= (2k/ln 2) q^{(d+1)/2} |A|^k/q^k when |A| > (2k/ln 2) q^{(d+1)/2}."""
    if k < 1:
        raise ValueError("paths need k >= 1")
    q, d = _qd(fn)
    rep = count_paths(A, k, t, fn)
    E = A.size
    bound = Real(2 * k) / ln2() * qp(q, Fraction(d + 1, 2))
    lhs = abs(rep.raw - Fraction(E ** (k + 1), q**k))
    rhs = bound * Fraction(E**k, q**k)
    return TheoremCheck("path-count", _w(witness, "path-count"), at_least(E, bound, strict=True),
                        Real(lhs), rhs, {"size": E, "threshold": bound}, counts=_counts(rep))


# -- trees -------------------------------------------------------------------------------

def check_tree_theorem(E: PointSet, T: DistanceGraph, t: int, epsilon, fn: DistanceFn,
                       witness: dict | None = None) -> list[TheoremCheck]:
    """Regularised tree counts with theta = q^{2 eps/(r+1)}.

    Emits the removal bound, the tree-count bound (constant 8), the relative
    induction bound 4r |E|^{r+1}/q^r (theta^-1 + theta^{(r-1)/2} q^{(d+1)/2}/|E|)
    and, for a single edge, the base case on E*.
    """
    eps = Fraction(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    q, d = _qd(fn)
    r = T.n - 1
    expo = 2 * eps / (r + 1)
    theta = QPower(q, expo)
    Es = regularize(E, t, theta, fn)
    rep = count_tree(Es, T, t, fn)
    pairs = pair_count(E, t, fn)
    size = E.size
    inv_theta = qp(q, -expo)
    base = Fraction(size ** (r + 1), q**r)
    size_threshold = qp(q, Fraction(d + 1, 2) + eps)
    size_ok = at_least(size, size_threshold, strict=True)
    pairs_ok = pairs * q <= 2 * size * size
    hyp = {"size": size, "size_threshold": size_threshold, "pairs": pairs,
           "pairs_limit": Fraction(2 * size * size, q), "theta_exponent": expo, "r": r,
           "removed": size - Es.size}
    counts = _counts(rep)
    out = [
        TheoremCheck("tree-removal", _w(witness, "tree-removal"), size_ok and pairs_ok,
                     Real(size - Es.size), 2 * inv_theta * size, hyp, counts=counts),
        TheoremCheck("tree-count", _w(witness, "tree-count"), size_ok and pairs_ok,
                     Real(abs(rep.raw - base)), 8 * base * inv_theta, hyp, counts=counts),
    ]
    if size:
        lemma_rhs = 4 * r * base * (inv_theta + qp(q, eps * (r - 1) / (r + 1)) * qp(q, Fraction(d + 1, 2)) / size)
    else:
        lemma_rhs = Real(0)
    out.append(TheoremCheck("tree-lemma", _w(witness, "tree-lemma"), pairs_ok and size > 0,
                            Real(abs(rep.raw - base)), lemma_rhs, hyp, counts=counts))
    if r == 1:
        s = Es.size
        out.append(TheoremCheck("tree-lemma-base", _w(witness, "tree-lemma-base"), True,
                                Real(abs(rep.raw - Fraction(s * s, q))),
                                2 * qp(q, Fraction(d - 1, 2)) * s, {"regularized_size": s}, counts=counts))
    return out


def regularization_holds(E: PointSet, t: int, theta, fn: DistanceFn) -> tuple[bool, bool]:
    """(pair count <= 2|E|^2/q, |E \\ E*| <= 2|E|/theta), both decided exactly."""
    if not isinstance(theta, QPower):
        theta = Fraction(theta)
    q = fn.field.q
    size = E.size
    removed = size - regularize(E, t, theta, fn).size
    pairs_ok = pair_count(E, t, fn) * q <= 2 * size * size
    if removed == 0:
        return pairs_ok, True
    # removed <= 2|E|/theta  <=>  theta <= 2|E|/removed
    bound = Fraction(2 * size, removed)
    ok = (theta <= bound) if isinstance(theta, QPower) else theta <= bound
    return pairs_ok, bool(ok)


# -- cycles ---------------------------------------------------------------------------------

def cycle_constants(n: int) -> dict:
    """K_n, c_n, delta, the size-threshold fraction and epsilon for the cycle bounds."""
    h = n // 2
    k = h
    frac = Fraction(k - 2, k - 1) if n % 2 == 0 else Fraction(2 * k - 3, 2 * k - 1)
    delta = Fraction(1, 4 * h * h)
    K = 48 if n == 4 else 36 + 80 * 6 ** (h - 2) + 12 * h
    c = (n - 1) ** (n - 3) * 2 ** (math.comb(n - 1, 2) - n + 3)
    return {"K": K, "c": c, "delta": delta, "frac": frac, "eps": 1 - frac + delta}


def _gamma(d: int) -> Fraction:
    return Fraction(-1) if d == 2 else Fraction(-(d - 2), 2)


def check_cycle_theorems(E: PointSet, n: int, t: int, fn: DistanceFn, budget: float = DEFAULT_BUDGET,
                         witness: dict | None = None) -> list[TheoremCheck]:
    """Cycle-count bounds: the strong bound (n = 4, 5 and both readings for n >= 6),
    and the advisory weak and non-degenerate bounds."""
    if n < 3:
        raise ValueError("cycles need n >= 3")
    q, d = _qd(fn)
    size = E.size
    out: list[TheoremCheck] = []
    rep = count_cycles(E, n, t, fn, budget)
    base = Fraction(size**n, q**n)
    dev = Real(abs(rep.raw - base))
    gamma = _gamma(d)
    h = n // 2
    qn = Fraction(q) ** n

    def strong_rhs(coef2: Real, coef3: int) -> Real:
        # |E|^n/q^n (12 q^g + 8 X/|E|^2 + c q^{(d+1)/2}/|E|), multiplied out
        return (12 * qp(q, gamma) * base + 8 * coef2 * Fraction(size ** max(n - 2, 0)) / qn
                + coef3 * qp(q, Fraction(d + 1, 2)) * Fraction(size ** (n - 1)) / qn)

    if size:
        cond = (12 * qp(q, gamma) + 8 * qp(q, d + 2) / (size * size)
                + (24 + 12 * h) * qp(q, Fraction(d + 1, 2)) / size)
        strong_hyp = at_least(1, cond)
    else:
        cond, strong_hyp = None, False
    hyp = {"size": size, "gamma": gamma, "condition": cond}
    counts = _counts(rep)
    if n == 4:
        out.append(TheoremCheck("cycle-count", _w(witness, "cycle-count"), strong_hyp, dev,
                                strong_rhs(qp(q, d + 2), 28), hyp, counts=counts))
    elif n == 5:
        out.append(TheoremCheck("cycle-count", _w(witness, "cycle-count"), strong_hyp, dev,
                                strong_rhs(qp(q, Fraction(2 * d + 3, 2)), 32), hyp, counts=counts))
    elif n >= 6:
        for reading, e in (("as-printed", d + 1), ("hypothesis-exponent", d + 2)):
            out.append(TheoremCheck("cycle-count", _w(witness, "cycle-count", reading=reading), strong_hyp,
                                    dev, strong_rhs(qp(q, e), 24 + 12 * h), hyp, counts=counts))
    if n < 4:
        return out
    k = cycle_constants(n)
    thresh = qp(q, (d + 2 - k["frac"] + k["delta"]) / 2)
    weak_hyp = at_least(size, thresh)
    whyp = {"size": size, "size_threshold": thresh, "delta": k["delta"], "K_n": k["K"],
            "q_threshold": "unspecified"}
    decay = qp(q, -(Fraction(n, 2) - 1) * k["delta"])
    if n >= 5:
        out.append(TheoremCheck("cycle-count-weak", _w(witness, "cycle-count-weak"), weak_hyp, dev,
                                k["K"] * base * decay, whyp, hard=False, counts=counts))
    try:
        rep_s = count_cycles_nondegenerate(E, n, t, fn, budget)
    except BudgetExceeded as exc:
        out.append(TheoremCheck("cycle-count-nondegenerate", _w(witness, "cycle-count-nondegenerate"),
                                weak_hyp, None, None, whyp, hard=False, status="skipped", note=str(exc)))
        return out
    nd_rhs = base * (k["K"] * decay + 2 * n * qp(q, Fraction(-2, n - 1))
                     + k["c"] * qp(q, -Fraction(d - 3, 2) - k["eps"]))
    whyp = dict(whyp, c_n=k["c"], epsilon=k["eps"])
    out.append(TheoremCheck("cycle-count-nondegenerate", _w(witness, "cycle-count-nondegenerate"), weak_hyp,
                            Real(abs(rep_s.raw - base)), nd_rhs, whyp, hard=False,
                            counts=_counts(rep, rep_s)))
    return out


# -- two-edge sums ------------------------------------------------------------------------------

def two_edge_record(S: TwoEdgeSum, fn: DistanceFn, witness: dict | None = None) -> TheoremCheck:
    """|S - q^-2 ||f||_1 ||g||_1| against the dimension-specific right-hand side."""
    q, d = _qd(fn)
    lhs = abs(S.value - S.f_l1 * S.g_l1 / (q * q))
    l1 = S.f_l1 * S.g_l1
    l2 = sqrt(S.f_l2sq * S.g_l2sq)
    marg = sqrt(S.F_l2sq * S.G_l2sq) + sqrt(S.Fp_l2sq * S.Gp_l2sq)
    if d == 2:
        rhs = 3 * Fraction(1, q**3) * l1 + 4 * q * l2 + 4 * qp(q, Fraction(-1, 2)) * marg
    else:
        rhs = (3 * qp(q, Fraction(-(d + 2), 2)) * l1 + 4 * Fraction(q) ** (d - 1) * l2
               + 4 * qp(q, Fraction(d - 3, 2)) * marg)
    return TheoremCheck("two-edge", _w(witness, "two-edge"), True, Real(lhs), rhs,
                        {"f_l1": S.f_l1, "g_l1": S.g_l1, "display": "d=2" if d == 2 else "general"})


def check_two_edge_theorem(f, g, t: int, fn: DistanceFn, witness: dict | None = None) -> TheoremCheck:
    return two_edge_record(two_edge_sum(f, g, t, fn), fn, witness)


# -- spheres and character sums -------------------------------------------------------------------

def check_spheres(fn: DistanceFn, t: int, witness: dict | None = None) -> list[TheoremCheck]:
    """Sphere size deviation, the d=2 refinement, |S_t| <= 2q^{d-1}, the square
    bound and the partition identity sum_t |S_t| = q^d."""
    if fn.kind == BILINEAR:
        raise ValueError("spheres are defined for quadratic forms")
    t = _nonzero_label(t, fn)
    q, d = _qd(fn)
    sizes = sphere_sizes(fn)
    s = int(sizes[t])
    main = q ** (d - 1)
    out = [
        TheoremCheck("sphere-size", _w(witness, "sphere-size"), True, Real(abs(s - main)),
                     qp(q, Fraction(d, 2)), {"size": s}),
        TheoremCheck("sphere-bound", _w(witness, "sphere-bound"), True, Real(s), Real(2 * main), {"size": s}),
    ]
    square_rhs = Real(3 * q) if d == 2 else 3 * qp(q, Fraction(3 * d - 2, 2))
    out.append(TheoremCheck("sphere-square", _w(witness, "sphere-square"), True,
                            Real(abs(s * s - main * main)), square_rhs, {"size": s}))
    if d == 2:
        out.append(TheoremCheck("sphere-size-d2", _w(witness, "sphere-size-d2"), True,
                                Real(abs(s - q)), Real(1), {"size": s}, identity=True))
    out.append(TheoremCheck("sphere-sum", _w(witness, "sphere-sum"), True, Real(int(sizes.sum())),
                            Real(q**d), identity=True))
    return out


def check_sphere_fourier(fn: DistanceFn, t: int, witness: dict | None = None) -> TheoremCheck:
    """max_{m != 0} |S_t^(m)| <= 2 q^{-(d+1)/2} (float, tolerance-tagged)."""
    t = _nonzero_label(t, fn)
    q, d = _qd(fn)
    sums = np.abs(sphere_fourier_all(fn, t))
    lhs = float(sums[1:].max()) / q**d if len(sums) > 1 else 0.0
    rhs = 2.0 * q ** (-(d + 1) / 2)
    return TheoremCheck("sphere-fourier", _w(witness, "sphere-fourier"), True, lhs, rhs)


def check_field_sums(q: int, witness: dict | None = None) -> list[TheoremCheck]:
    """|G|^2 = q exactly; max |Kloosterman|, max |Salie| <= 2 sqrt(q)."""
    F = field_of_order(q)
    kmax, smax = max_weil_ratio(F)
    bound = weil_bound(q)
    return [
        TheoremCheck("gauss-norm", _w(witness, "gauss-norm"), True, Real(gauss_sum(F).norm_squared()),
                     Real(q), identity=True),
        TheoremCheck("kloosterman", _w(witness, "kloosterman"), True, kmax, bound),
        TheoremCheck("salie", _w(witness, "salie"), True, smax, bound),
    ]


ORTHOGONALITY_FULL_LIMIT = 2187
ORTHOGONALITY_SAMPLE = 64


def check_orthogonality(fn: DistanceFn, witness: dict | None = None) -> TheoremCheck:
    """sum_x chi(phi(x, y)) = q^d [y = 0]; lhs counts the y where this fails."""
    sp = fn.space
    q, d = _qd(fn)
    if sp.size <= ORTHOGONALITY_FULL_LIMIT:
        ys, scope = range(sp.size), "all"
    else:
        rng = np.random.default_rng([q, d])
        ys = [0] + sorted(int(y) for y in rng.choice(np.arange(1, sp.size), ORTHOGONALITY_SAMPLE - 1,
                                                     replace=False))
        scope = f"sample{ORTHOGONALITY_SAMPLE}"
    p = fn.field.p
    bad = sum(orthogonality_check(fn, y) != CyclotomicInt.integer(p, sp.size if y == 0 else 0) for y in ys)
    return TheoremCheck("orthogonality", _w(witness, "orthogonality"), True, Real(bad), Real(0),
                        {"scope": scope}, identity=True)


def check_quadratic_weil(fn: DistanceFn, ell: int, witness: dict | None = None) -> TheoremCheck:
    """The closed-form Gauss-sum evaluation agrees with direct summation for every xi."""
    ok = quadratic_weil_identity(fn, ell)
    return TheoremCheck("quadratic-weil", _w(witness, "quadratic-weil"), True, Real(0 if ok else 1), Real(0),
                        identity=True)


# -- instances, groups and the registry ------------------------------------------------------------

@lru_cache(maxsize=16)
def _form(q: int, d: int, form: str) -> DistanceFn:
    F = field_of_order(q)
    return parse_form(form, make_space(F.p, F.k, d))


@lru_cache(maxsize=64)
def _set(q: int, d: int, form: str, desc: str, seed: int) -> PointSet:
    return make_set(desc, _form(q, d, form), seed)


@dataclass(frozen=True)
class Instance:
    q: int
    d: int
    form: str
    label: int
    set: str
    seed: int

    @cached_property
    def fn(self) -> DistanceFn:
        return _form(self.q, self.d, self.form)

    @cached_property
    def A(self) -> PointSet:
        return _set(self.q, self.d, self.form, self.set, self.seed)

    def witness(self, params: dict) -> dict:
        return {"q": self.q, "d": self.d, "form": self.form, "label": self.label,
                "set": self.set, "seed": self.seed, "params": dict(params)}

    @classmethod
    def from_witness(cls, w: dict) -> Instance:
        return cls(int(w["q"]), int(w["d"]), str(w["form"]), int(w["label"]), str(w["set"]), int(w["seed"]))


def _g_functional(inst: Instance, params: dict, budget: float) -> list[TheoremCheck]:
    fn, A, lam = inst.fn, inst.A, inst.label
    w = inst.witness(params)
    ind = A.indicator()
    out = [check_functional_distance(ind, ind, lam, fn, w)]
    if fn.kind == BILINEAR:
        out.append(check_functional_distance_unnormalized(ind, ind, lam, fn, w))
    rep = _report(pair_count(A, lam, fn), 2, 1, fn, "pairs")
    for c in out:
        c.counts = _counts(rep)
    return out


def _graph(inst: Instance, params: dict) -> DistanceGraph:
    return parse_graph(params["graph"], inst.label)


def _g_degree(inst, params, budget):
    return [check_degree_theorem(inst.A, _graph(inst, params), inst.fn, budget, inst.witness(params))]


def _g_distinct(inst, params, budget):
    return check_distinct_theorem(inst.A, _graph(inst, params), inst.fn, budget, inst.witness(params))


def _g_path(inst, params, budget):
    return [check_path_theorem(inst.A, int(params["k"]), inst.label, inst.fn, inst.witness(params))]


def _g_tree(inst, params, budget):
    return check_tree_theorem(inst.A, _graph(inst, {"graph": params["tree"]}), inst.label,
                              Fraction(params["eps"]), inst.fn, inst.witness(params))


def _g_cycle(inst, params, budget):
    return check_cycle_theorems(inst.A, int(params["n"]), inst.label, inst.fn, budget, inst.witness(params))


TWO_EDGE_RANDOM_LIMIT = 81


def _g_two_edge(inst, params, budget):
    fn, A, t = inst.fn, inst.A, inst.label
    w = inst.witness(params)
    kind = params["f"]
    ind = A.indicator()
    if kind == "pair":
        S = two_edge_sum_rank_one(ind, ind, ind, ind, t, fn)
    elif kind == "rank-one":
        ones = np.ones_like(ind)
        S = two_edge_sum_rank_one(ind, ones, ind + 1, ind, t, fn)
    elif kind == "random":
        N = fn.space.size
        if N > TWO_EDGE_RANDOM_LIMIT:
            raise BudgetExceeded(f"random dense two-edge functions need q^d <= {TWO_EDGE_RANDOM_LIMIT}")
        rng = np.random.default_rng([inst.seed, inst.q, inst.d, 2])
        f = rng.integers(0, 4, size=(N, N)) * rng.integers(0, 2, size=(N, N))
        g = rng.integers(0, 4, size=(N, N)) * (ind[:, None] | ind[None, :])
        S = two_edge_sum(f, g, t, fn)
    else:
        raise ValueError(f"unknown two-edge function family {kind!r}")
    return [two_edge_record(S, fn, w)]


def _g_sphere(inst, params, budget):
    return check_spheres(inst.fn, inst.label, inst.witness(params))


def _g_sphere_fourier(inst, params, budget):
    return [check_sphere_fourier(inst.fn, inst.label, inst.witness(params))]


def _g_field(inst, params, budget):
    return check_field_sums(inst.q, inst.witness(params))


def _g_orthogonality(inst, params, budget):
    return [check_orthogonality(inst.fn, inst.witness(params))]


def _g_quadratic_weil(inst, params, budget):
    return [check_quadratic_weil(inst.fn, inst.label, inst.witness(params))]


@dataclass(frozen=True)
class Group:
    name: str
    run: Callable
    ids: tuple[str, ...]


GROUPS = {g.name: g for g in [
    Group("functional", _g_functional, ("functional-distance", "functional-distance-unnormalized")),
    Group("degree", _g_degree, ("degree-count",)),
    Group("distinct", _g_distinct, ("distinct-coincidence", "distinct-count")),
    Group("path", _g_path, ("path-count",)),
    Group("tree", _g_tree, ("tree-removal", "tree-count", "tree-lemma", "tree-lemma-base")),
    Group("cycle", _g_cycle, ("cycle-count", "cycle-count-weak", "cycle-count-nondegenerate")),
    Group("two-edge", _g_two_edge, ("two-edge",)),
    Group("sphere", _g_sphere, ("sphere-size", "sphere-bound", "sphere-square", "sphere-size-d2", "sphere-sum")),
    Group("sphere-fourier", _g_sphere_fourier, ("sphere-fourier",)),
    Group("field", _g_field, ("gauss-norm", "kloosterman", "salie")),
    Group("orthogonality", _g_orthogonality, ("orthogonality",)),
    Group("quadratic-weil", _g_quadratic_weil, ("quadratic-weil",)),
]}

THEOREM_GROUP = {tid: g.name for g in GROUPS.values() for tid in g.ids}
THEOREM_IDS = tuple(THEOREM_GROUP)
ADVISORY_IDS = ("cycle-count-weak", "cycle-count-nondegenerate")


@dataclass(frozen=True)
class Task:
    group: str
    instance: Instance
    params: tuple  # sorted (key, value) pairs

    @property
    def param_dict(self) -> dict:
        return dict(self.params)


def run_task(task: Task, budget: float = DEFAULT_BUDGET, theorems: Iterable[str] | None = None) -> list[TheoremCheck]:
    """Evaluate one group on one instance; budget overruns become skipped records."""
    group = GROUPS[task.group]
    wanted = set(theorems) if theorems is not None else set(group.ids)
    params = task.param_dict
    try:
        records = group.run(task.instance, params, budget)
    except BudgetExceeded as exc:
        w = task.instance.witness(params)
        records = [TheoremCheck(tid, dict(w, theorem=tid), False, None, None, status="skipped",
                                hard=tid not in ADVISORY_IDS, note=str(exc))
                   for tid in group.ids]
        records = [r for r in records if _applies(r.theorem_id, task.instance)]
    return [r for r in records if r.theorem_id in wanted]


def _applies(tid: str, inst: Instance) -> bool:
    if tid == "functional-distance-unnormalized":
        return inst.form.startswith(BILINEAR)
    if tid == "sphere-size-d2":
        return inst.d == 2
    return True


def replay(witness: dict, budget: float = DEFAULT_BUDGET) -> TheoremCheck:
    """Re-run the check named by a witness and return the matching record."""
    tid = witness["theorem"]
    inst = Instance.from_witness(witness)
    params = dict(witness.get("params", {}))
    extra = {k: params.pop(k) for k in ("reading",) if k in params}
    task = Task(THEOREM_GROUP[tid], inst, tuple(sorted(params.items())))
    for rec in run_task(task, budget, [tid]):
        if all(rec.witness["params"].get(k) == v for k, v in extra.items()):
            return rec
    raise LookupError(f"no record for witness {witness}")


# -- grids and campaigns -----------------------------------------------------------------------------

DESK_FIELDS = (3, 5, 7, 9, 11, 13, 25, 27)
DESK_DIMS = (2, 3, 4)
DESK_FORMS = ("bilinear:dot", "quadratic:norm", "quadratic:canonical")
GRAPHS = ("path:1", "matching:2", "path:2", "star:3", "cycle:3", "cycle:4")
TREES = ("path:1", "path:2", "star:3", "random-tree:3:0")
TREE_EPS = ("1/4", "1/2")
PATH_KS = (1, 2, 3)
CYCLE_NS = (4, 5, 6)
TWO_EDGE_FAMILIES = ("pair", "rank-one", "random")
SPHERE_FOURIER_LIMIT = 3125
QUADRATIC_WEIL_LIMIT = 2187


def _is_seeded(desc: str) -> bool:
    return "random:" in desc or re.search(r"affine:\d", desc) is not None


@dataclass
class Grid:
    """A deterministic description of the check list.

    ``labels``: ``all``, ``sampled`` (1 and a non-square) or an explicit list
    of field indices.  ``sets`` and ``seeds`` apply to every (q, d, form);
    seeds (a count or an explicit list) matter only for randomised descriptors.  ``tiers`` (``auto``)
    replaces labels, sets and seeds by the size-tiered desk defaults.
    """

    fields: tuple = DESK_FIELDS
    dims: tuple = DESK_DIMS
    forms: tuple = DESK_FORMS
    labels: object = "all"
    sets: tuple = ("random:1/5", "random:1/2", "random:4/5", "full")
    seeds: object = 3
    theorems: object = "all"
    max_size: int = 10**6
    tiers: str = "auto"

    def theorem_ids(self) -> list[str]:
        if self.theorems in ("all", None):
            return list(THEOREM_IDS)
        ids = [self.theorems] if isinstance(self.theorems, str) else list(self.theorems)
        for tid in ids:
            if tid not in THEOREM_GROUP:
                raise ValueError(f"unknown theorem id {tid!r}")
        return ids

    def _tier(self, q: int, size: int):
        """(labels policy, set descriptors, seeds) for one space size."""
        if self.tiers != "auto":
            seeds = range(self.seeds) if isinstance(self.seeds, int) else self.seeds
            return self.labels, tuple(self.sets), tuple(int(s) for s in seeds)
        if size <= 729:
            return ("all" if q <= 13 else "sampled"), ("random:1/5", "random:1/2", "random:4/5", "full"), (0,)
        if size <= 30000:
            return "sampled", ("random:1/2", "full"), (0,)
        return (1,), ("full",), (0,)

    @staticmethod
    def _labels(policy, q: int) -> list[int]:
        F = field_of_order(q)
        if policy == "all":
            return list(range(1, q))
        if policy == "sampled":
            return [1, F.nonsquare]
        return [int(v) for v in policy if 0 < int(v) < q]

    def tasks(self) -> list[Task]:
        ids = set(self.theorem_ids())
        groups = {THEOREM_GROUP[t] for t in ids}
        out: list[Task] = []
        for q in self.fields:
            for d in self.dims:
                size = q**d
                if size > self.max_size:
                    continue
                policy, sets, seeds = self._tier(q, size)
                for form in self.forms:
                    quad = not form.startswith(BILINEAR)
                    for lam in self._labels(policy, q):
                        for desc in sets:
                            for seed in (seeds if _is_seeded(desc) else (0,)):
                                inst = Instance(q, d, form, lam, desc, seed)
                                first = form == self.forms[0] and d == min(self.dims)
                                out.extend(self._instance_tasks(inst, groups, quad, desc == "full", first))
        return out

    def _instance_tasks(self, inst: Instance, groups: set, quad: bool, full: bool, first: bool):
        def task(g, **params):
            return Task(g, inst, tuple(sorted(params.items())))

        size = inst.q**inst.d
        if "functional" in groups:
            yield task("functional")
        if "degree" in groups:
            for g in GRAPHS:
                yield task("degree", graph=g)
        if "distinct" in groups:
            for g in GRAPHS:
                yield task("distinct", graph=g)
        if "path" in groups:
            for k in PATH_KS:
                yield task("path", k=k)
        if "tree" in groups:
            for tr in TREES:
                for e in TREE_EPS:
                    yield task("tree", tree=tr, eps=e)
        if "cycle" in groups:
            for n in CYCLE_NS:
                yield task("cycle", n=n)
        if "two-edge" in groups:
            for fam in TWO_EDGE_FAMILIES:
                if fam != "random" or size <= TWO_EDGE_RANDOM_LIMIT:
                    yield task("two-edge", f=fam)
        if not full:
            return
        if quad and "sphere" in groups:
            yield task("sphere")
        if quad and "sphere-fourier" in groups and size <= SPHERE_FOURIER_LIMIT:
            yield task("sphere-fourier")
        if quad and "quadratic-weil" in groups and size <= QUADRATIC_WEIL_LIMIT and canonical_diagonal(inst.fn) is not None:
            yield task("quadratic-weil")
        if not quad and "orthogonality" in groups and inst.label == 1:
            yield task("orthogonality")
        if "field" in groups and first and inst.label == 1:
            yield task("field")


PRESETS = {
    "smoke": Grid(fields=(3, 5), dims=(2,), forms=("bilinear:dot", "quadratic:norm"), tiers="fixed",
                  labels="sampled", sets=("random:1/2", "full"), seeds=1),
    "default": Grid(),
    "full": Grid(tiers="fixed", labels="all", sets=("random:1/5", "random:1/2", "random:4/5", "full"), seeds=20),
}


@dataclass
class CampaignResult:
    records: list[TheoremCheck]
    config: dict

    @property
    def violations(self) -> list[TheoremCheck]:
        return [r for r in self.records if r.violated]

    @property
    def exit_code(self) -> int:
        return 1 if self.violations else 0

    def header(self) -> dict:
        return {"schema": SCHEMA, "config": self.config}

    def jsonl(self) -> str:
        lines = [json.dumps(self.header(), sort_keys=True, separators=(",", ":"))]
        lines.extend(r.to_json() for r in self.records)
        return "\n".join(lines) + "\n"

    def csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["theorem_id", "q", "d", "form", "label", "set_descriptor", "seed", "hypothesis_satisfied",
                     "lhs", "rhs", "margin", "params", "kind", "hard", "status"])
        for r in self.records:
            w = r.witness
            wr.writerow([r.theorem_id, w["q"], w["d"], w["form"], w["label"], w["set"], w["seed"],
                         str(r.hypothesis_satisfied).lower(), _ser(r.lhs), _ser(r.rhs), _ser(r.margin),
                         json.dumps(w.get("params", {}), sort_keys=True), r.kind, str(r.hard).lower(), r.status])
        return buf.getvalue()

    def telemetry(self) -> dict[str, dict]:
        """Per theorem: records, applicable, skipped, violations, minimum applicable margin."""
        stats: dict[str, dict] = defaultdict(lambda: {"records": 0, "applicable": 0, "skipped": 0,
                                                       "violations": 0, "min_margin": None})
        for r in self.records:
            s = stats[r.theorem_id]
            s["records"] += 1
            if r.status == "skipped":
                s["skipped"] += 1
                continue
            if r.hypothesis_satisfied:
                s["applicable"] += 1
                m = r.margin_float
                if m is not None and (s["min_margin"] is None or m < s["min_margin"]):
                    s["min_margin"] = m
            if r.violated or (not r.hard and r.hypothesis_satisfied and r.holds is False):
                s["violations"] += 1
        return dict(sorted(stats.items()))

    def summary(self) -> str:
        lines = [f"{SCHEMA} summary", f"records: {len(self.records)}",
                 f"hard violations: {len(self.violations)}", "",
                 f"{'theorem':<34}{'records':>8}{'applic.':>8}{'skipped':>8}{'fail':>6}  min margin"]
        for tid, s in self.telemetry().items():
            mm = "-" if s["min_margin"] is None else f"{s['min_margin']:.6g}"
            tag = " (advisory)" if tid in ADVISORY_IDS else ""
            lines.append(f"{tid:<34}{s['records']:>8}{s['applicable']:>8}{s['skipped']:>8}{s['violations']:>6}  {mm}{tag}")
        return "\n".join(lines) + "\n"


def _worker(args):
    task, budget, ids = args
    return [r for r in run_task(task, budget, ids)]


def run_campaign(grid: Grid, budget: float = CAMPAIGN_BUDGET, jobs: int = 1,
                 config: dict | None = None, progress: Callable | None = None) -> CampaignResult:
    """Run every task of a grid; results are ordered by witness key regardless of ``jobs``."""
    ids = grid.theorem_ids()
    tasks = grid.tasks()
    # keep tasks of one (q, d, form) together so cached operators are reused and then dropped
    tasks.sort(key=lambda t: (t.instance.q, t.instance.d, t.instance.form))
    records: list[TheoremCheck] = []
    if jobs <= 1:
        current = None
        for i, task in enumerate(tasks):
            key = (task.instance.q, task.instance.d, task.instance.form)
            if key != current:
                kernel.clear_cache()
                _set.cache_clear()
                current = key
            records.extend(run_task(task, budget, ids))
            if progress:
                progress(i + 1, len(tasks))
    else:
        ctx = multiprocessing.get_context("spawn")
        with ctx.Pool(jobs) as pool:
            for i, recs in enumerate(pool.imap(_worker, [(t, budget, ids) for t in tasks], chunksize=4)):
                records.extend(recs)
                if progress:
                    progress(i + 1, len(tasks))
    records.sort(key=TheoremCheck.key)
    return CampaignResult(records, config if config is not None else {})


__all__ = [
    "ADVISORY_IDS", "CAMPAIGN_BUDGET", "CampaignResult", "FLOAT_TOLERANCE", "GROUPS", "Grid", "Instance", "PRESETS",
    "SCHEMA", "THEOREM_IDS", "Task", "TheoremCheck", "check_cycle_theorems", "check_degree_theorem",
    "check_distinct_theorem", "check_field_sums", "check_functional_distance",
    "check_functional_distance_unnormalized", "check_orthogonality", "check_path_theorem",
    "check_quadratic_weil", "check_sphere_fourier", "check_spheres", "check_tree_theorem",
    "check_two_edge_theorem", "cycle_constants", "distinct_hypothesis", "regularization_holds",
    "replay", "run_campaign", "run_task", "size_hypothesis", "two_edge_record",
]
