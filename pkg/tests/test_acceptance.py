"""The eight acceptance criteria, each at its stated tolerance and time limit.

Every test prints one line ``criterion N: PASS|FAIL ...``.  The default campaign
(criteria 5 and 7) is run twice per session and shared between the two tests.
"""

from __future__ import annotations

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from ffdist.charsums import gauss_sum, kloosterman_sum, orthogonality_check, quadratic_weil_identity, salie_sum
from ffdist.embed import (DistanceGraph, PointSet, count_cycles, count_cycles_nondegenerate, count_graph,
                          count_graph_distinct, count_paths, count_paths_labeled, count_tree, pair_count, random_tree,
                          regularize, star_graph, two_edge_sum)
from ffdist.field import CyclotomicInt, field_of_order
from ffdist.forms import make_space, parse_form, sphere_fourier_all, sphere_sizes
from ffdist.sets import make_set
from ffdist.verify import PRESETS, run_campaign
from oracles import count_tuples_pruned, cycle_edges, naive_field_for, phi_table, two_edge_oracle

DESK = (3, 5, 7, 9, 11, 13, 25, 27)
FORMS = ("quadratic:norm", "quadratic:canonical", "bilinear:dot", "bilinear:matrix=[[1,1],[0,1]]")


def report(capsys, n: int, ok: bool, detail: str):
    with capsys.disabled():
        print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def fn_of(q, d, spec):
    F = field_of_order(q)
    return parse_form(spec, make_space(F.p, F.k, d))


# 1 -------------------------------------------------------------------------------------------

def test_criterion_1_exact_identities(capsys):
    t0 = time.time()
    failures = []
    checked = 0
    for q in DESK:
        F = field_of_order(q)
        if gauss_sum(F).norm_squared() != q:
            failures.append(f"gauss q={q}")
        for d in (2, 3):
            if q**d > 20000:
                continue
            fn = fn_of(q, d, "bilinear:dot")
            for y in range(q**d):
                want = CyclotomicInt.integer(F.p, q**d if y == 0 else 0)
                checked += 1
                if orthogonality_check(fn, y) != want:
                    failures.append(f"orthogonality q={q} d={d} y={y}")
        for d in (1, 2):
            for spec in ("quadratic:norm", "quadratic:canonical"):
                fn = fn_of(q, d, spec)
                for ell in range(1, q):
                    checked += q**d
                    if not quadratic_weil_identity(fn, ell):
                        failures.append(f"quadratic weil q={q} d={d} {spec} l={ell}")
    elapsed = time.time() - t0
    ok = not failures and elapsed < 300
    report(capsys, 1, ok, f"{checked} exact identities, {len(failures)} failures, {elapsed:.1f}s (limit 300s) {failures[:3]}")


# 2 -------------------------------------------------------------------------------------------

def test_criterion_2_weil_bounds(capsys):
    worst = 0.0
    fails = 0
    for q in (3, 5, 7, 9, 11, 13):
        F = field_of_order(q)
        bound = 2 * q**0.5 + 1e-9
        for a in range(1, q):
            for b in range(q):
                for v in (kloosterman_sum(F, a, b), salie_sum(F, a, b)):
                    worst = max(worst, v.magnitude / (2 * q**0.5))
                    fails += v.magnitude > bound
    sphere_cases = 0
    sphere_worst = 0.0
    for q in DESK:
        for d in range(2, 8):
            if q**d > 3125:
                continue
            for spec in ("quadratic:norm", "quadratic:canonical"):
                fn = fn_of(q, d, spec)
                bound = 2 * q ** (-(d + 1) / 2)
                for t in range(1, q):
                    vals = np.abs(sphere_fourier_all(fn, t)[1:]) / q**d
                    sphere_cases += len(vals)
                    sphere_worst = max(sphere_worst, float(vals.max()) / bound)
                    fails += int(np.count_nonzero(vals > bound + 1e-9))
    report(capsys, 2, fails == 0,
           f"Kloosterman/Salie max ratio {worst:.4f}; {sphere_cases} sphere coefficients, max ratio {sphere_worst:.4f}; "
           f"{fails} violations")


# 3 -------------------------------------------------------------------------------------------

def test_criterion_3_spheres(capsys):
    cases = fails = 0
    for q in DESK:
        for d in (2, 3, 4):
            if q**d > 10**6:
                continue
            for spec in ("quadratic:norm", "quadratic:canonical"):
                sizes = [int(v) for v in sphere_sizes(fn_of(q, d, spec))]
                fails += sum(sizes) != q**d
                for t in range(1, q):
                    cases += 1
                    s = sizes[t]
                    fails += (s - q ** (d - 1)) ** 2 > q**d
                    if d == 2:
                        fails += s not in (q - 1, q + 1)
    report(capsys, 3, fails == 0, f"{cases} (q, d, form, t) cases, {fails} failures")


# 4 -------------------------------------------------------------------------------------------

def _graphs(lam, other):
    return [
        DistanceGraph(2, ((0, 1, lam),)),
        DistanceGraph(3, ((0, 1, lam), (1, 2, other))),
        DistanceGraph(3, ((0, 1, lam), (1, 2, lam), (0, 2, lam))),
        DistanceGraph(4, ((0, 1, lam), (2, 3, other))),
        DistanceGraph(4, ((0, 1, lam), (0, 2, lam), (0, 3, other))),
        DistanceGraph(5, ((0, 1, lam), (1, 2, other), (2, 3, lam), (3, 4, lam))),
    ]


def _compare_instance(fn, table, A, lam, other, max_n, mismatches, tag):
    pts = list(A.indices())
    n_checked = 0

    def eq(name, got, want):
        nonlocal n_checked
        n_checked += 1
        if got != want:
            mismatches.append(f"{tag} {name}: {got} != {want}")

    for G in _graphs(lam, other):
        if G.n > max_n:
            continue
        eq(f"graph {G.describe()}", count_graph(A, G, fn).raw, count_tuples_pruned(pts, G.n, G.edges, table))
        eq(f"distinct {G.describe()}", count_graph_distinct(A, G, fn).raw,
           count_tuples_pruned(pts, G.n, G.edges, table, distinct=True))
    for k in range(1, max_n):
        eq(f"path {k}", count_paths(A, k, lam, fn).raw,
           count_tuples_pruned(pts, k + 1, [(i, i + 1, lam) for i in range(k)], table))
    eq("path mixed", count_paths_labeled(A, [lam, other], fn).raw,
       count_tuples_pruned(pts, 3, [(0, 1, lam), (1, 2, other)], table))
    for T in (star_graph(3), random_tree(min(max_n, 5) - 1, 1)):
        eq(f"tree {T.describe()}", count_tree(A, T, lam, fn).raw,
           count_tuples_pruned(pts, T.n, [(i, j, lam) for i, j, _ in T.edges], table))
    for n in range(3, max_n + 1):
        eq(f"cycle {n}", count_cycles(A, n, lam, fn).raw, count_tuples_pruned(pts, n, cycle_edges(n, lam), table))
        eq(f"cycle* {n}", count_cycles_nondegenerate(A, n, lam, fn).raw,
           count_tuples_pruned(pts, n, cycle_edges(n, lam), table, distinct=True))
    return n_checked


def test_criterion_4_oracle_equivalence(capsys):
    t0 = time.time()
    mismatches: list[str] = []
    checked = 0
    # every space with q^d <= 81, every form family, two labels, full and random sets
    for q, d in ((3, 2), (5, 2), (7, 2), (9, 2), (3, 3), (3, 4)):
        N = q**d
        for spec in FORMS:
            if "matrix" in spec and d != 2:
                spec = "bilinear:matrix=[[1,1,0],[0,1,0],[0,0,1]]" if d == 3 else "bilinear:matrix=[[1,1,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]"
            fn = fn_of(q, d, spec)
            F = fn.field
            table = phi_table(fn, naive_field_for(F))
            descs = ["full", "random:1/2"] if N <= 25 else ["random:1/2", "random:1/4"]
            for lam in sorted({1, F.nonsquare}):
                other = F.nonsquare if lam == 1 else 1
                for desc in descs:
                    A = make_set(desc, fn, seed=lam)
                    max_n = 5 if N <= 49 or desc == "random:1/4" else 4
                    checked += _compare_instance(fn, table, A, lam, other, max_n, mismatches,
                                                 f"q={q} d={d} {spec} l={lam} {desc}")
            rng = np.random.default_rng(N)
            f = rng.integers(0, 3, size=(N, N))
            g = rng.integers(0, 3, size=(N, N))
            checked += 1
            if two_edge_sum(f, g, 1, fn).value != two_edge_oracle(f, g, 1, table, N):
                mismatches.append(f"two-edge q={q} d={d} {spec}")
    exhaustive = checked
    # seeded random instances with q^d <= 625
    rng = np.random.default_rng(2024)
    spaces = [(5, 3), (25, 2), (5, 4), (7, 3), (11, 2), (13, 2), (3, 5), (27, 2)]
    tables = {}
    random_instances = 0
    for i in range(60):
        q, d = spaces[i % len(spaces)]
        spec = ("quadratic:norm", "quadratic:canonical", "bilinear:dot")[int(rng.integers(3))]
        key = (q, d, spec)
        fn = fn_of(q, d, spec)
        if key not in tables:
            tables[key] = phi_table(fn, naive_field_for(fn.field))
        lam = int(rng.integers(1, q))
        other = int(rng.integers(1, q))
        density = ("1/10", "1/8", "1/6")[int(rng.integers(3))]
        A = make_set(f"random:{density}", fn, seed=int(rng.integers(10**6)))
        checked += _compare_instance(fn, tables[key], A, lam, other, 4, mismatches,
                                     f"random#{i} q={q} d={d} {spec} l={lam}")
        random_instances += 1
    elapsed = time.time() - t0
    ok = not mismatches and elapsed < 600 and random_instances >= 50
    report(capsys, 4, ok, f"{exhaustive} exhaustive-grid comparisons + {random_instances} random instances "
                          f"({checked} total), {len(mismatches)} mismatches, {elapsed:.1f}s (limit 600s) {mismatches[:3]}")


# 5 and 7 ----------------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def default_runs():
    runs = []
    for _ in range(2):
        t0 = time.time()
        res = run_campaign(PRESETS["default"], config={"preset": "default"})
        runs.append((res, time.time() - t0))
    return runs


def test_criterion_5_soundness_sweep(capsys, default_runs):
    res, elapsed = default_runs[0]
    tel = res.telemetry()
    applicable = sum(s["applicable"] for s in tel.values())
    skipped = sum(s["skipped"] for s in tel.values())
    hard_viol = len(res.violations)
    ok = hard_viol == 0 and elapsed < 1800
    report(capsys, 5, ok, f"{len(res.records)} records, {applicable} hypothesis-satisfied, {skipped} skipped over budget, "
                          f"{hard_viol} hard violations, {elapsed:.0f}s (limit 1800s)")


def test_criterion_7_determinism(capsys, default_runs):
    (a, _), (b, _) = default_runs
    ja, jb = a.jsonl().encode(), b.jsonl().encode()
    report(capsys, 7, ja == jb, f"two default campaigns, {len(ja)} bytes each, identical={ja == jb}")


# 6 -----------------------------------------------------------------------------------------------

def test_criterion_6_regularization(capsys):
    rng = np.random.default_rng(6)
    spaces = [(5, 2), (7, 2), (9, 2), (3, 3), (5, 3), (13, 2), (25, 2), (3, 4)]
    applicable = fails = 0
    for i in range(100):
        q, d = spaces[i % len(spaces)]
        spec = ("quadratic:norm", "quadratic:canonical", "bilinear:dot")[i % 3]
        fn = fn_of(q, d, spec)
        E = make_set(f"random:{int(rng.integers(1, 10))}/10", fn, seed=i)
        t = int(rng.integers(1, q))
        theta = Fraction(int(rng.integers(1, 41)), 4)
        removed = E.size - regularize(E, t, theta, fn).size
        if pair_count(E, t, fn) * q <= 2 * E.size**2:
            applicable += 1
            fails += removed * theta > 2 * E.size
    report(capsys, 6, fails == 0, f"100 instances, {applicable} with pair count <= 2|E|^2/q, {fails} failures")


# 8 -----------------------------------------------------------------------------------------------

def test_criterion_8_cross_normalization(capsys):
    reports = []
    for q, d in ((3, 2), (5, 2), (3, 3), (9, 2)):
        for spec in FORMS[:3]:
            fn = fn_of(q, d, spec)
            for desc in ("full", "random:1/2"):
                A = make_set(desc, fn, seed=1)
                reports += [count_paths(A, 2, 1, fn), count_tree(A, star_graph(3), 1, fn),
                            count_cycles(A, 4, 1, fn), count_cycles_nondegenerate(A, 3, 1, fn),
                            count_graph(A, DistanceGraph(3, ((0, 1, 1), (1, 2, 2))), fn),
                            count_graph_distinct(A, DistanceGraph(3, ((0, 1, 1), (1, 2, 2))), fn)]
    # and every count emitted by the smoke campaign
    res = run_campaign(PRESETS["smoke"])
    emitted = [c for r in res.records for c in r.counts]
    bad = sum(r.normalized * Fraction(r.q) ** (r.n * r.d - r.m) != r.raw for r in reports)
    for r, c in ((r, c) for r in res.records for c in r.counts):
        q, d = r.witness["q"], r.witness["d"]
        bad += Fraction(c["normalized"]) * Fraction(q) ** (c["n"] * d - c["m"]) != c["raw"]
    report(capsys, 8, bad == 0, f"{len(reports)} direct reports + {len(emitted)} emitted counts, {bad} mismatches")
