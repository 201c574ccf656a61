"""Property-based checks of the structural invariants."""

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ffdist.charsums import gauss_sum, kloosterman_sum, salie_sum
from ffdist.embed import (PointSet, count_cycles, count_cycles_nondegenerate, count_graph, count_graph_distinct,
                          count_paths, count_tree, cycle_graph, pair_count, path_graph, regularize)
from ffdist.field import CyclotomicInt, character_sum, field_of_order
from ffdist.forms import (DegenerateForm, bilinear_form, make_space, parse_form, quadratic_form, rank_and_det,
                          sphere_sizes)
from ffdist.sets import make_set

FIELDS = [3, 5, 7, 9, 11, 13, 25, 27, 49, 81, 121]
SMALL = st.sampled_from([(3, 2), (5, 2), (3, 3), (7, 2), (9, 2)])
QUAD = st.sampled_from(["quadratic:norm", "quadratic:canonical", "quadratic:matrix=[[1,1],[1,2]]"])
ANY_FORM = st.sampled_from(["quadratic:norm", "quadratic:canonical", "bilinear:dot", "bilinear:matrix=[[1,1],[0,1]]"])
prop = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def fn_of(q, d, spec):
    F = field_of_order(q)
    if "matrix=[[" in spec and d != 2:
        spec = spec.split(":")[0] + (":norm" if spec.startswith("quadratic") else ":dot")
    return parse_form(spec, make_space(F.p, F.k, d))


# -- field ----------------------------------------------------------------------------

@pytest.mark.parametrize("q", FIELDS)
def test_field_axioms_on_random_triples(q):
    F = field_of_order(q)
    rng = np.random.default_rng(q)
    a, b, c = rng.integers(0, q, size=(3, 1000))
    add, mul = F.add_table, F.mul_table
    assert np.array_equal(add[add[a, b], c], add[a, add[b, c]])
    assert np.array_equal(mul[mul[a, b], c], mul[a, mul[b, c]])
    assert np.array_equal(mul[a, add[b, c]], add[mul[a, b], mul[a, c]])
    nz = a[a != 0]
    assert np.all(mul[nz, F.inv_table[nz]] == 1)
    assert np.all(add[a, F.neg_table[a]] == 0)


@pytest.mark.parametrize("q", FIELDS)
def test_frobenius_fixes_every_element(q):
    F = field_of_order(q)
    assert all(int(F.element(a) ** q) == a for a in range(q))


@pytest.mark.parametrize("q", FIELDS)
def test_character_orthogonality_and_eta_balance(q):
    F = field_of_order(q)
    elems = np.arange(q)
    for c in range(q):
        s = character_sum(F, F.mul_table[c, elems])
        assert s == CyclotomicInt.integer(F.p, q if c == 0 else 0)
    eta = F.eta_table[1:]
    assert (eta == 1).sum() == (eta == -1).sum() == (q - 1) // 2


@given(p=st.sampled_from([3, 5, 7]), data=st.data())
@prop
def test_cyclotomic_ring_laws(p, data):
    vec = st.lists(st.integers(-20, 20), min_size=p, max_size=p)
    u, v, w = (CyclotomicInt(p, data.draw(vec)) for _ in range(3))
    assert (u + v) * w == u * w + v * w
    assert abs(complex(u * v) - complex(u) * complex(v)) < 1e-9
    assert abs(complex(u + v) - (complex(u) + complex(v))) < 1e-9


# -- forms ----------------------------------------------------------------------------

@given(q=st.sampled_from([3, 5, 7, 9]), entries=st.lists(st.integers(0, 8), min_size=4, max_size=4))
@prop
def test_nondegeneracy_iff_full_rank(q, entries):
    F = field_of_order(q)
    sp = make_space(F.p, F.k, 2)
    M = np.array([e % q for e in entries]).reshape(2, 2)
    rank, _ = rank_and_det(F, M)
    if rank == 2:
        assert bilinear_form(sp, M).kind == "bilinear"
    else:
        with pytest.raises(DegenerateForm):
            bilinear_form(sp, M)


@given(qd=SMALL, spec=QUAD, data=st.data())
@prop
def test_quadratic_translation_invariance(qd, spec, data):
    fn = fn_of(*qd, spec)
    sp = fn.space
    x, y, z = (data.draw(st.integers(0, sp.size - 1)) for _ in range(3))
    assert fn.values(sp.add(x, z), sp.add(y, z)) == fn.values(x, y)


@pytest.mark.parametrize("qd", [(3, 2), (5, 2), (3, 3), (9, 2), (27, 2), (5, 4), (3, 6)])
@pytest.mark.parametrize("spec", ["quadratic:norm", "quadratic:canonical"])
def test_sphere_size_bounds(qd, spec):
    q, d = qd
    sizes = sphere_sizes(fn_of(q, d, spec)).astype(object)
    assert sum(sizes) == q**d
    for t in range(1, q):
        s = sizes[t]
        assert (s - q ** (d - 1)) ** 2 <= q**d
        assert s <= 2 * q ** (d - 1)
        dev = abs(s * s - q ** (2 * d - 2))
        if d == 2:
            assert s in (q - 1, q + 1) and dev <= 3 * q
        else:
            assert dev**2 <= 9 * q ** (3 * d - 2)


@pytest.mark.parametrize("q", [3, 5, 7, 9])
def test_isometric_forms_share_sphere_sizes(q):
    F = field_of_order(q)
    sp = make_space(F.p, F.k, 2)
    by_class = {}
    for a, b, c in itertools.product(range(q), repeat=3):
        M = np.array([[a, b], [b, c]])
        try:
            fn = quadratic_form(sp, M)
        except DegenerateForm:
            continue
        key = fn.canonical_a
        sizes = tuple(sphere_sizes(fn).tolist())
        assert by_class.setdefault(key, sizes) == sizes


# -- character sums --------------------------------------------------------------------

@pytest.mark.parametrize("q", [3, 5, 7, 9, 11, 13])
def test_weil_bounds_exhaustive(q):
    F = field_of_order(q)
    bound = 2 * q**0.5 + 1e-9
    for a in range(1, q):
        for b in range(q):
            assert kloosterman_sum(F, a, b).magnitude <= bound
            assert salie_sum(F, a, b).magnitude <= bound


@pytest.mark.parametrize("q", [3, 5, 9, 25, 27])
def test_eta_twist_sign(q):
    F = field_of_order(q)
    for a in range(1, q):
        for ell in range(1, q):
            assert F.eta_table[F.mul_table[a, ell]] == F.eta_table[a] * F.eta_table[ell]


# -- embedding counts ------------------------------------------------------------------

@given(qd=st.sampled_from([(3, 2), (5, 2)]), spec=ANY_FORM, seed=st.integers(0, 50),
       density=st.sampled_from(["1/3", "1/2", "4/5"]), t=st.integers(1, 2))
@prop
def test_cross_engine_and_normalization(qd, spec, seed, density, t):
    fn = fn_of(*qd, spec)
    q, d = qd
    A = make_set(f"random:{density}", fn, seed)
    for k in (1, 2, 3):
        P = count_paths(A, k, t, fn)
        assert P.raw == count_graph(A, path_graph(k, t), fn).raw == count_tree(A, path_graph(k), t, fn).raw
        assert P.normalized * Fraction(q) ** (P.n * d - P.m) == P.raw
    for n in (3, 4):
        C = count_cycles(A, n, t, fn)
        Cs = count_cycles_nondegenerate(A, n, t, fn)
        assert Cs.raw <= C.raw
        if fn.symmetric:  # graph edges are stored i < j, so the closing edge reads phi(x_0, x_{n-1})
            assert C.raw == count_graph(A, cycle_graph(n, t), fn).raw
            assert count_graph_distinct(A, cycle_graph(n, t), fn).raw == Cs.raw
        assert C.normalized * Fraction(q) ** (n * d - n) == C.raw


@given(qd=st.sampled_from([(3, 2), (5, 2), (3, 3)]), spec=QUAD, seed=st.integers(0, 100), data=st.data())
@prop
def test_translation_invariance_of_counts(qd, spec, seed, data):
    fn = fn_of(*qd, spec)
    A = make_set("random:1/2", fn, seed)
    v = data.draw(st.integers(0, fn.space.size - 1))
    B = A.translate(v)
    for count in (lambda S: count_paths(S, 2, 1, fn), lambda S: count_cycles(S, 4, 1, fn),
                  lambda S: count_graph_distinct(S, cycle_graph(3, 1), fn)):
        assert count(A).raw == count(B).raw


@given(qd=st.sampled_from([(5, 2), (7, 2), (3, 3), (9, 2)]), spec=ANY_FORM, seed=st.integers(0, 1000),
       theta=st.fractions(min_value=Fraction(1, 4), max_value=20), density=st.sampled_from(["1/5", "1/2", "9/10"]))
@prop
def test_regularize_guarantee(qd, spec, seed, theta, density):
    fn = fn_of(*qd, spec)
    q = qd[0]
    E = make_set(f"random:{density}", fn, seed)
    Es = regularize(E, 1, theta, fn)
    assert np.all(Es.mask <= E.mask)
    if pair_count(E, 1, fn) * q <= 2 * E.size**2:
        assert (E.size - Es.size) * theta <= 2 * E.size
