import cmath
import itertools

import numpy as np
import pytest

from ffdist.field import field_of_order, make_field
from ffdist.forms import (DegenerateForm, DimensionMismatch, FormSpecError, ZeroLabel, bilinear_form, classify,
                          d_lambda, diagonal_form, dot_product, make_space, norm_form, parse_form, phi,
                          quadratic_form, sphere, sphere_fourier, sphere_fourier_all, sphere_sizes)
from oracles import NaiveSpace, naive_field_for, phi_table


def space(q, d):
    F = field_of_order(q)
    return make_space(F.p, F.k, d)


def test_phi_examples():
    sp = space(3, 2)
    assert int(phi(norm_form(sp), (1, 0), (0, 1))) == 2
    assert int(phi(dot_product(sp), (1, 2), (2, 2))) == 0
    assert int(phi(diagonal_form(sp, [2, 2]), (0, 1), (0, 0))) == 2


def test_d_lambda_examples():
    fn = norm_form(space(3, 2))
    assert d_lambda(fn, 2, (1, 0), (0, 1)) == 3
    assert d_lambda(fn, 1, (1, 0), (0, 1)) == 0
    with pytest.raises(ZeroLabel):
        d_lambda(fn, 0, (1, 0), (0, 1))


def test_degenerate_and_mismatched_forms_rejected():
    sp = space(3, 2)
    with pytest.raises(DegenerateForm):
        bilinear_form(sp, [[1, 1], [1, 1]])
    with pytest.raises(DimensionMismatch):
        bilinear_form(sp, np.eye(3, dtype=int))


def test_parse_form_grammar():
    sp = space(9, 3)
    assert parse_form("bilinear:dot", sp).kind == "bilinear"
    fn = parse_form("quadratic:diag=1,1,a", sp)
    assert int(fn.matrix[2, 2]) == sp.field.nonsquare
    assert parse_form("quadratic:canonical", sp).describe() == "quadratic:canonical"
    m = parse_form("bilinear:matrix=[[1,2,0],[0,1,0],[0,0,1]]", sp)
    assert not m.symmetric
    with pytest.raises(FormSpecError):
        parse_form("quadratic:diag=1,1,0", sp)
    with pytest.raises(FormSpecError):
        parse_form("cubic:dot", sp)


@pytest.mark.parametrize("spec", ["bilinear:dot", "bilinear:matrix=[[1,2],[0,1]]", "quadratic:norm",
                                  "quadratic:matrix=[[1,1],[1,2]]", "quadratic:canonical"])
@pytest.mark.parametrize("q", [3, 9])
def test_values_match_oracle(spec, q):
    sp = space(q, 2)
    fn = parse_form(spec, sp)
    table = phi_table(fn, naive_field_for(sp.field))
    idx = sp.all()
    got = fn.values(idx[:, None], idx[None, :])
    for (x, y), v in table.items():
        assert got[x, y] == v


def _gl2(q):
    for a, b, c, d in itertools.product(range(q), repeat=4):
        if (a * d - b * c) % q:
            yield ((a, b), (c, d))


def _equivalent_canonical(diag, q):
    """Brute force: the set of a with x^2 + a y^2 isometric to diag over the prime field F_q."""
    out = set()
    for a in range(1, q):
        for P in _gl2(q):
            ok = all(
                (diag[0] * (P[0][0] * x + P[0][1] * y) ** 2 + diag[1] * (P[1][0] * x + P[1][1] * y) ** 2 - (x * x + a * y * y)) % q == 0
                for x in range(q) for y in range(q))
            if ok:
                out.add(a)
                break
    return out


@pytest.mark.parametrize("diag,expected", [((1, 1), 1), ((2, 2), 1), ((1, 2), 2)])
def test_classification_examples(diag, expected):
    fn = diagonal_form(space(3, 2), list(diag))
    a, P = classify(fn)
    assert a == expected
    assert expected in _equivalent_canonical(diag, 3)
    # P really carries the canonical form to fn: Q(P x) = x1^2 + a x2^2
    sp = fn.space
    F = sp.field
    for x in sp.all():
        c = sp.coords(x)
        want = F.add(F.mul(c[0], c[0]), F.mul(a, F.mul(c[1], c[1])))
        assert fn.Q(sp.matvec(P, x)) == want


def test_sphere_examples():
    fn = norm_form(space(3, 2))
    S = sphere(fn, 1)
    pts = {tuple(int(v) for v in fn.space.coords(i)) for i in S.indices()}
    assert pts == {(0, 1), (0, 2), (1, 0), (2, 0)}
    # x^2+y^2+z^2 = 1 over F_3: 9 + 3 eta(-1) = 6 points (enumerated below)
    fn3 = norm_form(space(3, 3))
    assert sphere(fn3, 1).size == 6
    assert sum(1 for v in itertools.product(range(3), repeat=3) if sum(c * c for c in v) % 3 == 1) == 6


def _classical_sphere_size(F, d, t, det):
    """|{Q = t}| for a nondegenerate Q with determinant det (the standard count over F_q)."""
    q = F.q
    minus_one = int(F.neg_table[1])
    sign = 1 if (d // 2) % 2 == 0 else minus_one  # (-1)^floor(d/2)
    if d % 2:
        return q ** (d - 1) + q ** ((d - 1) // 2) * int(F.eta_table[F.mul(sign, F.mul(t, det))])
    return q ** (d - 1) - q ** ((d - 2) // 2) * int(F.eta_table[F.mul(sign, det)])


@pytest.mark.parametrize("q,d", [(3, 2), (3, 3), (5, 2), (5, 3), (7, 2), (9, 2), (9, 3), (3, 4), (5, 4), (25, 2)])
@pytest.mark.parametrize("which", ["norm", "canonical"])
def test_sphere_sizes_match_classical_count(q, d, which):
    sp = space(q, d)
    fn = parse_form(f"quadratic:{which}", sp)
    det = 1 if which == "norm" else sp.field.nonsquare
    sizes = sphere_sizes(fn)
    for t in range(1, q):
        assert sizes[t] == _classical_sphere_size(sp.field, d, t, det)
    assert sizes.sum() == q**d


def test_sphere_fourier_example():
    fn = norm_form(space(3, 2))
    assert abs(sphere_fourier(fn, 1, (1, 0)) - 1 / 9) < 1e-12
    assert abs(sphere_fourier(fn, 1, (0, 0)) - 4 / 9) < 1e-12


@pytest.mark.parametrize("q,d", [(3, 2), (5, 2), (9, 2), (3, 3)])
def test_sphere_fourier_all_matches_direct_sum(q, d):
    sp = space(q, d)
    fn = norm_form(sp)
    N = naive_field_for(sp.field)
    ns = NaiveSpace(N, d)
    for t in (1, sp.field.nonsquare):
        table = sphere_fourier_all(fn, t)
        pts = [ns.vec(i) for i in sphere(fn, t).indices()]
        for m in range(sp.size):
            mv = ns.vec(m)
            direct = 0
            for x in pts:
                acc = 0
                for a, b in zip(x, mv):
                    acc = N.add(acc, N.mul(a, b))
                direct += N.chi(acc)
            assert abs(table[m] - direct) < 1e-9
