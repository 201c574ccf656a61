import numpy as np
import pytest

from ffdist.field import field_of_order
from ffdist.forms import make_space, parse_form
from ffdist.sets import SetSpecError, make_set


def fn_of(q, d, spec="quadratic:norm"):
    F = field_of_order(q)
    return parse_form(spec, make_space(F.p, F.k, d))


def test_random_density_exact_size_and_seeded():
    fn = fn_of(5, 2)
    A = make_set("random:1/2", fn, seed=3)
    assert A.size == 12
    assert A == make_set("random:1/2", fn, seed=3)
    assert A != make_set("random:1/2", fn, seed=4)
    assert A.descriptor == "random:1/2"


def test_full_empty_sphere():
    fn = fn_of(3, 2)
    assert make_set("full", fn).size == 9
    assert make_set("empty", fn).size == 0
    assert make_set("sphere:1", fn).size == 4
    with pytest.raises(SetSpecError):
        make_set("sphere:1", fn_of(3, 2, "bilinear:dot"))


def test_affine_subspaces():
    fn = fn_of(5, 3)
    for k in range(4):
        assert make_set(f"affine:{k}", fn, seed=k).size == 5**k
    line = make_set("affine:basis=(1,2,0);offset=(0,0,1)", fn)
    sp = fn.space
    expected = {sp.vector(c % 5, 2 * c % 5, 1) for c in range(5)}
    assert set(line.indices().tolist()) == expected


def test_product_explicit_and_combinators():
    fn = fn_of(3, 2)
    P = make_set("product:0,1*2", fn)
    sp = fn.space
    assert set(P.indices().tolist()) == {sp.vector(0, 2), sp.vector(1, 2)}
    E = make_set("explicit:(0,0),(1,2)", fn)
    assert set(E.indices().tolist()) == {0, sp.vector(1, 2)}
    assert make_set("explicit:0,4,8", fn).size == 3
    U = make_set("union(product:0,1*2|explicit:(0,0))", fn)
    assert U.size == 3
    assert make_set("intersect(product:0,1*2|explicit:(1,2))", fn).size == 1
    assert make_set("complement(explicit:0)", fn).size == 8


def test_nested_random_children_use_distinct_streams():
    fn = fn_of(7, 2)
    U = make_set("union(random:1/7|random:1/7)", fn, seed=0)
    a = make_set("random:1/7", fn, seed=0)
    assert 7 <= U.size <= 14
    assert U != a or U.size == 7


@pytest.mark.parametrize("bad", ["random:2", "product:0*0*0", "explicit:(0,5)", "nonsense", "union(full|",
                                 "explicit:99"])
def test_bad_descriptors(bad):
    with pytest.raises(SetSpecError):
        make_set(bad, fn_of(3, 2))
