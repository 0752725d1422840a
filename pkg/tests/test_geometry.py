import itertools
import random
from fractions import Fraction

import pytest

from conftest import finite, padic
from ultraiso.geometry import (
    Ball,
    Domain,
    NotOnSphere,
    closed_ball_equals_open,
    decompose_sphere,
    find_isosceles_violation,
    isosceles_holds,
    same_class,
    ultrametric_signature,
)


def test_same_class_examples(q3sq):
    x = q3sq.point(1, 0)
    assert same_class(q3sq, x, q3sq.point(1, 3), 1)
    assert not same_class(q3sq, x, q3sq.point(0, 1), 1)
    assert same_class(q3sq, x, x, 1)
    with pytest.raises(NotOnSphere):
        same_class(q3sq, x, q3sq.point(3, 0), 1)


def test_decompose_examples(q3sq):
    assert len(decompose_sphere(q3sq, 1)) == 8
    s = finite(2, 1, 2)
    d = decompose_sphere(s, 1)
    assert d.representatives == [s.point(1, 0)]
    d3 = decompose_sphere(finite(3, 1), 1)
    assert [x[0].index for x in d3.representatives] == [1, 2]


def test_empty_sphere_is_a_result():
    assert decompose_sphere(finite(2, 1, 2), 3).empty


def test_closed_ball_examples(q3sq):
    x = q3sq.zero()
    assert closed_ball_equals_open(q3sq, x, 1, Fraction(1, 3))
    assert not closed_ball_equals_open(q3sq, x, 1, Fraction(1, 9))
    assert closed_ball_equals_open(finite(2, 1, 2), (0, 0), 2, 1)


def test_closed_ball_equals_open_pointwise(q3sq):
    # compare with membership on a concrete domain
    dom = Domain.full(q3sq, 3)
    for ro, rc in [(1, Fraction(1, 3)), (1, Fraction(1, 9)), (3, 1), (Fraction(1, 3), Fraction(1, 9))]:
        a = {x for x in dom.points if Ball(q3sq.zero(), Fraction(ro)).contains(q3sq, x)}
        b = {x for x in dom.points if Ball(q3sq.zero(), Fraction(rc), True).contains(q3sq, x)}
        assert (a == b) == closed_ball_equals_open(q3sq, q3sq.zero(), ro, rc)


@pytest.mark.parametrize("q,weights", [(2, (1, 2)), (3, (1, 3)), (4, (1,)), (5, (2, 3)), (3, (1, 1))])
def test_class_structure_finite(q, weights):
    s = finite(q, *weights)
    for r in s.value_set():
        dec = decompose_sphere(s, r)
        sphere = s.sphere_points(r)
        classes = {}
        for x in sphere:
            classes.setdefault(dec.index_of(x), []).append(x)
        assert len(classes) == len(dec)
        for i, members in classes.items():
            rep = dec.classes[i].representative
            assert rep == min(members, key=s.sort_key)
            assert all(s.dist(a, b) < r for a, b in itertools.combinations(members, 2))
        for a, b in itertools.combinations(dec.representatives, 2):
            assert s.dist(a, b) == r


def test_classes_coarsen(q3sq):
    dom = Domain.full(q3sq, 3)
    pts = [x for x in dom.points if q3sq.norm(x) == Fraction(1, 3)]
    rng = random.Random(2)
    for _ in range(300):
        x, y = rng.choice(pts), rng.choice(pts)
        if q3sq.dist(x, y) < Fraction(1, 3):
            assert q3sq.dist(x, y) < 1


def test_isosceles_exhaustive_small():
    s = finite(3, 1, 3)
    pts = s.points()
    assert find_isosceles_violation(s, itertools.product(pts, repeat=3)) is None
    x = pts[1]
    assert isosceles_holds(s, x, x, x)


def test_signature_detects_isometric_sets():
    s = finite(2, 1, 2)
    t = finite(2, 2, 3)
    assert ultrametric_signature(s, s.sphere_points(1)) == ultrametric_signature(t, t.sphere_points(2))
    assert ultrametric_signature(s, s.points()) != ultrametric_signature(t, t.points())


def test_domain_sizes_and_reduce(q3sq):
    dom = Domain.relative(q3sq, [1], depth=2)
    # S(1) modulo balls of radius 1/3: 8 classes times 9 points each
    assert len(dom) == 1 + 8 * 9
    x = q3sq.point(1, 30)
    assert dom.reduce(x) == q3sq.point(1, 3)
    full = Domain.full(padic(window=(-1, 1)), 2)
    # S(1/3) would need digit position 2, outside the window
    assert full.radii == [1, 3]
