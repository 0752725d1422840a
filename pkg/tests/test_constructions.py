import itertools
import random
from fractions import Fraction

import pytest

from conftest import finite, padic
from ultraiso.constructions import (
    ALL_LINEAR,
    NONLINEAR,
    ZERO_SPACE,
    ConstructionError,
    classify,
    deinterleave,
    fold_group_correspondence,
    interleave,
    sphere_flip,
    sphere_translate,
    transitivity_witness,
    unfold_group_correspondence,
)
from ultraiso.geometry import Domain
from ultraiso.isotree import apply, is_affine, is_linear, random_tree, verify_isometry
from ultraiso.oracle import all_centred_isometries_linear


def test_flip_on_f3_13_is_nonlinear(f3_13):
    t = sphere_flip(f3_13, 1)
    dom = Domain.full(f3_13)
    assert verify_isometry(f3_13, t, dom)
    x1, x2 = f3_13.point(1, 0), f3_13.point(0, 1)
    f = lambda x: apply(f3_13, t, x)  # noqa: E731
    assert f(f3_13.add(x1, x2)) == f3_13.add(x1, x2)
    assert f(x1) == f3_13.neg(x1)
    assert not is_linear(f3_13, t, dom)


def test_flip_is_identity_in_characteristic_two():
    for s in (finite(2, 1, 2), finite(4, 1), finite(2, 1, 1)):
        for r in s.value_set():
            assert sphere_flip(s, r).is_identity


def test_flip_q3(q3sq):
    t = sphere_flip(q3sq, 1)
    dom = Domain.full(q3sq, 3)
    assert verify_isometry(q3sq, t, dom)
    for x in dom.points[::11]:
        expect = q3sq.neg(x) if q3sq.norm(x) == 1 else x
        assert apply(q3sq, t, x) == expect


def test_flip_rejects_empty_sphere():
    with pytest.raises(ConstructionError):
        sphere_flip(finite(2, 1, 2), 3)


def test_translate_examples(f3_13, q3sq):
    assert sphere_translate(f3_13, 3, f3_13.zero()).is_identity
    t = sphere_translate(f3_13, 3, f3_13.point(1, 0))
    assert verify_isometry(f3_13, t, Domain.full(f3_13))
    assert not is_affine(f3_13, t, Domain.full(f3_13))
    tq = sphere_translate(q3sq, 1, q3sq.point(3, 0))
    assert verify_isometry(q3sq, tq, Domain.full(q3sq, 3))
    assert apply(q3sq, tq, q3sq.point(1, 1)) == q3sq.point(4, 1)
    with pytest.raises(ConstructionError):
        sphere_translate(f3_13, 1, f3_13.point(1, 0))


def test_transitivity_examples(q3sq):
    s = finite(3, 1)
    assert transitivity_witness(s, s.point(1), s.point(1)).is_identity
    t = transitivity_witness(s, s.point(1), s.point(2))
    assert apply(s, t, s.point(1)) == s.point(2)
    assert verify_isometry(s, t, Domain.full(s))
    x, y = q3sq.point(1, 0), q3sq.point(0, 1)
    tq = transitivity_witness(q3sq, x, y)
    assert apply(q3sq, tq, x) == y
    assert verify_isometry(q3sq, tq, Domain.full(q3sq, 3))
    with pytest.raises(ConstructionError):
        transitivity_witness(q3sq, x, q3sq.point(3, 0))
    with pytest.raises(ConstructionError):
        transitivity_witness(q3sq, q3sq.zero(), q3sq.zero())


def test_transitivity_exhaustive_small():
    s = finite(3, 1, 3)
    dom = Domain.full(s)
    for x, y in itertools.product(s.points(), repeat=2):
        if s.norm(x) == s.norm(y) != 0:
            t = transitivity_witness(s, x, y)
            assert apply(s, t, x) == y
            assert verify_isometry(s, t, dom)


@pytest.mark.parametrize("q,weights,verdict", [
    (2, (1,), ALL_LINEAR),
    (4, (1,), NONLINEAR),
    (2, (1, 2), ALL_LINEAR),
    (5, (1,), NONLINEAR),
    (3, (1,), ALL_LINEAR),
    (4, (1, 2), NONLINEAR),
    (2, (1, 1, 2), NONLINEAR),
    (2, (1, 2, 2), NONLINEAR),
    (2, (1, 1, 1, 2), NONLINEAR),
    (2, (1, 2, 3), NONLINEAR),
])
def test_classify_examples(q, weights, verdict):
    s = finite(q, *weights)
    res = classify(s)
    assert res.verdict == verdict
    assert res.all_linear == all_centred_isometries_linear(s)
    if verdict == NONLINEAR:
        assert verify_isometry(s, res.tree, Domain.full(s))
        f = lambda x: apply(s, res.tree, x)  # noqa: E731
        lhs, rhs = res.certificate.sides(s, f)
        assert lhs != rhs


def test_classify_f4_uses_unit_permutation():
    s = finite(4, 1)
    res = classify(s)
    f4 = s.field
    assert res.certificate.kind == "homogeneous"
    assert apply(s, res.tree, (f4("x"),)) == (f4("x^2"),)
    assert apply(s, res.tree, (f4.one,)) == (f4.one,)


def test_classify_padic_and_zero(q3sq):
    res = classify(q3sq)
    assert res.verdict == NONLINEAR and res.case == "b"
    assert classify(None).verdict == ZERO_SPACE


def test_interleave_bijection():
    ns = range(-50, 51)
    ks = [interleave(n) for n in ns]
    assert sorted(ks) == list(range(101))
    assert all(deinterleave(interleave(n)) == n for n in ns)
    assert interleave(0) == 0 and interleave(3) == 6 and interleave(-3) == 5


def wide_q3():
    return padic(dim=1, window=(-20, 20))


def test_fold_identity_family():
    s = wide_q3()
    assert fold_group_correspondence(s, {}).is_identity
    assert unfold_group_correspondence(s, fold_group_correspondence(s, {})) == {}


def test_fold_flip_and_translate_round_trip():
    s = wide_q3()
    flip = sphere_flip(s, 1).spheres[0]
    tr = sphere_translate(s, 3, s.point(1)).spheres[0]
    family = {0: flip, 1: tr}
    packed = fold_group_correspondence(s, family)
    assert [a.radius for a in packed.spheres] == [Fraction(1, 9), Fraction(1)]
    assert unfold_group_correspondence(s, packed) == family
    # the packed map is still an isometry of the unit ball
    dom = Domain.norm_range(s, Fraction(1, 27), 1, 3)
    assert verify_isometry(s, packed, dom)


def test_fold_random_round_trip():
    s = wide_q3()
    rng = random.Random(7)
    family = {n: random_tree(s, rng, 2, radii=[Fraction(3) ** n]).spheres[0] for n in range(-3, 4)}
    assert unfold_group_correspondence(s, fold_group_correspondence(s, family)) == family


def test_fold_needs_unit_weights():
    with pytest.raises(ConstructionError):
        fold_group_correspondence(finite(3, 1), {})
    with pytest.raises(ConstructionError):
        fold_group_correspondence(padic(dim=1, weights=[2]), {})


@pytest.mark.parametrize("q,weights", [(2, (1, 2)), (3, (1, 3)), (3, (1, 2)), (4, (1,)), (5, (1,))])
def test_constructions_appear_in_oracle_list(q, weights):
    from ultraiso.oracle import OracleSpace, enumerate_centred_isometries

    s = finite(q, *weights)
    osp = OracleSpace.of(s)
    found = {m.images for m in enumerate_centred_isometries(s)}
    idx = lambda x: osp.index[tuple(c.index for c in x)]  # noqa: E731

    def images(t):
        out = [0] * len(osp.points)
        for x in s.points():
            out[idx(x)] = idx(apply(s, t, x))
        return tuple(out)

    trees = [sphere_flip(s, r) for r in s.value_set()]
    for r in s.value_set():
        for x0 in s.points():
            if s.norm(x0) < r:
                trees.append(sphere_translate(s, r, x0))
    pts = [x for x in s.points() if not s.is_zero(x)]
    trees += [transitivity_witness(s, x, y) for x in pts for y in pts if s.norm(x) == s.norm(y)]
    res = classify(s)
    if res.tree is not None:
        trees.append(res.tree)
    assert all(images(t) in found for t in trees)
