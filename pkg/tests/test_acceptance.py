"""Acceptance criteria 1-9.  Each test records one pass/fail line, printed in
the terminal summary (and to stdout with ``-s``)."""

import itertools
import json
import random
import subprocess
import sys
from fractions import Fraction

import conftest
from conftest import finite, padic
from ultraiso.constructions import ALL_LINEAR, NONLINEAR, classify, transitivity_witness
from ultraiso.geometry import Domain, decompose_sphere, isosceles_holds
from ultraiso.isotree import (
    IsometryTree,
    apply,
    build_sphere_action,
    canonical,
    factor_isometry,
    random_tree,
    verify_isometry,
)
from ultraiso.oracle import (
    DEFAULT_CAP,
    OracleSpace,
    census,
    check_isosceles_exhaustive,
    enumerate_centred_isometries,
    is_isometry,
    is_linear,
    iter_centred_isometries,
    sample_centred_isometries,
    all_centred_isometries_linear,
)
from ultraiso.scalars import PadicField, abs_value
from ultraiso.spaces import Space
from ultraiso.tingley import (
    EXTENDED,
    OBSTRUCTED,
    RADIUS_MISMATCH,
    VALUE_SET_MISMATCH,
    SphereIsometrySpec,
    extend_sphere_isometry,
)

FIELDS = (2, 3, 4, 5)
WEIGHTS = {1: [(1,), (2,), (3,)], 2: [(1, 2), (1, 3), (2, 3), (1, 1)]}
GRID = [(q, w) for q in FIELDS for dim in (1, 2) for w in WEIGHTS[dim]]


def grid_spaces():
    return [(q, w, finite(q, *w)) for q, w in GRID]


def record(n, title, ok, detail=""):
    line = f"criterion {n} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def label(q, w):
    return f"F{q}^{len(w)}{w}"


# 1 ---------------------------------------------------------------------------


def _field_violations(f, pairs):
    bad = 0
    for a, b in pairs:
        bad += (abs_value(a) == 0) != a.is_zero()
        bad += abs_value(a * b) != abs_value(a) * abs_value(b)
        bad += abs_value(a + b) > max(abs_value(a), abs_value(b))
    return bad


def _norm_violations(space, triples):
    bad = 0
    for lam, x, y in triples:
        bad += (space.norm(x) == 0) != space.is_zero(x)
        bad += space.norm(space.scale(lam, x)) != abs_value(lam) * space.norm(x)
        bad += space.norm(space.add(x, y)) > max(space.norm(x), space.norm(y))
    return bad


def test_criterion_1_axioms():
    bad = checked = 0
    for q, w, s in grid_spaces():
        els = s.field.elements()
        pairs = list(itertools.product(els, repeat=2))
        bad += _field_violations(s.field, pairs)
        pts = s.points()
        triples = [(lam, x, y) for lam in els for x in pts for y in pts]
        bad += _norm_violations(s, triples)
        checked += len(pairs) + len(triples)
    rng = random.Random(1)
    samples = 10 ** 4
    for p, weights in ((3, (1, 3)), (5, (1, 1))):
        f = PadicField(p, 4, (-6, 6))
        s = Space(f, weights)
        # valuations kept small enough that products and sums stay in the window
        el = lambda: f.random_element(rng, valuations=(-2, 2))  # noqa: E731
        pairs = [(el(), el()) for _ in range(samples)]
        triples = [(el(), (el(), el()), (el(), el())) for _ in range(samples)]
        bad += _field_violations(f, pairs) + _norm_violations(s, triples)
        checked += 2 * samples
    record(1, "field axioms i-iii and norm axioms iv-vi", bad == 0,
           f"{checked} cases, {bad} violations")


# 2 ---------------------------------------------------------------------------


def test_criterion_2_isosceles():
    bad = triples = 0
    for q, w, s in grid_spaces():
        pts = s.points()
        for x, y, z in itertools.product(pts, repeat=3):
            bad += not isosceles_holds(s, x, y, z)
        triples += len(pts) ** 3
        rep = check_isosceles_exhaustive(s)
        bad += not rep.passed
    rng = random.Random(2)
    strict = 0
    for p in (3, 5):
        s = padic(p=p)
        f = s.field
        el = lambda lo, hi: f.random_element(rng, valuations=(lo, hi))  # noqa: E731
        for _ in range(5000):
            z = (el(-2, 2), el(-2, 2))
            # offsets at random scales so that the strict case occurs often
            x = s.add(z, (el(-1, 3), el(-1, 3)))
            y = s.add(z, (el(-3, 1), el(-3, 1)))
            strict += s.dist(x, z) < s.dist(y, z)
            bad += not isosceles_holds(s, x, y, z)
    record(2, "strict triangle inequality forces isosceles triangles", bad == 0,
           f"{triples} finite triples, 10000 p-adic triples ({strict} strict), {bad} violations")


# 3 ---------------------------------------------------------------------------


def test_criterion_3_tree_soundness(q3sq, f3_13):
    failures = []
    points = {}
    for name, s in (("Q3^2", q3sq), ("F3^2(1,3)", f3_13)):
        dom = Domain.full(s, 3)
        points[name] = len(dom)
        # spheres away from the window edge, so sums near it cannot carry out
        radii = s.value_set() if s.is_finite else s.value_set(Fraction(1, 27), 27)
        rng = random.Random(3)
        for k in range(100):
            t = random_tree(s, rng, rng.randint(1, 3), radii=radii)
            res = verify_isometry(s, t, dom)
            if not res:
                failures.append((name, k, res.reason))
    record(3, "random trees verify on full domains", not failures,
           f"100 trees on Q3^2 ({points['Q3^2']} points), 100 on F3^2(1,3); "
           f"{len(failures)} failures")


# 4 ---------------------------------------------------------------------------


LAZY, SAMPLED = 500, 1000


def _maps_for(s, rng):
    osp = OracleSpace.of(s)
    if osp.candidate_bound() <= DEFAULT_CAP:
        return enumerate_centred_isometries(s), True
    return (list(itertools.islice(iter_centred_isometries(s), LAZY))
            + sample_centred_isometries(s, SAMPLED, rng)), False


def test_criterion_4_factor_round_trip():
    rng = random.Random(4)
    bad = total = 0
    partial = []
    for q, w, s in grid_spaces():
        dom = Domain.full(s)
        maps, exhaustive = _maps_for(s, rng)
        if not exhaustive:
            partial.append(label(q, w))
        for m in maps:
            table = m.as_table(s)
            t1 = canonical(s, factor_isometry(s, table.__getitem__, dom))
            t2 = canonical(s, factor_isometry(s, table.__getitem__, dom, check=False))
            ok = t1 == t2 and all(apply(s, t1, x) == y for x, y in table.items())
            bad += not ok
            total += 1
    record(4, "oracle isometries round-trip through factor", bad == 0,
           f"{total} maps, {bad} failures; exhaustive except "
           f"{LAZY} first + {SAMPLED} sampled maps on {', '.join(partial)}")


# 5 ---------------------------------------------------------------------------


def test_criterion_5_oracle_counts():
    expected = [
        ((2, (1,)), 1, None),
        ((3, (1,)), 2, None),
        ((2, (1, 2)), 2, None),
        ((2, (1, 1)), 6, 6),
        ((4, (1,)), 6, 3),
        ((3, (1, 1)), 40320, None),
    ]
    got = []
    ok = True
    for (q, w), total, linear in expected:
        c = census(finite(q, *w))
        good = not c.sampled and c.total == total and (linear is None or c.linear == linear)
        ok &= good
        got.append(f"{label(q, w)}={c.total}" + (f"/{c.linear} linear" if linear else ""))
    record(5, "exact oracle counts", ok, ", ".join(got))


# 6 ---------------------------------------------------------------------------


def _oracle_images(s, osp, tree):
    idx = lambda x: osp.index[tuple(c.index for c in x)]  # noqa: E731
    images = [0] * len(osp.points)
    for x in s.points():
        images[idx(x)] = idx(apply(s, tree, x))
    return images


def test_criterion_6_classification():
    mismatches, bad_witness = [], []
    all_linear = set()
    for q, w, s in grid_spaces():
        res = classify(s)
        truth = all_centred_isometries_linear(s)
        if res.all_linear != truth:
            mismatches.append(label(q, w))
        if res.verdict == ALL_LINEAR:
            all_linear.add((q, len(w), w))
            continue
        assert res.verdict == NONLINEAR
        # re-verify both in the package and in the independent oracle
        osp = OracleSpace.of(s)
        images = _oracle_images(s, osp, res.tree)
        lhs, rhs = res.certificate.sides(s, lambda x: apply(s, res.tree, x))
        if not (verify_isometry(s, res.tree, Domain.full(s)) and is_isometry(osp, images)
                and not is_linear(osp, images) and lhs != rhs):
            bad_witness.append(label(q, w))
    expected = ({(q, 1, w) for q in (2, 3) for w in WEIGHTS[1]}
                | {(2, 2, w) for w in WEIGHTS[2]})
    ok = not mismatches and not bad_witness and all_linear == expected
    record(6, "classify matches the oracle on the grid", ok,
           f"{len(GRID)} spaces, AllLinear = F2^1, F3^1 (all weights), F2^2 (all weights); "
           f"mismatches {mismatches}, bad witnesses {bad_witness}")


# 7 ---------------------------------------------------------------------------


def test_criterion_7_transitivity(q3sq):
    bad = pairs = 0
    for q, w, s in grid_spaces():
        dom = Domain.full(s)
        pts = [x for x in s.points() if not s.is_zero(x)]
        for x, y in itertools.product(pts, repeat=2):
            if s.norm(x) != s.norm(y):
                continue
            t = transitivity_witness(s, x, y)
            bad += not (apply(s, t, x) == y and verify_isometry(s, t, dom))
            pairs += 1
    rng = random.Random(7)
    radii = [Fraction(1, 3), Fraction(1), Fraction(3)]
    dom = Domain.norm_range(q3sq, Fraction(1, 27), 27, 3)
    for _ in range(200):
        r = rng.choice(radii)
        sphere = q3sq.sphere_points(r, dom.resolution(r))
        x, y = rng.choice(sphere), rng.choice(sphere)
        t = transitivity_witness(q3sq, x, y)
        bad += not (apply(q3sq, t, x) == y and verify_isometry(q3sq, t, dom))
    record(7, "transitivity witnesses map x to y and verify", bad == 0,
           f"{pairs} finite pairs, 200 Q3^2 pairs at depth 3, {bad} failures")


# 8 ---------------------------------------------------------------------------


def test_criterion_8_tingley():
    s = padic(precision=6, window=(-8, 8))
    rng = random.Random(8)
    dec = decompose_sphere(s, 1)
    failures = []
    for k in range(50):
        sigma = list(range(len(dec)))
        rng.shuffle(sigma)
        inner = random_tree(s, rng, 2, radii=[Fraction(1, 9), Fraction(1, 3)])
        children = [inner] * len(dec) if rng.random() < 0.5 else None
        action = build_sphere_action(s, 1, sigma, children)
        tree = IsometryTree((action,))
        tau = lambda x, t=tree: apply(s, t, x)  # noqa: E731
        spec = SphereIsometrySpec.from_callable(s, s, 1, 1, tau)
        res = extend_sphere_isometry(spec, m=2, depth=3)
        sphere, _ = spec.sphere_domains(3)
        ok = (res.verdict == EXTENDED and bool(res.verification)
              and min(res.domain.radii) == Fraction(1, 27) and max(res.domain.radii) == 9
              and all(res.extension(x) == tau(x) for x in sphere.points))
        if not ok:
            failures.append(k)
    X, Y, Z = finite(2, 1, 2), finite(2, 1, 3), finite(2, 2, 3)
    e = X.point(1, 0)
    value_sets = extend_sphere_isometry(SphereIsometrySpec.from_pairs(X, Y, 1, 1, [(e, e)]))
    radius = extend_sphere_isometry(SphereIsometrySpec.from_pairs(X, Z, 1, 2, [(e, e)]))
    obstructed = (value_sets.verdict == OBSTRUCTED
               and value_sets.obstruction.reason == VALUE_SET_MISMATCH
               and radius.verdict == OBSTRUCTED and radius.obstruction.reason == RADIUS_MISMATCH)
    record(8, "sphere isometries extend; counterexamples are obstructed",
           not failures and obstructed,
           f"50 extensions on norms 1/27..9, failures {failures}; "
           f"{value_sets.obstruction.reason}, {radius.obstruction.reason}")


# 9 ---------------------------------------------------------------------------


Q3SQ = {"field": {"kind": "padic", "p": 3, "precision": 4, "window": [-6, 6]}, "dim": 2,
        "weights": ["1", "1"]}
F3_13 = {"field": {"kind": "finite", "q": 3}, "dim": 2, "weights": ["1", "3"]}
F3_11 = {"field": {"kind": "finite", "q": 3}, "dim": 2, "weights": ["1", "1"]}
F2_12 = {"field": {"kind": "finite", "q": 2}, "dim": 2, "weights": ["1", "2"]}
F2_13 = {"field": {"kind": "finite", "q": 2}, "dim": 2, "weights": ["1", "3"]}


def _cli(*args):
    proc = subprocess.run([sys.executable, "-m", "ultraiso", *map(str, args), "--format", "json"],
                          capture_output=True)
    return proc.returncode, proc.stdout


def test_criterion_9_cli_determinism(tmp_path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return path

    q3, f313, f311 = write("q3.json", Q3SQ), write("f313.json", F3_13), write("f311.json", F3_11)
    _, out = _cli("iso", "random", "--space", f313, "--seed", 9)
    t = write("t.json", json.loads(out)["tree"])
    _, out = _cli("iso", "random", "--space", q3, "--seed", 9)
    tq = write("tq.json", json.loads(out)["tree"])
    ident = write("id.json", "identity")
    spec = write("spec.json", {"space": F2_12, "space2": F2_13, "radius": "1",
                               "pairs": [[[1, 0], [1, 0]]]})
    commands = [
        ("space", "describe", "--space", q3),
        ("geometry", "decompose", "--space", q3, "--radius", 1),
        ("iso", "apply", "--space", q3, "--iso", tq, "--point", "[1, 3]"),
        ("iso", "verify", "--space", q3, "--iso", tq),
        ("iso", "verify", "--space", q3, "--iso", ident),
        ("iso", "factor", "--space", f313, "--iso", t),
        ("iso", "compose", "--space", f313, "--iso", t, "--iso", t),
        ("iso", "invert", "--space", q3, "--iso", tq),
        ("iso", "random", "--space", q3, "--seed", 9),
        ("classify", "--space", f313),
        ("classify", "--space", q3),
        ("tingley", "extend", "--spec", spec),
        ("tingley", "check", "--space", write("a.json", F2_12), "--space2",
         write("b.json", F2_13), "--radius", 1),
        ("oracle", "census", "--space", f313),
        ("oracle", "census", "--space", f311, "--cap", 1000, "--seed", 9),
        ("oracle", "enumerate", "--space", f313),
    ]
    differing = []
    for cmd in commands:
        a, b = _cli(*cmd), _cli(*cmd)
        if a != b or a[0] == 2 or json.loads(a[1])["schema"] != "1":
            differing.append(" ".join(map(str, cmd[:2])))
    record(9, "CLI JSON output is byte-identical across runs", not differing,
           f"{len(commands)} invocations over all subcommands, differing {differing}")
