"""Explicit centred isometries and the classification of spaces whose
centred isometries are all linear."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .geometry import Domain, decompose_sphere
from .isotree import (
    IsometryTree,
    IsoTreeError,
    LinearityCertificate,
    NEGATION_LEAF,
    SphereAction,
    build_sphere_action,
    canonical,
    dilation_transport,
    factor_isometry,
    verify_isometry,
)
from .spaces import Point, Space, parse_rational

ALL_LINEAR = "AllCentredIsometriesLinear"
NONLINEAR = "NonlinearWitness"
ZERO_SPACE = "ZeroSpace"


class ConstructionError(ValueError):
    pass


def _sphere(space: Space, r):
    r = parse_rational(r)
    dec = decompose_sphere(space, r)
    if dec.empty:
        raise ConstructionError(f"S({r}) is empty")
    return r, dec


def sphere_flip(space: Space, r) -> IsometryTree:
    """x -> -x on S(r), identity elsewhere."""
    r, dec = _sphere(space, r)
    reps = dec.representatives
    negate = IsometryTree((), NEGATION_LEAF)
    sigma, posts = [], []
    for rep in reps:
        m = space.neg(rep)
        j = dec.index_of(m)
        sigma.append(j)
        posts.append(space.sub(m, reps[j]))
    action = build_sphere_action(space, r, sigma, [negate] * len(reps), posts)
    return canonical(space, IsometryTree((action,)))


def sphere_translate(space: Space, r, x0: Point) -> IsometryTree:
    """x -> x + x0 on S(r), identity elsewhere; needs ||x0|| < r."""
    r, dec = _sphere(space, r)
    if space.norm(x0) >= r:
        raise ConstructionError(f"translation needs ||x0|| < {r}, got {space.norm(x0)}")
    n = len(dec)
    action = build_sphere_action(space, r, range(n), posts=[x0] * n)
    return canonical(space, IsometryTree((action,)))


def transitivity_witness(space: Space, x: Point, y: Point) -> IsometryTree:
    """A centred isometry sending x to y (both nonzero, same norm)."""
    r = space.norm(x)
    if r == 0 or space.norm(y) == 0:
        raise ConstructionError("points must be nonzero")
    if space.norm(y) != r:
        raise ConstructionError(f"norms differ: {r} vs {space.norm(y)}")
    dec = decompose_sphere(space, r)
    n = len(dec)
    i, j = dec.index_of(x), dec.index_of(y)
    sigma = list(range(n))
    posts: list = [None] * n
    if i == j:
        posts[i] = space.sub(y, x)
    else:
        ri, rj = dec.classes[i].representative, dec.classes[j].representative
        sigma[i], sigma[j] = j, i
        posts[i] = space.sub(space.sub(y, rj), space.sub(x, ri))
        posts[j] = space.neg(posts[i])
    action = build_sphere_action(space, r, sigma, posts=posts)
    return canonical(space, IsometryTree((action,)))


# -- classification -------------------------------------------------------------


@dataclass(frozen=True)
class ClassificationResult:
    verdict: str
    tree: IsometryTree | None = None
    certificate: LinearityCertificate | None = None
    case: str = ""
    domain: Domain | None = None

    @property
    def all_linear(self) -> bool:
        return self.verdict != NONLINEAR


def verification_domain(space: Space, depth: int = 3) -> Domain:
    """Full point set for finite spaces; a few spheres around the weights for Q_p."""
    if space.is_finite:
        return Domain.full(space)
    p = space.p
    return Domain.norm_range(space, min(space.weights) / p, max(space.weights) * p, depth)


def _table_tree(space: Space, table: Mapping[Point, Point]) -> IsometryTree:
    def f(x):
        return table.get(x, x)
    return canonical(space, factor_isometry(space, f, Domain.full(space)))


def _swap_tree(space: Space, a: Point, b: Point) -> IsometryTree:
    return _table_tree(space, {a: b, b: a})


def _embed(space: Space, coords: list[int], sub: Point) -> Point:
    x = list(space.zero())
    for i, c in zip(coords, sub):
        x[i] = c
    return tuple(x)


def _trivial_swap(space: Space, pts: list[Point]):
    """Swap x1 + x2 with a fourth nonzero point; pts lists a trivially normed set."""
    nonzero = [x for x in pts if not space.is_zero(x)]
    x1 = nonzero[0]
    for x2 in nonzero[1:]:
        x3 = space.add(x1, x2)
        if not space.is_zero(x3) and x3 not in (x1, x2):
            break
    else:
        return None
    x4 = next(x for x in nonzero if x not in (x1, x2, x3))
    return _swap_tree(space, x3, x4), LinearityCertificate("additive", x1, x2)


def _unit_permutation(space: Space, coord: int):
    """x <-> x^2 on the units of an F_4 coordinate."""
    f = space.field
    g = f.element(2)
    e = _embed(space, [coord], [f.one])
    a, b = space.scale(g, e), space.scale(g * g, e)
    return _swap_tree(space, a, b), LinearityCertificate("homogeneous", e, scalar=g)


def classify(space: Space | None, depth: int = 3) -> ClassificationResult:
    """Decide whether every centred isometry of the space is linear.

    When not, a nonlinear centred isometry is built and checked, together
    with a pair (x, y) or (lambda, x) on which linearity fails.
    """
    if space is None:
        return ClassificationResult(ZERO_SPACE, case="zero")
    result = _classify(space)
    if result.verdict != NONLINEAR:
        return result
    dom = verification_domain(space, depth)
    res = verify_isometry(space, result.tree, dom)
    if not res:
        raise IsoTreeError(f"witness for case {result.case} failed verification: {res}")
    if not result.certificate.holds(space, result.tree):
        raise IsoTreeError(f"certificate for case {result.case} does not hold")
    return ClassificationResult(result.verdict, result.tree, result.certificate,
                                result.case, dom)


def _classify(space: Space) -> ClassificationResult:
    f = space.field
    if space.is_finite:
        values = sorted(set(space.weights))
    else:
        w = min(space.weights)
        values = [w / space.p, w, w * space.p]

    if len(values) == 1:
        if f.q ** space.dim > 4:
            tree, cert = _trivial_swap(space, space.points())
            return ClassificationResult(NONLINEAR, tree, cert, "a")
        if f.q == 4:
            tree, cert = _unit_permutation(space, 0)
            return ClassificationResult(NONLINEAR, tree, cert, "a")
        return ClassificationResult(ALL_LINEAR, case="a")

    if len(values) >= 3:
        r1, r2, r3 = values[0], values[len(values) // 2], values[-1]
        x0 = decompose_sphere(space, r1).representatives[0]
        x1 = decompose_sphere(space, r2).representatives[0]
        x2 = decompose_sphere(space, r3).representatives[0]
        tree = sphere_translate(space, r2, x0)
        return ClassificationResult(NONLINEAR, tree, LinearityCertificate("additive", x1, x2), "b")

    r1, r2 = values
    x1 = decompose_sphere(space, r1).representatives[0]
    x2 = decompose_sphere(space, r2).representatives[0]
    if f.characteristic != 2:
        tree = sphere_flip(space, r1)
        return ClassificationResult(NONLINEAR, tree, LinearityCertificate("additive", x1, x2), "c")

    lower = [i for i, w in enumerate(space.weights) if w == r1]
    upper = [i for i, w in enumerate(space.weights) if w == r2]
    k = len(lower)
    if f.q ** k > 4:
        pts = [x for x in space.points() if all(x[i].is_zero() for i in upper)]
        tree, cert = _trivial_swap(space, pts)
        return ClassificationResult(NONLINEAR, tree, cert, "d")
    if f.q == 4:
        tree, cert = _unit_permutation(space, lower[0])
        return ClassificationResult(NONLINEAR, tree, cert, "d")
    if k == 2:
        # coordinate swap on the lower F_2^2, identity on the upper part
        def tau(x):
            y = list(x)
            y[lower[0]], y[lower[1]] = x[lower[1]], x[lower[0]]
            return tuple(y)
        table = {x: tau(x) for x in space.points()
                 if all(x[i].is_zero() for i in upper)}
        u = _embed(space, [lower[0]], [f.one])
        return ClassificationResult(NONLINEAR, _table_tree(space, table),
                                    LinearityCertificate("additive", u, x2), "d")
    if len(upper) >= 2:
        e = _embed(space, lower, [f.one])
        z = _embed(space, [upper[0]], [f.one])
        z2 = _embed(space, [upper[1]], [f.one])
        tree = _swap_tree(space, z, space.add(z, e))
        return ClassificationResult(NONLINEAR, tree, LinearityCertificate("additive", z, z2), "d")
    return ClassificationResult(ALL_LINEAR, case="d")


# -- self-similarity --------------------------------------------------------------


def interleave(n: int) -> int:
    """Bijection Z -> N: 0 -> 0, n -> 2n, -n -> 2n - 1 (n >= 1)."""
    return 2 * n if n >= 0 else -2 * n - 1


def deinterleave(k: int) -> int:
    if k < 0:
        raise ValueError("k must be non-negative")
    return k // 2 if k % 2 == 0 else -(k + 1) // 2


def _check_unit_space(space: Space) -> int:
    p = space.p
    if p is None:
        raise ConstructionError("the correspondence needs a p-adic space")
    if set(space.weights) != {Fraction(1)}:
        raise ConstructionError("the correspondence needs weights all equal to 1")
    return p


def fold_group_correspondence(space: Space, family: Mapping[int, SphereAction]) -> IsometryTree:
    """Pack actions on S(p^n), n in Z, into one isometry of the unit ball.

    The action on S(p^n) is moved by a dilation onto S(p^-k) with k the
    interleaved index of n.
    """
    p = _check_unit_space(space)
    f = space.field
    actions = []
    for n, action in sorted(family.items()):
        if action.radius != Fraction(p) ** n:
            raise ConstructionError(f"action at exponent {n} has radius {action.radius}")
        k = interleave(n)
        actions.append(dilation_transport(space, action, f.element(k + n, 1)))
    return IsometryTree(tuple(actions))


def unfold_group_correspondence(space: Space, tree: IsometryTree) -> dict[int, SphereAction]:
    p = _check_unit_space(space)
    f = space.field
    out = {}
    for action in tree.spheres:
        k = -_exponent(action.radius, p)
        if k < 0:
            raise ConstructionError(f"radius {action.radius} is outside the unit ball")
        n = deinterleave(k)
        out[n] = dilation_transport(space, action, f.element(-(k + n), 1))
    return out


def _exponent(r: Fraction, p: int) -> int:
    e = 0
    while r > 1:
        if r.numerator % p:
            raise ConstructionError(f"{r} is not a power of {p}")
        r /= p
        e += 1
    while r < 1:
        if r.denominator % p:
            raise ConstructionError(f"{r} is not a power of {p}")
        r *= p
        e -= 1
    if r != 1:
        raise ConstructionError(f"{r} is not a power of {p}")
    return e

