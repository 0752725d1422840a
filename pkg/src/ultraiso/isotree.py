"""Tree-structured (fractal) representation of centred isometries.

An :class:`IsometryTree` describes a centred isometry of a ball B(0, R)
(R possibly infinite) sphere by sphere.  On a listed sphere S(r) it
permutes the open-ball classes of S(r) and, on each class, acts as

    z  ->  rep[target] + post + child(z - rep[source] - pre)

where ``child`` is again a tree, acting on B(0, r), and ``pre``/``post``
are translations of norm < r.  Spheres that are not listed are handled by
the tree's leaf map (identity unless stated otherwise).

Every such tree is an isometry: distinct classes of a sphere sit at
distance r and are sent to distinct classes, each class map is a
translate of an isometry, and maps that preserve norms and are isometric
on every sphere glue to an isometry of the ball.  Conversely
:func:`factor_isometry` recovers the tree of any centred isometry given on
a finite domain.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

from .geometry import Domain, decompose_sphere, relative_resolution
from .scalars import FieldElement, element_from_json
from .spaces import Point, Space, parse_rational

MapLike = Callable[[Point], Point]


class IsoTreeError(ValueError):
    pass


class DepthExhausted(IsoTreeError):
    """A non-identity branch lies beyond the depth bound."""


class NotCentred(IsoTreeError):
    pass


class NotIsometric(IsoTreeError):
    def __init__(self, result: VerifyResult):
        super().__init__(f"map is not an isometry: {result.reason}, witness {result.witness}")
        self.result = result


class SpaceMismatch(IsoTreeError):
    pass


# -- leaves --------------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    """Map applied on every sphere that a tree does not list."""

    kind: str = "identity"  # identity | negation | scalar | matrix
    scalar: FieldElement | None = None
    matrix: tuple | None = None  # rows of field elements

    def __call__(self, space: Space, x: Point) -> Point:
        if self.kind == "identity":
            return x
        if self.kind == "negation":
            return space.neg(x)
        if self.kind == "scalar":
            return space.scale(self.scalar, x)
        return _matvec(self.matrix, x)

    def inverse(self) -> Leaf:
        if self.kind == "scalar":
            return Leaf("scalar", scalar=self.scalar.inv())
        if self.kind == "matrix":
            return Leaf("matrix", matrix=matrix_inverse(self.matrix))
        return self

    def canonical(self, space: Space) -> Leaf:
        f = space.field
        if self.kind == "negation" and f.characteristic == 2:
            return IDENTITY_LEAF
        if self.kind == "scalar":
            if self.scalar == f.one:
                return IDENTITY_LEAF
            if self.scalar == -f.one:
                return IDENTITY_LEAF if f.characteristic == 2 else NEGATION_LEAF
        if self.kind == "matrix":
            n = len(self.matrix)
            if all(self.matrix[i][j] == (f.one if i == j else f.zero)
                   for i in range(n) for j in range(n)):
                return IDENTITY_LEAF
        return self

    def validate(self, space: Space, domain: Domain | None = None) -> None:
        if self.kind in ("identity", "negation"):
            return
        if self.kind == "scalar":
            if self.scalar is None or self.scalar.abs() != 1:
                raise IsoTreeError(f"scalar leaf needs |λ| = 1, got {self.scalar!r}")
            return
        if self.kind != "matrix":
            raise IsoTreeError(f"unknown leaf kind {self.kind!r}")
        m = self.matrix
        if m is None or len(m) != space.dim or any(len(row) != space.dim for row in m):
            raise IsoTreeError("matrix leaf has the wrong shape")
        if not is_norm_preserving(space, lambda x: _matvec(m, x), domain):
            raise IsoTreeError("matrix leaf does not preserve the norm")


IDENTITY_LEAF = Leaf("identity")
NEGATION_LEAF = Leaf("negation")


def _matvec(m, x: Point) -> Point:
    out = []
    for row in m:
        acc = row[0] * x[0]
        for a, c in zip(row[1:], x[1:]):
            acc = acc + a * c
        out.append(acc)
    return tuple(out)


def matrix_inverse(m) -> tuple:
    """Gauss-Jordan inverse over the field of the entries."""
    n = len(m)
    f = m[0][0].field
    a = [list(row) + [f.one if i == j else f.zero for j in range(n)]
         for i, row in enumerate(m)]
    for col in range(n):
        # largest |pivot| keeps p-adic cancellation small
        piv = max(range(col, n), key=lambda r: (a[r][col].abs(), -r))
        if a[piv][col].is_zero():
            raise IsoTreeError("matrix is singular")
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col].inv()
        a[col] = [inv * v for v in a[col]]
        for r in range(n):
            if r != col and not a[r][col].is_zero():
                k = a[r][col]
                a[r] = [v - k * w for v, w in zip(a[r], a[col])]
    return tuple(tuple(row[n:]) for row in a)


# -- tree types ----------------------------------------------------------------


def _nz(space_or_none, x: Point | None) -> Point | None:
    if x is None or all(c.is_zero() for c in x):
        return None
    return x


@dataclass(frozen=True)
class BallMap:
    """Isometry of the class ``source`` onto the class ``target``."""

    source: int
    target: int
    child: IsometryTree
    pre: Point | None = None
    post: Point | None = None

    def __post_init__(self):
        object.__setattr__(self, "pre", _nz(None, self.pre))
        object.__setattr__(self, "post", _nz(None, self.post))

    @property
    def is_identity(self) -> bool:
        return (self.source == self.target and self.child.is_identity
                and self.pre == self.post)


@dataclass(frozen=True)
class SphereAction:
    radius: Fraction
    maps: tuple[BallMap, ...]

    @property
    def sigma(self) -> tuple[int, ...]:
        return tuple(m.target for m in self.maps)

    @property
    def is_identity(self) -> bool:
        return all(m.is_identity for m in self.maps)

    @property
    def nesting(self) -> int:
        return 1 + max((m.child.nesting for m in self.maps), default=0)


@dataclass(frozen=True)
class IsometryTree:
    spheres: tuple[SphereAction, ...] = ()
    leaf: Leaf = IDENTITY_LEAF
    depth: int | None = field(default=None, compare=False)

    def __post_init__(self):
        spheres = tuple(sorted(self.spheres, key=lambda a: a.radius))
        radii = [a.radius for a in spheres]
        if len(set(radii)) != len(radii):
            raise IsoTreeError(f"duplicate sphere radii {radii}")
        object.__setattr__(self, "spheres", spheres)
        nest = self.nesting
        if self.depth is None:
            object.__setattr__(self, "depth", nest)
        elif nest > self.depth:
            raise DepthExhausted(
                f"tree needs nesting depth {nest} but its bound is {self.depth}")

    @property
    def nesting(self) -> int:
        return max((a.nesting for a in self.spheres), default=0)

    @property
    def is_identity(self) -> bool:
        return not self.spheres and self.leaf.kind == "identity"

    @cached_property
    def by_radius(self) -> dict:
        return {a.radius: a for a in self.spheres}

    def __call__(self, space: Space, x: Point) -> Point:
        return apply(space, self, x)


IDENTITY = IsometryTree()


# -- evaluation ----------------------------------------------------------------


def apply(space: Space, tree: IsometryTree, x: Point) -> Point:
    """Evaluate the tree at x by descending sphere -> class -> child."""
    r = space.norm(x)
    if r == 0:
        return x
    action = tree.by_radius.get(r)
    if action is None:
        return tree.leaf(space, x)
    dec = decompose_sphere(space, r)
    i = dec.index_of(x)
    bm = action.maps[i]
    y = space.sub(x, dec.classes[i].representative)
    if bm.pre is not None:
        y = space.sub(y, bm.pre)
    z = apply(space, bm.child, y) if not bm.child.is_identity else y
    out = dec.classes[bm.target].representative
    if bm.post is not None:
        out = space.add(out, bm.post)
    return space.add(out, z)


class TreeMap:
    """A tree bound to its space, usable as a plain function."""

    def __init__(self, space: Space, tree: IsometryTree):
        self.space = space
        self.tree = tree

    def __call__(self, x: Point) -> Point:
        return apply(self.space, self.tree, x)

    def __repr__(self):
        return f"TreeMap({self.tree!r})"


def as_map(space: Space, f) -> MapLike:
    if isinstance(f, IsometryTree):
        return TreeMap(space, f)
    return f


class ComposedMap:
    """x -> f(g(x)); produced by :func:`compose`."""

    def __init__(self, space: Space, f: MapLike, g: MapLike):
        self.space = space
        self.f = f
        self.g = g

    def __call__(self, x: Point) -> Point:
        return self.f(self.g(x))


def compose(space: Space, f, g) -> ComposedMap:
    for m in (f, g):
        s = getattr(m, "space", space)
        if s != space:
            raise SpaceMismatch(f"{s!r} vs {space!r}")
    return ComposedMap(space, as_map(space, f), as_map(space, g))


def invert(space: Space, tree: IsometryTree) -> IsometryTree:
    """Structural inverse: reverse each class permutation, swap pre/post, invert children."""
    actions = []
    for a in tree.spheres:
        maps: list = [None] * len(a.maps)
        for bm in a.maps:
            maps[bm.target] = BallMap(bm.target, bm.source, invert(space, bm.child),
                                      pre=bm.post, post=bm.pre)
        actions.append(SphereAction(a.radius, tuple(maps)))
    return IsometryTree(tuple(actions), tree.leaf.inverse(), tree.depth)


# -- construction --------------------------------------------------------------


def build_sphere_action(space: Space, r, sigma: Sequence[int],
                        children: Sequence[IsometryTree | None] | None = None,
                        posts: Sequence[Point | None] | None = None,
                        pres: Sequence[Point | None] | None = None) -> SphereAction:
    """Disjoint union of class isometries over a class permutation ``sigma``."""
    r = parse_rational(r)
    dec = decompose_sphere(space, r)
    if dec.empty:
        raise IsoTreeError(f"S({r}) is empty")
    n = len(dec)
    sigma = list(sigma)
    if sorted(sigma) != list(range(n)):
        raise IsoTreeError(f"sigma {sigma} is not a permutation of {n} classes")
    children = list(children) if children is not None else [None] * n
    posts = list(posts) if posts is not None else [None] * n
    pres = list(pres) if pres is not None else [None] * n
    if not len(children) == len(posts) == len(pres) == n:
        raise IsoTreeError(f"expected {n} children/translations")
    maps = []
    for i in range(n):
        child = children[i] if children[i] is not None else IDENTITY
        for t in (posts[i], pres[i]):
            if t is not None and space.norm(t) >= r:
                raise IsoTreeError(f"class translation {t!r} has norm >= {r}")
        for a in child.spheres:
            if a.radius >= r:
                raise IsoTreeError(f"child lists S({a.radius}) outside B(0, {r})")
        maps.append(BallMap(i, sigma[i], child, pres[i], posts[i]))
    return SphereAction(r, tuple(maps))


def glue_spheres(space: Space, actions: Iterable[SphereAction], outer_radius=None,
                 leaf: Leaf = IDENTITY_LEAF, depth: int | None = None) -> IsometryTree:
    """Glue per-sphere isometries into one centred isometry of B(0, outer_radius)."""
    actions = list(actions)
    outer = None if outer_radius is None else parse_rational(outer_radius)
    seen = set()
    for a in actions:
        if a.radius in seen:
            raise IsoTreeError(f"duplicate radius {a.radius}")
        seen.add(a.radius)
        if outer is not None and a.radius >= outer:
            raise IsoTreeError(f"radius {a.radius} not inside B(0, {outer})")
        if decompose_sphere(space, a.radius).empty:
            raise IsoTreeError(f"radius {a.radius} is not in the value set")
    leaf.validate(space)
    return IsometryTree(tuple(actions), leaf, depth)


def canonical(space: Space, tree: IsometryTree) -> IsometryTree:
    """Drop identity actions and normalise leaves; structure is otherwise kept."""
    actions = []
    for a in tree.spheres:
        maps = []
        for bm in a.maps:
            child = canonical(space, bm.child)
            pre, post = bm.pre, bm.post
            if child.is_identity and pre is not None:
                post = space.sub(post, pre) if post is not None else space.neg(pre)
                pre = None
            maps.append(BallMap(bm.source, bm.target, child, pre, post))
        act = SphereAction(a.radius, tuple(maps))
        if not act.is_identity:
            actions.append(act)
    return IsometryTree(tuple(actions), tree.leaf.canonical(space))


def dilation_transport(space: Space, obj, alpha: FieldElement):
    """Conjugate by the dilation x -> alpha x: returns x -> alpha f(x / alpha).

    Accepts a :class:`SphereAction` on S(r) (giving one on S(|alpha| r)) or a
    whole tree.
    """
    if alpha.is_zero():
        raise IsoTreeError("cannot transport by alpha = 0")
    if isinstance(obj, IsometryTree):
        return IsometryTree(tuple(dilation_transport(space, a, alpha) for a in obj.spheres),
                            obj.leaf, obj.depth)
    r = obj.radius
    r2 = alpha.abs() * r
    dec = decompose_sphere(space, r)
    dec2 = decompose_sphere(space, r2)
    if dec2.empty:
        raise IsoTreeError(f"S({r2}) is empty")
    scaled = [space.scale(alpha, c.representative) for c in dec.classes]
    index = [dec2.index_of(a) for a in scaled]
    offset = [space.sub(a, dec2.classes[k].representative) for a, k in zip(scaled, index)]
    maps: list = [None] * len(dec2)
    for bm in obj.maps:
        i2, j2 = index[bm.source], index[bm.target]
        pre = offset[bm.source]
        if bm.pre is not None:
            pre = space.add(pre, space.scale(alpha, bm.pre))
        post = offset[bm.target]
        if bm.post is not None:
            post = space.add(post, space.scale(alpha, bm.post))
        maps[i2] = BallMap(i2, j2, dilation_transport(space, bm.child, alpha), pre, post)
    return SphereAction(r2, tuple(maps))


# -- verification --------------------------------------------------------------


@dataclass(frozen=True)
class VerifyResult:
    passed: bool
    witness: tuple | None = None
    reason: str = ""
    checked: int = 0

    def __bool__(self):
        return self.passed


def _images(f: MapLike, domain: Domain, cod_domain: Domain) -> list[Point]:
    return [cod_domain.reduce(f(x)) for x in domain.points]


def verify_isometry(space: Space, f, domain: Domain, codomain: Space | None = None,
                    codomain_domain: Domain | None = None) -> VerifyResult:
    """Check that f is a distance-preserving bijection of the domain.

    Images are reduced to the codomain's representatives.  Rather than
    comparing all pairs one by one, the check runs once per distance level
    t: points within distance <= t of each other form classes (closed balls)
    and f must map these classes bijectively onto image classes.  Because
    every distance is one of the levels, this is the same as comparing
    ||f(y) - f(x)|| with ||y - x|| for every pair.  The first failing pair
    in domain order is returned as the witness.
    """
    f = as_map(space, f)
    cod = codomain or space
    if codomain_domain is None:
        codomain_domain = domain if codomain is None else Domain(cod, domain.shells,
                                                                domain.include_zero)
    pts = domain.points
    images = _images(f, domain, codomain_domain)
    target = codomain_domain.point_set
    for x, y in zip(pts, images):
        if y not in target:
            return VerifyResult(False, (x, y), "image outside domain", len(pts))
    if len(pts) != len(target):
        return VerifyResult(False, None, "domain and codomain sizes differ", len(pts))

    seen: dict = {}
    for k, y in enumerate(images):
        if y in seen:
            return VerifyResult(False, (pts[seen[y]], pts[k]), "not injective", len(pts))
        seen[y] = k

    levels = sorted(set(domain.levels()) | set(codomain_domain.levels()))
    for t in levels:
        fwd: dict = {}
        bwd: dict = {}
        key_x = space.key_function(t, closed=True)
        key_y = cod.key_function(t, closed=True)
        for k, (x, y) in enumerate(zip(pts, images)):
            kx = key_x(x)
            ky = key_y(y)
            hit = fwd.get(kx)
            if hit is None:
                fwd[kx] = (ky, k)
            elif hit[0] != ky:
                return VerifyResult(False, (pts[hit[1]], x), "distance", len(pts))
            hit = bwd.get(ky)
            if hit is None:
                bwd[ky] = (kx, k)
            elif hit[0] != kx:
                return VerifyResult(False, (pts[hit[1]], x), "distance", len(pts))
    return VerifyResult(True, None, "", len(pts))


def is_norm_preserving(space: Space, f, domain: Domain | None = None) -> bool:
    f = as_map(space, f)
    if domain is None:
        domain = default_leaf_domain(space)
    return all(space.norm(f(x)) == space.norm(x) for x in domain.points)


def default_leaf_domain(space: Space) -> Domain:
    if space.is_finite:
        return Domain.full(space)
    p = space.p
    lo = min(space.weights)
    hi = max(space.weights) * p
    return Domain.relative(space, space.value_set(lo, hi), depth=2)


# -- linearity -----------------------------------------------------------------


@dataclass(frozen=True)
class LinearityCertificate:
    """A concrete failure of additivity (x, y) or homogeneity (scalar, x)."""

    kind: str  # "additive" | "homogeneous"
    x: Point
    y: Point | None = None
    scalar: FieldElement | None = None

    def sides(self, space: Space, f: MapLike) -> tuple[Point, Point]:
        if self.kind == "additive":
            return f(space.add(self.x, self.y)), space.add(f(self.x), f(self.y))
        return f(space.scale(self.scalar, self.x)), space.scale(self.scalar, f(self.x))

    def holds(self, space: Space, f, domain: Domain | None = None) -> bool:
        """True when the stored inputs still witness non-linearity."""
        f = as_map(space, f)
        lhs, rhs = self.sides(space, f)
        if domain is not None:
            lhs, rhs = domain.reduce(lhs), domain.reduce(rhs)
        return lhs != rhs


def linearity_certificate(space: Space, f, domain: Domain, affine: bool = False,
                          rng: random.Random | None = None,
                          samples: int = 2000) -> LinearityCertificate | None:
    """First violation of linearity on the domain, or None.

    Finite spaces are checked on all pairs and all scalars.  For p-adic
    domains, ``samples`` seeded pairs and scalar multiples are checked,
    keeping only those whose results fall inside the domain.
    """
    f = as_map(space, f)
    if affine:
        base = f(space.zero())
        g = f
        f = lambda x: space.sub(g(x), base)  # noqa: E731
    pts = domain.points
    if space.is_finite:
        image = {x: f(x) for x in pts}
        for x in pts:
            for y in pts:
                if image[space.add(x, y)] != space.add(image[x], image[y]):
                    return LinearityCertificate("additive", x, y)
        for lam in space.field.elements():
            for x in pts:
                if image[space.scale(lam, x)] != space.scale(lam, image[x]):
                    return LinearityCertificate("homogeneous", x, scalar=lam)
        return None
    rng = rng or random.Random(0)
    red = domain.reduce
    for _ in range(samples):
        x, y = rng.choice(pts), rng.choice(pts)
        s = space.add(x, y)
        if not domain.covers(space.norm(s)) or red(s) != s:
            continue
        if red(f(s)) != red(space.add(f(x), f(y))):
            return LinearityCertificate("additive", x, y)
    units = [space.field.one, -space.field.one, space.field(2)]
    for _ in range(samples // 4):
        x = rng.choice(pts)
        lam = rng.choice(units)
        s = space.scale(lam, x)
        if red(f(red(s))) != red(space.scale(lam, f(x))):
            return LinearityCertificate("homogeneous", x, scalar=lam)
    return None


def is_linear(space: Space, f, domain: Domain, **kw) -> bool:
    return linearity_certificate(space, f, domain, **kw) is None


def is_affine(space: Space, f, domain: Domain, **kw) -> bool:
    return linearity_certificate(space, f, domain, affine=True, **kw) is None


# -- factorization -------------------------------------------------------------


def factor_isometry(space: Space, f, domain: Domain, depth: int | None = None,
                    check: bool = True) -> IsometryTree:
    """Recover the tree of a centred isometry known on ``domain``.

    Each sphere of the domain is split into classes; the image of each class
    representative fixes the class permutation and the post-translation, and
    the residual map y -> f(rep + y) - f(rep) on B(0, r) is factored
    recursively.  Spheres on which f is the identity are omitted.
    """
    f = as_map(space, f)
    if domain.include_zero and not space.is_zero(domain.reduce(f(space.zero()))):
        raise NotCentred("map does not fix 0")
    if check:
        res = verify_isometry(space, f, domain)
        if not res:
            raise NotIsometric(res)
    fmap = {x: domain.reduce(f(x)) for x in domain.points}
    actions = []
    for r, rho in domain.shells:
        pts = [x for x in domain.points if space.norm(x) == r]
        action = _factor_sphere(space, r, pts, fmap, rho, 1, depth)
        if action is not None:
            actions.append(action)
    return IsometryTree(tuple(actions), IDENTITY_LEAF, depth)


def _factor_ball(space, pts, fmap, rho, level, depth) -> IsometryTree:
    by_r: dict = {}
    for x in pts:
        r = space.norm(x)
        if r:
            by_r.setdefault(r, []).append(x)
    actions = []
    for r in sorted(by_r):
        action = _factor_sphere(space, r, by_r[r], fmap, rho, level, depth)
        if action is not None:
            actions.append(action)
    return IsometryTree(tuple(actions))


def _factor_sphere(space, r, pts, fmap, rho, level, depth) -> SphereAction | None:
    if all(fmap[x] == x for x in pts):
        return None
    if depth is not None and level > depth:
        raise DepthExhausted(f"non-identity action on S({r}) below depth {depth}")
    dec = decompose_sphere(space, r)
    groups: list[list[Point]] = [[] for _ in dec.classes]
    for x in pts:
        groups[dec.index_of(x)].append(x)
    maps = []
    for i, cls in enumerate(dec.classes):
        rep = cls.representative
        if rep not in fmap:
            raise IsoTreeError(f"domain does not contain the class representative {rep!r}")
        fx = fmap[rep]
        j = dec.index_of(fx)
        post = space.sub(fx, dec.classes[j].representative)
        child_map = {}
        for x in groups[i]:
            y = space.sub(x, rep)
            child_map[y] = space.truncate(space.sub(fmap[x], fx), rho)
        child = _factor_ball(space, list(child_map), child_map, rho, level + 1, depth)
        maps.append(BallMap(i, j, child, None, post))
    return SphereAction(r, tuple(maps))


# -- random trees --------------------------------------------------------------


def random_ball_point(space: Space, rng: random.Random, r: Fraction, rho=None) -> Point:
    """A random representative of the open ball B(0, r)."""
    below = [v for v in space.value_set(None, r) if v < r]
    if not below:
        return space.zero()
    hi = below[-1]
    return tuple(rng.choice(space.coordinate_residues(i, hi, rho)) for i in range(space.dim))


def random_tree(space: Space, rng: random.Random, depth: int, radii: Sequence | None = None,
                child_prob: float = 0.5, leaf_prob: float = 0.0,
                resolution_depth: int = 3) -> IsometryTree:
    """A random tree of nesting at most ``depth``.

    ``radii`` is the pool of spheres for the top level (default: every value
    of a finite space).  Children pick spheres inside their class ball that
    are visible at ``resolution_depth`` relative to the top sphere.
    """
    if radii is None:
        if not space.is_finite:
            raise ValueError("p-adic random trees need an explicit radius pool")
        radii = space.value_set()
    radii = sorted(parse_rational(r) for r in radii)
    leaf = IDENTITY_LEAF
    if leaf_prob and rng.random() < leaf_prob:
        leaf = NEGATION_LEAF
    return _random_tree(space, rng, depth, radii, child_prob, resolution_depth, None, leaf)


def _random_tree(space, rng, depth, pool, child_prob, res_depth, rho, leaf):
    if depth <= 0 or not pool:
        return IsometryTree((), leaf)
    k = rng.randint(1, min(2, len(pool)))
    chosen = sorted(rng.sample(pool, k))
    actions = []
    for r in chosen:
        dec = decompose_sphere(space, r)
        n = len(dec)
        rho_r = rho if rho is not None else relative_resolution(space, r, res_depth)
        sigma = list(range(n))
        rng.shuffle(sigma)
        sub_pool = [v for v in space.value_set(rho_r, r) if v < r]
        children, posts = [], []
        for _ in range(n):
            if rng.random() < child_prob:
                children.append(_random_tree(space, rng, depth - 1, sub_pool, child_prob,
                                             res_depth, rho_r, IDENTITY_LEAF))
            else:
                children.append(IDENTITY)
            posts.append(random_ball_point(space, rng, r, rho_r) if rng.random() < 0.5 else None)
        actions.append(build_sphere_action(space, r, sigma, children, posts))
    return IsometryTree(tuple(actions), leaf, depth)


def map_table(space: Space, f, domain: Domain) -> dict:
    f = as_map(space, f)
    return {x: domain.reduce(f(x)) for x in domain.points}


def table_map(table: dict, reduce: Callable[[Point], Point] | None = None) -> MapLike:
    """Function backed by an explicit point table."""
    if reduce is None:
        return table.__getitem__
    return lambda x: table[reduce(x)]


# -- JSON ----------------------------------------------------------------------

SCHEMA = "1"


def leaf_to_json(space: Space, leaf: Leaf):
    if leaf.kind in ("identity", "negation"):
        return leaf.kind
    if leaf.kind == "scalar":
        return {"scalar": leaf.scalar.to_json()}
    return {"matrix": [space.point_to_json(row) for row in leaf.matrix]}


def leaf_from_json(space: Space, data) -> Leaf:
    if data in (None, "identity"):
        return IDENTITY_LEAF
    if data == "negation":
        return NEGATION_LEAF
    if isinstance(data, dict) and "scalar" in data:
        return Leaf("scalar", scalar=element_from_json(space.field, data["scalar"]))
    if isinstance(data, dict) and "matrix" in data:
        rows = data["matrix"]
        if not isinstance(rows, list):
            raise IsoTreeError("leaf.matrix must be a list of rows")
        return Leaf("matrix", matrix=tuple(space.point_from_json(row) for row in rows))
    raise IsoTreeError(f"unknown leaf {data!r}")


def _opt_points(space: Space, pts) -> list | None:
    if all(p is None for p in pts):
        return None
    return [None if p is None else space.point_to_json(p) for p in pts]


def tree_to_json(space: Space, tree: IsometryTree, top: bool = True) -> dict:
    spheres = []
    for a in tree.spheres:
        entry = {
            "radius": str(a.radius),
            "sigma": list(a.sigma),
            "children": ["identity" if m.child.is_identity
                         else tree_to_json(space, m.child, False) for m in a.maps],
        }
        pre = _opt_points(space, [m.pre for m in a.maps])
        post = _opt_points(space, [m.post for m in a.maps])
        if pre is not None:
            entry["pre"] = pre
        if post is not None:
            entry["post"] = post
        spheres.append(entry)
    out = {"schema": SCHEMA} if top else {}
    out.update({"depth": tree.depth, "leaf": leaf_to_json(space, tree.leaf),
                "spheres": spheres})
    return out


def tree_from_json(space: Space, data, outer=None, path: str = "tree") -> IsometryTree:
    """Parse and validate a tree; errors name the offending field."""
    if data == "identity":
        return IDENTITY
    if not isinstance(data, dict):
        raise IsoTreeError(f"{path}: expected an object or \"identity\"")
    if "schema" in data and str(data["schema"]) != SCHEMA:
        raise IsoTreeError(f"{path}.schema: unsupported version {data['schema']!r}")
    leaf = leaf_from_json(space, data.get("leaf"))
    raw = data.get("spheres", [])
    if not isinstance(raw, list):
        raise IsoTreeError(f"{path}.spheres: expected a list")
    actions = []
    for k, s in enumerate(raw):
        where = f"{path}.spheres[{k}]"
        try:
            r = parse_rational(s["radius"])
            sigma = s["sigma"]
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            raise IsoTreeError(f"{where}: {exc}") from None
        n = len(sigma) if isinstance(sigma, list) else 0
        children_raw = s.get("children", ["identity"] * n)
        if not isinstance(children_raw, list) or len(children_raw) != n:
            raise IsoTreeError(f"{where}.children: expected {n} entries")
        children = [tree_from_json(space, c, r, f"{where}.children[{i}]")
                    for i, c in enumerate(children_raw)]
        pres = _points_field(space, s.get("pre"), n, f"{where}.pre")
        posts = _points_field(space, s.get("post"), n, f"{where}.post")
        try:
            actions.append(build_sphere_action(space, r, sigma, children, posts, pres))
        except (IsoTreeError, ValueError, TypeError) as exc:
            raise IsoTreeError(f"{where}: {exc}") from None
    depth = data.get("depth")
    try:
        tree = glue_spheres(space, actions, outer, leaf,
                            None if depth is None else int(depth))
    except IsoTreeError as exc:
        raise IsoTreeError(f"{path}: {exc}") from None
    return tree


def _points_field(space: Space, raw, n: int, where: str) -> list:
    if raw is None:
        return [None] * n
    if not isinstance(raw, list) or len(raw) != n:
        raise IsoTreeError(f"{where}: expected {n} entries")
    try:
        return [None if p is None else space.point_from_json(p) for p in raw]
    except (ValueError, TypeError) as exc:
        raise IsoTreeError(f"{where}: {exc}") from None
