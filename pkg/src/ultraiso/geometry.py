"""Balls, spheres, and the decomposition of a sphere into open-ball classes.

For a radius r, the relation ``x ~_r y  <=>  ||y - x|| < r`` is an
equivalence relation whose classes are the open balls of radius r.  Every
sphere S(r) is the disjoint union of the classes it meets, and distinct
classes of S(r) sit at distance exactly r from each other.

Verification in p-adic spaces is done on finite *domains*: a union of
spheres, each enumerated modulo open balls of a resolution radius.  Two
points are distinct in a domain iff their distance is at least that
resolution, so every distance between representatives is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

from .spaces import NotEnumerable, Point, Space, parse_rational


class NotOnSphere(ValueError):
    pass


@dataclass(frozen=True)
class Ball:
    center: Point
    radius: Fraction | None  # None means infinite
    closed: bool = False

    def contains(self, space: Space, y: Point) -> bool:
        if self.radius is None:
            return True
        d = space.dist(y, self.center)
        return d <= self.radius if self.closed else d < self.radius


@dataclass(frozen=True)
class BallClass:
    radius: Fraction
    representative: Point


@dataclass(frozen=True)
class SphereDecomposition:
    space: Space
    radius: Fraction
    depth: int
    classes: tuple[BallClass, ...]
    _index: dict = field(repr=False, compare=False, hash=False)

    @cached_property
    def _key(self):
        return self.space.key_function(self.radius)

    @property
    def empty(self) -> bool:
        return not self.classes

    def __len__(self):
        return len(self.classes)

    @property
    def representatives(self) -> list[Point]:
        return [c.representative for c in self.classes]

    def index_of(self, x: Point) -> int:
        """Index of the class containing x (x must lie on the sphere)."""
        key = self._key(x)
        try:
            return self._index[key]
        except KeyError:
            raise NotOnSphere(f"{x!r} is not on S({self.radius})") from None


def same_class(space: Space, x: Point, y: Point, r) -> bool:
    r = parse_rational(r)
    for p in (x, y):
        if space.norm(p) != r:
            raise NotOnSphere(f"{p!r} does not have norm {r}")
    return space.dist(x, y) < r


@lru_cache(maxsize=4096)
def _class_reps(space: Space, r: Fraction) -> tuple:
    if r not in space.value_set(r, r):
        return ()
    return tuple(space.sphere_points(r, r))


def decompose_sphere(space: Space, r, depth: int = 1) -> SphereDecomposition:
    """Canonical class representatives of S(r) under ~_r.

    An unattainable radius gives an empty decomposition rather than an error.
    """
    r = parse_rational(r)
    if depth < 1:
        raise ValueError("depth must be positive")
    return _decompose(space, r, depth)


@lru_cache(maxsize=4096)
def _decompose(space: Space, r: Fraction, depth: int) -> SphereDecomposition:
    reps = _class_reps(space, r)
    key = space.key_function(r)
    index = {key(x): i for i, x in enumerate(reps)}
    return SphereDecomposition(space, r, depth, tuple(BallClass(r, x) for x in reps), index)


def closed_ball_equals_open(space: Space, x: Point, r_open, r_closed) -> bool:
    """Whether B(x, r_open) = B[x, r_closed], decided from the value set."""
    r_open = parse_rational(r_open)
    r_closed = parse_rational(r_closed)
    if r_open <= 0 or r_closed <= 0:
        raise ValueError("radii must be positive")
    lo, hi = sorted((r_open, r_closed))
    values = space.value_set(lo, hi)
    if r_closed < r_open:
        return not any(r_closed < v < r_open for v in values)
    return not any(r_open <= v <= r_closed for v in values)


def isosceles_holds(space: Space, x: Point, y: Point, z: Point) -> bool:
    """||x - z|| < ||y - z|| implies ||y - x|| = ||y - z||."""
    dxz = space.dist(x, z)
    dyz = space.dist(y, z)
    if dxz < dyz:
        return space.dist(y, x) == dyz
    return True


def find_isosceles_violation(space: Space, triples: Iterable) -> tuple | None:
    for x, y, z in triples:
        if not isosceles_holds(space, x, y, z):
            return (x, y, z)
    return None


def ultrametric_signature(space: Space, points: Sequence[Point]):
    """Isometry invariant of a finite subset: equal iff the subsets are isometric.

    Recursively splits the set by its diameter D into classes of distance
    < D and records (D, sorted child signatures).
    """
    pts = list(points)
    if len(pts) <= 1:
        return (len(pts),)
    diam = max(space.dist(a, b) for a, b in itertools.combinations(pts, 2))
    groups: list[list[Point]] = []
    for x in pts:
        for g in groups:
            if space.dist(x, g[0]) < diam:
                g.append(x)
                break
        else:
            groups.append([x])
    children = sorted((ultrametric_signature(space, g) for g in groups), key=repr)
    return (diam, tuple(children))


# -- verification domains ----------------------------------------------------


def relative_resolution(space: Space, r: Fraction, depth: int) -> Fraction | None:
    """Open-ball radius r * p^-(depth-1); None (exact points) for finite fields."""
    if space.is_finite:
        return None
    return r / Fraction(space.p) ** (depth - 1)


@dataclass(frozen=True)
class Domain:
    """A finite set of representatives: 0 plus whole spheres at given resolutions.

    ``shells`` holds ``(radius, rho)`` pairs; the points of S(radius) are
    enumerated modulo open balls of radius rho (rho None: exact points).
    """

    space: Space
    shells: tuple[tuple[Fraction, Fraction | None], ...]
    include_zero: bool = True

    @classmethod
    def relative(cls, space: Space, radii: Iterable, depth: int = 3,
                 include_zero: bool = True) -> Domain:
        shells = []
        for r in sorted(set(parse_rational(r) for r in radii)):
            shells.append((r, relative_resolution(space, r, depth)))
        return cls(space, tuple(shells), include_zero)

    @classmethod
    def full(cls, space: Space, depth: int = 3) -> Domain:
        """Every sphere of the space that can be enumerated at ``depth``."""
        if space.is_finite:
            return cls.relative(space, space.value_set(), depth)
        radii = [r for r in space.value_set()
                 if enumerable(space, r, relative_resolution(space, r, depth))]
        return cls.relative(space, radii, depth)

    @classmethod
    def norm_range(cls, space: Space, lo, hi, depth: int = 3) -> Domain:
        radii = space.value_set(lo, hi)
        return cls.relative(space, radii, depth)

    @cached_property
    def _rho(self) -> dict:
        return dict(self.shells)

    @property
    def radii(self) -> list[Fraction]:
        return [r for r, _ in self.shells]

    @cached_property
    def points(self) -> tuple[Point, ...]:
        pts = [self.space.zero()] if self.include_zero else []
        for r, rho in self.shells:
            pts.extend(self.space.sphere_points(r, rho))
        return tuple(pts)

    @cached_property
    def point_set(self) -> frozenset:
        return frozenset(self.points)

    def __len__(self):
        return len(self.points)

    def resolution(self, r: Fraction) -> Fraction | None:
        return self._rho[r]

    def covers(self, r: Fraction) -> bool:
        return r in self._rho or (r == 0 and self.include_zero)

    def reduce(self, x: Point) -> Point:
        """Representative of x in this domain (x unchanged if its sphere is absent)."""
        r = self.space.norm(x)
        rho = self._rho.get(r)
        if rho is None:
            return x
        return self.space.truncate(x, rho)

    def levels(self) -> list[Fraction]:
        """Every distance that can occur between two points of the domain."""
        if not self.shells:
            return []
        finest = min((rho for _, rho in self.shells if rho), default=None)
        top = max(r for r, _ in self.shells)
        return self.space.value_set(finest, top)


def enumerable(space: Space, r: Fraction, rho: Fraction | None) -> bool:
    try:
        for i in range(space.dim):
            space.coordinate_residues(i, r, rho)
    except NotEnumerable:
        return False
    return True


def ball_domain(space: Space, radius, rho, closed: bool = False) -> Domain:
    """Domain covering B(0, radius) (or the closed ball) at one absolute resolution."""
    radius = parse_rational(radius)
    radii = [r for r in space.value_set(rho if rho else None, radius)
             if r < radius or (closed and r == radius)]
    if rho:
        radii = [r for r in radii if r >= rho]
    return Domain(space, tuple((r, rho) for r in radii))


def iter_triples(points: Sequence[Point]):
    return itertools.product(points, repeat=3)


INFINITY = math.inf
