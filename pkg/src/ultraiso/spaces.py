"""Finite-dimensional ultrametric spaces with weighted max norms.

A point is a plain tuple of field elements.  The norm of ``x`` is
``max_i w_i * |x_i|`` computed exactly as a :class:`~fractions.Fraction`.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

from .scalars import (
    FFElement,
    Field,
    FieldElement,
    FiniteField,
    PadicField,
    element_from_json,
    field_from_json,
)

Point = tuple  # tuple[FieldElement, ...]
NormValue = Fraction


class NotEnumerable(ValueError):
    """A requested ball or sphere does not fit the field's precision/window."""


def parse_rational(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted for exact radii or weights")
    return Fraction(value)


def format_rational(x: Fraction) -> str:
    return str(x)


class Space:
    """A weighted max norm on K^n."""

    __slots__ = ("field", "weights", "_zero", "_abs_cache", "_cut_cache", "_hash")

    def __init__(self, field: Field, weights: Sequence):
        weights = tuple(parse_rational(w) for w in weights)
        if not weights:
            raise ValueError("dimension must be at least 1")
        if any(w <= 0 for w in weights):
            raise ValueError(f"weights must be positive, got {weights}")
        self.field = field
        self.weights = weights
        self._zero = tuple(field.zero for _ in weights)
        self._abs_cache: dict = {}
        self._cut_cache: dict = {}
        self._hash = hash((field, weights))

    @property
    def dim(self) -> int:
        return len(self.weights)

    def __repr__(self):
        ws = ", ".join(str(w) for w in self.weights)
        return f"Space({self.field!r}, ({ws}))"

    def __eq__(self, other):
        return (isinstance(other, Space) and other.field == self.field
                and other.weights == self.weights)

    def __hash__(self):
        return self._hash

    def __reduce__(self):
        return (Space, (self.field, self.weights))

    @property
    def is_finite(self) -> bool:
        return isinstance(self.field, FiniteField)

    @property
    def p(self) -> int | None:
        return self.field.p if isinstance(self.field, PadicField) else None

    # -- points -------------------------------------------------------------

    def zero(self) -> Point:
        return self._zero

    def point(self, *coords) -> Point:
        if len(coords) == 1 and isinstance(coords[0], (tuple, list)):
            coords = tuple(coords[0])
        if len(coords) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {len(coords)}")
        return tuple(self.field(c) for c in coords)

    def basis(self) -> list[Point]:
        out = []
        for i in range(self.dim):
            out.append(tuple(self.field.one if j == i else self.field.zero
                             for j in range(self.dim)))
        return out

    def is_zero(self, x: Point) -> bool:
        return all(c.is_zero() for c in x)

    def add(self, x: Point, y: Point) -> Point:
        return tuple(a + b for a, b in zip(x, y))

    def sub(self, x: Point, y: Point) -> Point:
        return tuple(a - b for a, b in zip(x, y))

    def neg(self, x: Point) -> Point:
        return tuple(-a for a in x)

    def scale(self, lam: FieldElement, x: Point) -> Point:
        return tuple(lam * a for a in x)

    def sort_key(self, x: Point):
        return tuple(c.key for c in x)

    # -- norms --------------------------------------------------------------

    def coord_abs(self, i: int, c: FieldElement) -> Fraction:
        v = c.valuation
        if v is None:
            return Fraction(0)
        k = (i, v)
        r = self._abs_cache.get(k)
        if r is None:
            r = self.weights[i] * c.abs()
            self._abs_cache[k] = r
        return r

    def norm(self, x: Point) -> NormValue:
        best = None
        for i, c in enumerate(x):
            v = c.valuation
            if v is None:
                continue
            r = self._abs_cache.get((i, v))
            if r is None:
                r = self.coord_abs(i, c)
            if best is None or r > best:
                best = r
        return Fraction(0) if best is None else best

    def dist(self, x: Point, y: Point) -> NormValue:
        return self.norm(self.sub(x, y))

    def value_set(self, lo=None, hi=None) -> list[NormValue]:
        """Sorted attainable positive norm values in ``[lo, hi]``.

        For finite fields these are the distinct weights.  For Q_p they are
        ``w_i * p^-v`` for v in the valuation window.
        """
        lo = None if lo is None else parse_rational(lo)
        hi = None if hi is None else parse_rational(hi)
        values = set()
        if self.is_finite:
            values.update(self.weights)
        else:
            f = self.field
            for w in set(self.weights):
                for v in range(f.vmin, f.vmax + 1):
                    values.add(w * _pow(f.p, -v))
        out = sorted(values)
        if lo is not None:
            out = [r for r in out if r >= lo]
        if hi is not None:
            out = [r for r in out if r <= hi]
        return out

    def is_trivially_normed(self) -> bool:
        return self.is_finite and len(set(self.weights)) == 1

    # -- truncation and residues --------------------------------------------

    def cutoff(self, i: int, rho: Fraction, closed: bool) -> int | bool:
        """Digits of coordinate i that survive reduction modulo a ball of radius rho.

        For Q_p, returns c such that digits at positions >= c are dropped
        (the smallest v with w_i p^-v < rho, or <= rho when closed).
        For finite fields, returns whether the coordinate survives.
        """
        return _cutoff(self.field, self.weights[i], rho, closed)

    def truncate(self, x: Point, rho, closed: bool = False) -> Point:
        """Canonical representative of the ball around x of radius rho.

        Open balls by default; ``rho`` of 0 or None returns x.  The result is
        the lexicographically least point of the ball.
        """
        if not rho:
            return x
        cuts = self.cutoffs(parse_rational(rho), closed)
        return tuple(_truncate_elem(c, cut) for c, cut in zip(x, cuts))

    def cutoffs(self, rho: Fraction, closed: bool = False) -> tuple:
        key = (rho, closed)
        cuts = self._cut_cache.get(key)
        if cuts is None:
            cuts = tuple(_cutoff(self.field, w, rho, closed) for w in self.weights)
            self._cut_cache[key] = cuts
        return cuts

    def ball_key(self, x: Point, rho: Fraction, closed: bool = False) -> tuple:
        """Hashable key equal for x, y exactly when ||x - y|| < rho (<= if closed)."""
        return self.key_function(rho, closed)(x)

    def key_function(self, rho: Fraction, closed: bool = False):
        """``ball_key`` with the cutoffs for (rho, closed) computed once."""
        cuts = self.cutoffs(rho, closed)
        if self.is_finite:
            keep = tuple(i for i, cut in enumerate(cuts) if cut)
            return lambda x: tuple(x[i].index for i in keep)
        p = self.field.p
        prec = self.field.precision
        mods = {}

        def key(x):
            out = []
            for c, cut in zip(x, cuts):
                v = c.valuation
                if v is None or v >= cut:
                    out.append(None)
                else:
                    k = cut - v
                    if k >= prec:
                        out.append((v, c.unit))
                    else:
                        m = mods.get(k)
                        if m is None:
                            m = mods[k] = p ** k
                        out.append((v, c.unit % m))
            return tuple(out)
        return key

    def coordinate_residues(self, i: int, hi: Fraction, rho) -> list[FieldElement]:
        """Values of coordinate i with w_i|x_i| <= hi, modulo |.| w_i < rho."""
        f = self.field
        w = self.weights[i]
        if isinstance(f, FiniteField):
            if w > hi or (rho and w < rho):
                return [f.zero]
            return list(f.elements())
        if not rho:
            raise NotEnumerable("p-adic balls need a positive resolution")
        first = _cutoff(f, w, hi, True)  # smallest v with w p^-v <= hi
        stop = _cutoff(f, w, rho, False)  # digits at positions >= stop dropped
        out = [f.zero]
        if stop <= first:
            return out
        if first < f.vmin or stop - 1 > f.vmax:
            raise NotEnumerable(
                f"coordinate {i}: positions [{first}, {stop}) exceed window {f.window}")
        if stop - first > f.precision:
            raise NotEnumerable(
                f"coordinate {i}: {stop - first} digits exceed precision {f.precision}")
        p = f.p
        for v in range(first, stop):
            for u in range(1, p ** (stop - v)):
                if u % p:
                    out.append(f.element(v, u))
        return out

    def ball_points(self, hi, rho=None) -> list[Point]:
        """Representatives of B[0, hi] modulo open balls of radius rho, sorted."""
        hi = parse_rational(hi)
        rho = parse_rational(rho) if rho else None
        residues = [self.coordinate_residues(i, hi, rho) for i in range(self.dim)]
        pts = [tuple(c) for c in itertools.product(*residues)]
        pts.sort(key=self.sort_key)
        return pts

    def sphere_points(self, r, rho=None) -> list[Point]:
        """Representatives of S(r) modulo open balls of radius rho, sorted."""
        r = parse_rational(r)
        return [x for x in self.ball_points(r, rho) if self.norm(x) == r]

    def points(self) -> list[Point]:
        """All points of a finite space in canonical order."""
        if not self.is_finite:
            raise NotEnumerable("only finite spaces have a finite point set")
        return self.ball_points(max(self.weights))

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {"field": self.field.to_json(), "dim": self.dim,
                "weights": [format_rational(w) for w in self.weights]}

    def point_to_json(self, x: Point) -> list:
        return [c.to_json() for c in x]

    def point_from_json(self, data) -> Point:
        if not isinstance(data, (list, tuple)):
            raise ValueError(f"point must be a list, got {data!r}")
        if len(data) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {len(data)}")
        return tuple(element_from_json(self.field, c) for c in data)


def _pow(p: int, e: int) -> Fraction:
    return Fraction(p) ** e


@lru_cache(maxsize=None)
def _cutoff(field, w: Fraction, rho: Fraction, closed: bool):
    if isinstance(field, FiniteField):
        return w > rho if closed else w >= rho
    p = field.p
    # smallest integer v with w * p^-v < rho  (<= rho when closed)
    v = 0
    def ok(v):
        val = w * _pow(p, -v)
        return val <= rho if closed else val < rho
    if ok(v):
        while ok(v - 1):
            v -= 1
    else:
        while not ok(v):
            v += 1
    return v


def _truncate_elem(c: FieldElement, cut):
    if isinstance(c, FFElement):
        return c if cut else c.field.zero
    v = c.valuation
    if v is None or v >= cut:
        return c.field.zero
    k = cut - v
    f = c.field
    if k >= f.precision:
        return c
    return f.element(v, c.unit % f.p ** k, c.precision)


def space_from_json(data: dict) -> Space | None:
    """Parse ``{"field": ..., "dim": n, "weights": [...]}``; dim 0 gives None."""
    field = field_from_json(data["field"])
    dim = int(data.get("dim", len(data.get("weights", []))))
    if dim == 0:
        return None
    weights = data.get("weights", ["1"] * dim)
    if len(weights) != dim:
        raise ValueError(f"weights has {len(weights)} entries but dim is {dim}")
    return Space(field, [parse_rational(w) for w in weights])


# Function-style API.

def norm(space: Space, x: Point) -> NormValue:
    return space.norm(x)


def sub(space: Space, x: Point, y: Point) -> Point:
    return space.sub(x, y)


def add_points(space: Space, x: Point, y: Point) -> Point:
    return space.add(x, y)


def scalar_mul(space: Space, lam: FieldElement, x: Point) -> Point:
    return space.scale(lam, x)


def value_set(space: Space, lo=None, hi=None) -> list[NormValue]:
    return space.value_set(lo, hi)


def iter_pairs(points: Sequence[Point]) -> Iterator[tuple[Point, Point]]:
    return itertools.combinations(points, 2)


def unique_sorted(space: Space, pts: Iterable[Point]) -> list[Point]:
    return sorted(set(pts), key=space.sort_key)
