"""Extending an isometry between spheres to an isometry of the whole space.

Given an isometry tau of r S_X onto r S_Y, fix x0 on r S_X and a scalar
alpha with |alpha| > 1.  Then

* on the open ball B(0, r):   x -> tau(x + x0) - tau(x0)
* on the sphere S(r):         x -> tau(x)
* on r|alpha|^(n-1) < ||x|| <= r|alpha|^n:   x -> alpha^n g(x / alpha^n),

where g is the map on B[0, r] from the first two lines.  Over a field with
the trivial valuation there is no such alpha, and isometries of spheres
need not extend at all; :func:`extension_obstruction` reports the ways this
can be detected from the spaces alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .geometry import Domain, decompose_sphere, relative_resolution, ultrametric_signature
from .isotree import VerifyResult, verify_isometry
from .scalars import FieldElement, smallest_expanding_scalar
from .spaces import Point, Space, parse_rational

EXTENDED = "Extended"
OBSTRUCTED = "Obstructed"

RADIUS_MISMATCH = "RadiusMismatch"
VALUE_SET_MISMATCH = "ValueSetMismatch"
TRIVIAL_VALUATION = "TrivialValuation"
NOT_ISOMETRIC = "NotIsometric"


class TingleyError(ValueError):
    pass


@dataclass(frozen=True)
class SphereIsometrySpec:
    """A map from r S_X onto r2 S_Y.

    ``tau`` is either exact (a callable, ``resolution`` None) or known only
    modulo open balls of radius ``resolution`` (a table of representatives).
    """

    X: Space
    Y: Space
    r: Fraction
    r2: Fraction
    tau: Callable[[Point], Point]
    resolution: Fraction | None = None
    pairs: tuple | None = field(default=None, compare=False)

    @classmethod
    def from_callable(cls, X: Space, Y: Space, r, r2, fn) -> SphereIsometrySpec:
        return cls(X, Y, parse_rational(r), parse_rational(r2), fn)

    @classmethod
    def from_pairs(cls, X: Space, Y: Space, r, r2, pairs: Sequence[tuple[Point, Point]],
                   resolution=None) -> SphereIsometrySpec:
        r, r2 = parse_rational(r), parse_rational(r2)
        rho = parse_rational(resolution) if resolution else None
        if rho is None and not X.is_finite:
            raise TingleyError("p-adic sphere tables need a resolution")
        table = {}
        for x, y in pairs:
            if X.norm(x) != r:
                raise TingleyError(f"{x!r} is not on the sphere of radius {r}")
            if Y.norm(y) != r2:
                raise TingleyError(f"{y!r} is not on the sphere of radius {r2}")
            key = X.truncate(x, rho)
            if key in table and table[key] != Y.truncate(y, rho):
                raise TingleyError(f"conflicting images for {x!r}")
            table[key] = y

        def tau(x):
            try:
                return table[X.truncate(x, rho)]
            except KeyError:
                raise TingleyError(f"no image given for {x!r}") from None
        return cls(X, Y, r, r2, tau, rho, tuple(pairs))

    def sphere_domains(self, depth: int = 3) -> tuple[Domain, Domain]:
        if self.resolution is not None:
            rho = rho2 = self.resolution
        else:
            rho = relative_resolution(self.X, self.r, depth)
            rho2 = relative_resolution(self.Y, self.r2, depth)
        return (Domain(self.X, ((self.r, rho),), include_zero=False),
                Domain(self.Y, ((self.r2, rho2),), include_zero=False))

    def verify(self, depth: int = 3) -> VerifyResult:
        dom, cod = self.sphere_domains(depth)
        try:
            return verify_isometry(self.X, self.tau, dom, codomain=self.Y, codomain_domain=cod)
        except TingleyError as exc:
            return VerifyResult(False, None, str(exc))


@dataclass(frozen=True)
class Obstruction:
    reason: str
    detail: dict = field(default_factory=dict)


def _check_sphere(space: Space, r: Fraction) -> None:
    if decompose_sphere(space, r).empty:
        raise TingleyError(f"S({r}) is empty")


def spheres_isometric(X: Space, Y: Space, r, r2) -> bool | None:
    """Exact answer for finite spaces; None when the spheres are infinite."""
    if not (X.is_finite and Y.is_finite):
        return None
    sx = X.sphere_points(r)
    sy = Y.sphere_points(r2)
    return ultrametric_signature(X, sx) == ultrametric_signature(Y, sy)


def extension_obstruction(X: Space, Y: Space, r, r2) -> Obstruction | None:
    """Why an isometry r S_X -> r2 S_Y cannot be (or is not claimed to be) extended.

    A radius mismatch is reported first; for trivially valued fields the
    value sets are then compared.  None means no obstruction is visible
    from the spaces.
    """
    r, r2 = parse_rational(r), parse_rational(r2)
    if X.field != Y.field:
        raise TingleyError(f"fields differ: {X.field!r} vs {Y.field!r}")
    _check_sphere(X, r)
    _check_sphere(Y, r2)
    iso = spheres_isometric(X, Y, r, r2)
    if r != r2:
        return Obstruction(RADIUS_MISMATCH, {"r": r, "r2": r2, "spheres_isometric": iso})
    if X.field.trivial_valuation:
        vx, vy = X.value_set(), Y.value_set()
        if vx != vy:
            return Obstruction(VALUE_SET_MISMATCH, {"X": vx, "Y": vy, "spheres_isometric": iso})
    return None


class ExtendedMap:
    """The global map built from tau, x0 and alpha on B[0, r |alpha|^m]."""

    def __init__(self, spec: SphereIsometrySpec, x0: Point, alpha: FieldElement, m: int):
        self.spec = spec
        self.space = spec.X
        self.x0 = x0
        self.alpha = alpha
        self.a = alpha.abs()
        self.m = m
        self.tau_x0 = spec.tau(x0)
        self.outer = spec.r * self.a ** m

    def inner(self, x: Point) -> Point:
        """The map on B[0, r]."""
        X, Y = self.spec.X, self.spec.Y
        n = X.norm(x)
        if n == 0:
            return Y.zero()
        if n == self.spec.r:
            return self.spec.tau(x)
        if n > self.spec.r:
            raise TingleyError(f"{x!r} is outside B[0, {self.spec.r}]")
        return Y.sub(self.spec.tau(X.add(x, self.x0)), self.tau_x0)

    def shell(self, x: Point) -> int:
        """n >= 0 with r a^(n-1) < ||x|| <= r a^n (0 inside B[0, r])."""
        nx = self.space.norm(x)
        n, bound = 0, self.spec.r
        while nx > bound:
            n += 1
            bound *= self.a
        return n

    def __call__(self, x: Point) -> Point:
        n = self.shell(x)
        if n == 0:
            return self.inner(x)
        if n > self.m:
            raise TingleyError(f"{x!r} lies beyond the window B[0, {self.outer}]")
        X, Y = self.spec.X, self.spec.Y
        an = self.alpha
        for _ in range(n - 1):
            an = an * self.alpha
        return Y.scale(an, self.inner(X.scale(an.inv(), x)))


@dataclass(frozen=True)
class ExtensionResult:
    verdict: str
    obstruction: Obstruction | None = None
    extension: ExtendedMap | None = None
    domain: Domain | None = None
    verification: VerifyResult | None = None

    @property
    def extended(self) -> bool:
        return self.verdict == EXTENDED


def extension_domain(spec: SphereIsometrySpec, alpha: FieldElement, m: int,
                     depth: int = 3) -> Domain:
    """Spheres of norm r p^-depth up to r |alpha|^m.

    For exact tau each sphere is enumerated at relative depth; a tabulated
    tau fixes the resolution inside B[0, r] and it scales with each shell.
    """
    X = spec.X
    a = alpha.abs()
    hi = spec.r * a ** m
    if spec.resolution is None:
        lo = spec.r / Fraction(X.p) ** depth
        return Domain.norm_range(X, lo, hi, depth)
    rho = spec.resolution
    shells = []
    for s in X.value_set(rho, hi):
        scale = Fraction(1)
        while s > spec.r * scale:
            scale *= a
        shells.append((s, rho * scale))
    return Domain(X, tuple(shells))


def extend_sphere_isometry(spec: SphereIsometrySpec, x0: Point | None = None,
                           alpha: FieldElement | None = None, m: int = 2, depth: int = 3,
                           verify: bool = True) -> ExtensionResult:
    """Extend tau to B[0, r |alpha|^m] and verify the result on a finite domain."""
    if m < 0:
        raise TingleyError("m must be non-negative")
    obstruction = extension_obstruction(spec.X, spec.Y, spec.r, spec.r2)
    if obstruction is not None:
        return ExtensionResult(OBSTRUCTED, obstruction)
    if spec.X.field.trivial_valuation:
        return ExtensionResult(OBSTRUCTED, Obstruction(TRIVIAL_VALUATION))
    if alpha is None:
        alpha = smallest_expanding_scalar(spec.X.field)
    if alpha.abs() <= 1:
        raise TingleyError(f"alpha must satisfy |alpha| > 1, got {alpha.abs()}")
    if x0 is None:
        x0 = decompose_sphere(spec.X, spec.r).representatives[0]
    elif spec.X.norm(x0) != spec.r:
        raise TingleyError(f"x0 must lie on the sphere of radius {spec.r}")
    if verify:
        res = spec.verify(depth)
        if not res:
            return ExtensionResult(OBSTRUCTED, Obstruction(NOT_ISOMETRIC, {"witness": res.witness,
                                                                            "reason": res.reason}),
                                   verification=res)
    ext = ExtendedMap(spec, x0, alpha, m)
    dom = extension_domain(spec, alpha, m, depth)
    res = None
    if verify:
        res = verify_isometry(spec.X, ext, dom, codomain=spec.Y,
                              codomain_domain=Domain(spec.Y, dom.shells, dom.include_zero))
    return ExtensionResult(EXTENDED, None, ext, dom, res)
