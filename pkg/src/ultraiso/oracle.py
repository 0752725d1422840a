"""Brute-force ground truth for small finite spaces.

Nothing here goes through the field, norm or tree code of the rest of the
package: points are tuples of small integers, F_4 is multiplied as
polynomials over F_2 modulo x^2 + x + 1, and the distance of two points is
the largest weight of a coordinate where they differ (over a finite field
every nonzero scalar has absolute value 1).
"""

from __future__ import annotations

import itertools
import math
import os
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

DEFAULT_CAP = 10 ** 6


class CapExceeded(RuntimeError):
    def __init__(self, bound: int, cap: int):
        super().__init__(f"{bound} candidate maps exceed the cap of {cap}")
        self.bound = bound
        self.cap = cap


def _f4_mul(a: int, b: int) -> int:
    prod = 0
    for k in range(2):
        if b >> k & 1:
            prod ^= a << k
    if prod & 0b100:
        prod ^= 0b111
    return prod


class OracleSpace:
    """F_q^n (q prime or 4) with max norm weights, as integer tuples."""

    def __init__(self, q: int, weights: Sequence):
        if q != 4 and (q < 2 or any(q % d == 0 for d in range(2, int(q ** 0.5) + 1))):
            raise ValueError(f"unsupported field order {q}")
        self.q = q
        self.weights = tuple(Fraction(w) for w in weights)
        self.dim = len(self.weights)
        self.points = list(itertools.product(range(q), repeat=self.dim))
        self.index = {x: i for i, x in enumerate(self.points)}
        n = len(self.points)
        self.dist = [[self._dist(self.points[a], self.points[b]) for b in range(n)]
                     for a in range(n)]
        self.norms = [self.dist[a][0] for a in range(n)]

    @classmethod
    def of(cls, space) -> OracleSpace:
        """Mirror a finite :class:`~ultraiso.spaces.Space` (only q and weights are read)."""
        return cls(space.field.q, space.weights)

    def _dist(self, x, y) -> Fraction:
        return max((w for w, a, b in zip(self.weights, x, y) if a != b), default=Fraction(0))

    def add(self, a: int, b: int) -> int:
        return a ^ b if self.q == 4 else (a + b) % self.q

    def mul(self, a: int, b: int) -> int:
        return _f4_mul(a, b) if self.q == 4 else (a * b) % self.q

    def vadd(self, x, y):
        return tuple(self.add(a, b) for a, b in zip(x, y))

    def vscale(self, c, x):
        return tuple(self.mul(c, a) for a in x)

    def spheres(self) -> dict[Fraction, list[int]]:
        out: dict = {}
        for i in range(1, len(self.points)):
            out.setdefault(self.norms[i], []).append(i)
        return dict(sorted(out.items()))

    def candidate_bound(self) -> int:
        return math.prod(math.factorial(len(s)) for s in self.spheres().values())


@dataclass(frozen=True)
class OracleMap:
    """A centred isometry as the tuple of image indices of ``OracleSpace.points``."""

    images: tuple[int, ...]

    def pairs(self, osp: OracleSpace) -> list[tuple[tuple, tuple]]:
        return [(osp.points[i], osp.points[j]) for i, j in enumerate(self.images)]

    def as_table(self, space) -> dict:
        """Translate into a point table of the given ``Space``."""
        osp = OracleSpace.of(space)
        el = space.field.element
        conv = lambda x: tuple(el(c) for c in x)  # noqa: E731
        return {conv(a): conv(b) for a, b in self.pairs(osp)}


def is_isometry(osp: OracleSpace, images: Sequence[int]) -> bool:
    """Pairwise check of the definition, independent of how images were found."""
    n = len(images)
    if sorted(images) != list(range(n)):
        return False
    d = osp.dist
    return all(d[images[a]][images[b]] == d[a][b] for a in range(n) for b in range(a))


def is_linear(osp: OracleSpace, images: Sequence[int]) -> bool:
    basis_img = []
    for k in range(osp.dim):
        e = tuple(1 if i == k else 0 for i in range(osp.dim))
        basis_img.append(osp.points[images[osp.index[e]]])
    for i, x in enumerate(osp.points):
        acc = (0,) * osp.dim
        for c, b in zip(x, basis_img):
            acc = osp.vadd(acc, osp.vscale(c, b))
        if osp.points[images[i]] != acc:
            return False
    return True


def is_affine(osp: OracleSpace, images: Sequence[int]) -> bool:
    base = osp.points[images[0]]
    neg = tuple(osp.mul(osp.q - 1 if osp.q != 4 else 1, c) for c in base)
    shifted = [osp.index[osp.vadd(osp.points[j], neg)] for j in images]
    return is_linear(osp, shifted)


def _search(osp: OracleSpace, first_choice: int | None = None,
            rng: random.Random | None = None) -> Iterator[tuple[int, ...]]:
    """Depth-first search over norm-preserving partial maps, pruned by distances.

    With ``rng`` the candidates at each step are tried in random order.
    """
    n = len(osp.points)
    d = osp.dist
    order = list(range(1, n))
    same_norm = {i: [j for j in range(1, n) if osp.norms[j] == osp.norms[i]] for i in order}
    images = [0] * n
    used = [False] * n
    used[0] = True

    def rec(pos):
        if pos == len(order):
            yield tuple(images)
            return
        a = order[pos]
        cands = same_norm[a]
        if pos == 0 and first_choice is not None:
            cands = [first_choice]
        elif rng is not None:
            cands = rng.sample(cands, len(cands))
        for b in cands:
            if used[b]:
                continue
            ok = True
            for prev in order[:pos]:
                if d[b][images[prev]] != d[a][prev]:
                    ok = False
                    break
            if not ok:
                continue
            images[a] = b
            used[b] = True
            yield from rec(pos + 1)
            used[b] = False

    if n == 1:
        yield (0,)
        return
    yield from rec(0)


def iter_centred_isometries(space) -> Iterator[OracleMap]:
    """Lazily yield every centred isometry (no cap)."""
    osp = OracleSpace.of(space)
    for images in _search(osp):
        yield OracleMap(images)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("ULTRAISO_THREADS", "1")))
    except ValueError:
        return 1


def _collect(args):
    q, weights, first = args
    osp = OracleSpace(q, weights)
    return list(_search(osp, first))


def enumerate_centred_isometries(space, cap: int = DEFAULT_CAP) -> list[OracleMap]:
    """All centred isometries; raises :class:`CapExceeded` before searching when
    the product of per-sphere factorials exceeds ``cap``."""
    osp = OracleSpace.of(space)
    bound = osp.candidate_bound()
    if bound > cap:
        raise CapExceeded(bound, cap)
    threads = _threads()
    if threads > 1 and len(osp.points) > 1:
        first = 1
        firsts = [j for j in range(1, len(osp.points)) if osp.norms[j] == osp.norms[first]]
        with ProcessPoolExecutor(max_workers=threads) as ex:
            parts = ex.map(_collect, [(osp.q, osp.weights, j) for j in firsts])
            found = [m for part in parts for m in part]
    else:
        found = list(_search(osp))
    out = []
    for images in found:
        if not is_isometry(osp, images):
            raise AssertionError(f"search produced a non-isometry {images}")
        out.append(OracleMap(images))
    return out


def sample_centred_isometries(space, n: int, rng: random.Random) -> list[OracleMap]:
    """``n`` centred isometries found by randomised search (repeats possible)."""
    osp = OracleSpace.of(space)
    out = []
    for _ in range(n):
        images = next(_search(osp, rng=rng))
        if not is_isometry(osp, images):
            raise AssertionError(f"search produced a non-isometry {images}")
        out.append(OracleMap(images))
    return out


@dataclass(frozen=True)
class IsometryCensus:
    q: int
    weights: tuple[Fraction, ...]
    total: int | None
    linear: int
    affine: int
    nonlinear_example: OracleMap | None = None
    sampled: bool = False
    samples: int = 0
    candidate_bound: int = 0

    def to_json(self, osp: OracleSpace | None = None) -> dict:
        out = {
            "q": self.q,
            "weights": [str(w) for w in self.weights],
            "total": self.total,
            "linear": self.linear,
            "affine": self.affine,
            "sampled": self.sampled,
            "candidate_bound": self.candidate_bound,
        }
        if self.sampled:
            out["samples"] = self.samples
        if self.nonlinear_example is not None:
            osp = osp or OracleSpace(self.q, self.weights)
            out["nonlinear_example"] = [[list(a), list(b)]
                                        for a, b in self.nonlinear_example.pairs(osp)]
        return out


def census(space, cap: int = DEFAULT_CAP, samples: int = 2000,
           rng: random.Random | None = None) -> IsometryCensus:
    """Count centred isometries and how many are linear / affine.

    Beyond the cap, ``samples`` isometries are drawn by randomised search
    instead: ``total`` is then unknown (None) and ``linear``/``affine``
    count hits among the samples only.
    """
    osp = OracleSpace.of(space)
    bound = osp.candidate_bound()
    if bound <= cap:
        maps = enumerate_centred_isometries(space, cap)
        lin = [is_linear(osp, m.images) for m in maps]
        aff = [is_affine(osp, m.images) for m in maps]
        example = next((m for m, ok in zip(maps, lin) if not ok), None)
        return IsometryCensus(osp.q, osp.weights, len(maps), sum(lin), sum(aff), example,
                              candidate_bound=bound)
    rng = rng or random.Random(0)
    lin = aff = 0
    example = None
    for m in sample_centred_isometries(space, samples, rng):
        ok = is_linear(osp, m.images)
        lin += ok
        aff += is_affine(osp, m.images)
        if not ok and example is None:
            example = m
    return IsometryCensus(osp.q, osp.weights, None, lin, aff, example, True, samples, bound)


def all_centred_isometries_linear(space) -> bool:
    """Search lazily and stop at the first nonlinear centred isometry."""
    osp = OracleSpace.of(space)
    return all(is_linear(osp, images) for images in _search(osp))


@dataclass(frozen=True)
class IsoscelesReport:
    passed: bool
    checked: int
    witness: tuple | None = None


def check_isosceles_exhaustive(space) -> IsoscelesReport:
    """||x - z|| < ||y - z|| forces ||y - x|| = ||y - z||, over all ordered triples."""
    osp = OracleSpace.of(space)
    d = osp.dist
    n = len(osp.points)
    for x in range(n):
        for y in range(n):
            for z in range(n):
                if d[x][z] < d[y][z] and d[y][x] != d[y][z]:
                    pts = osp.points
                    return IsoscelesReport(False, n ** 3, (pts[x], pts[y], pts[z]))
    return IsoscelesReport(True, n ** 3)
