"""Exact scalars for non-Archimedean fields.

Two families are supported:

* ``FiniteField(q)`` for q prime or q = 4, always with the trivial
  absolute value (|λ| = 1 for λ ≠ 0).
* ``PadicField(p, precision, window)``: floating-valuation p-adic numbers
  carrying ``precision`` significant base-p digits and a hard valuation
  window.

Absolute values are returned as :class:`fractions.Fraction`.
"""

from __future__ import annotations

import random
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Union


class ScalarError(ArithmeticError):
    pass


class ValuationOverflow(ScalarError):
    """A p-adic result fell outside the valuation window."""


class FieldMismatch(ScalarError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    k = 3
    while k * k <= n:
        if n % k == 0:
            return False
        k += 2
    return True


def _ord(n: int, p: int) -> int:
    """Exponent of p in the nonzero integer n."""
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


# F_4 = F_2[x]/(x^2 + x + 1), elements indexed 0, 1, x, x^2.  The index is
# also the bit pattern of the polynomial (x^2 = x + 1 = 0b11).
F4_LABELS = ("0", "1", "x", "x^2")
F4_ADD = (
    (0, 1, 2, 3),
    (1, 0, 3, 2),
    (2, 3, 0, 1),
    (3, 2, 1, 0),
)
F4_MUL = (
    (0, 0, 0, 0),
    (0, 1, 2, 3),
    (0, 2, 3, 1),
    (0, 3, 1, 2),
)


class FiniteField:
    """F_q with the trivial valuation."""

    __slots__ = ("q", "characteristic", "_elements")
    trivial_valuation = True
    kind = "finite"

    def __init__(self, q: int):
        if q != 4 and not is_prime(q):
            raise ValueError(f"unsupported finite field order {q}: need a prime or 4")
        self.q = q
        self.characteristic = 2 if q == 4 else q
        self._elements = tuple(FFElement(self, i) for i in range(q))

    def __repr__(self):
        return f"FiniteField({self.q})"

    def __eq__(self, other):
        return isinstance(other, FiniteField) and other.q == self.q

    def __hash__(self):
        return hash(("finite", self.q))

    def __reduce__(self):
        return (FiniteField, (self.q,))

    @property
    def zero(self) -> FFElement:
        return self._elements[0]

    @property
    def one(self) -> FFElement:
        return self._elements[1]

    def __call__(self, value) -> FFElement:
        if isinstance(value, FFElement):
            if value.field != self:
                raise FieldMismatch(f"{value!r} is not in {self!r}")
            return value
        if isinstance(value, str):
            if self.q == 4 and value in F4_LABELS:
                return self._elements[F4_LABELS.index(value)]
            value = int(value)
        if isinstance(value, Fraction):
            return self.from_integer(value.numerator) / self.from_integer(value.denominator)
        return self.from_integer(int(value))

    def element(self, index: int) -> FFElement:
        return self._elements[index]

    def from_integer(self, k: int) -> FFElement:
        return self._elements[k % self.characteristic]

    def elements(self) -> tuple[FFElement, ...]:
        return self._elements

    def units(self) -> tuple[FFElement, ...]:
        return self._elements[1:]

    def random_element(self, rng: random.Random, nonzero: bool = False) -> FFElement:
        lo = 1 if nonzero else 0
        return self._elements[rng.randrange(lo, self.q)]

    def to_json(self) -> dict:
        return {"kind": "finite", "q": self.q}

    # raw index arithmetic
    def _add(self, a: int, b: int) -> int:
        if self.q == 4:
            return F4_ADD[a][b]
        return (a + b) % self.q

    def _neg(self, a: int) -> int:
        return a if self.q == 4 else (-a) % self.q

    def _mul(self, a: int, b: int) -> int:
        if self.q == 4:
            return F4_MUL[a][b]
        return (a * b) % self.q

    def _inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inversion of zero")
        if self.q == 4:
            return F4_MUL[a].index(1)
        return pow(a, -1, self.q)


class FFElement:
    __slots__ = ("field", "index")

    def __init__(self, field: FiniteField, index: int):
        self.field = field
        self.index = index

    def __repr__(self):
        if self.field.q == 4:
            return f"F4({F4_LABELS[self.index]})"
        return f"F{self.field.q}({self.index})"

    def __eq__(self, other):
        return (isinstance(other, FFElement) and other.index == self.index
                and other.field.q == self.field.q)

    def __hash__(self):
        return hash((self.field.q, self.index))

    def _other(self, other) -> int:
        if isinstance(other, FFElement):
            if other.field.q != self.field.q:
                raise FieldMismatch(f"{self!r} and {other!r}")
            return other.index
        return self.field(other).index

    def __add__(self, other):
        return self.field._elements[self.field._add(self.index, self._other(other))]

    __radd__ = __add__

    def __neg__(self):
        return self.field._elements[self.field._neg(self.index)]

    def __sub__(self, other):
        f = self.field
        return f._elements[f._add(self.index, f._neg(self._other(other)))]

    def __rsub__(self, other):
        return self.field(other) - self

    def __mul__(self, other):
        return self.field._elements[self.field._mul(self.index, self._other(other))]

    __rmul__ = __mul__

    def inv(self) -> FFElement:
        return self.field._elements[self.field._inv(self.index)]

    def __truediv__(self, other):
        return self * self.field(other).inv()

    def is_zero(self) -> bool:
        return self.index == 0

    def abs(self) -> Fraction:
        return _ZERO if self.index == 0 else _ONE

    @property
    def valuation(self):
        return None if self.index == 0 else 0

    @property
    def key(self):
        return self.index

    def to_json(self):
        return self.index


_ZERO = Fraction(0)
_ONE = Fraction(1)


@lru_cache(maxsize=None)
def _padic_abs(p: int, v: int) -> Fraction:
    return Fraction(1, p ** v) if v >= 0 else Fraction(p ** -v)


class PadicField:
    """Q_p truncated to ``precision`` significant digits, valuations in a window."""

    __slots__ = ("p", "precision", "vmin", "vmax", "modulus", "zero", "one")
    trivial_valuation = False
    kind = "padic"

    def __init__(self, p: int, precision: int = 4, window: tuple[int, int] = (-6, 6)):
        vmin, vmax = window
        if not is_prime(p):
            raise ValueError(f"p = {p} is not prime")
        if precision < 1:
            raise ValueError("precision must be positive")
        if not vmin <= 0 <= vmax:
            raise ValueError(f"window {window} must contain 0")
        self.p = p
        self.precision = precision
        self.vmin = vmin
        self.vmax = vmax
        self.modulus = p ** precision
        self.zero = PadicElement(self, None, 0)
        self.one = PadicElement(self, 0, 1)

    @property
    def window(self) -> tuple[int, int]:
        return (self.vmin, self.vmax)

    @property
    def characteristic(self) -> int:
        return 0

    def __repr__(self):
        return f"PadicField({self.p}, precision={self.precision}, window=({self.vmin}, {self.vmax}))"

    def __eq__(self, other):
        return (isinstance(other, PadicField) and other.p == self.p
                and other.precision == self.precision
                and other.vmin == self.vmin and other.vmax == self.vmax)

    def __hash__(self):
        return hash(("padic", self.p, self.precision, self.vmin, self.vmax))

    def __reduce__(self):
        return (PadicField, (self.p, self.precision, self.window))

    def element(self, valuation: int, unit: int, precision: int | None = None) -> PadicElement:
        """Element p^valuation * unit; ``unit`` is reduced mod p^precision."""
        unit %= self.modulus
        if unit == 0:
            return self.zero
        if unit % self.p == 0:
            raise ValueError(f"unit {unit} is divisible by p={self.p}")
        if not self.vmin <= valuation <= self.vmax:
            raise ValuationOverflow(
                f"valuation {valuation} outside window [{self.vmin}, {self.vmax}]")
        return PadicElement(self, valuation, unit, precision)

    def _normalized(self, v: int, s: int, known: int) -> PadicElement:
        # s is known modulo p^(N) relative to p^v; strip leading zeros
        s %= self.modulus
        if s == 0:
            return self.zero
        k = _ord(s, self.p)
        prec = max(0, min(self.precision, known - k))
        return self.element(v + k, s // self.p ** k, prec)

    def __call__(self, value) -> PadicElement:
        if isinstance(value, PadicElement):
            if value.field != self:
                raise FieldMismatch(f"{value!r} is not in {self!r}")
            return value
        if isinstance(value, int):
            return self.from_integer(value)
        return self.from_fraction(Fraction(value))

    def from_integer(self, k: int) -> PadicElement:
        if k == 0:
            return self.zero
        v = _ord(k, self.p)
        return self.element(v, k // self.p ** v)

    def from_fraction(self, x: Fraction) -> PadicElement:
        if x == 0:
            return self.zero
        num, den = x.numerator, x.denominator
        vn, vd = _ord(num, self.p), _ord(den, self.p)
        num //= self.p ** vn
        den //= self.p ** vd
        unit = num * pow(den, -1, self.modulus)
        return self.element(vn - vd, unit)

    def random_element(self, rng: random.Random, nonzero: bool = False,
                       valuations: tuple[int, int] | None = None) -> PadicElement:
        """Uniform valuation in ``valuations`` (default: the window), uniform digits."""
        lo, hi = valuations or self.window
        if not nonzero and rng.randrange(hi - lo + 2) == 0:
            return self.zero
        v = rng.randint(lo, hi)
        digits = [rng.randrange(1, self.p)]
        digits += [rng.randrange(self.p) for _ in range(self.precision - 1)]
        unit = sum(d * self.p ** i for i, d in enumerate(digits))
        return self.element(v, unit)

    def to_json(self) -> dict:
        return {"kind": "padic", "p": self.p, "precision": self.precision,
                "window": [self.vmin, self.vmax]}


class PadicElement:
    """p^valuation * unit with unit in [1, p^N) not divisible by p.

    ``precision`` records how many of the N digits are significant; it is
    below N only after cancellation and does not take part in equality.
    """

    __slots__ = ("field", "valuation", "unit", "precision")

    def __init__(self, field: PadicField, valuation, unit: int, precision: int | None = None):
        self.field = field
        self.valuation = valuation
        self.unit = unit
        self.precision = field.precision if precision is None else precision

    @property
    def digits(self) -> tuple[int, ...]:
        p, u = self.field.p, self.unit
        out = []
        for _ in range(self.field.precision):
            u, d = divmod(u, p)
            out.append(d)
        return tuple(out)

    @property
    def exact(self) -> bool:
        return self.precision == self.field.precision

    def __repr__(self):
        if self.valuation is None:
            return f"Q{self.field.p}(0)"
        return f"Q{self.field.p}({self.to_fraction()})"

    def to_fraction(self) -> Fraction:
        """The rational p^v * unit (a representative of this element)."""
        if self.valuation is None:
            return _ZERO
        return self.unit * _padic_abs(self.field.p, -self.valuation)

    def __eq__(self, other):
        return (isinstance(other, PadicElement) and other.valuation == self.valuation
                and other.unit == self.unit and other.field.p == self.field.p)

    def __hash__(self):
        return hash((self.field.p, self.valuation, self.unit))

    def is_zero(self) -> bool:
        return self.valuation is None

    def abs(self) -> Fraction:
        if self.valuation is None:
            return _ZERO
        return _padic_abs(self.field.p, self.valuation)

    @property
    def key(self):
        if self.valuation is None:
            return (0, 0, 0)
        return (1, self.valuation, self.digits)

    def to_json(self) -> str:
        return str(self.to_fraction())

    def _coerce(self, other) -> PadicElement:
        if isinstance(other, PadicElement):
            if other.field.p != self.field.p:
                raise FieldMismatch(f"{self!r} and {other!r}")
            return other
        return self.field(other)

    def __add__(self, other):
        b = self._coerce(other)
        if self.valuation is None:
            return b
        if b.valuation is None:
            return self
        f = self.field
        va, vb = self.valuation, b.valuation
        v = min(va, vb)
        s = self.unit * f.p ** (va - v) + b.unit * f.p ** (vb - v)
        known = min(va + self.precision, vb + b.precision) - v
        return f._normalized(v, s, known)

    __radd__ = __add__

    def __neg__(self):
        if self.valuation is None:
            return self
        return PadicElement(self.field, self.valuation,
                            (-self.unit) % self.field.modulus, self.precision)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        b = self._coerce(other)
        if self.valuation is None or b.valuation is None:
            return self.field.zero
        return self.field.element(self.valuation + b.valuation,
                                  self.unit * b.unit,
                                  min(self.precision, b.precision))

    __rmul__ = __mul__

    def inv(self) -> PadicElement:
        if self.valuation is None:
            raise ZeroDivisionError("inversion of zero")
        f = self.field
        return f.element(-self.valuation, pow(self.unit, -1, f.modulus), self.precision)

    def __truediv__(self, other):
        return self * self._coerce(other).inv()


Field = Union[FiniteField, PadicField]
FieldElement = Union[FFElement, PadicElement]


def field_from_json(data: dict) -> Field:
    kind = data.get("kind")
    if kind == "finite":
        return FiniteField(int(data["q"]))
    if kind == "padic":
        lo, hi = data.get("window", (-6, 6))
        return PadicField(int(data["p"]), int(data.get("precision", 4)), (int(lo), int(hi)))
    raise ValueError(f"unknown field kind {kind!r}")


def element_from_json(field: Field, value) -> FieldElement:
    """Finite fields: an index in range(q) or an F_4 label; Q_p: a rational string."""
    if isinstance(field, FiniteField):
        if isinstance(value, bool):
            raise ValueError(f"not a field element: {value!r}")
        if isinstance(value, str) and value not in F4_LABELS:
            value = int(value)
        if isinstance(value, int):
            if not 0 <= value < field.q:
                raise ValueError(f"element index {value} out of range for F_{field.q}")
            return field.element(value)
        return field(value)
    if isinstance(value, float):
        raise ValueError("floats are not accepted as p-adic elements")
    return field(value)


# Function-style API mirroring the operators.

def abs_value(x: FieldElement) -> Fraction:
    return x.abs()


def add(x: FieldElement, y: FieldElement) -> FieldElement:
    return x + y


def neg(x: FieldElement) -> FieldElement:
    return -x


def mul(x: FieldElement, y: FieldElement) -> FieldElement:
    return x * y


def inv(x: FieldElement) -> FieldElement:
    return x.inv()


def from_integer(field: Field, k: int) -> FieldElement:
    return field.from_integer(k)


def smallest_expanding_scalar(field: Field) -> FieldElement | None:
    """The canonical α with the smallest |α| > 1 (1/p for Q_p); None if trivial."""
    if field.trivial_valuation:
        return None
    return field.element(-1, 1)


def iter_elements(field: Field) -> Iterator[FieldElement]:
    if not isinstance(field, FiniteField):
        raise TypeError("only finite fields can be enumerated")
    return iter(field.elements())
