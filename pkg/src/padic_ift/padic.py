"""Elements of Q_p at a fixed absolute working precision.

A :class:`PadicScalar` stands for ``p**val * unit + O(p**precision)``: the
value is known modulo ``p**precision``.  Zero at precision is flagged by
``val is None``.  Results of arithmetic never claim more precision than the
operands justify, and never exceed the larger of the operands' precisions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import DivisionByZeroAtPrecision, ParseError, PrimeMismatch

DEFAULT_PRECISION = 32


def valuation(n, p):
    """p-adic valuation of a nonzero int or Fraction."""
    n = Fraction(n)
    if n == 0:
        raise ValueError("valuation of 0 is infinite")
    v = 0
    num, den = n.numerator, n.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def rational_norm(x, p):
    """|x|_p as an exact Fraction (0 for x == 0)."""
    x = Fraction(x)
    if x == 0:
        return Fraction(0)
    return Fraction(p) ** -valuation(x, p)


def _strip(u, p):
    k = 0
    while u % p == 0:
        u //= p
        k += 1
    return k, u


@dataclass(frozen=True, eq=False)
class PadicScalar:
    prime: int
    val: int | None
    unit: int
    precision: int

    __hash__ = None  # equality is "equal at precision", which is not transitive

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, prime, precision=DEFAULT_PRECISION):
        return cls(prime, None, 0, precision)

    @classmethod
    def _normalized(cls, prime, v, u, precision):
        """Build p**v * u known mod p**precision, for any integer u."""
        digits = precision - v
        if digits <= 0:
            return cls(prime, None, 0, precision)
        u %= prime**digits
        if u == 0:
            return cls(prime, None, 0, precision)
        k, u = _strip(u, prime)
        return cls(prime, v + k, u, precision)

    @classmethod
    def from_rational(cls, x, prime, precision=DEFAULT_PRECISION):
        x = Fraction(x)
        if x == 0:
            return cls.zero(prime, precision)
        v = valuation(x, prime)
        if v >= precision:
            return cls.zero(prime, precision)
        num = x.numerator
        den = x.denominator
        if v > 0:
            num //= prime**v
        elif v < 0:
            den //= prime ** (-v)
        mod = prime ** (precision - v)
        return cls(prime, v, num * pow(den, -1, mod) % mod, precision)

    @classmethod
    def from_digits(cls, prime, val, digits, precision):
        u = sum(d * prime**i for i, d in enumerate(digits))
        return cls._normalized(prime, val, u, precision)

    def coerce(self, other):
        if isinstance(other, PadicScalar):
            if other.prime != self.prime:
                raise PrimeMismatch(f"{self.prime} vs {other.prime}")
            return other
        if isinstance(other, (int, Rational)) and not isinstance(other, bool):
            return PadicScalar.from_rational(other, self.prime, self.precision)
        return NotImplemented

    # -- inspection -------------------------------------------------------

    @property
    def is_zero(self):
        return self.val is None

    @property
    def relative_precision(self):
        """Number of significant base-p digits retained (0 for zero)."""
        return 0 if self.val is None else self.precision - self.val

    @property
    def valuation(self):
        """Valuation, or the precision floor for zero-at-precision."""
        return self.precision if self.val is None else self.val

    def norm(self):
        if self.val is None:
            return Fraction(0)
        return Fraction(self.prime) ** -self.val

    def to_fraction(self):
        """The canonical rational representative p**val * unit."""
        if self.val is None:
            return Fraction(0)
        return Fraction(self.prime) ** self.val * self.unit

    def residue(self, m):
        """Integer in [0, p**m) congruent to self; needs val >= 0 and m <= precision."""
        if m > self.precision:
            raise ValueError(f"residue mod p^{m} needs precision >= {m}")
        if self.val is None:
            return 0
        if self.val < 0:
            raise ValueError("residue of a non-integral element")
        return self.prime**self.val * self.unit % self.prime**m

    def digits(self):
        """Base-p digits of the unit part, least significant first."""
        out = []
        u = self.unit
        for _ in range(self.relative_precision):
            u, d = divmod(u, self.prime)
            out.append(d)
        return out

    def with_precision(self, precision):
        """Truncate to a lower absolute precision (never increases it)."""
        precision = min(precision, self.precision)
        if self.val is None:
            return PadicScalar.zero(self.prime, precision)
        return PadicScalar._normalized(self.prime, self.val, self.unit, precision)

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        other = self.coerce(other)
        if other is NotImplemented:
            return other
        prec = min(self.precision, other.precision)
        if self.val is None:
            return other.with_precision(prec)
        if other.val is None:
            return self.with_precision(prec)
        v = min(self.val, other.val)
        u = self.unit * self.prime ** (self.val - v) + other.unit * self.prime ** (other.val - v)
        return PadicScalar._normalized(self.prime, v, u, prec)

    __radd__ = __add__

    def __neg__(self):
        if self.val is None:
            return self
        return PadicScalar._normalized(self.prime, self.val, -self.unit, self.precision)

    def __sub__(self, other):
        other = self.coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self.coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self.coerce(other)
        if other is NotImplemented:
            return other
        cap = max(self.precision, other.precision)
        if self.val is None or other.val is None:
            va = self.precision if self.val is None else self.val
            vb = other.precision if other.val is None else other.val
            # a zero factor known mod p^P times something of valuation v is 0 mod p^(P+v)
            prec = min(va + vb, cap)
            return PadicScalar.zero(self.prime, prec)
        v = self.val + other.val
        rel = min(self.relative_precision, other.relative_precision)
        return PadicScalar._normalized(self.prime, v, self.unit * other.unit, min(v + rel, cap))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self.coerce(other)
        if other is NotImplemented:
            return other
        if other.val is None:
            raise DivisionByZeroAtPrecision(f"divisor is O({self.prime}^{other.precision})")
        cap = max(self.precision, other.precision)
        if self.val is None:
            return PadicScalar.zero(self.prime, min(self.precision - other.val, cap))
        v = self.val - other.val
        rel = min(self.relative_precision, other.relative_precision)
        mod = self.prime**rel
        u = self.unit * pow(other.unit, -1, mod)
        return PadicScalar._normalized(self.prime, v, u, min(v + rel, cap))

    def __rtruediv__(self, other):
        other = self.coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return PadicScalar.from_rational(1, self.prime, self.precision) / self**-n
        result = PadicScalar.from_rational(1, self.prime, self.precision)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        other = self.coerce(other)
        if other is NotImplemented:
            return other
        return (self - other).is_zero

    # -- text / JSON ------------------------------------------------------

    def __str__(self):
        p = self.prime
        if self.val is None:
            return f"O({p}^{self.precision})"
        terms = []
        for i, d in enumerate(self.digits()):
            if i == 0:
                terms.append(str(d))
            elif i == 1:
                terms.append(f"{d}*{p}")
            else:
                terms.append(f"{d}*{p}^{i}")
        terms.append(f"O({p}^{self.relative_precision})")
        return f"{p}^{self.val} * (" + " + ".join(terms) + ")"

    def __repr__(self):
        return f"PadicScalar({self})"

    _TEXT = re.compile(r"^\s*(\d+)\^(-?\d+)\s*\*\s*\((.*)\)\s*$")
    _ZERO = re.compile(r"^\s*O\((\d+)\^(-?\d+)\)\s*$")
    _TERM = re.compile(r"^(\d+)(?:\*(\d+)(?:\^(\d+))?)?$")

    @classmethod
    def parse(cls, text):
        """Inverse of ``str``: ``p^v * (d0 + d1*p + d2*p^2 + O(p^k))``."""
        m = cls._ZERO.match(text)
        if m:
            return cls.zero(int(m.group(1)), int(m.group(2)))
        m = cls._TEXT.match(text)
        if not m:
            raise ParseError(f"not a p-adic literal: {text!r}")
        p, v = int(m.group(1)), int(m.group(2))
        parts = [t.strip() for t in m.group(3).split("+")]
        tail = cls._ZERO.match(parts[-1])
        if not tail or int(tail.group(1)) != p:
            raise ParseError(f"missing O({p}^k) term in {text!r}")
        rel = int(tail.group(2))
        digits = [0] * rel
        for i, t in enumerate(parts[:-1]):
            tm = cls._TERM.match(t)
            if not tm:
                raise ParseError(f"bad term {t!r}")
            d = int(tm.group(1))
            power = 0 if tm.group(2) is None else int(tm.group(3) or 1)
            if tm.group(2) is not None and int(tm.group(2)) != p:
                raise ParseError(f"term {t!r} uses a different prime")
            if power >= rel:
                raise ParseError(f"term {t!r} beyond stated precision")
            digits[power] = d
        return cls.from_digits(p, v, digits, v + rel)

    def to_json(self):
        return {
            "prime": self.prime,
            "val": self.val,
            "digits": self.digits(),
            "precision": self.precision,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            p, prec = int(obj["prime"]), int(obj["precision"])
            if obj["val"] is None:
                return cls.zero(p, prec)
            return cls.from_digits(p, int(obj["val"]), obj["digits"], prec)
        except (KeyError, TypeError) as exc:
            raise ParseError(f"bad p-adic JSON {obj!r}: {exc}") from exc


def padic(x, prime, precision=DEFAULT_PRECISION):
    """Coerce int / Fraction / PadicScalar to a PadicScalar."""
    if isinstance(x, PadicScalar):
        if x.prime != prime:
            raise PrimeMismatch(f"{x.prime} vs {prime}")
        return x
    return PadicScalar.from_rational(x, prime, precision)


def norm(x, prime=None):
    if isinstance(x, PadicScalar):
        return x.norm()
    return rational_norm(x, prime)


def arith(a, b, op):
    """Field operation by name: one of add, sub, mul, div."""
    if isinstance(a, PadicScalar) and isinstance(b, PadicScalar) and a.prime != b.prime:
        raise PrimeMismatch(f"{a.prime} vs {b.prime}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")
