"""Q_p^n with the maximum norm, matrices, and balls.

Balls are indexed by a radius exponent ``k``: ``BallSpec(center, k)`` is the
set ``{y : ||y - center|| <= p**-k}``.  Since norms only take the values
``p**j``, this is the same set as the open ball of any radius in
``(p**-k, p**(1-k)]``, so it is simultaneously open and closed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import DimensionMismatch, NormNotContractive, NotInvertibleAtPrecision, PrimeMismatch
from .padic import DEFAULT_PRECISION, PadicScalar, padic


@dataclass(frozen=True, eq=False)
class UltraVector:
    entries: tuple[PadicScalar, ...]

    __hash__ = None

    @classmethod
    def of(cls, values, prime, precision=DEFAULT_PRECISION):
        if isinstance(values, UltraVector):
            if values.prime != prime:
                raise PrimeMismatch(f"{values.prime} vs {prime}")
            return values
        return cls(tuple(padic(v, prime, precision) for v in values))

    @property
    def prime(self):
        return self.entries[0].prime

    @property
    def precision(self):
        return min(e.precision for e in self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def norm(self):
        return max(e.norm() for e in self.entries)

    def valuation(self):
        """min_i val(x_i); the precision floor if every entry is zero."""
        return min(e.valuation for e in self.entries)

    def is_zero(self):
        return all(e.is_zero for e in self.entries)

    def _check(self, other):
        if len(other) != len(self):
            raise DimensionMismatch(f"length {len(self)} vs {len(other)}")

    def __add__(self, other):
        other = UltraVector.of(other, self.prime, self.precision)
        self._check(other)
        return UltraVector(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other):
        other = UltraVector.of(other, self.prime, self.precision)
        self._check(other)
        return UltraVector(tuple(a - b for a, b in zip(self, other)))

    def __neg__(self):
        return UltraVector(tuple(-a for a in self))

    def scale(self, c):
        return UltraVector(tuple(a * c for a in self))

    def __eq__(self, other):
        if not isinstance(other, (UltraVector, list, tuple)):
            return NotImplemented
        if len(other) != len(self):
            return False
        return (self - other).is_zero()

    def to_fractions(self):
        return tuple(e.to_fraction() for e in self.entries)

    def residues(self, m):
        return tuple(e.residue(m) for e in self.entries)

    def __str__(self):
        return "[" + ", ".join(str(e) for e in self.entries) + "]"

    def to_json(self):
        return [e.to_json() for e in self.entries]

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(PadicScalar.from_json(e) for e in obj))


@dataclass(frozen=True, eq=False)
class UltraMatrix:
    rows: tuple[tuple[PadicScalar, ...], ...]

    __hash__ = None

    @classmethod
    def of(cls, rows, prime, precision=DEFAULT_PRECISION):
        if isinstance(rows, UltraMatrix):
            return rows
        return cls(tuple(tuple(padic(v, prime, precision) for v in row) for row in rows))

    @classmethod
    def identity(cls, n, prime, precision=DEFAULT_PRECISION):
        return cls.of([[int(i == j) for j in range(n)] for i in range(n)], prime, precision)

    @property
    def prime(self):
        return self.rows[0][0].prime

    @property
    def precision(self):
        return min(e.precision for row in self.rows for e in row)

    @property
    def shape(self):
        return len(self.rows), len(self.rows[0])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def column(self, j):
        return UltraVector(tuple(row[j] for row in self.rows))

    def __add__(self, other):
        other = UltraMatrix.of(other, self.prime, self.precision)
        if other.shape != self.shape:
            raise DimensionMismatch(f"{self.shape} vs {other.shape}")
        return UltraMatrix(tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def __sub__(self, other):
        other = UltraMatrix.of(other, self.prime, self.precision)
        if other.shape != self.shape:
            raise DimensionMismatch(f"{self.shape} vs {other.shape}")
        return UltraMatrix(tuple(tuple(a - b for a, b in zip(r, s)) for r, s in zip(self.rows, other.rows)))

    def __neg__(self):
        return UltraMatrix(tuple(tuple(-a for a in r) for r in self.rows))

    def scale(self, c):
        return UltraMatrix(tuple(tuple(a * c for a in r) for r in self.rows))

    def __matmul__(self, other):
        n, m = self.shape
        if isinstance(other, UltraMatrix):
            m2, k = other.shape
            if m2 != m:
                raise DimensionMismatch(f"{self.shape} @ {other.shape}")
            return UltraMatrix(tuple(
                tuple(_dot(self.rows[i], [other.rows[l][j] for l in range(m)]) for j in range(k))
                for i in range(n)
            ))
        v = UltraVector.of(other, self.prime, self.precision)
        if len(v) != m:
            raise DimensionMismatch(f"{self.shape} @ vector of length {len(v)}")
        return UltraVector(tuple(_dot(row, v.entries) for row in self.rows))

    def __eq__(self, other):
        if not isinstance(other, UltraMatrix):
            return NotImplemented
        return other.shape == self.shape and all(e.is_zero for r in (self - other).rows for e in r)

    def to_fractions(self):
        return tuple(tuple(e.to_fraction() for e in r) for r in self.rows)

    def __str__(self):
        return "[" + ", ".join(str(UltraVector(r)) for r in self.rows) + "]"

    def to_json(self):
        return [[e.to_json() for e in r] for r in self.rows]

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(tuple(PadicScalar.from_json(e) for e in r) for r in obj))


def _dot(row, col):
    acc = row[0] * col[0]
    for a, b in zip(row[1:], col[1:]):
        acc = acc + a * b
    return acc


def op_norm(A: UltraMatrix) -> Fraction:
    """Operator norm for max norms on both sides: the largest entry norm."""
    return max(e.norm() for row in A.rows for e in row)


def invert(A: UltraMatrix) -> UltraMatrix:
    """Gauss-Jordan inverse, pivoting on the entry of largest norm."""
    n, m = A.shape
    if n != m:
        raise DimensionMismatch(f"cannot invert a {n}x{m} matrix")
    p = A.prime
    one = PadicScalar.from_rational(1, p, A.precision)
    zero = PadicScalar.zero(p, A.precision)
    work = [list(r) + [one if i == j else zero for j in range(n)] for i, r in enumerate(A.rows)]
    for col in range(n):
        pivot = min(range(col, n), key=lambda i: work[i][col].valuation)
        if work[pivot][col].is_zero:
            raise NotInvertibleAtPrecision(f"no nonzero pivot in column {col} at precision {A.precision}")
        work[col], work[pivot] = work[pivot], work[col]
        piv = work[col][col]
        work[col] = [e / piv for e in work[col]]
        for i in range(n):
            if i != col and not work[i][col].is_zero:
                factor = work[i][col]
                work[i] = [a - factor * b for a, b in zip(work[i], work[col])]
    return UltraMatrix(tuple(tuple(r[n:]) for r in work))


def iso_check(A: UltraMatrix) -> str:
    """``"isometry_certified"`` iff ||A - 1|| < 1, else ``"not_certified"``."""
    n, m = A.shape
    if n != m:
        raise DimensionMismatch(f"{n}x{m} is not square")
    if op_norm(A - UltraMatrix.identity(n, A.prime, A.precision)) < 1:
        return "isometry_certified"
    return "not_certified"


def neumann_inverse(N: UltraMatrix, terms: int) -> UltraMatrix:
    """Partial sum of sum_k (-N)^k, an approximate inverse of 1 + N."""
    n, m = N.shape
    if n != m:
        raise DimensionMismatch(f"{n}x{m} is not square")
    if op_norm(N) >= 1:
        raise NormNotContractive(f"||N|| = {op_norm(N)} >= 1")
    eye = UltraMatrix.identity(n, N.prime, N.precision)
    total = eye
    power = eye
    for _ in range(1, terms):
        power = -(power @ N)
        total = total + power
    return total


@dataclass(frozen=True, eq=False)
class BallSpec:
    """The ball {y : ||y - center|| <= p**-radius_exp}."""

    center: UltraVector
    radius_exp: int

    __hash__ = None

    @classmethod
    def around(cls, center, radius_exp, prime, precision=DEFAULT_PRECISION):
        return cls(UltraVector.of(center, prime, precision), radius_exp)

    @property
    def prime(self):
        return self.center.prime

    @property
    def dim(self):
        return len(self.center)

    @property
    def radius(self) -> Fraction:
        return Fraction(self.prime) ** -self.radius_exp

    def contains(self, point) -> bool:
        d = UltraVector.of(point, self.prime, self.center.precision) - self.center
        return d.is_zero() or d.valuation() >= self.radius_exp

    def contains_ball(self, other: "BallSpec") -> bool:
        return other.radius_exp >= self.radius_exp and self.contains(other.center)

    def shrink(self, steps=1) -> "BallSpec":
        return BallSpec(self.center, self.radius_exp + steps)

    def residues(self, m):
        """All points of the ball with integer coordinates in [0, p**m).

        Requires an integral center and 0 <= radius_exp <= m.
        """
        from itertools import product

        p = self.prime
        if not 0 <= self.radius_exp <= m:
            raise ValueError("residue enumeration needs 0 <= radius_exp <= m")
        base = self.center.residues(self.radius_exp) if self.radius_exp else (0,) * self.dim
        step = p**self.radius_exp
        count = p ** (m - self.radius_exp)
        axes = [[(b + step * i) % p**m for i in range(count)] for b in base]
        return [tuple(pt) for pt in product(*axes)]

    def sample(self, rng, digits=6):
        """A random rational point of the ball, exact to ``digits`` p-adic places past the radius."""
        p = self.prime
        scale = Fraction(p) ** self.radius_exp
        return tuple(c + scale * rng.randrange(p**digits) for c in self.center.to_fractions())

    def __str__(self):
        return f"B({self.center}, {self.prime}^-{self.radius_exp})"

    def to_json(self):
        return {"center": self.center.to_json(), "radius_exp": self.radius_exp}

    @classmethod
    def from_json(cls, obj):
        return cls(UltraVector.from_json(obj["center"]), int(obj["radius_exp"]))
