"""Extended difference quotients of polynomial maps.

For f on K^n, ``dq1(f)`` is the polynomial map g on K^(2n+1) with
``t * g(x, y, t) = f(x + t y) - f(x)``; its slice ``t = 0`` is ``df(x, y)``.
Iterating gives ``f^[k]``, a map in ``2**k * (n + 1) - 1`` variables laid
out as ``(x, y, t)`` with x, y themselves points of the previous level.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import DimensionMismatch, IdentityViolation
from .linalg import BallSpec
from .poly import Poly, PolyMap


def level_dim(n, k):
    """Number of scalar variables of U^[k] for U in K^n."""
    return 2**k * (n + 1) - 1


def dq1(f: PolyMap) -> PolyMap:
    n = f.n_in
    m = 2 * n + 1
    t = Poly.var(m, 2 * n)
    shifted = [Poly.var(m, i) + t * Poly.var(m, n + i) for i in range(n)]
    xs = [Poly.var(m, i) for i in range(n)]
    comps = []
    for c in f.components:
        diff = c.subs(shifted) - c.subs(xs) if n else Poly(m)
        comps.append(diff.divide_by_var(2 * n))
    return PolyMap(comps, m)


def dqk(f: PolyMap, k: int) -> PolyMap:
    if k < 0:
        raise ValueError("k must be >= 0")
    for _ in range(k):
        f = dq1(f)
    return f


def _embed_point(x, v, t):
    return tuple(x) + tuple(v) + (t,)


def differential(f: PolyMap, x, order, directions):
    """df(x, v) (order 1, directions = [v]) or d^2 f(x, v1, v2) (order 2, directions = [v1, v2])."""
    n = f.n_in
    x = tuple(x)
    if len(x) != n:
        raise DimensionMismatch(f"point of length {len(x)} for {n} variables")
    if order == 1:
        (v,) = directions
        v = tuple(v)
        if len(v) != n:
            raise DimensionMismatch("direction has wrong length")
        return dq1(f).eval(x + v + (0 * x[0] if n else 0,))
    if order == 2:
        v1, v2 = (tuple(d) for d in directions)
        if len(v1) != n or len(v2) != n:
            raise DimensionMismatch("direction has wrong length")
        zero = 0 * x[0]
        zeros = tuple(zero for _ in range(n))
        pt = _embed_point(x, v1, zero) + _embed_point(v2, zeros, zero) + (zero,)
        return dqk(f, 2).eval(pt)
    raise ValueError("order must be 1 or 2")


def derivative_matrix(f: PolyMap, x, cols=None):
    """f'(x) as a matrix: column j is df(x, e_j), restricted to variables ``cols``."""
    return f.jacobian_at(x, cols)


# -- scaling identities -------------------------------------------------------


def _scaling_7_sides(f: PolyMap):
    """Both sides of t f1(x, y, t s) = f1(x, t y, s) as polynomials in (x, y, s, t)."""
    n = f.n_in
    g = dq1(f)
    m = 2 * n + 2
    xs = [Poly.var(m, i) for i in range(n)]
    ys = [Poly.var(m, n + i) for i in range(n)]
    s = Poly.var(m, 2 * n)
    t = Poly.var(m, 2 * n + 1)
    lhs = [t * c for c in g.subs(xs + ys + [t * s]).components]
    rhs = list(g.subs(xs + [t * y for y in ys] + [s]).components)
    return lhs, rhs


def _scaling_8_sides(f: PolyMap):
    """Both sides of the second-order identity, with s := t*u so both are polynomial.

    Variables: (x, y, u, x1, y1, s1, s2, t); the left side is
    t^3 f2((x, y, t^2 u), (x1, y1, t s1), t s2), the right side
    f2((x, t^2 y, u), (t x1, t^3 y1, s1), s2).
    """
    n = f.n_in
    g = dqk(f, 2)
    m = 4 * n + 4
    V = lambda i: Poly.var(m, i)  # noqa: E731
    xs = [V(i) for i in range(n)]
    ys = [V(n + i) for i in range(n)]
    u = V(2 * n)
    x1 = [V(2 * n + 1 + i) for i in range(n)]
    y1 = [V(3 * n + 1 + i) for i in range(n)]
    s1, s2, t = V(4 * n + 1), V(4 * n + 2), V(4 * n + 3)
    t2, t3 = t * t, t * t * t
    lhs_args = xs + ys + [t2 * u] + x1 + y1 + [t * s1] + [t * s2]
    rhs_args = xs + [t2 * y for y in ys] + [u] + [t * a for a in x1] + [t3 * b for b in y1] + [s1] + [s2]
    lhs = [t3 * c for c in g.subs(lhs_args).components]
    rhs = list(g.subs(rhs_args).components)
    return lhs, rhs


@dataclass
class IdentityReport:
    symbolic_first_order: bool
    symbolic_second_order: bool
    samples_checked: int = 0
    violations: int = 0
    first_violation: dict | None = None

    @property
    def ok(self):
        return self.symbolic_first_order and self.symbolic_second_order and self.violations == 0


def scaling_identities_check(f: PolyMap, samples=(), check_second_order=True) -> IdentityReport:
    """Check the first- and second-order scaling identities of f^[1], f^[2].

    ``samples`` is an iterable of (x, y, s, t, x1, y1, s1, s2) tuples with
    t != 0; x, y, x1, y1 are points of K^n and the scalars may be rationals
    or p-adics.  Numeric checks use the identities in their original form
    (with s/t), the symbolic ones after the substitution s = t*u.
    """
    l7, r7 = _scaling_7_sides(f)
    ok7 = l7 == r7
    if check_second_order:
        l8, r8 = _scaling_8_sides(f)
        ok8 = l8 == r8
    else:
        ok8 = True
    report = IdentityReport(ok7, ok8)
    g1 = dq1(f)
    g2 = dqk(f, 2) if check_second_order else None
    for sample in samples:
        x, y, s, t, x1, y1, s1, s2 = sample
        x, y, x1, y1 = tuple(x), tuple(y), tuple(x1), tuple(y1)
        report.samples_checked += 1
        lhs = tuple(t * v for v in g1.eval(x + y + (t * s,)))
        rhs = g1.eval(x + tuple(t * v for v in y) + (s,))
        bad = [i for i, (a, b) in enumerate(zip(lhs, rhs)) if not a == b]
        which = "7"
        if not bad and g2 is not None:
            t3 = t * t * t
            lhs = tuple(t3 * v for v in g2.eval(x + y + (t * s,) + x1 + y1 + (t * s1,) + (t * s2,)))
            rhs = g2.eval(
                x + tuple(t * t * v for v in y) + (s / t,)
                + tuple(t * v for v in x1) + tuple(t3 * v for v in y1) + (s1,) + (s2,)
            )
            bad = [i for i, (a, b) in enumerate(zip(lhs, rhs)) if not a == b]
            which = "8"
        if bad:
            report.violations += 1
            if report.first_violation is None:
                report.first_violation = {"identity": which, "sample": repr(sample), "components": bad}
    return report


def chain_dq(f: PolyMap, g: PolyMap) -> PolyMap:
    """(g o f)^[1], computed directly and through g^[1](f(x), f^[1](x,y,t), t).

    Raises IdentityViolation if the two routes differ.
    """
    if f.n_out != g.n_in:
        raise DimensionMismatch(f"f gives {f.n_out} values, g takes {g.n_in}")
    direct = dq1(g.compose(f))
    n = f.n_in
    m = 2 * n + 1
    f1 = dq1(f)
    outer_args = (
        [c.embed(m, list(range(n))) for c in f.components]
        + list(f1.components)
        + [Poly.var(m, 2 * n)]
    )
    via_chain = dq1(g).subs(outer_args)
    if via_chain != direct:
        raise IdentityViolation(f"chain rule mismatch: {direct} vs {via_chain}")
    return direct


# -- domains U^[k] -------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """U^[level] for U a ball; points are flat tuples of rationals."""

    base: BallSpec
    level: int = 0

    @property
    def dim(self):
        return level_dim(self.base.dim, self.level)

    def contains(self, point) -> bool:
        point = tuple(point)
        if len(point) != self.dim:
            return False
        if self.level == 0:
            return self.base.contains(point)
        lower = DomainSpec(self.base, self.level - 1)
        d = lower.dim
        x, y, t = point[:d], point[d:2 * d], point[2 * d]
        return lower.contains(x) and lower.contains(tuple(a + t * b for a, b in zip(x, y)))

    def sample(self, rng: random.Random, digits=6):
        """A random rational point of U^[level] (integral when the center is)."""
        p = self.base.prime
        if self.level == 0:
            c = self.base.center.to_fractions()
            k = max(self.base.radius_exp, 0)
            scale = Fraction(p) ** self.base.radius_exp
            return tuple(ci + scale * rng.randrange(p ** max(digits - k, 1)) for ci in c)
        lower = DomainSpec(self.base, self.level - 1)
        x = lower.sample(rng, digits)
        w = lower.sample(rng, digits)
        if rng.random() < 0.25:
            # t = 0: any direction is admissible
            return x + tuple(Fraction(rng.randrange(p**digits)) for _ in x) + (Fraction(0),)
        t = Fraction(rng.randrange(1, p))  # a unit, so y stays integral
        y = tuple((b - a) / t for a, b in zip(x, w))
        return x + y + (t,)
