"""Implicit functions q -> beta(q) solving f(q, beta(q)) = f(p, x) over Q_p.

The chart search picks the solution ball B = B(x, p^-k) first (largest k
such that the q-free slice is good enough), then shrinks the parameter ball
Q = B(p, p^-j) until

* the defect bound over Q x B is at most c = min(b - 1, 1 - a) / ||A^-1||, and
* ||A^-1 (f(q, x) - f(p, x))|| <= p^-k for every q in Q.

The second condition puts f(p, x) inside f_q(B) = f(q, x) + A B(0, p^-k),
which then equals V = f(p, x) + A B(0, p^-k) for every q in Q.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    DimensionMismatch,
    NoAdmissibleRadii,
    ParameterOutsideQ,
    PreconditionError,
    RadiusTooLarge,
    TargetOutsideImage,
)
from .linalg import BallSpec, UltraMatrix, UltraVector, invert, op_norm
from .newton import ImageBall, InverseChart, NewtonResult, _fractions, _point, newton_solve
from .padic import DEFAULT_PRECISION
from .poly import Poly, PolyMap
from .strictness import SigmaCertificate, _scaled_args, frac_str, sigma_bound


def check_constants(a, b):
    a, b = Fraction(a), Fraction(b)
    if not 0 < a < 1 < b:
        raise PreconditionError(f"need 0 < a < 1 < b, got a = {a}, b = {b}")
    return a, b


@dataclass(frozen=True, eq=False)
class ImplicitChart:
    f: PolyMap
    p: tuple
    x: tuple
    A: UltraMatrix
    A_inv: UltraMatrix
    Q: BallSpec
    B: BallSpec
    a: Fraction
    b: Fraction
    c: Fraction
    delta: Fraction
    sigma_cert: SigmaCertificate
    shift_bound: Fraction

    @property
    def prime(self):
        return self.B.prime

    @property
    def precision(self):
        return self.B.center.precision

    @property
    def m(self):
        return len(self.p)

    @property
    def target(self) -> UltraVector:
        """f(p, x)."""
        return UltraVector.of(self.f.eval(self.p + self.x), self.prime, self.precision)

    @property
    def V(self) -> ImageBall:
        return ImageBall(self.target, self.A, self.A_inv, self.B.radius_exp)

    def slice(self, q) -> InverseChart:
        """f_q on B, certified by the chart's combined certificate."""
        q = _point(q, self.prime, self.precision)
        if len(q) != self.m:
            raise DimensionMismatch(f"parameter of length {len(q)}, expected {self.m}")
        if not self.Q.contains(q):
            raise ParameterOutsideQ(f"{q} is outside {self.Q}")
        return InverseChart(self.f.partial(q.to_fractions()), self.A, self.A_inv, self.B, self.sigma_cert)

    def in_delta_ball(self, v) -> bool:
        """v in f(p, x) + A B_delta(0), the open ball of radius delta."""
        return self.V.offset(v).norm() < self.delta

    def to_json(self):
        return {
            "p": [frac_str(v) for v in self.p],
            "x": [frac_str(v) for v in self.x],
            "A": self.A.to_json(),
            "A_inv_norm": frac_str(op_norm(self.A_inv)),
            "Q": self.Q.to_json(),
            "B": self.B.to_json(),
            "V": self.V.to_json(),
            "a": frac_str(self.a),
            "b": frac_str(self.b),
            "c": frac_str(self.c),
            "delta": frac_str(self.delta),
            "r": frac_str(self.B.radius),
            "shift_bound": frac_str(self.shift_bound),
            "certificate": self.sigma_cert.to_json(),
        }


def _shift_bound(f: PolyMap, p, x, j, prime):
    """Upper bound for ||f(q, x) - f(p, x)|| over q in B(p, p^-j)."""
    m = len(p)
    args = _scaled_args(m, p, [j] * m, prime) + [Poly.const(m, v) for v in x]
    base = f.eval(p + x)
    return max((c.subs(args) - Poly.const(m, v)).max_coeff_norm(prime) for c, v in zip(f.components, base))


def build_implicit_chart(
    f: PolyMap,
    p,
    x,
    a,
    b,
    prime,
    precision=DEFAULT_PRECISION,
    max_exp=None,
) -> ImplicitChart:
    """Search B, then Q, for a chart of the implicit function through (p, x)."""
    a, b = check_constants(a, b)
    p, x = _fractions(p), _fractions(x)
    m, n = len(p), len(x)
    if f.n_in != m + n or f.n_out != n:
        raise DimensionMismatch(f"need a map K^{m} x K^{n} -> K^{n}, got {f.n_in} -> {f.n_out}")
    A_rat = f.jacobian_at(p + x, cols=range(m, m + n))
    A = UltraMatrix.of(A_rat, prime, precision)
    A_inv = invert(A)
    a_inv_norm = op_norm(A_inv)
    c = min(b - 1, 1 - a) / a_inv_norm
    max_exp = precision if max_exp is None else max_exp
    f_p = f.partial(p)
    P = Fraction(prime)
    for k in range(max_exp + 1):
        B = BallSpec.around(x, k, prime, precision)
        if sigma_bound(f_p, A_rat, B, a_inv_norm=a_inv_norm).sigma > c:
            continue
        for j in range(max_exp + 1):
            Q = BallSpec.around(p, j, prime, precision)
            cert = sigma_bound(f, A_rat, B, params=Q, a_inv_norm=a_inv_norm)
            if cert.sigma > c:
                continue
            shift = _shift_bound(f, p, x, j, prime)
            if a_inv_norm * shift > P**-k:
                continue
            return ImplicitChart(f, p, x, A, A_inv, Q, B, a, b, c, a * P**-k / 2, cert, shift)
    raise NoAdmissibleRadii(f"no radii p^-k, p^-j with k, j <= {max_exp} meet the chart conditions")


def beta_solve(chart: ImplicitChart, q) -> NewtonResult:
    return newton_solve(chart.slice(q), chart.target)


def beta(chart: ImplicitChart, q) -> UltraVector:
    """The unique y in B with f(q, y) = f(p, x)."""
    return beta_solve(chart, q).root


def psi(chart: ImplicitChart, q, v) -> UltraVector:
    """f_q^-1(v) in B, for v in V."""
    return newton_solve(chart.slice(q), v).root


def theta(chart: ImplicitChart, q, y):
    q = _point(q, chart.prime, chart.precision)
    y = _point(y, chart.prime, chart.precision)
    return q, UltraVector(chart.f.eval(q.entries + y.entries))


def theta_inv(chart: ImplicitChart, q, v):
    return _point(q, chart.prime, chart.precision), psi(chart, q, v)


@dataclass
class RoundTripReport:
    samples: int = 0
    min_valuation: int | None = None
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def record(self, diff: UltraVector, precision, sample):
        self.samples += 1
        v = diff.valuation()
        self.min_valuation = v if self.min_valuation is None else min(self.min_valuation, v)
        if not diff.is_zero():
            self.failures.append({"sample": [str(s) for s in sample], "valuation": v, "floor": precision})

    def to_json(self):
        return {"samples": self.samples, "min_valuation": self.min_valuation, "failures": self.failures}


def theta_roundtrip(chart: ImplicitChart, samples) -> RoundTripReport:
    """theta^-1(theta(q, y)) = (q, y) and theta(theta^-1(q, v)) = (q, v), with v = f(p,x) + A (y - x)."""
    report = RoundTripReport()
    for q, y in samples:
        q = _point(q, chart.prime, chart.precision)
        y = _point(y, chart.prime, chart.precision)
        _, fy = theta(chart, q, y)
        _, back = theta_inv(chart, q, fy)
        report.record(back - y, chart.precision, (q, y))
        v = chart.target + chart.A @ (y - chart.B.center)
        _, forward = theta(chart, *theta_inv(chart, q, v))
        report.record(forward - v, chart.precision, (q, v))
    return report


def sample_pairs(chart: ImplicitChart, count, seed=0, digits=6):
    """Random (q, y) in Q x B, cycling y through every shell ||y - x|| = p^-j, j >= k."""
    rng = random.Random(seed)
    out = []
    P = Fraction(chart.prime)
    for i in range(count):
        q = chart.Q.sample(rng, digits)
        shell = chart.B.radius_exp + i % digits
        unit = rng.randrange(1, chart.prime)
        y = tuple(c + P**shell * (unit + chart.prime * rng.randrange(chart.prime**digits)) for c in chart.x)
        out.append((q, y))
    return out


def ball_image_param(chart: ImplicitChart, q, y, s_exp: int) -> ImageBall:
    """f_q(B(y, p^-s_exp)) = f_q(y) + A B(0, p^-s_exp)."""
    sl = chart.slice(q)
    if s_exp < chart.B.radius_exp:
        raise RadiusTooLarge(f"p^-{s_exp} exceeds r = p^-{chart.B.radius_exp}")
    y = _point(y, chart.prime, chart.precision)
    if not chart.B.contains(y):
        raise RadiusTooLarge(f"{y} is outside B")
    return ImageBall(sl.value(y), chart.A, chart.A_inv, s_exp)


def delta_targets(chart: ImplicitChart, count, seed=0, digits=6):
    """Random targets in f(p, x) + A B_delta(0)."""
    rng = random.Random(seed)
    P = Fraction(chart.prime)
    e = 0
    while P**-e >= chart.delta:
        e += 1
    zero = BallSpec.around([0] * len(chart.x), e, chart.prime, chart.precision)
    out = []
    for _ in range(count):
        v = _point(zero.sample(rng, digits), chart.prime, chart.precision)
        out.append(chart.target + chart.A @ v)
    return out


def solve_target(chart: ImplicitChart, q, v) -> UltraVector:
    """psi(q, v), refusing targets outside V."""
    if not chart.V.contains(v):
        raise TargetOutsideImage(f"{v} is outside V")
    return psi(chart, q, v)
