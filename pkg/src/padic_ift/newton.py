"""Local inversion of polynomial maps on p-adic balls by fixed-A iteration.

An :class:`InverseChart` packages a ball ``B = B(x, p^-k)``, an invertible
matrix ``A`` and a certificate that ``sigma(f, A, B) * ||A^-1|| < 1``.  Then
``g(z) = z - A^-1 (f(z) - c)`` contracts B into itself for every ``c`` in
``f(x) + A B(0, p^-k)``, and that affine ball is exactly ``f(B)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    DimensionMismatch,
    MaxIterationsExceeded,
    NoContractiveRadius,
    NoUniformContraction,
    ParameterOutsideQ,
    RadiusTooLarge,
    TargetOutsideImage,
)
from .linalg import BallSpec, UltraMatrix, UltraVector, invert, op_norm
from .padic import DEFAULT_PRECISION, PadicScalar
from .poly import PolyMap
from .strictness import SigmaCertificate, frac_str, rational_matrix, sigma_bound


def _point(values, prime, precision):
    return UltraVector.of(values, prime, precision)


def _fractions(values):
    if isinstance(values, UltraVector):
        return values.to_fractions()
    return tuple(v.to_fraction() if isinstance(v, PadicScalar) else Fraction(v) for v in values)


@dataclass(frozen=True, eq=False)
class ImageBall:
    """The set ``center + A B(0, p^-radius_exp)``."""

    center: UltraVector
    A: UltraMatrix
    A_inv: UltraMatrix
    radius_exp: int

    @property
    def prime(self):
        return self.center.prime

    def offset(self, c) -> UltraVector:
        """A^-1 (c - center): the coordinates of c relative to the ball."""
        c = _point(c, self.prime, self.center.precision)
        return self.A_inv @ (c - self.center)

    def contains(self, c) -> bool:
        d = self.offset(c)
        return d.is_zero() or d.valuation() >= self.radius_exp

    def residues(self, m):
        """Residues mod p^m of all points; needs A and the center integral, 0 <= radius_exp <= m."""
        zero = BallSpec.around([0] * len(self.center), self.radius_exp, self.prime, self.center.precision)
        base = self.center.residues(m)
        A = [[e.residue(m) for e in row] for row in self.A.rows]
        mod = self.prime**m
        out = set()
        for v in zero.residues(m):
            out.add(tuple((b + sum(a * vi for a, vi in zip(row, v))) % mod for b, row in zip(base, A)))
        return out

    def to_json(self):
        return {"center": self.center.to_json(), "A": self.A.to_json(), "radius_exp": self.radius_exp}


@dataclass(frozen=True, eq=False)
class InverseChart:
    f: PolyMap
    A: UltraMatrix
    A_inv: UltraMatrix
    ball: BallSpec
    sigma_cert: SigmaCertificate

    @property
    def prime(self):
        return self.ball.prime

    @property
    def precision(self):
        return self.ball.center.precision

    @property
    def radius_exp(self):
        return self.ball.radius_exp

    @property
    def kappa(self) -> Fraction:
        return self.sigma_cert.kappa

    @property
    def a(self):
        return self.sigma_cert.a

    @property
    def b(self):
        return self.sigma_cert.b

    @property
    def digit_gain(self):
        return self.sigma_cert.digit_gain

    @property
    def image(self) -> ImageBall:
        """f(B) = f(x) + A B(0, r)."""
        return ImageBall(self.value(self.ball.center), self.A, self.A_inv, self.radius_exp)

    def value(self, point) -> UltraVector:
        point = _point(point, self.prime, self.precision)
        return UltraVector(self.f.eval(point.entries))

    def scaled_distance(self, y, z) -> Fraction:
        """||A^-1 f(z) - A^-1 f(y)||."""
        return (self.A_inv @ (self.value(z) - self.value(y))).norm()

    def iteration_budget(self):
        gain = self.digit_gain
        if gain is None:
            # kappa = 0: one step is exact, the next one confirms it
            return 2
        start = min(self.radius_exp, 0)
        return math.ceil((self.precision - start) / gain) + 2

    def to_json(self):
        return {
            "ball": self.ball.to_json(),
            "A": self.A.to_json(),
            "A_inv_norm": frac_str(op_norm(self.A_inv)),
            "certificate": self.sigma_cert.to_json(),
        }


def _invertible(A: UltraMatrix) -> UltraMatrix:
    n, m = A.shape
    if n != m:
        raise DimensionMismatch(f"A must be square, got {n}x{m}")
    return invert(A)


def build_chart(
    f: PolyMap,
    x,
    prime,
    A="auto",
    radius_exp="auto",
    precision=DEFAULT_PRECISION,
    min_exp=0,
    max_exp=None,
) -> InverseChart:
    """Certify a ball around x on which f is inverted by fixed-A iteration.

    ``A="auto"`` uses f'(x).  ``radius_exp="auto"`` tries k = min_exp,
    min_exp + 1, ... up to ``max_exp`` (default: the precision) and keeps the
    first contractive ball.  Linear maps certify at every k, so ``min_exp``
    is what bounds their ball.
    """
    x = _fractions(x)
    if f.n_in != len(x) or f.n_out != len(x):
        raise DimensionMismatch(f"need a map K^{len(x)} -> K^{len(x)}, got {f.n_in} -> {f.n_out}")
    if isinstance(A, str):
        A = f.jacobian_at(x)
    A_rat = rational_matrix(A)
    A_mat = UltraMatrix.of(A_rat, prime, precision)
    A_inv = _invertible(A_mat)
    a_inv_norm = op_norm(A_inv)
    max_exp = precision if max_exp is None else max_exp

    def certify(k):
        ball = BallSpec.around(x, k, prime, precision)
        return ball, sigma_bound(f, A_rat, ball, a_inv_norm=a_inv_norm)

    if radius_exp != "auto":
        ball, cert = certify(int(radius_exp))
        if not cert.contractive:
            raise NoContractiveRadius(f"sigma*||A^-1|| = {cert.kappa} >= 1 on {ball}")
        return InverseChart(f, A_mat, A_inv, ball, cert)
    for k in range(min_exp, max_exp + 1):
        ball, cert = certify(k)
        if cert.contractive:
            return InverseChart(f, A_mat, A_inv, ball, cert)
    raise NoContractiveRadius(f"no contractive radius p^-k with k <= {max_exp}")


@dataclass
class NewtonResult:
    """Root plus the iteration transcript.

    ``step_valuations[i]`` is val(A^-1 (f(z_i) - c)), the size of the i-th
    correction; ``residual_valuations[i]`` is val(f(z_i) - c).  Both use the
    precision floor for values that vanish at precision.
    """

    root: UltraVector
    iterates: list = field(default_factory=list)
    residual_valuations: list = field(default_factory=list)
    step_valuations: list = field(default_factory=list)
    precision: int = DEFAULT_PRECISION

    @property
    def iterations(self):
        return len(self.step_valuations)

    @property
    def final_residual_valuation(self):
        return self.residual_valuations[-1]

    def gains(self):
        """Valuation gained per step by the correction, up to the precision floor."""
        out = []
        vals = self.step_valuations
        for a, b in zip(vals, vals[1:]):
            if a >= self.precision:
                break
            out.append(b - a)
        return out

    def gain_respected(self, certified_gain) -> bool:
        """Each step gains >= certified_gain digits, or lands on the precision floor."""
        if certified_gain is None:
            return self.iterations <= 2
        vals = self.step_valuations
        return all(b - a >= certified_gain or b >= self.precision for a, b in zip(vals, vals[1:]) if a < self.precision)

    def to_json(self):
        return {
            "root": self.root.to_json(),
            "iterations": self.iterations,
            "iterates": [z.to_json() for z in self.iterates],
            "residual_valuations": self.residual_valuations,
            "step_valuations": self.step_valuations,
        }


def fixed_a_iteration(evaluate, A_inv: UltraMatrix, start: UltraVector, c: UltraVector, budget: int) -> NewtonResult:
    """Run z <- z - A^-1 (f(z) - c) until the correction vanishes at precision."""
    z = start
    result = NewtonResult(z, precision=start.precision)
    for _ in range(budget + 1):
        residual = UltraVector(evaluate(z.entries)) - c
        step = A_inv @ residual
        result.iterates.append(z)
        result.residual_valuations.append(residual.valuation())
        result.step_valuations.append(step.valuation())
        if step.is_zero():
            result.root = z
            return result
        z = z - step
    raise MaxIterationsExceeded(f"correction still nonzero after {budget} steps: {result.step_valuations}")


def newton_solve(chart: InverseChart, c, start=None, budget=None) -> NewtonResult:
    """The unique z in the chart ball with f(z) = c, at the chart precision."""
    c = _point(c, chart.prime, chart.precision)
    if len(c) != chart.f.n_out:
        raise DimensionMismatch(f"target of length {len(c)} for a map with {chart.f.n_out} components")
    if not chart.image.contains(c):
        raise TargetOutsideImage(f"A^-1 (c - f(x)) has norm {chart.image.offset(c).norm()} > {chart.ball.radius}")
    if start is None:
        z = chart.ball.center
    else:
        z = _point(start, chart.prime, chart.precision)
        if not chart.ball.contains(z):
            raise TargetOutsideImage("start point is outside the chart ball")
    budget = chart.iteration_budget() if budget is None else budget
    return fixed_a_iteration(chart.f.eval, chart.A_inv, z, c, budget)


def ball_image(chart: InverseChart, y, s_exp: int) -> ImageBall:
    """f(B(y, p^-s_exp)) = f(y) + A B(0, p^-s_exp), for y in the chart ball and s <= r."""
    if s_exp < chart.radius_exp:
        raise RadiusTooLarge(f"p^-{s_exp} exceeds the chart radius p^-{chart.radius_exp}")
    y = _point(y, chart.prime, chart.precision)
    if not chart.ball.contains(y):
        raise RadiusTooLarge(f"{y} is outside the chart ball")
    return ImageBall(chart.value(y), chart.A, chart.A_inv, s_exp)


# -- families over a parameter ball -----------------------------------------


@dataclass(frozen=True, eq=False)
class ChartFamily:
    """One A and one ball B serving f_q = f(q, .) for every q in ``params``."""

    f: PolyMap
    params: BallSpec
    A: UltraMatrix
    A_inv: UltraMatrix
    ball: BallSpec
    sigma_cert: SigmaCertificate

    @property
    def prime(self):
        return self.ball.prime

    @property
    def precision(self):
        return self.ball.center.precision

    def slice(self, q) -> InverseChart:
        """The chart of f_q; the family certificate bounds its sigma."""
        q = _point(q, self.prime, self.precision)
        if not self.params.contains(q):
            raise ParameterOutsideQ(f"{q} is outside {self.params}")
        return InverseChart(self.f.partial(q.to_fractions()), self.A, self.A_inv, self.ball, self.sigma_cert)

    def psi(self, q, z) -> UltraVector:
        """f_q^-1(z) inside the ball."""
        return newton_solve(self.slice(q), z).root

    def to_json(self):
        return {
            "params": self.params.to_json(),
            "ball": self.ball.to_json(),
            "A": self.A.to_json(),
            "certificate": self.sigma_cert.to_json(),
        }


def param_chart_family(
    f: PolyMap,
    params: BallSpec,
    x,
    A="auto",
    radius_exp="auto",
    max_exp=None,
) -> ChartFamily:
    """A ball around x on which one A inverts every f_q, q in ``params``.

    The leading ``params.dim`` variables of f are the parameters.
    """
    prime, precision = params.prime, params.center.precision
    m = params.dim
    x = _fractions(x)
    n = len(x)
    if f.n_in != m + n or f.n_out != n:
        raise DimensionMismatch(f"need a map K^{m} x K^{n} -> K^{n}, got {f.n_in} -> {f.n_out}")
    if isinstance(A, str):
        A = f.jacobian_at(params.center.to_fractions() + x, cols=range(m, m + n))
    A_rat = rational_matrix(A)
    A_mat = UltraMatrix.of(A_rat, prime, precision)
    A_inv = _invertible(A_mat)
    a_inv_norm = op_norm(A_inv)
    max_exp = precision if max_exp is None else max_exp
    exps = range(0, max_exp + 1) if radius_exp == "auto" else [int(radius_exp)]
    for k in exps:
        ball = BallSpec.around(x, k, prime, precision)
        cert = sigma_bound(f, A_rat, ball, params=params, a_inv_norm=a_inv_norm)
        if cert.contractive:
            return ChartFamily(f, params, A_mat, A_inv, ball, cert)
    raise NoUniformContraction(f"no radius makes sigma*||A^-1|| < 1 uniformly over {params}")
