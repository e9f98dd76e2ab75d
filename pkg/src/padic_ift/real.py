"""Floating-point inverse functions with parameters over R^n.

Norms are max norms, so balls are boxes and operator norms are max row sums.
A :class:`RealChart` is accepted once the four derivative conditions below
hold, with a 0.9 safety margin, on a grid over Q x B_R(x):

1. f'_q(y) is invertible (condition number below a cap);
2. ||f'_{q1}(y1)^-1 f'_{q2}(y2) - 1|| < 1/2;
3. ||f'_q(y)^-1 (f'_q(y1) - f'_q(y2))|| <= 1 - sqrt(a);
4. ||A^-1 f'_q(y)|| < b and ||f'_q(y)^-1 A|| <= 1/sqrt(a).

Then r = 0.9 R / 2, Q is shrunk until ||A^-1 (f_q(x) - f_p(x))|| < a r / 2,
and delta = a r / 2.  Grid checks are evidence, not proof.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .dq import dq1
from .errors import (
    DimensionMismatch,
    NoAdmissibleRadii,
    NonConvergence,
    ParameterOutsideQ,
    RadiusTooLarge,
    SingularAtBase,
)
from .implicit import check_constants
from .poly import PolyMap

MAX_ITERATIONS = 200
PAIRWISE_POINTS = 1200
CONDITION_CAP = 1e12


def op_inf(M):
    """Max-norm operator norm of a matrix or a stack of matrices."""
    return np.abs(M).sum(axis=-1).max(axis=-1)


def vec_inf(v):
    return np.abs(v).max(axis=-1)


class _Jacobian:
    """Vectorised evaluation of d_2 f (and d_1 f) on stacks of points."""

    def __init__(self, f: PolyMap, m: int):
        self.f = f
        self.m = m
        self.n = f.n_in - m
        self.rows_y = f.jacobian(range(m, f.n_in))
        self.rows_q = f.jacobian(range(m))

    @staticmethod
    def _eval(rows, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        cols = tuple(pts[:, i] for i in range(pts.shape[1]))
        out = np.empty((pts.shape[0], len(rows), len(rows[0])))
        for i, row in enumerate(rows):
            for j, d in enumerate(row):
                out[:, i, j] = d.evaluate(cols, float) if d.terms else 0.0
        return out

    def d2(self, pts):
        return self._eval(self.rows_y, pts)

    def d1(self, pts):
        return self._eval(self.rows_q, pts)


def _evaluate(f: PolyMap, pts):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    cols = tuple(pts[:, i] for i in range(pts.shape[1]))
    out = np.empty((pts.shape[0], f.n_out))
    for i, c in enumerate(f.components):
        out[:, i] = c.evaluate(cols, float) if c.terms else 0.0
    return out


def _box_grid(center, radius, per_axis):
    axes = [np.linspace(c - radius, c + radius, per_axis) for c in center]
    return np.array(list(itertools.product(*axes)))


@dataclass(frozen=True, eq=False)
class RealChart:
    f: PolyMap
    p: np.ndarray
    x: np.ndarray
    A: np.ndarray
    A_inv: np.ndarray
    q_radius: float
    R: float
    r: float
    a: float
    b: float
    kappa: float
    margins: dict = field(default_factory=dict)

    @property
    def delta(self):
        return self.a * self.r / 2

    @property
    def m(self):
        return len(self.p)

    @property
    def n(self):
        return len(self.x)

    @property
    def target(self):
        """f(p, x)."""
        return _evaluate(self.f, np.concatenate([self.p, self.x]))[0]

    def in_Q(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        return q.shape == self.p.shape and vec_inf(q - self.p) <= self.q_radius

    def value(self, q, y):
        return _evaluate(self.f, np.concatenate([np.asarray(q, float), np.asarray(y, float)]))[0]

    def scaled_distance(self, q, y, z):
        """||A^-1 (f_q(z) - f_q(y))||."""
        return vec_inf(self.A_inv @ (self.value(q, z) - self.value(q, y)))

    def beta_derivative(self):
        """d beta / dq at p: -A^-1 d_1 f(p, x)."""
        J1 = _Jacobian(self.f, self.m).d1(np.concatenate([self.p, self.x]))[0]
        return -self.A_inv @ J1

    def to_json(self):
        return {
            "p": self.p.tolist(),
            "x": self.x.tolist(),
            "A": self.A.tolist(),
            "Q_radius": self.q_radius,
            "R": self.R,
            "r": self.r,
            "a": self.a,
            "b": self.b,
            "delta": self.delta,
            "kappa": self.kappa,
            "margins": self.margins,
        }


def _conditions(jac: _Jacobian, p, x, A_inv, a, b, rho, R, per_axis, margin):
    """Worst value / bound ratio of each condition over the grid (pass iff all <= margin)."""
    m, n = len(p), len(x)
    per_axis = max(2, min(per_axis, int(round(4000 ** (1 / (m + n))))))
    qs = _box_grid(p, rho, per_axis)
    ys = _box_grid(x, R, per_axis)
    pts = np.array([np.concatenate([q, y]) for q in qs for y in ys])
    J = jac.d2(pts)
    conds = np.linalg.cond(J)
    if not np.all(np.isfinite(conds)) or conds.max() > CONDITION_CAP:
        return None
    Jinv = np.linalg.inv(J)
    eye = np.eye(n)
    # condition 2 compares every pair of points, so it runs on a coarser grid
    pair_axis = max(2, min(per_axis, int(round(PAIRWISE_POINTS ** (1 / (m + n))))))
    if pair_axis < per_axis:
        pair_pts = np.array([np.concatenate([q, y]) for q in _box_grid(p, rho, pair_axis) for y in _box_grid(x, R, pair_axis)])
        J2 = jac.d2(pair_pts)
        J2inv = np.linalg.inv(J2)
    else:
        J2, J2inv = J, Jinv
    worst2 = 0.0
    for chunk in range(0, len(J2), 256):
        prod = np.einsum("aij,bjk->abik", J2inv[chunk:chunk + 256], J2)
        worst2 = max(worst2, float(op_inf(prod - eye).max()))
    # condition 3 per q: sup ||J(y)^-1|| * sup ||J(y1) - J(y2)|| bounds the sup of the product
    worst3 = 0.0
    per_q = J.reshape(len(qs), len(ys), n, n)
    per_q_inv = Jinv.reshape(len(qs), len(ys), n, n)
    for Jq, Jq_inv in zip(per_q, per_q_inv):
        spread = float(op_inf(Jq[:, None] - Jq[None, :]).max())
        worst3 = max(worst3, float(op_inf(Jq_inv).max()) * spread)
    worst4a = float(op_inf(A_inv @ J).max())
    A = np.linalg.inv(A_inv)
    worst4b = float(op_inf(Jinv @ A).max())
    kappa = float(op_inf(A_inv @ J - eye).max())
    return {
        "2": worst2 / 0.5,
        "3": worst3 / (1 - math.sqrt(a)),
        "4a": worst4a / b,
        "4b": worst4b * math.sqrt(a),
    }, kappa


def _shift(f, p, x, A_inv, rho, per_axis):
    m = len(p)
    per_axis = max(2, min(per_axis, int(round(4000 ** (1 / m)))))
    qs = _box_grid(p, rho, per_axis)
    pts = np.array([np.concatenate([q, x]) for q in qs])
    base = _evaluate(f, np.concatenate([p, x]))[0]
    return float(vec_inf((_evaluate(f, pts) - base) @ A_inv.T).max())


def build_real_chart(
    f: PolyMap,
    p,
    x,
    a,
    b,
    R0=1.0,
    q0=1.0,
    grid=20,
    margin=0.9,
    max_halvings=40,
) -> RealChart:
    """Find Q = [p - rho, p + rho]^m and r with the chart conditions on a grid."""
    a, b = (float(v) for v in check_constants(a, b))
    p = np.atleast_1d(np.asarray(p, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m, n = len(p), len(x)
    if f.n_in != m + n or f.n_out != n:
        raise DimensionMismatch(f"need a map R^{m} x R^{n} -> R^{n}, got {f.n_in} -> {f.n_out}")
    jac = _Jacobian(f, m)
    A = jac.d2(np.concatenate([p, x]))[0]
    if not np.isfinite(np.linalg.cond(A)) or np.linalg.cond(A) > CONDITION_CAP:
        raise SingularAtBase(f"d_2 f(p, x) = {A.tolist()} is singular")
    A_inv = np.linalg.inv(A)
    for i in range(max_halvings):
        R = R0 / 2**i
        r = margin * R / 2
        for j in range(max_halvings):
            rho = q0 / 2**j
            checked = _conditions(jac, p, x, A_inv, a, b, rho, R, grid, margin)
            if checked is None:
                continue
            ratios, kappa = checked
            if max(ratios.values()) > margin:
                continue
            shift = _shift(f, p, x, A_inv, rho, grid)
            ratios["shift"] = shift / (a * r / 2)
            if ratios["shift"] >= margin:
                continue
            return RealChart(f, p, x, A, A_inv, rho, R, r, a, b, kappa, ratios)
    raise NoAdmissibleRadii(f"no R >= {R0 / 2**max_halvings} and Q meet the chart conditions")


@dataclass
class RealSolve:
    root: np.ndarray
    residuals: list
    iterations: int

    def ratios(self, floor=1e-13):
        """Per-step residual ratios while the residual is above ``floor``."""
        res = self.residuals
        return [b / a for a, b in zip(res, res[1:]) if a > floor and b > 0]


def _iterate(f, A_inv, q, start, target, tol):
    q = np.asarray(q, dtype=float)
    z = np.array(start, dtype=float)
    residuals = []
    for it in range(MAX_ITERATIONS):
        res = _evaluate(f, np.concatenate([q, z]))[0] - target
        step = A_inv @ res
        residuals.append(float(vec_inf(step)))
        if residuals[-1] <= tol and (len(residuals) > 1 and residuals[-1] >= residuals[-2] or residuals[-1] == 0):
            return RealSolve(z, residuals, it)
        z = z - step
    if residuals[-1] <= tol:
        return RealSolve(z, residuals, MAX_ITERATIONS)
    raise NonConvergence(f"residual {residuals[-1]:.3e} after {MAX_ITERATIONS} iterations")


def real_solve(chart: RealChart, q, target=None) -> RealSolve:
    """psi(q, target): z <- z - A^-1 (f_q(z) - target) from x; target defaults to f(p, x)."""
    if not chart.in_Q(q):
        raise ParameterOutsideQ(f"q = {q} is outside Q = B({chart.p.tolist()}, {chart.q_radius})")
    target = chart.target if target is None else np.asarray(target, dtype=float)
    tol = 1e-10 * (1 + float(vec_inf(target)))
    return _iterate(chart.f, chart.A_inv, np.atleast_1d(q), chart.x, target, tol)


def real_beta(chart: RealChart, q):
    return real_solve(chart, q).root


def continued_beta(f: PolyMap, p, x, a, b, q, max_charts=100, **chart_options):
    """beta(q) for q beyond one chart's Q, by chaining charts along the segment p -> q.

    Each chart is centred on the previous chart's solution, so all of them
    solve f(q, y) = f(p, x) and follow one branch.  Returns (value, charts).
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    target = _evaluate(f, np.concatenate([p, np.atleast_1d(np.asarray(x, float))]))[0]
    centre, y = p, np.atleast_1d(np.asarray(x, dtype=float))
    charts = []
    for _ in range(max_charts):
        chart = build_real_chart(f, centre, y, a, b, **chart_options)
        charts.append(chart)
        gap = float(vec_inf(q - centre))
        if gap <= chart.q_radius:
            return real_solve(chart, q, target).root, charts
        nxt = centre + (q - centre) * (chart.q_radius / gap)
        y = real_solve(chart, nxt, target).root
        centre = nxt
    raise NoAdmissibleRadii(f"{max_charts} charts did not reach q = {q.tolist()}")


@dataclass
class InclusionReport:
    outer_samples: int
    outer_inside: int
    inner_targets: int
    inner_solved: int
    worst_outer: float
    worst_inner: float

    @property
    def ok(self):
        return self.outer_inside == self.outer_samples and self.inner_solved == self.inner_targets

    def to_json(self):
        return dict(self.__dict__, ok=self.ok)


def inclusion_check(chart: RealChart, q, y, s, n_outer=1000, n_inner=100, seed=0) -> InclusionReport:
    """Sample both inclusions f_q(y) + A B_as(0) in f_q(B_s(y)) in f_q(y) + A B_bs(0)."""
    if not chart.in_Q(q):
        raise ParameterOutsideQ(f"q = {q} is outside Q")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    q = np.atleast_1d(np.asarray(q, dtype=float))
    dist = float(vec_inf(y - chart.x))
    if not 0 < s <= chart.r - dist + 1e-15:
        raise RadiusTooLarge(f"s = {s} is not in ]0, r - ||y - x||] = ]0, {chart.r - dist}]")
    rng = np.random.default_rng(seed)
    n = chart.n
    shrink = 1 - 1e-12  # stay inside the open box
    fy = chart.value(q, y)
    zs = y + s * shrink * rng.uniform(-1, 1, size=(n_outer, n))
    fz = _evaluate(chart.f, np.hstack([np.tile(q, (n_outer, 1)), zs]))
    scaled = vec_inf((fz - fy) @ chart.A_inv.T)
    outer_inside = int(np.sum(scaled < chart.b * s))
    ws = chart.a * s * shrink * rng.uniform(-1, 1, size=(n_inner, n))
    solved = 0
    worst_inner = 0.0
    tol = 1e-12 * (1 + float(vec_inf(fy)))
    for w in ws:
        target = fy + chart.A @ w
        try:
            sol = _iterate(chart.f, chart.A_inv, q, y, target, tol).root
        except NonConvergence:
            continue
        d = float(vec_inf(sol - y)) / s
        worst_inner = max(worst_inner, d)
        if d < 1:
            solved += 1
    return InclusionReport(n_outer, outer_inside, n_inner, solved, float(scaled.max()) / s, worst_inner)


@dataclass
class QuadratureReport:
    samples: int = 0
    max_rel_error: float = 0.0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.mismatches

    def to_json(self):
        return {"samples": self.samples, "max_rel_error": self.max_rel_error, "mismatches": self.mismatches}


def integral_identity_check(f: PolyMap, samples, tol=1e-12) -> QuadratureReport:
    """Compare f^[1](x, y, t) with Gauss-Legendre quadrature of int_0^1 df(x + s t y, y) ds.

    ``samples`` holds (x, y, t) triples.  Relative errors are taken against
    max(|f^[1]|, 1) so that values near zero do not inflate them.
    """
    if f.n_in == 0:
        raise DimensionMismatch("a map with no variables has no difference quotient")
    g = dq1(f)
    nodes, weights = np.polynomial.legendre.leggauss(max(1, math.ceil((f.degree() + 1) / 2)))
    s_nodes = (nodes + 1) / 2
    weights = weights / 2
    report = QuadratureReport()
    for x, y, t in samples:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        sym = np.array(g.eval(tuple(x) + tuple(y) + (float(t),)), dtype=float)
        quad = np.zeros(f.n_out)
        for s, w in zip(s_nodes, weights):
            quad += w * np.array(g.eval(tuple(x + s * t * y) + tuple(y) + (0.0,)), dtype=float)
        err = float(np.max(np.abs(sym - quad) / np.maximum(np.abs(sym), 1.0)))
        report.samples += 1
        report.max_rel_error = max(report.max_rel_error, err)
        if err > tol:
            report.mismatches.append({"x": x.tolist(), "y": y.tolist(), "t": float(t), "rel_error": err})
    return report
