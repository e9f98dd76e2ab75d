"""Lipschitz-defect certificates for polynomial maps on p-adic balls.

The central quantity is

    sigma = sup { ||f(z) - f(y) - A (z - y)|| / ||z - y|| : y != z in B }.

For the ``coefficient_bound`` method we telescope ``f(y + h) - f(y)`` into
``sum_j h_j D_j(y, h)`` with each ``D_j`` an exact polynomial quotient, so
``||f(y+h) - f(y) - A h|| <= ||h|| * max_j ||D_j(y, h) - A e_j||``.  After
substituting ``y = x + p^k u`` and ``h = p^k v`` (u, v ranging over the unit
polyball) the sup of each polynomial is bounded by its largest coefficient
norm.  The bound is sound for every pair in the ball, not just sampled ones.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .dq import DomainSpec, dq1, dqk
from .errors import BallOutsideDomain, DimensionMismatch, NotInvertibleAtPrecision
from .linalg import BallSpec, UltraMatrix, invert, op_norm
from .padic import DEFAULT_PRECISION, rational_norm
from .poly import Poly, PolyMap

METHODS = ("coefficient_bound", "enumeration")
_UNSET = object()


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def rational_matrix(A, prime=None):
    """Rational entries of A (UltraMatrix representatives or nested sequences)."""
    if isinstance(A, UltraMatrix):
        return A.to_fractions()
    return tuple(tuple(Fraction(v) for v in row) for row in A)


def vector_norm(values, prime):
    return max((rational_norm(v, prime) for v in values), default=Fraction(0))


def defect_quotients(f: PolyMap, n_params=0):
    """Exact quotients D[j] with f(q, y+h) - f(q, y) = sum_j h_j D[j](q, y, h).

    Each D[j] is a PolyMap in the variables (q, y, h) (m + 2n of them).
    """
    m = n_params
    n = f.n_in - m
    total = m + 2 * n
    V = lambda i: Poly.var(total, i)  # noqa: E731
    q = [V(i) for i in range(m)]
    y = [V(m + i) for i in range(n)]
    h = [V(m + n + i) for i in range(n)]
    out = []
    for j in range(n):
        upper = q + [y[i] + h[i] if i <= j else y[i] for i in range(n)]
        lower = q + [y[i] + h[i] if i < j else y[i] for i in range(n)]
        comps = [(c.subs(upper) - c.subs(lower)).divide_by_var(m + n + j) for c in f.components]
        out.append(PolyMap(comps, total))
    return out


def _scaled_args(total_in, centers, exps, prime, offset=0):
    """Substitutes c_i + p^e_i * w_i for a block of variables."""
    return [
        Poly.const(total_in, c) + Poly.var(total_in, offset + i) * (Fraction(prime) ** e)
        for i, (c, e) in enumerate(zip(centers, exps))
    ]


def _bound_polys(f, A, ball, params):
    """The polynomials whose max coefficient norms bound sigma."""
    p = ball.prime
    m = params.dim if params is not None else 0
    n = ball.dim
    if f.n_in != m + n:
        raise DimensionMismatch(f"map takes {f.n_in} variables, ball/params give {m + n}")
    A = rational_matrix(A)
    if len(A) != f.n_out or any(len(r) != n for r in A):
        raise DimensionMismatch(f"A must be {f.n_out}x{n}")
    total = m + 2 * n
    k = ball.radius_exp
    args = []
    if m:
        args += _scaled_args(total, params.center.to_fractions(), [params.radius_exp] * m, p, 0)
    args += _scaled_args(total, ball.center.to_fractions(), [k] * n, p, m)
    args += [Poly.var(total, m + n + i) * (Fraction(p) ** k) for i in range(n)]
    polys = []
    for j, D in enumerate(defect_quotients(f, m)):
        for l, comp in enumerate(D.components):
            polys.append(((l, j), comp.subs(args) - A[l][j]))
    return polys


@dataclass(frozen=True, eq=False)
class SigmaCertificate:
    f: PolyMap
    ball: BallSpec
    A: tuple
    sigma: Fraction
    method: str
    a_inv_norm: Fraction | None  # None when A is singular (or not square)
    params: BallSpec | None = None
    transcript_hash: str = ""

    @property
    def prime(self):
        return self.ball.prime

    @property
    def kappa(self) -> Fraction | None:
        """Contraction factor sigma * ||A^-1||."""
        if self.a_inv_norm is None:
            return None
        return self.sigma * self.a_inv_norm

    @property
    def contractive(self) -> bool:
        return self.kappa is not None and self.kappa < 1

    @property
    def a(self) -> Fraction | None:
        return None if self.kappa is None else 1 - self.kappa

    @property
    def b(self) -> Fraction | None:
        return None if self.kappa is None else 1 + self.kappa

    @property
    def digit_gain(self):
        """Digits gained per contraction step: the least g with p^-g <= sigma ||A^-1||.

        None if kappa is 0 or undefined.
        """
        if not self.kappa:
            return None
        g = 0
        while Fraction(self.prime) ** -g > self.kappa:
            g += 1
        return g

    def to_json(self):
        return {
            "method": self.method,
            "prime": self.prime,
            "function": self.f.to_json(),
            "ball": self.ball.to_json(),
            "params": None if self.params is None else self.params.to_json(),
            "A": [[frac_str(v) for v in row] for row in self.A],
            "sigma": frac_str(self.sigma),
            "A_inv_norm": _opt_frac(self.a_inv_norm),
            "a": _opt_frac(self.a),
            "b": _opt_frac(self.b),
            "contractive": self.contractive,
            "transcript_hash": self.transcript_hash,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            f=PolyMap.from_json(obj["function"]),
            ball=BallSpec.from_json(obj["ball"]),
            A=tuple(tuple(Fraction(v) for v in row) for row in obj["A"]),
            sigma=Fraction(obj["sigma"]),
            method=obj["method"],
            a_inv_norm=None if obj["A_inv_norm"] is None else Fraction(obj["A_inv_norm"]),
            params=None if obj["params"] is None else BallSpec.from_json(obj["params"]),
            transcript_hash=obj["transcript_hash"],
        )


def _opt_frac(x):
    return None if x is None else frac_str(x)


def inverse_norm(A, prime, precision=DEFAULT_PRECISION):
    """||A^-1||, or None if A is not square or not invertible at precision."""
    A = rational_matrix(A)
    if len(A) != len(A[0]):
        return None
    try:
        return op_norm(invert(UltraMatrix.of(A, prime, precision)))
    except NotInvertibleAtPrecision:
        return None


def sigma_bound(
    f: PolyMap,
    A,
    ball: BallSpec,
    method="coefficient_bound",
    params: BallSpec | None = None,
    enum_precision=3,
    domain: BallSpec | None = None,
    a_inv_norm=_UNSET,
) -> SigmaCertificate:
    """Upper bound (coefficient_bound) or residue-grid maximum (enumeration) of sigma.

    With ``params`` the leading variables of f are parameters ranging over that
    ball and the sup is taken over them too.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if domain is not None and not domain.contains_ball(ball):
        raise BallOutsideDomain(f"{ball} is not inside {domain}")
    p = ball.prime
    A = rational_matrix(A)
    if a_inv_norm is _UNSET:
        a_inv_norm = inverse_norm(A, p, ball.center.precision)
    if method == "coefficient_bound":
        polys = _bound_polys(f, A, ball, params)
        sigma = max((P.max_coeff_norm(p) for _, P in polys), default=Fraction(0))
        transcript = [[list(key), [[list(e), frac_str(c)] for e, c in P.sorted_terms()]] for key, P in polys]
    else:
        sigma, transcript = _enumerate_sigma(f, A, ball, params, enum_precision)
    return SigmaCertificate(
        f=f,
        ball=ball,
        A=A,
        sigma=sigma,
        method=method,
        a_inv_norm=None if a_inv_norm is None else Fraction(a_inv_norm),
        params=params,
        transcript_hash=digest(transcript),
    )


def _enumerate_sigma(f, A, ball, params, m):
    """Exact maximum of the defect ratio over residue representatives mod p^m."""
    p = ball.prime
    qs = params.residues(m) if params is not None else [()]
    pts = ball.residues(m)
    n = ball.dim
    best = Fraction(0)
    argbest = None
    pairs = 0
    for q in qs:
        values = [f.eval(tuple(map(Fraction, q + y))) for y in pts]
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                y, z = pts[i], pts[j]
                h = [Fraction(b - a) for a, b in zip(y, z)]
                g = [
                    fz - fy - sum((A[l][c] * h[c] for c in range(n)), Fraction(0))
                    for l, (fy, fz) in enumerate(zip(values[i], values[j]))
                ]
                ratio = vector_norm(g, p) / vector_norm(h, p)
                pairs += 1
                if ratio > best:
                    best, argbest = ratio, (q, y, z)
    transcript = {"pairs": pairs, "precision": m, "argmax": argbest and [list(t) for t in argbest], "max": frac_str(best)}
    return best, transcript


# -- strict / uniform differentiability ---------------------------------------


@dataclass(frozen=True, eq=False)
class StrictRadius:
    point: tuple
    eps: Fraction
    radius_exp: int
    certificate: SigmaCertificate
    recipe: dict

    @property
    def radius(self):
        return Fraction(self.certificate.prime) ** -self.radius_exp


def _largest_ball(bound_at, start, eps, limit):
    """Smallest k >= start with bound_at(k) <= eps, given bound_at is non-increasing."""
    hi = start
    step = 1
    while bound_at(hi).sigma > eps:
        if hi > limit:
            raise ArithmeticError(f"no radius exponent <= {limit} achieves sigma <= {eps}")
        hi = start + step
        step *= 2
    lo = start
    if bound_at(lo).sigma <= eps:
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bound_at(mid).sigma <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def strict_diff_certify(f: PolyMap, x, eps, prime, precision=DEFAULT_PRECISION, limit=None) -> StrictRadius:
    """A ball B(x, p^-k) on which sigma(f, f'(x)) <= eps, as large as the bound allows.

    The radius from the classical C^2 => strictly differentiable argument
    (delta from a bound on f^[2], rho = 1/p, |s| <= delta |rho|^2 / 2) is
    computed too and kept in ``recipe``; the returned radius is the tightened one.
    """
    eps = Fraction(eps)
    x = tuple(Fraction(v) for v in x)
    limit = precision if limit is None else limit
    A = f.jacobian_at(x)
    a_inv = inverse_norm(A, prime, precision)
    cache = {}

    def bound_at(k):
        if k not in cache:
            cache[k] = sigma_bound(f, A, BallSpec.around(x, k, prime, precision), a_inv_norm=a_inv)
        return cache[k]

    recipe = _prop34_recipe(f, x, eps, prime, limit)
    k = _largest_ball(bound_at, min(0, recipe["radius_exp"]), eps, limit)
    return StrictRadius(x, eps, k, bound_at(k), recipe)


def _prop34_recipe(f, x, eps, prime, limit):
    """delta, rho, s and r from the C^2 argument, with delta = p^-j from coefficient bounds."""
    n = f.n_in
    g2 = dqk(f, 2)
    # f2((u, v, 0), (w, 0, a), b) with u in B(x, delta), v, w in B(0, delta), a, b in B_K(0, delta)
    total = 3 * n + 2
    P = Fraction(prime)
    j = 0
    while True:
        d = P**j
        U = [Poly.const(total, x[i]) + Poly.var(total, i) * d for i in range(n)]
        Vv = [Poly.var(total, n + i) * d for i in range(n)]
        W = [Poly.var(total, 2 * n + i) * d for i in range(n)]
        a = Poly.var(total, 3 * n) * d
        b = Poly.var(total, 3 * n + 1) * d
        zero = Poly(total)
        args = U + Vv + [zero] + W + [zero] * n + [a] + [b]
        bound = max((c.subs(args).max_coeff_norm(prime) for c in g2.components), default=Fraction(0))
        if bound < eps or j > limit:
            break
        j += 1
    delta = min(P**-j, Fraction(1))
    rho = 1 / P
    # |s| is the largest power of p with |s| <= delta |rho|^2 / 2
    s_exp = j + 2
    while P**-s_exp > delta * rho**2 / 2:
        s_exp += 1
    s = P**-s_exp
    r = min(s * delta, delta**3 * rho**6 / 8)
    r_exp = 0
    while P**-r_exp >= r:
        r_exp += 1
    return {
        "delta": frac_str(delta),
        "rho": frac_str(rho),
        "s": frac_str(s),
        "r": frac_str(r),
        "f2_bound": frac_str(bound),
        "radius_exp": r_exp,
    }


@dataclass(frozen=True)
class UniformCertificate:
    eps: Fraction
    delta: Fraction
    radius_exp: int
    bound: Fraction


def uniform_diff_certify(f: PolyMap, ball: BallSpec, eps, limit=None) -> UniformCertificate:
    """delta such that ||f(z) - f(y) - f'(x)(z - y)|| < eps ||z - y|| whenever
    x, y, z lie in the ball with ||y - x||, ||z - x|| < delta.

    ``radius_exp`` j means ||y - x|| <= p^-j, i.e. delta = p^(1-j).
    """
    eps = Fraction(eps)
    p = ball.prime
    n = ball.dim
    K = ball.radius_exp
    limit = ball.center.precision if limit is None else limit
    if f.n_in != n:
        raise DimensionMismatch(f"map takes {f.n_in} variables, ball has dimension {n}")
    D = defect_quotients(f)
    jac = f.jacobian()
    total = 3 * n
    P = Fraction(p)
    c = ball.center.to_fractions()
    xs = [Poly.const(total, c[i]) + Poly.var(total, i) * P**K for i in range(n)]

    def bound(j):
        ys = [xs[i] + Poly.var(total, n + i) * P**j for i in range(n)]
        hs = [Poly.var(total, 2 * n + i) * P**j for i in range(n)]
        worst = Fraction(0)
        for col, Dj in enumerate(D):
            for l, comp in enumerate(Dj.components):
                poly = comp.subs(ys + hs) - jac[l][col].subs(xs)
                worst = max(worst, poly.max_coeff_norm(p))
        return worst

    j = K
    while True:
        b = bound(j)
        if b < eps:
            return UniformCertificate(eps, P ** (1 - j), j, b)
        if j > limit:
            raise ArithmeticError(f"no delta above p^-{limit} reaches eps = {eps}")
        j += 1


# -- SC^k ----------------------------------------------------------------------


@dataclass
class LevelReport:
    level: int
    n_vars: int
    samples: int
    decay_constant: Fraction
    derivative_consistent: bool

    @property
    def passed(self):
        return self.derivative_consistent


@dataclass
class SCkReport:
    k: int
    levels: list = field(default_factory=list)

    @property
    def passed(self):
        return all(l.passed for l in self.levels)

    def to_json(self):
        return {
            "k": self.k,
            "passed": self.passed,
            "levels": [
                {
                    "level": l.level,
                    "n_vars": l.n_vars,
                    "samples": l.samples,
                    "decay_constant": frac_str(l.decay_constant),
                    "derivative_consistent": l.derivative_consistent,
                }
                for l in self.levels
            ],
        }


def strict_decay_constant(g: PolyMap, point, prime) -> Fraction:
    """C with sigma(g, g'(P), B(P, p^-k)) <= C p^-k for every k >= 0.

    Every coefficient of D_j(P + u, v) - g'(P) e_j has positive degree in
    (u, v), so rescaling by p^k shrinks each one by at least p^-k.
    """
    P = tuple(Fraction(v) for v in point)
    A = g.jacobian_at(P)
    ball = BallSpec.around(P, 0, prime)
    return sigma_bound(g, A, ball, a_inv_norm=None).sigma


def sck_certify(f: PolyMap, ball: BallSpec, k: int, samples=64, seed=0) -> SCkReport:
    """Certify strict differentiability of f^[j], j < k, at sampled points of U^[j]."""
    if k < 0:
        raise ValueError("k must be >= 0")
    rng = random.Random(seed)
    p = ball.prime
    report = SCkReport(k)
    for j in range(k):
        g = dqk(f, j)
        dom = DomainSpec(ball, j)
        worst = Fraction(0)
        consistent = True
        g1 = dq1(g)
        for _ in range(samples):
            P = dom.sample(rng)
            worst = max(worst, strict_decay_constant(g, P, p))
            # the strict derivative must be df(P, .) = g^[1](P, ., 0)
            jac = g.jacobian_at(P)
            for col in range(g.n_in):
                e = tuple(Fraction(int(i == col)) for i in range(g.n_in))
                d = g1.eval(P + e + (Fraction(0),))
                if any(d[l] != jac[l][col] for l in range(g.n_out)):
                    consistent = False
        report.levels.append(LevelReport(j, g.n_in, samples, worst, consistent))
    return report
