"""Sparse multivariate polynomials with rational coefficients, and polynomial maps."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import DimensionMismatch, ParseError
from .padic import PadicScalar


class Poly:
    """A polynomial in ``nvars`` variables, stored as {exponent tuple: Fraction}.

    Zero coefficients are never stored, so two polynomials are equal exactly
    when their term dicts are equal.
    """

    __slots__ = ("nvars", "terms", "_plan")

    def __init__(self, nvars, terms=None):
        self.nvars = nvars
        clean = {}
        for exps, c in (terms or {}).items():
            if len(exps) != nvars:
                raise DimensionMismatch(f"exponent {exps} for {nvars} variables")
            c = Fraction(c)
            if c:
                clean[tuple(exps)] = c
        self.terms = clean
        self._plan = None

    @classmethod
    def const(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars, i):
        exps = [0] * nvars
        exps[i] = 1
        return cls(nvars, {tuple(exps): 1})

    @classmethod
    def _raw(cls, nvars, terms):
        obj = cls.__new__(cls)
        obj.nvars = nvars
        obj.terms = terms
        obj._plan = None
        return obj

    # -- structure --------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def degree_in(self, i):
        return max((e[i] for e in self.terms), default=0)

    def sorted_terms(self):
        return sorted(self.terms.items())

    def __eq__(self, other):
        if isinstance(other, (int, Rational)):
            other = Poly.const(self.nvars, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, tuple(self.sorted_terms())))

    # -- ring operations --------------------------------------------------

    def _lift(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise DimensionMismatch(f"{self.nvars} vs {other.nvars} variables")
            return other
        if isinstance(other, (int, Rational)):
            return Poly.const(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = s
            else:
                out.pop(e, None)
        return Poly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Rational)):
            c = Fraction(other)
            if not c:
                return Poly(self.nvars)
            return Poly._raw(self.nvars, {e: v * c for e, v in self.terms.items()})
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        result = Poly.const(self.nvars, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- calculus and substitution ---------------------------------------

    def diff(self, i):
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                out[tuple(f)] = c * e[i]
        return Poly._raw(self.nvars, out)

    def divide_by_var(self, i):
        """Exact quotient by the i-th variable; every term must contain it."""
        out = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                raise ArithmeticError(f"term {e} is not divisible by variable {i}")
            f = list(e)
            f[i] -= 1
            out[tuple(f)] = c
        return Poly._raw(self.nvars, out)

    def subs(self, values):
        """Substitute one Poly (all in a common ring) for each variable."""
        if len(values) != self.nvars:
            raise DimensionMismatch(f"{len(values)} substitutes for {self.nvars} variables")
        if not values:
            return self
        target = values[0].nvars
        powers = [[Poly.const(target, 1)] for _ in values]
        result = Poly(target)
        for e, c in self.terms.items():
            term = Poly.const(target, c)
            for i, k in enumerate(e):
                if k:
                    pw = powers[i]
                    while len(pw) <= k:
                        pw.append(pw[-1] * values[i])
                    term = term * pw[k]
            result = result + term
        return result

    def embed(self, nvars, positions):
        """Re-index into a ring with ``nvars`` variables; variable i goes to positions[i]."""
        out = {}
        for e, c in self.terms.items():
            f = [0] * nvars
            for i, k in enumerate(e):
                f[positions[i]] += k
            out[tuple(f)] = c
        return Poly._raw(nvars, out)

    def _horner_plan(self):
        """Terms nested by exponent of x0, then x1, ..., highest exponent first."""
        if self._plan is None:
            self._plan = _nest(list(self.terms.items()), 0, self.nvars)
        return self._plan

    def evaluate(self, point, coerce=Fraction):
        if len(point) != self.nvars:
            raise DimensionMismatch(f"point of length {len(point)} for {self.nvars} variables")
        if not self.terms:
            acc = coerce(0)
        else:
            converted = {}
            powers = {}

            def conv(c):
                if c not in converted:
                    converted[c] = coerce(c)
                return converted[c]

            def power(i, k):
                if (i, k) not in powers:
                    powers[i, k] = point[i] ** k
                return powers[i, k]

            def run(plan, i):
                if i == self.nvars:
                    return conv(plan)
                acc = None
                prev = 0
                for k, sub in plan:
                    val = run(sub, i + 1)
                    acc = val if acc is None else acc * power(i, prev - k) + val
                    prev = k
                return acc * power(i, prev) if prev else acc

            acc = run(self._horner_plan(), 0)
        # constants must still broadcast / carry precision like the inputs
        if self.nvars and not _has_shape_of(acc, point[0]):
            acc = acc + point[0] * 0
        return acc

    def max_coeff_norm(self, prime):
        """max_e |c_e|_p: bounds sup |P| over the unit polyball of Z_p^n."""
        from .padic import rational_norm

        return max((rational_norm(c, prime) for c in self.terms.values()), default=Fraction(0))

    # -- text -------------------------------------------------------------

    def to_str(self, names=None):
        names = names or [f"x{i}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), [-k for k in kv[0]])):
            mono = "*".join(n if k == 1 else f"{n}^{k}" for n, k in zip(names, e) if k)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def __str__(self):
        return self.to_str()

    def __repr__(self):
        return f"Poly({self.nvars}, {self.to_str()})"


def _nest(items, i, nvars):
    if i == nvars:
        return items[0][1]
    groups = {}
    for e, c in items:
        groups.setdefault(e[i], []).append((e, c))
    return [(k, _nest(groups[k], i + 1, nvars)) for k in sorted(groups, reverse=True)]


def _has_shape_of(value, ref):
    if isinstance(ref, np.ndarray):
        return isinstance(value, np.ndarray) and value.shape == ref.shape
    return True


def _coercer(point):
    for v in point:
        if isinstance(v, PadicScalar):
            prime = v.prime
            prec = min(w.precision for w in point if isinstance(w, PadicScalar))
            return lambda c: PadicScalar.from_rational(c, prime, prec)
        if isinstance(v, (float, np.floating, np.ndarray)):
            return float
    return Fraction


class PolyMap:
    """A polynomial map K^n_in -> K^n_out."""

    __slots__ = ("n_in", "n_out", "components")

    def __init__(self, components, n_in=None):
        components = tuple(components)
        if not components:
            raise DimensionMismatch("a polynomial map needs at least one component")
        n_in = components[0].nvars if n_in is None else n_in
        for c in components:
            if c.nvars != n_in:
                raise DimensionMismatch(f"component in {c.nvars} variables, expected {n_in}")
        self.n_in = n_in
        self.n_out = len(components)
        self.components = components

    @classmethod
    def from_dicts(cls, n_in, comps):
        """Build from a list of {exponent tuple: coefficient} dicts."""
        return cls([Poly(n_in, c) for c in comps], n_in)

    @classmethod
    def identity(cls, n):
        return cls([Poly.var(n, i) for i in range(n)], n)

    @classmethod
    def linear(cls, matrix):
        """The map v -> M v for a rational matrix M."""
        n = len(matrix[0])
        return cls([sum((Poly.var(n, j) * c for j, c in enumerate(row)), Poly(n)) for row in matrix], n)

    def __eq__(self, other):
        if not isinstance(other, PolyMap):
            return NotImplemented
        return self.n_in == other.n_in and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __call__(self, *point):
        return self.eval(point)

    def eval(self, point):
        point = tuple(point)
        if len(point) != self.n_in:
            raise DimensionMismatch(f"point of length {len(point)} for a map of {self.n_in} variables")
        coerce = _coercer(point)
        return tuple(c.evaluate(point, coerce) for c in self.components)

    def compose(self, inner: "PolyMap") -> "PolyMap":
        """self o inner."""
        if inner.n_out != self.n_in:
            raise DimensionMismatch(f"cannot compose: inner gives {inner.n_out}, outer takes {self.n_in}")
        return PolyMap([c.subs(inner.components) for c in self.components], inner.n_in)

    def __sub__(self, other):
        if not isinstance(other, PolyMap) or other.n_out != self.n_out or other.n_in != self.n_in:
            raise DimensionMismatch("maps of different shape")
        return PolyMap([a - b for a, b in zip(self.components, other.components)], self.n_in)

    def __add__(self, other):
        if not isinstance(other, PolyMap) or other.n_out != self.n_out or other.n_in != self.n_in:
            raise DimensionMismatch("maps of different shape")
        return PolyMap([a + b for a, b in zip(self.components, other.components)], self.n_in)

    def subs(self, values):
        return PolyMap([c.subs(values) for c in self.components], values[0].nvars)

    def degree(self):
        return max(c.degree() for c in self.components)

    def jacobian(self, cols=None):
        """Matrix of partial-derivative polynomials, restricted to variable indices ``cols``."""
        cols = range(self.n_in) if cols is None else cols
        return [[c.diff(j) for j in cols] for c in self.components]

    def jacobian_at(self, point, cols=None):
        point = tuple(point)
        coerce = _coercer(point)
        return [[d.evaluate(point, coerce) for d in row] for row in self.jacobian(cols)]

    def partial(self, fixed):
        """Fix the leading variables to rational values; returns a map in the rest."""
        k = len(fixed)
        rest = self.n_in - k
        values = [Poly.const(rest, Fraction(v)) for v in fixed] + [Poly.var(rest, i) for i in range(rest)]
        return PolyMap([c.subs(values) for c in self.components], rest)

    def __str__(self):
        return "(" + ", ".join(c.to_str() for c in self.components) + ")"

    def __repr__(self):
        return f"PolyMap({self.n_in} -> {self.n_out}: {self})"

    # -- JSON -------------------------------------------------------------

    def to_json(self):
        return {
            "n_in": self.n_in,
            "n_out": self.n_out,
            "components": [
                [{"coeff": f"{c.numerator}/{c.denominator}", "exps": list(e)} for e, c in comp.sorted_terms()]
                for comp in self.components
            ],
        }

    @classmethod
    def from_json(cls, obj):
        try:
            n_in = int(obj["n_in"])
            comps = []
            for comp in obj["components"]:
                terms = {}
                for t in comp:
                    exps = tuple(int(e) for e in t["exps"])
                    if len(exps) != n_in or min(exps, default=0) < 0:
                        raise ParseError(f"exponent list {t['exps']} does not fit n_in={n_in}")
                    terms[exps] = terms.get(exps, 0) + Fraction(str(t["coeff"]))
                comps.append(Poly(n_in, terms))
            pm = cls(comps, n_in)
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"bad polynomial map JSON: {exc}") from exc
        if "n_out" in obj and int(obj["n_out"]) != pm.n_out:
            raise ParseError(f"n_out={obj['n_out']} but {pm.n_out} components given")
        return pm


def monomial_map(n_in, spec):
    """Shorthand for tests and examples: ``monomial_map(1, [{(2,): 1}])`` is x -> x^2."""
    return PolyMap.from_dicts(n_in, spec)
