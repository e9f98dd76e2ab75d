"""Command-line front end.

Problem files are JSON objects::

    {"backend": {"type": "padic", "prime": 7, "precision": 32},
     "function": {"n_in": 1, "components": [[{"coeff": "1/1", "exps": [2]}]]},
     "task": "invert",
     "params": {"point": ["3"], "target": ["2"]}}

Exit status: 0 when the task ran and its checks passed, 1 when a check
failed or the task raised a package error, 2 for unusable input.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from .dq import chain_dq, dq1, dqk, scaling_identities_check
from .errors import DimensionMismatch, PadicIFTError, ParseError, PreconditionError
from .implicit import beta_solve, build_implicit_chart, sample_pairs, theta_roundtrip
from .linalg import BallSpec
from .newton import ball_image, build_chart, newton_solve
from .padic import DEFAULT_PRECISION, PadicScalar
from .poly import PolyMap
from .real import build_real_chart, continued_beta, integral_identity_check, real_solve
from .strictness import canonical_json, digest, frac_str, sck_certify, sigma_bound, strict_diff_certify

TASKS = ("dq", "certify", "invert", "implicit", "ball-image", "identity-check")


def _is_prime(n):
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


@dataclass
class ProblemSpec:
    backend: str
    function: PolyMap
    task: str
    params: dict = field(default_factory=dict)
    prime: int | None = None
    precision: int = DEFAULT_PRECISION
    seed: int = 0
    samples: int = 100


def _rational(value, where):
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"{where}: {value!r} is not a rational number") from exc


def _vector(params, key, length, task, required=True):
    if key not in params:
        if required:
            raise ParseError(f"params.{key}: required for task {task}")
        return None
    value = params[key]
    if not isinstance(value, list):
        raise ParseError(f"params.{key}: expected a list")
    if length is not None and len(value) != length:
        raise ParseError(f"params.{key}: expected {length} entries, got {len(value)}")
    return tuple(_rational(v, f"params.{key}[{i}]") for i, v in enumerate(value))


def parse_problem(obj, task=None, seed=None, samples=None, precision=None) -> ProblemSpec:
    """Validate a problem object; command-line values override file fields."""
    if not isinstance(obj, dict):
        raise ParseError("problem file must hold a JSON object")
    backend = obj.get("backend")
    if not isinstance(backend, dict) or backend.get("type") not in ("padic", "real"):
        raise ParseError('backend: expected {"type": "padic" | "real", ...}')
    if "function" not in obj:
        raise ParseError("function: missing")
    f = PolyMap.from_json(obj["function"])
    task = task or obj.get("task")
    if task not in TASKS:
        raise ParseError(f"task: expected one of {', '.join(TASKS)}, got {task!r}")
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise ParseError("params: expected an object")
    spec = ProblemSpec(backend["type"], f, task, params)
    if spec.backend == "padic":
        try:
            spec.prime = int(backend["prime"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError("backend.prime: required integer for the padic backend") from exc
        if not _is_prime(spec.prime):
            raise ParseError(f"backend.prime: {spec.prime} is not prime")
        spec.precision = int(precision if precision is not None else backend.get("precision", DEFAULT_PRECISION))
        if spec.precision < 4:
            raise ParseError(f"backend.precision: must be >= 4, got {spec.precision}")
    spec.seed = int(seed if seed is not None else obj.get("seed", 0))
    spec.samples = int(samples if samples is not None else obj.get("samples", 100))
    if "a" in params or "b" in params:
        a = _rational(params.get("a", "1/2"), "params.a")
        b = _rational(params.get("b", "3/2"), "params.b")
        if not 0 < a < 1 < b:
            raise ParseError(f"params.a/params.b: need 0 < a < 1 < b, got a = {a}, b = {b}")
    return spec


# -- task runners: each returns (passed, result dict) -------------------------


def _digits(v):
    return [e.to_json() for e in v]


def run_dq(spec):
    order = int(spec.params.get("order", 1))
    g = dqk(spec.function, order)
    return True, {"order": order, "n_vars": g.n_in, "map": g.to_json(), "text": _dq_text(spec.function, g, order)}


def _dq_text(f, g, order):
    if order == 1 and f.n_in == 1:
        return str(PolyMap(g.components, g.n_in).components[0].to_str(["x", "y", "t"]))
    return str(g)


def run_certify(spec):
    f, p, prec = spec.function, spec.prime, spec.precision
    point = _vector(spec.params, "point", f.n_in, spec.task)
    result = {}
    if "eps" in spec.params:
        sr = strict_diff_certify(f, point, _rational(spec.params["eps"], "params.eps"), p, prec)
        result["strict"] = {"radius_exp": sr.radius_exp, "recipe": sr.recipe, "certificate": sr.certificate.to_json()}
        return True, result
    if "sck" in spec.params:
        k = int(spec.params.get("radius_exp", 0))
        rep = sck_certify(f, BallSpec.around(point, k, p, prec), int(spec.params["sck"]), spec.samples, spec.seed)
        return rep.passed, {"sck": rep.to_json()}
    k = int(spec.params.get("radius_exp", 0))
    A = spec.params.get("A")
    A = f.jacobian_at(point) if A is None else [[_rational(v, "params.A") for v in row] for row in A]
    cert = sigma_bound(f, A, BallSpec.around(point, k, p, prec), method=spec.params.get("method", "coefficient_bound"))
    return cert.contractive or not spec.params.get("require_contractive", False), {"certificate": cert.to_json()}


def _chart(spec):
    f = spec.function
    point = _vector(spec.params, "point", f.n_in, spec.task)
    k = spec.params.get("radius_exp", "auto")
    return build_chart(f, point, spec.prime, radius_exp=k, precision=spec.precision)


def run_invert(spec):
    chart = _chart(spec)
    target = _vector(spec.params, "target", spec.function.n_out, spec.task)
    res = newton_solve(chart, target)
    passed = res.final_residual_valuation >= spec.precision and res.gain_respected(chart.digit_gain)
    return passed, {
        "chart": chart.to_json(),
        "root": _digits(res.root),
        "root_residue": list(res.root.residues(min(3, spec.precision))) if res.root.valuation() >= 0 else None,
        "transcript": res.to_json(),
        "transcript_hash": digest(res.to_json()),
    }


def run_ball_image(spec):
    chart = _chart(spec)
    y = _vector(spec.params, "y", spec.function.n_in, spec.task)
    s_exp = int(spec.params["s_exp"]) if "s_exp" in spec.params else chart.radius_exp
    im = ball_image(chart, y, s_exp)
    result = {"chart": chart.to_json(), "image": im.to_json()}
    m = spec.params.get("check_residues")
    passed = True
    if m:
        m = int(m)
        ball = BallSpec.around(y, s_exp, spec.prime, spec.precision)
        actual = {tuple(e.residue(m) for e in chart.value(pt)) for pt in ball.residues(m)}
        predicted = im.residues(m)
        passed = actual == predicted
        result["residue_check"] = {"modulus_exp": m, "points": len(actual), "equal": passed}
    return passed, result


def run_implicit(spec):
    params = spec.params
    f = spec.function
    n = f.n_out
    m = f.n_in - n
    p = _vector(params, "p", m, spec.task)
    x = _vector(params, "x", n, spec.task)
    a = _rational(params.get("a", "1/2"), "params.a")
    b = _rational(params.get("b", "3/2"), "params.b")
    queries = params.get("queries", [])
    if spec.backend == "real":
        return _run_implicit_real(spec, p, x, a, b, queries)
    chart = build_implicit_chart(f, p, x, a, b, spec.prime, spec.precision)
    rows = []
    for i, q in enumerate(queries):
        q = _vector({"q": q}, "q", m, spec.task)
        res = beta_solve(chart, q)
        rows.append({"q": [frac_str(v) for v in q], "beta": _digits(res.root), "residual_valuation": res.final_residual_valuation})
    rt = theta_roundtrip(chart, sample_pairs(chart, spec.samples, spec.seed))
    passed = rt.ok and all(r["residual_valuation"] >= spec.precision for r in rows)
    return passed, {"chart": chart.to_json(), "beta": rows, "theta_roundtrip": rt.to_json()}


def _run_implicit_real(spec, p, x, a, b, queries):
    f = spec.function
    chart = build_real_chart(f, [float(v) for v in p], [float(v) for v in x], a, b)
    rows = []
    for q in queries:
        q = [float(v) for v in q]
        if chart.in_Q(q):
            root = real_solve(chart, q).root
            charts = 1
        else:
            root, used = continued_beta(f, [float(v) for v in p], [float(v) for v in x], a, b, q)
            charts = len(used)
        residual = float(max(abs(u - v) for u, v in zip(f.eval(tuple(q) + tuple(root)), chart.target)))
        rows.append({"q": q, "beta": root.tolist(), "residual": residual, "charts": charts})
    tol = 1e-10 * (1 + float(max(abs(v) for v in chart.target)))
    return all(r["residual"] <= tol for r in rows), {"chart": chart.to_json(), "beta": rows}


def run_identity_check(spec):
    f = spec.function
    if spec.backend == "real":
        rng = random.Random(spec.seed)
        n = f.n_in
        samples = [
            ([rng.uniform(-1, 1) for _ in range(n)], [rng.uniform(-1, 1) for _ in range(n)], rng.uniform(-1, 1))
            for _ in range(spec.samples)
        ]
        rep = integral_identity_check(f, samples)
        return rep.ok, {"integral_identity": rep.to_json()}
    p, prec = spec.prime, spec.precision
    rng = random.Random(spec.seed)
    n = f.n_in

    def scalar(unit=False):
        v = rng.randrange(1, p**prec) if unit else rng.randrange(p**prec)
        if unit and v % p == 0:
            v += 1
        return PadicScalar.from_rational(v, p, prec)

    samples = [
        (
            [scalar() for _ in range(n)], [scalar() for _ in range(n)], scalar(), scalar(True),
            [scalar() for _ in range(n)], [scalar() for _ in range(n)], scalar(), scalar(),
        )
        for _ in range(spec.samples)
    ]
    rep = scaling_identities_check(f, samples)
    result = {
        "symbolic_first_order": rep.symbolic_first_order,
        "symbolic_second_order": rep.symbolic_second_order,
        "samples_checked": rep.samples_checked,
        "violations": rep.violations,
        "first_violation": rep.first_violation,
    }
    passed = rep.ok
    if f.n_out == f.n_in:
        chain_ok = chain_dq(f, f) == dq1(f.compose(f))
        result["chain_rule_self_composition"] = chain_ok
        passed = passed and chain_ok
    return passed, result


RUNNERS = {
    "dq": run_dq,
    "certify": run_certify,
    "invert": run_invert,
    "ball-image": run_ball_image,
    "implicit": run_implicit,
    "identity-check": run_identity_check,
}

PADIC_ONLY = ("certify", "invert", "ball-image")


def run(spec: ProblemSpec) -> tuple[int, dict]:
    """Run one task; returns (exit code, report)."""
    report = {"task": spec.task, "backend": spec.backend, "seed": spec.seed}
    if spec.backend == "padic":
        report.update(prime=spec.prime, precision=spec.precision)
    if spec.backend == "real" and spec.task in PADIC_ONLY:
        report.update(status="input_error", error={"type": "ParseError", "message": f"task {spec.task} needs the padic backend"})
        return 2, report
    try:
        passed, result = RUNNERS[spec.task](spec)
    except (ParseError, PreconditionError, DimensionMismatch) as exc:
        report.update(status="input_error", error={"type": type(exc).__name__, "message": str(exc)})
        return 2, report
    except PadicIFTError as exc:
        report.update(status="fail", error={"type": type(exc).__name__, "message": str(exc)})
        return 1, report
    report.update(status="pass" if passed else "fail", result=result)
    return (0 if passed else 1), report


def _summary(report):
    lines = [f"{report['task']}: {report['status']}"]
    if "error" in report:
        lines.append(f"  {report['error']['type']}: {report['error']['message']}")
    result = report.get("result", {})
    if "text" in result:
        lines.append(f"  f^[{result['order']}] = {result['text']}")
    if "root_residue" in result and result["root_residue"] is not None:
        lines.append(f"  root mod p^{min(3, report['precision'])} = {result['root_residue']}")
    if "transcript" in result:
        lines.append(f"  iterations = {result['transcript']['iterations']}")
    if "certificate" in result:
        cert = result["certificate"]
        lines.append(f"  sigma = {cert['sigma']}, contractive = {cert['contractive']}")
    if "beta" in result:
        for row in result["beta"]:
            lines.append(f"  beta({row['q']}) = {row['beta']}")
    return "\n".join(lines)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="problem JSON file ('-' for stdin)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--precision", type=int, default=None)
    common.add_argument("--json-out", metavar="PATH", default=None, help="write the JSON report here ('-' for stdout)")
    parser = argparse.ArgumentParser(prog="padic-ift", description="Certified local inversion over Q_p and R.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the task named in the file")
    for task in TASKS:
        sub.add_parser(task, parents=[common], help=f"run the {task} task on the file's function")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = sys.stdin.read() if args.file == "-" else open(args.file).read()
    except OSError as exc:
        print(f"ParseError: cannot read {args.file}: {exc}", file=sys.stderr)
        return 2
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        print(f"ParseError: line {exc.lineno} column {exc.colno}: {exc.msg}", file=sys.stderr)
        return 2
    try:
        spec = parse_problem(
            obj,
            task=None if args.command == "run" else args.command,
            seed=args.seed,
            samples=args.samples,
            precision=args.precision,
        )
    except ParseError as exc:
        print(f"ParseError: {exc}", file=sys.stderr)
        return 2
    code, report = run(spec)
    print(_summary(report))
    if args.json_out == "-":
        print(canonical_json(report))
    elif args.json_out:
        with open(args.json_out, "w") as fh:
            fh.write(canonical_json(report) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
