"""Command-line front end.

Every command writes one report to standard output. Failures are also
reported on standard output as ``{"error": <code>, "message": ...}``
with exit status 1 (computation errors) or 2 (bad arguments or a
malformed spec file).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import casebook
from .bmatrix import format_matrix
from .duality import PriceOutput, mes_matrix, solve_cost_min, uzawa_aes
from .elasticity import (ElasticityReport, aes_matrix, hes_determinant, hes_homogeneous,
                         hes_log_derivative)
from .errors import ConfigError, EscalcError, SpecError
from .prodfn import differentiate, evaluate, fd_differentiate, load_spec, spec_from_dict
from .profit import hles_matrix, mges_matrix, solve_profit_max

FORMATS = ("json", "csv", "text")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _vector(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"cannot parse numeric vector {text!r}") from exc


def _point_list(text):
    return [_vector(chunk) for chunk in text.split(";") if chunk.strip()]


def build_parser():
    parser = _Parser(prog="escalc", description="Elasticities of substitution for smooth production functions.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, spec=True, point=False, prices=None):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--format", choices=FORMATS, default="json")
        if spec:
            p.add_argument("--spec", help="production-function JSON file")
        if point:
            p.add_argument("--point", required=True, help="comma-separated input quantities")
        if prices:
            p.add_argument("--problem", help="problem JSON: {spec, prices, %s, init?}" % prices)
            p.add_argument("--prices", help="comma-separated input prices")
            p.add_argument("--" + prices.replace("_", "-"), dest=prices, type=float)
            p.add_argument("--init", help="comma-separated starting bundle")
        return p

    add("eval", "evaluate f at a point", point=True)
    p = add("diff", "value, gradient and Hessian", point=True)
    p.add_argument("--fd", action="store_true", help="also report the finite-difference bundle")
    add("aes", "Allen elasticities from bordered-Hessian cofactors", point=True)
    p = add("hes", "two-factor Hicks elasticity", point=True)
    p.add_argument("--form", choices=("determinant", "homogeneous", "log-derivative"),
                   default="determinant")
    add("cost", "solve the cost-minimization problem", prices="output")
    add("uzawa", "Allen elasticities in cost-function form", prices="output")
    p = add("mes", "Morishima elasticities from the cost function", prices="output")
    p.add_argument("--alt", action="store_true", help="use p_j (C_ij/C_i - C_jj/C_j)")
    add("profit", "profit maximization with HLES and MGES", prices="output_price")
    p = add("verify-uzawa", "primal AES vs cost-function AES at sampled points")
    p.add_argument("--points", help="semicolon-separated points, e.g. '1,1;2,1.5'")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float, default=casebook.UZAWA_TOL)
    p.add_argument("--workers", type=int)
    p = add("casebook", "reproduce a worked counterexample", spec=False)
    p.add_argument("case", choices=sorted(casebook.CASES))
    p.add_argument("--seed", type=int)
    return parser


def _spec(args):
    if not args.spec:
        raise ConfigError(f"{args.command} requires --spec")
    try:
        return load_spec(args.spec)
    except OSError as exc:
        raise ConfigError(f"cannot read spec file: {exc}") from exc


def _problem(args, level_key):
    """Spec, prices, level and init from --problem or individual flags."""
    if args.problem:
        try:
            with open(args.problem) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read problem file: {exc}") from exc
        allowed = {"spec", "prices", level_key, "init"}
        if not isinstance(data, dict) or not {"spec", "prices", level_key} <= set(data) \
                or set(data) - allowed:
            raise SpecError(f"problem JSON needs keys spec, prices, {level_key} (init optional)")
        init = data.get("init")
        return (spec_from_dict(data["spec"]), np.asarray(data["prices"], dtype=float),
                float(data[level_key]), None if init is None else np.asarray(init, dtype=float))
    level = getattr(args, level_key)
    if args.prices is None or level is None:
        flag = "--" + level_key.replace("_", "-")
        raise ConfigError(f"{args.command} needs --problem or both --prices and {flag}")
    init = None if args.init is None else _vector(args.init)
    return _spec(args), _vector(args.prices), level, init


def _bundle_dict(b):
    return {"value": b.value, "gradient": b.gradient.tolist(), "hessian": b.hessian.tolist(),
            "point": b.point.tolist()}


def run(args):
    """Dispatch a parsed command; returns a report object."""
    cmd = args.command
    if cmd == "casebook":
        return casebook.CASES[args.case](seed=args.seed)
    if cmd == "verify-uzawa":
        points = _point_list(args.points) if args.points else None
        return casebook.verify_uzawa(_spec(args), points, seed=args.seed, count=args.count,
                                     tol=args.tol, workers=args.workers)
    if cmd in ("eval", "diff", "aes", "hes"):
        spec = _spec(args)
        x = _vector(args.point)
        if cmd == "eval":
            return {"point": x.tolist(), "value": evaluate(spec, x)}
        if cmd == "diff":
            out = {"analytic": _bundle_dict(differentiate(spec, x))}
            if args.fd:
                out["finite_difference"] = _bundle_dict(fd_differentiate(spec, x))
            return out
        if cmd == "aes":
            return aes_matrix(differentiate(spec, x))
        if args.form == "log-derivative":
            return ElasticityReport("HES", hes_log_derivative(spec, x), x.tolist(),
                                    ["isoquant log-derivative"])
        b = differentiate(spec, x)
        if args.form == "homogeneous":
            return ElasticityReport("HES_hom", hes_homogeneous(b, spec), x.tolist())
        return ElasticityReport("HES", hes_determinant(b), x.tolist())
    if cmd == "profit":
        spec, p, p_y, init = _problem(args, "output_price")
        psol = solve_profit_max(spec, p, p_y, init)
        return {"solution": psol.to_dict(), "reports": [hles_matrix(psol), mges_matrix(psol)]}
    spec, p, y, init = _problem(args, "output")
    sol = solve_cost_min(spec, PriceOutput(p, y), init)
    if cmd == "cost":
        return sol.to_dict()
    if cmd == "uzawa":
        return uzawa_aes(sol)
    return mes_matrix(sol, alt=args.alt)


def _plain(obj):
    if isinstance(obj, ElasticityReport):
        return obj.to_dict()
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _reports(obj):
    if isinstance(obj, ElasticityReport):
        return [obj]
    if isinstance(obj, dict) and "reports" in obj:
        return list(obj["reports"])
    return []


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def render(obj, fmt="json") -> str:
    """Serialize a report as JSON, CSV or aligned text."""
    reports = _reports(obj)
    if fmt == "json":
        return json.dumps(_plain(obj), indent=2)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if reports:
            w.writerow(["measure", "i", "j", "value"])
            for rep in reports:
                w.writerows(rep.rows())
        else:
            w.writerow(["key", "value"])
            w.writerows(_flatten(_plain(obj)))
        return buf.getvalue().rstrip("\n")
    lines = []
    for rep in reports:
        lines.append(f"{rep.measure} at {rep.point}")
        lines.append(format_matrix(rep.values) if rep.is_matrix else f"{float(rep.values):.10g}")
        lines.extend(f"  note: {d}" for d in rep.diagnostics)
    if not reports or isinstance(obj, dict):
        lines.extend(f"{k}: {v}" for k, v in _flatten(_plain(obj)) if not k.startswith("reports"))
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        report = run(args)
        print(render(report, args.format))
    except (ConfigError, SpecError) as exc:
        # malformed specs count as configuration errors
        print(json.dumps(exc.to_dict()))
        return 2
    except EscalcError as exc:
        print(json.dumps(exc.to_dict()))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
