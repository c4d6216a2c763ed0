"""Scripted reproductions: the nested-min counterexample and Uzawa-form checks."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bmatrix
from .duality import (blackorby_cost, canonical_problem, mes, mes_alt, mes_matrix,
                      solve_cost_min, uzawa_aes)
from .elasticity import aes_matrix
from .errors import EscalcError
from .prodfn import NestedMin, check_smoothness, differentiate, spec_to_dict

DEFAULT_SEED = 42
UZAWA_TOL = 1e-6

KINK_POINTS = ((1.0, 1.0, 1.0), (2.0, 1.0, 4.0), (1.5, 0.75, 3.0))
BRANCH_POINTS = {
    "x1": ((1.0, 2.0, 3.0), (0.5, 1.0, 1.0), (1.0, 4.0, 1.0)),
    "sqrt_x2x3": ((2.0, 1.0, 1.0), (3.0, 1.0, 4.0), (5.0, 2.0, 2.0)),
}
TWO_CONSTRAINT_POINTS = ((1.0, 1.0), (2.0, 3.0), (0.5, 4.0))


def resolve_seed(seed=None) -> int:
    """Explicit seed, else ``ESCALC_SEED``, else 42."""
    if seed is not None:
        return int(seed)
    env = os.environ.get("ESCALC_SEED")
    return int(env) if env else DEFAULT_SEED


def log_uniform(rng, size, low=0.5, high=2.0):
    return np.exp(rng.uniform(math.log(low), math.log(high), size=size))


def sample_points(spec, count, seed=None):
    """Points log-uniform on ``[0.5, 2]`` per coordinate, offset by the domain's lower bound."""
    rng = np.random.default_rng(resolve_seed(seed))
    return [spec.lower_bounds() + log_uniform(rng, spec.n) for _ in range(count)]


def rel_dev(a, b):
    """Entrywise ``|a - b| / max(|b|, 1)``, maximized."""
    a, b = np.asarray(a), np.asarray(b)
    return float((np.abs(a - b) / np.maximum(np.abs(b), 1.0)).max())


def _uzawa_point(spec, x, tol):
    x = np.asarray(x, dtype=float)
    entry = {"point": x.tolist()}
    try:
        po = canonical_problem(spec, x)
        primal = aes_matrix(differentiate(spec, x))
        sol = solve_cost_min(spec, po)
        dual = uzawa_aes(sol)
    except EscalcError as exc:
        entry.update(status="error", error=exc.code, message=str(exc))
        return entry
    dev = rel_dev(dual.values, primal.values)
    entry.update(status="ok", x_star_dev=rel_dev(sol.x_star, x), max_rel_dev=dev,
                 primal=primal.values.tolist(), dual=dual.values.tolist(),
                 passed=bool(dev < tol))
    return entry


def verify_uzawa(spec, points=None, seed=None, count: int = 20, tol: float = UZAWA_TOL,
                 workers: int | None = None) -> dict:
    """Compare primal AES at ``x`` with the Uzawa form at ``(grad f(x), f(x))``.

    The cost problem is solved from the default starting point, not from
    ``x``. Results are listed in input order whatever ``workers`` is.
    """
    seed = resolve_seed(seed)
    if points is None:
        points = sample_points(spec, count, seed)
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            entries = list(pool.map(lambda x: _uzawa_point(spec, x, tol), points))
    else:
        entries = [_uzawa_point(spec, x, tol) for x in points]
    ok = [e for e in entries if e["status"] == "ok"]
    worst = max((e["max_rel_dev"] for e in ok), default=float("nan"))
    passed = bool(entries) and len(ok) == len(entries) and all(e["passed"] for e in ok)
    return {
        "spec": spec_to_dict(spec),
        "seed": seed,
        "tolerance": tol,
        "points": entries,
        "max_rel_dev": worst,
        "verdict": "PASS" if passed else "FAIL",
    }


def two_constraint_matrix(x2, x3):
    """Bordered Hessian of the two-constraint cost problem on the curve x1 = y, x2 x3 = y^2."""
    grads = [(1.0, 0.0, 0.0), (0.0, x3, x2)]
    base = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    return bmatrix.multi_bordered(grads, base)


def _error_code(fn):
    try:
        fn()
    except EscalcError as exc:
        return exc.code
    return None


def casebook_blackorby(seed=None) -> dict:
    """Numerical walk-through of the ``min(x1, sqrt(x2 x3))`` counterexample.

    Sections, in order: kinks on ``x1^2 = x2 x3``; singular bordered
    Hessians on both smooth pieces; the closed-form cost function and
    ``C1^2 = C2 C3``; the two-constraint bordered determinant; the two
    Morishima values; Uzawa-form AES (defined) against primal AES
    (undefined).
    """
    seed = resolve_seed(seed)
    rng = np.random.default_rng(seed)
    spec = NestedMin()

    kinks = []
    for x in KINK_POINTS:
        rep = check_smoothness(spec, x)
        kinks.append({"point": list(x), "on_curve": math.isclose(x[0] ** 2, x[1] * x[2]),
                      "kinks": list(rep.kinks), "left": rep.left.tolist(),
                      "right": rep.right.tolist()})

    branches = []
    for name, pts in BRANCH_POINTS.items():
        for x in pts:
            b = spec.branch_bundles(x)[name]
            M = bmatrix.bordered_hessian(b)
            F = bmatrix.determinant(M)
            minors = bmatrix.leading_principal_minors(M)
            branches.append({"branch": name, "point": list(x),
                             "active": spec.active_branch(x) == name,
                             "det": F, "singular": bmatrix.is_singular(M, det=F),
                             "minors": list(minors.values),
                             "minors_alternate": minors.sign_alternates})

    cost_rows = []
    problems = [((1.0, 1.0, 1.0), 2.0)]
    problems += [(tuple(log_uniform(rng, 3).tolist()), float(log_uniform(rng, 1)[0]))
                 for _ in range(5)]
    for p, y in problems:
        sol = blackorby_cost(p, y)
        C = sol.grad_p
        x = sol.x_star
        cost_rows.append({"prices": list(p), "output": y, "cost": sol.cost,
                          "grad_p": C.tolist(),
                          "identity_residual": float(C[0] ** 2 - C[1] * C[2]),
                          "on_curve": [float(x[0] - y), float(x[1] * x[2] - y * y)]})

    dets = []
    for x2, x3 in TWO_CONSTRAINT_POINTS:
        d = bmatrix.determinant(two_constraint_matrix(x2, x3))
        dets.append({"x2": x2, "x3": x3, "det": d, "expected": -2 * x2 * x3})

    ref = blackorby_cost((1.0, 1.0, 1.0), 2.0)
    morishima = {"prices": [1.0, 1.0, 1.0], "output": 2.0,
                 "mes_12": mes(ref, 1, 2), "mes_21": mes(ref, 2, 1),
                 "mes_alt_12": mes_alt(ref, 1, 2),
                 "mes_matrix": mes_matrix(ref).values.tolist()}

    primal = []
    for x in KINK_POINTS[:1] + BRANCH_POINTS["x1"][:1] + BRANCH_POINTS["sqrt_x2x3"][:1]:
        primal.append({"point": list(x),
                       "aes_error": _error_code(lambda: aes_matrix(differentiate(spec, x))),
                       "branch_aes_errors": {
                           name: _error_code(lambda b=b: aes_matrix(b))
                           for name, b in spec.branch_bundles(x).items()}})
    uzawa = uzawa_aes(ref)
    verdict = {"uzawa_aes": uzawa.values.tolist(),
               "uzawa_defined": True,
               "primal": primal,
               "primal_defined": any(e["aes_error"] is None for e in primal)}

    return {
        "case": "blackorby1989",
        "function": "min(x1, sqrt(x2*x3))",
        "cost_function": "y*(p1 + 2*sqrt(p2*p3))",
        "seed": seed,
        "kinks": kinks,
        "branch_singularity": branches,
        "closed_form_cost": cost_rows,
        "two_constraint_determinant": dets,
        "morishima": morishima,
        "uzawa_vs_primal": verdict,
    }


CASES = {"blackorby1989": casebook_blackorby}
