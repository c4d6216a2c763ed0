"""Profit maximization and the gross (profit-side) elasticities.

Only input-price indices are used for ``pi_i`` and ``pi_ij``; the output
price enters as a parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elasticity import ElasticityReport
from .errors import (DomainError, NoConvergence, NotConcaveAtSolution, NotDifferentiable,
                     Unbounded, ZeroNetSupply)
from .prodfn import differentiate, homogeneity_degree

GRAD_TOL = 1e-12
ACCEPT_TOL = 1e-10
DIVERGENCE = 1e10
BOUNDARY = 1e-10


@dataclass(frozen=True)
class ProfitSolution:
    """Profit-maximizing bundle.

    ``grad`` is ``(d pi/d p_1 .. d pi/d p_n, d pi/d p_y) = (-x*, f(x*))``
    and ``hess_pp[i, j] = pi_ij = -dx_i/dp_j``.
    """

    p: np.ndarray
    p_y: float
    x_star: np.ndarray
    profit: float
    output: float
    grad: np.ndarray
    hess_pp: np.ndarray
    iterations: int
    residuals: tuple

    @property
    def n(self):
        return self.x_star.size

    def as_point(self):
        return {"prices": self.p.tolist(), "output_price": self.p_y}

    def to_dict(self):
        return {
            "prices": self.p.tolist(),
            "output_price": self.p_y,
            "x_star": self.x_star.tolist(),
            "profit": self.profit,
            "output": self.output,
            "grad": self.grad.tolist(),
            "hess_pp": self.hess_pp.tolist(),
            "trace": {"iterations": self.iterations, "residuals": list(self.residuals)},
        }


def _check_prices(spec, p, p_y):
    p = np.asarray(p, dtype=float)
    if p.shape != (spec.n,) or not np.all(np.isfinite(p)) or not np.all(p > 0):
        raise DomainError(f"need {spec.n} finite positive input prices")
    if not (np.isfinite(p_y) and p_y > 0):
        raise DomainError("output price must be positive")
    return p, float(p_y)


def _newton_direction(Hs, g):
    # ascent direction from (-Hs + mu I) d = g, mu raised until positive definite
    n = g.size
    scale = max(1.0, float(np.abs(Hs).max()))
    mu = 0.0
    for _ in range(60):
        try:
            L = np.linalg.cholesky(-Hs + mu * np.eye(n))
        except np.linalg.LinAlgError:
            mu = max(2 * mu, 1e-8 * scale)
            continue
        return np.linalg.solve(L.T, np.linalg.solve(L, g))
    raise NoConvergence("could not regularize the Hessian")


def solve_profit_max(spec, p, p_y: float, init=None, max_iter: int = 200) -> ProfitSolution:
    """Maximize ``p_y f(x) - p.x`` over the positive orthant.

    Newton's method on the first-order conditions with a Levenberg-style
    Hessian shift away from the solution, step halving to keep iterates in
    the domain, and backtracking on the objective.

    Raises
    ------
    Unbounded
        If ``spec`` is homogeneous of degree ``k >= 1``: the problem then has
        no interior maximizer except on a measure-zero price set.
        Also raised when the iterates grow past ``DIVERGENCE`` times the
        starting scale (e.g. a shifted Cobb-Douglas with exponents summing
        to one or more).
    NoConvergence
        Including the case where the iterates run into the domain boundary,
        i.e. the maximizer is a corner solution.
    NotConcaveAtSolution, NotDifferentiable
    """
    if not spec.smooth:
        raise NotDifferentiable(f"{spec.family} is not twice differentiable")
    p, p_y = _check_prices(spec, p, p_y)
    x = spec.interior_point() if init is None else np.asarray(init, dtype=float).copy()
    try:
        k = homogeneity_degree(spec, x)
    except DomainError:
        k = None  # probe grid leaves a shifted domain; such specs are not homogeneous
    if k is not None and k >= 1 - 1e-9:
        raise Unbounded(f"{spec.family} is homogeneous of degree {k:.6g} >= 1; the profit "
                        "maximum is degenerate (zero or unbounded) for almost all prices")

    def objective(b):
        return p_y * b.value - float(np.dot(p, b.point))

    b = differentiate(spec, x)
    lb = spec.lower_bounds()
    xscale = max(1.0, float(np.abs(x).max()))
    gscale = max(1.0, float(np.abs(p).max()))
    residuals = []
    it = 0
    while True:
        g = p_y * b.gradient - p
        rn = float(np.abs(g).max()) / gscale
        residuals.append(rn)
        if rn <= GRAD_TOL:
            break
        if it >= max_iter:
            if rn <= ACCEPT_TOL:
                break
            raise NoConvergence(f"profit max: no convergence after {max_iter} iterations ({rn:.3e})")
        it += 1
        d = _newton_direction(p_y * b.hessian, g)
        obj = objective(b)
        t = 1.0
        while t > 2.0**-50:
            x_new = x + t * d
            if spec.in_domain(x_new):
                with np.errstate(over="ignore", invalid="ignore"):
                    b_new = differentiate(spec, x_new)
                    g_new = p_y * b_new.gradient - p
                    obj_new = objective(b_new)
                # near the optimum the objective stalls at roundoff; fall back to the gradient norm
                if np.isfinite(obj_new) and np.all(np.isfinite(g_new)) and (
                        obj_new > obj or np.abs(g_new).max() / gscale < rn):
                    break
            t *= 0.5
        else:
            if rn <= ACCEPT_TOL:
                break
            raise NoConvergence(f"profit max: line search failed at iterate {it} ({rn:.3e})")
        x, b = x_new, b_new
        if np.abs(x).max() > DIVERGENCE * xscale:
            raise Unbounded(f"profit max: iterates diverge (|x| = {np.abs(x).max():.3e}); "
                            "profit appears unbounded at these prices")
        if np.min((x - lb) / np.maximum(1.0, np.abs(x))) < BOUNDARY:
            raise NoConvergence("profit max: iterates reach the domain boundary; the maximizer "
                                "is a corner solution, not an interior critical point")

    Hs = p_y * b.hessian
    try:
        np.linalg.cholesky(-Hs)
    except np.linalg.LinAlgError as exc:
        raise NotConcaveAtSolution("p_y * H is not negative definite at the critical point") from exc
    dx_dp = np.linalg.inv(Hs)
    x = b.point
    return ProfitSolution(p, p_y, x.copy(), objective(b), b.value,
                          np.concatenate((-x, [b.value])), -dx_dp, it, tuple(residuals))


def _supplies(psol, *idx):
    g = psol.grad[:-1]
    for i in idx:
        if g[i - 1] == 0:
            raise ZeroNetSupply(f"pi_{i} = 0")
    return g


def hles(psol: ProfitSolution, i: int, j: int) -> float:
    """Hotelling-Lau elasticity ``-pi pi_ij / (pi_i pi_j)`` (1-based indices)."""
    g = _supplies(psol, i, j)
    return float(-psol.profit * psol.hess_pp[i - 1, j - 1] / (g[i - 1] * g[j - 1]))


def mges(psol: ProfitSolution, i: int, j: int) -> float:
    """Gross Morishima elasticity ``p_i (pi_ij / pi_j - pi_ii / pi_i)``."""
    g = _supplies(psol, i, j)
    H = psol.hess_pp
    a, b = i - 1, j - 1
    return float(psol.p[a] * (H[a, b] / g[b] - H[a, a] / g[a]))


def _pairwise(psol, measure, fn):
    n = psol.n
    V = np.array([[fn(psol, i, j) for j in range(1, n + 1)] for i in range(1, n + 1)])
    return ElasticityReport(measure, V, psol.as_point())


def hles_matrix(psol: ProfitSolution) -> ElasticityReport:
    return _pairwise(psol, "HLES", hles)


def mges_matrix(psol: ProfitSolution) -> ElasticityReport:
    return _pairwise(psol, "MGES", mges)
