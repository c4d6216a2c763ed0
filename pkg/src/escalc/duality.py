"""Cost minimization, its sensitivities, and cost-side elasticities.

The Lagrangian is ``L = p.x + lam * (f(x) - y)``, so at a cost minimum
with positive prices and marginal products the multiplier is negative
(``lam = -1`` at the canonical point ``p = grad f(x), y = f(x)``).

The critical-point system is solved in the unknown order ``(lam, x)``,
whose Jacobian is exactly ::

    Q = [[0,       grad f  ],
         [grad f', lam * H ]]

and the implicit-function theorem gives the Jacobian of ``(lam, x)``
with respect to ``(p, y)`` as ``-Q^{-1} [[0, -1], [E, 0]]``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import bmatrix
from .elasticity import ElasticityReport
from .errors import (DimensionError, DomainError, NoConvergence, NotDifferentiable, SecondOrderFail,
                     SingularBorderedHessian, SingularQ, ZeroCrossPartial, ZeroMarginalCost)
from .prodfn import differentiate

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-12
ACCEPT_TOL = 1e-10


@dataclass(frozen=True)
class PriceOutput:
    p: np.ndarray
    y: float

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or p.size < 2 or not np.all(np.isfinite(p)) or not np.all(p > 0):
            raise DomainError("prices must be a finite, strictly positive vector")
        if not (math.isfinite(self.y) and self.y > 0):
            raise DomainError("output level must be positive")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "y", float(self.y))

    def as_point(self):
        return {"prices": self.p.tolist(), "output": self.y}


@dataclass(frozen=True)
class SolverTrace:
    method: str
    iterations: int = 0
    residuals: tuple = ()
    second_order_ok: bool | None = None
    minors: tuple = ()
    det_q: float | None = None
    det_q_expected: float | None = None

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class CostSolution:
    """Cost-minimizing bundle and every first and second cost derivative.

    ``hess_pp[i, j]`` is ``C_ij = dx_i/dp_j``; ``grad_p`` equals ``x_star``
    by the envelope theorem and ``dC_dy = -lambda_star``.
    """

    prices: PriceOutput
    x_star: np.ndarray
    lambda_star: float
    cost: float
    grad_p: np.ndarray
    dC_dy: float
    hess_pp: np.ndarray
    dlambda_dp: np.ndarray
    dx_dy: np.ndarray
    Q: np.ndarray | None
    bundle: object
    trace: SolverTrace

    @property
    def p(self):
        return self.prices.p

    @property
    def y(self):
        return self.prices.y

    @property
    def n(self):
        return self.x_star.size

    def to_dict(self):
        return {
            "prices": self.p.tolist(),
            "output": self.y,
            "x_star": self.x_star.tolist(),
            "lambda_star": self.lambda_star,
            "cost": self.cost,
            "grad_p": self.grad_p.tolist(),
            "dC_dy": self.dC_dy,
            "hess_pp": self.hess_pp.tolist(),
            "trace": self.trace.to_dict(),
        }


def canonical_problem(spec, x) -> PriceOutput:
    """Prices and output that make ``x`` a critical point with ``lam = -1``."""
    b = differentiate(spec, x)
    return PriceOutput(b.gradient, b.value)


def q_matrix(b, lam: float) -> np.ndarray:
    return bmatrix.multi_bordered([b.gradient], lam * b.hessian).entries


def _ray_start(spec, y, p):
    # smallest t on a log grid with f(t*1) >= y, refined by Brent's method
    t0 = float(spec.lower_bounds().max())
    ones = np.ones(spec.n)

    def g(t):
        return spec.value(t * ones) - y

    ts = t0 + np.geomspace(1e-9, 1e6, 301) * max(1.0, t0)
    prev = None
    best = None
    for t in ts:
        gt = g(t)
        if gt >= 0:
            if prev is None:
                raise NoConvergence(f"output {y} is below f on the whole search ray")
            x = brentq(g, prev, t, xtol=1e-14, rtol=4 * np.finfo(float).eps) * ones
            # a nonpositive marginal product puts x on the wrong side of the isoquant
            return x if np.all(spec.gradient(x) > 0) else _slide(spec, y, p, x)
        if best is None or gt > best[0]:
            best = (gt, t)
        prev = t
    return _slide(spec, y, p, _climb(spec, y, best[1] * ones))


def _climb(spec, y, x, max_iter=200):
    # ascend f from the best ray point until the isoquant is crossed, then root-find on the last step
    for _ in range(max_iter):
        b = differentiate(spec, x)
        try:
            d = np.linalg.solve(-b.hessian, b.gradient)
            if not np.dot(d, b.gradient) > 0:
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            d = b.gradient
        t = 1.0
        while t > 2.0**-40 and not (spec.in_domain(x + t * d) and spec.value(x + t * d) > b.value):
            t *= 0.5
        if t <= 2.0**-40:
            break
        x_new = x + t * d
        if spec.value(x_new) >= y:
            s = brentq(lambda s: spec.value(x + s * (x_new - x)) - y, 0.0, 1.0,
                       xtol=1e-15, rtol=4 * np.finfo(float).eps)
            return x + s * (x_new - x)
        x = x_new
    raise NoConvergence(f"output {y} is not attained along the ray x = t*1 or by ascent from it")


def _retract(spec, y, x):
    # return to the isoquant along the gradient
    for _ in range(50):
        if not spec.in_domain(x):
            return None
        f, g = spec.value(x), spec.gradient(x)
        if abs(f - y) <= 1e-13 * max(1.0, abs(y)):
            return x
        x = x + (y - f) / float(np.dot(g, g)) * g
    return None


def _slide(spec, y, p, x, max_iter=500, cos_target=0.99):
    # projected descent of p.x along the isoquant until grad f lines up with p
    for _ in range(max_iter):
        g = spec.gradient(x)
        u = g / np.linalg.norm(g)
        if np.dot(p, u) / np.linalg.norm(p) >= cos_target:
            return x
        d = -(p - np.dot(p, u) * u)
        t = 0.1 * np.linalg.norm(x) / np.linalg.norm(d)
        while t > 1e-12:
            x_new = _retract(spec, y, x + t * d)
            if x_new is not None and np.dot(p, x_new) < np.dot(p, x):
                break
            t *= 0.5
        else:
            return x
        x = x_new
    return x


def _scaled_residual(b, lam, po):
    r_y = (b.value - po.y) / max(1.0, abs(po.y))
    r_p = (po.p + lam * b.gradient) / max(1.0, float(np.abs(po.p).max()))
    return np.concatenate(([r_y], r_p))


def _sensitivity_from(b, lam):
    n = b.n
    Q = q_matrix(b, lam)
    if bmatrix.is_singular(Q):
        raise SingularQ(f"Q matrix is singular at x = {b.point.tolist()}")
    R = np.zeros((n + 1, n + 1))
    R[0, n] = -1.0
    R[1:, :n] = np.eye(n)
    return Q, -np.linalg.solve(Q, R)


def solve_cost_min(spec, po: PriceOutput, init=None, max_iter: int = 100) -> CostSolution:
    """Minimize ``p.x`` subject to ``f(x) = y`` by damped Newton on the critical-point system.

    Parameters
    ----------
    spec : ProductionFunction
    po : PriceOutput
    init : array-like, optional
        Starting bundle. Defaults to the point ``t*1`` with ``f(t*1) = y``, or,
        when the ray never reaches ``y``, the first isoquant point met by
        Newton ascent of ``f`` from the best ray point.
    max_iter : int

    Returns
    -------
    CostSolution
        If the leading principal minors of the bordered Hessian do not
        alternate at the solution a :class:`SecondOrderFail` warning is
        issued and ``trace.second_order_ok`` is False.

    Raises
    ------
    NotDifferentiable, NoConvergence, SingularQ
    """
    if not spec.smooth:
        raise NotDifferentiable(f"{spec.family} has no derivatives for the Newton route")
    if po.p.size != spec.n:
        raise DomainError(f"{po.p.size} prices for a {spec.n}-factor function")
    x = _ray_start(spec, po.y, po.p) if init is None else np.asarray(init, dtype=float).copy()
    b = differentiate(spec, x)
    gg = float(np.dot(b.gradient, b.gradient))
    if gg == 0:
        raise NoConvergence("zero gradient at the starting point")
    # least-squares multiplier for p + lam grad f = 0, kept negative
    lam = min(-float(np.dot(po.p, b.gradient)) / gg, -1e-8 * float(np.abs(po.p).max()) / np.sqrt(gg))

    residuals = []
    r = _scaled_residual(b, lam, po)
    it = 0
    while True:
        rn = float(np.abs(r).max())
        residuals.append(rn)
        if rn <= RESIDUAL_TOL:
            break
        if it >= max_iter:
            if rn <= ACCEPT_TOL:
                break
            raise NoConvergence(f"no convergence after {max_iter} iterations (residual {rn:.3e})")
        it += 1
        Q = q_matrix(b, lam)
        if bmatrix.is_singular(Q):
            raise SingularQ(f"Q matrix singular at iterate {it}, x = {x.tolist()}")
        rhs = -np.concatenate(([b.value - po.y], po.p + lam * b.gradient))
        dz = np.linalg.solve(Q, rhs)
        t = 1.0
        while t > 2.0**-40:
            x_new = x + t * dz[1:]
            # lam < 0 keeps the iterate on the cost-minimizing side of the isoquant
            if lam + t * dz[0] < 0 and spec.in_domain(x_new):
                b_new = differentiate(spec, x_new)
                r_new = _scaled_residual(b_new, lam + t * dz[0], po)
                if np.abs(r_new).max() < rn:
                    break
            t *= 0.5
        else:
            if rn <= ACCEPT_TOL:
                break
            raise NoConvergence(f"line search failed at iterate {it} (residual {rn:.3e})")
        x, lam, b, r = x_new, lam + t * dz[0], b_new, r_new

    log.debug("cost min converged in %d iterations, residual %.2e", it, residuals[-1])
    return _assemble(po, b, lam, it, residuals)


def _assemble(po, b, lam, iterations, residuals):
    n = b.n
    Q, J = _sensitivity_from(b, lam)
    M = bmatrix.bordered_hessian(b)
    F = bmatrix.determinant(M)
    minors = bmatrix.leading_principal_minors(M)
    if not minors.sign_alternates:
        warnings.warn("bordered-Hessian minors do not alternate: critical point not certified "
                      "as a cost minimum", SecondOrderFail, stacklevel=3)
    trace = SolverTrace("newton", iterations, tuple(residuals), minors.sign_alternates,
                        minors.values, bmatrix.determinant(Q), lam ** (n - 1) * F)
    x = b.point
    return CostSolution(po, x.copy(), float(lam), float(np.dot(po.p, x)), x.copy(),
                        -float(lam), J[1:, :n].copy(), J[0, :n].copy(), J[1:, n].copy(),
                        Q, b, trace)


def sensitivity(spec, sol: CostSolution) -> np.ndarray:
    """Jacobian of ``(lam, x)`` with respect to ``(p, y)`` at the solution.

    Row 0 is ``lam``, rows ``1..n`` are ``x``; columns ``0..n-1`` are the
    prices and column ``n`` the output level.
    """
    b = differentiate(spec, sol.x_star)
    return _sensitivity_from(b, sol.lambda_star)[1]


def dx_dp_cofactor(sol: CostSolution, i: int, j: int) -> float:
    """``dx_i/dp_j = -F_ij / (lam F)`` from bordered-Hessian cofactors (1-based)."""
    if sol.bundle is None:
        raise NotDifferentiable("closed-form solutions carry no production-function derivatives")
    M = bmatrix.bordered_hessian(sol.bundle)
    F = bmatrix.determinant(M)
    if bmatrix.is_singular(M, det=F):
        raise SingularBorderedHessian("bordered Hessian singular at the solution")
    return -bmatrix.cofactor(M, i, j) / (sol.lambda_star * F)


def _marginals(sol, *idx):
    C = sol.grad_p
    for i in idx:
        if not C[i - 1] > 0:
            raise ZeroMarginalCost(f"C_{i} = {C[i - 1]} is not positive")
    return C


def uzawa_aes(sol: CostSolution) -> ElasticityReport:
    """Allen elasticities from the cost function: ``C C_ij / (C_i C_j)``."""
    C = _marginals(sol, *range(1, sol.n + 1))
    S = sol.cost * sol.hess_pp / np.outer(C, C)
    return ElasticityReport("AES", S, sol.prices.as_point(),
                            ["cost-function form", "diagonal entries are not substitution elasticities"])


def mes(sol: CostSolution, i: int, j: int) -> float:
    """Morishima elasticity ``p_i (C_ij / C_j - C_ii / C_i)``."""
    C = _marginals(sol, i, j)
    H = sol.hess_pp
    a, b = i - 1, j - 1
    return float(sol.p[a] * (H[a, b] / C[b] - H[a, a] / C[a]))


def mes_alt(sol: CostSolution, i: int, j: int) -> float:
    """The other reading of the log-derivative, ``p_j (C_ij / C_i - C_jj / C_j)``."""
    C = _marginals(sol, i, j)
    H = sol.hess_pp
    a, b = i - 1, j - 1
    return float(sol.p[b] * (H[a, b] / C[a] - H[b, b] / C[b]))


def price_elasticity(sol: CostSolution, i: int, j: int) -> float:
    """``eps_ij = d ln x_i / d ln p_j = C_ij p_j / C_i``."""
    C = _marginals(sol, i)
    return float(sol.hess_pp[i - 1, j - 1] * sol.p[j - 1] / C[i - 1])


def _pairwise(sol, measure, fn):
    n = sol.n
    V = np.array([[fn(sol, i, j) for j in range(1, n + 1)] for i in range(1, n + 1)])
    return ElasticityReport(measure, V, sol.prices.as_point())


def mes_matrix(sol: CostSolution, alt: bool = False) -> ElasticityReport:
    return _pairwise(sol, "MES_alt" if alt else "MES", mes_alt if alt else mes)


def price_elasticity_matrix(sol: CostSolution) -> ElasticityReport:
    return _pairwise(sol, "EPS", price_elasticity)


def hes_cost(sol: CostSolution) -> float:
    """Hicks elasticity of the (linearly homogeneous in p) cost function, two factors."""
    if sol.n != 2:
        raise DimensionError(f"cost-side HES needs two factors, got {sol.n}")
    C = sol.grad_p
    C12 = sol.hess_pp[0, 1]
    if abs(C12) <= 1e-14 * np.abs(sol.hess_pp).max() or C12 == 0:
        raise ZeroCrossPartial("C_12 = 0")
    return float(C[0] * C[1] / (sol.cost * C12))


def blackorby_cost(p, y) -> CostSolution:
    """Closed-form cost ``C = y (p1 + 2 sqrt(p2 p3))`` of ``min(x1, sqrt(x2 x3))``."""
    po = PriceOutput(p, y)
    if po.p.size != 3:
        raise DomainError("the closed-form cost function has three prices")
    p1, p2, p3 = po.p
    y = po.y
    s = math.sqrt(p2 * p3)
    unit = p1 + 2.0 * s
    grad = np.array([y, y * math.sqrt(p3 / p2), y * math.sqrt(p2 / p3)])
    H = np.zeros((3, 3))
    H[1, 1] = -0.5 * y * math.sqrt(p3) * p2**-1.5
    H[2, 2] = -0.5 * y * math.sqrt(p2) * p3**-1.5
    H[1, 2] = H[2, 1] = 0.5 * y / s
    dx_dy = grad / y
    return CostSolution(po, grad.copy(), -unit, y * unit, grad, unit, H,
                        -dx_dy, dx_dy, None, None, SolverTrace("closed_form"))
