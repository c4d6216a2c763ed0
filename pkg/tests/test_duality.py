import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
import pytest

import instances as inst
from escalc import bmatrix
from escalc.duality import (PriceOutput, blackorby_cost, canonical_problem, dx_dp_cofactor,
                            hes_cost, mes, mes_alt, mes_matrix, price_elasticity,
                            price_elasticity_matrix, q_matrix, solve_cost_min, uzawa_aes)
from escalc.elasticity import aes_matrix
from escalc.errors import (DimensionError, DomainError, NoConvergence, NotDifferentiable,
                           SecondOrderFail)
from escalc.prodfn import CobbDouglas, NestedMin, ProductionFunction, QuadraticConcave, differentiate
from oracles import grid_cost_two_factor, slsqp_cost

CD = CobbDouglas(1.0, (0.3, 0.5))
QUAD = QuadraticConcave((2.0, 2.0), np.eye(2))


@dataclass(frozen=True)
class SumOfSquares(ProductionFunction):
    """Quasiconvex test function: its critical points are cost maxima."""

    family: ClassVar[str] = "sum_of_squares"

    @property
    def n(self):
        return 2

    def value(self, x):
        return float(np.dot(x, x))

    def gradient(self, x):
        return 2 * np.asarray(x, dtype=float)

    def hessian(self, x):
        return 2 * np.eye(2)

    def params(self):
        return {}


def test_cobb_douglas_example():
    sol = solve_cost_min(CD, PriceOutput([0.3, 0.5], 1.0))
    np.testing.assert_allclose(sol.x_star, [1, 1], atol=1e-12)
    assert sol.lambda_star == pytest.approx(-1.0)
    assert sol.cost == pytest.approx(0.8)
    assert sol.trace.second_order_ok
    assert sol.trace.det_q == pytest.approx(sol.trace.det_q_expected, rel=1e-10)


def test_quadratic_example_and_uzawa():
    sol = solve_cost_min(QUAD, PriceOutput([1.0, 1.0], 3.0))
    np.testing.assert_allclose(sol.x_star, [1, 1], atol=1e-12)
    assert sol.lambda_star == pytest.approx(-1.0)
    assert sol.cost == pytest.approx(2.0)
    assert uzawa_aes(sol)[1, 2] == pytest.approx(1.0)


def test_det_q_identity_random():
    r = inst.rng(31)
    for k in range(30):
        spec, x = list(inst.SMOOTH.values())[k % 5](r)
        sol = solve_cost_min(spec, PriceOutput(2.5 * differentiate(spec, x).gradient,
                                               differentiate(spec, x).value))
        assert sol.lambda_star == pytest.approx(-2.5)
        F = bmatrix.determinant(bmatrix.bordered_hessian(sol.bundle))
        dq = bmatrix.determinant(q_matrix(sol.bundle, sol.lambda_star))
        assert dq == pytest.approx(sol.lambda_star ** (spec.n - 1) * F, rel=1e-9)


def test_canonical_multiplier_is_minus_one():
    r = inst.rng(32)
    for _ in range(10):
        spec, x = inst.shifted_cd(r)
        assert solve_cost_min(spec, canonical_problem(spec, x)).lambda_star == pytest.approx(-1.0)


def test_against_slsqp_and_grid():
    r = inst.rng(33)
    for k in range(12):
        spec, x = list(inst.SMOOTH.values())[k % 5](r, 2)
        p = _nearby_prices(r, spec, x)
        y = spec.value(x)
        sol = solve_cost_min(spec, PriceOutput(p, y))
        ref = slsqp_cost(spec, p, y, x)
        assert np.dot(p, ref) >= sol.cost - 1e-8 * sol.cost
        np.testing.assert_allclose(sol.x_star, ref, rtol=1e-5)
        if spec.family == "quadratic":
            continue  # not monotone, outside the grid oracle's assumptions
        lo = spec.lower_bounds()[0] + 1e-6
        grid = grid_cost_two_factor(spec, p, y, lo, 4 * sol.x_star.max(), num=1001)
        assert sol.cost <= grid + 1e-12
        assert grid - sol.cost < 1e-4 * sol.cost


def _nearby_prices(r, spec, x):
    # perturbed supporting prices; arbitrary prices can push a quadratic's optimum to a corner
    return differentiate(spec, x).gradient * np.exp(0.2 * r.normal(size=spec.n))


def test_solution_invariants():
    r = inst.rng(34)
    for k in range(20):
        spec, x = list(inst.SMOOTH.values())[k % 5](r)
        p = _nearby_prices(r, spec, x)
        sol = solve_cost_min(spec, PriceOutput(p, spec.value(x)))
        g = differentiate(spec, sol.x_star).gradient
        assert np.abs(p + sol.lambda_star * g).max() <= 1e-10 * max(1.0, np.abs(p).max())
        assert abs(spec.value(sol.x_star) - sol.y) <= 1e-10 * max(1.0, sol.y)
        H = sol.hess_pp
        assert np.abs(H - H.T).max() <= 1e-8 * max(1.0, np.abs(H).max())
        assert np.abs(H @ p).max() <= 1e-7 * max(1.0, np.abs(H).max())
        # demands fall in their own price
        assert np.all(np.diag(H) < 0)


def test_cofactor_route_matches_hess_pp():
    r = inst.rng(35)
    for k in range(10):
        spec, x = list(inst.SMOOTH.values())[k % 5](r)
        sol = solve_cost_min(spec, canonical_problem(spec, x))
        n = spec.n
        cof = np.array([[dx_dp_cofactor(sol, i, j) for j in range(1, n + 1)]
                        for i in range(1, n + 1)])
        np.testing.assert_allclose(cof, sol.hess_pp, rtol=1e-9, atol=1e-12)


def test_second_order_failure_warns():
    spec = SumOfSquares()
    with pytest.warns(SecondOrderFail):
        sol = solve_cost_min(spec, PriceOutput([1.0, 1.0], 2.0), init=[1.2, 0.8])
    assert not sol.trace.second_order_ok
    np.testing.assert_allclose(sol.x_star, [1, 1])


def test_solver_errors():
    with pytest.raises(NotDifferentiable):
        solve_cost_min(NestedMin(), PriceOutput([1, 1, 1], 1.0))
    with pytest.raises(DomainError):
        solve_cost_min(CD, PriceOutput([1, 1, 1], 1.0))
    with pytest.raises(DomainError):
        PriceOutput([1, -1], 1.0)
    with pytest.raises(DomainError):
        PriceOutput([1, 1], 0.0)
    # output above the maximum of f
    with pytest.raises(NoConvergence):
        solve_cost_min(QUAD, PriceOutput([1, 1], 5.0))


def test_blackorby_closed_form():
    sol = blackorby_cost((1.0, 1.0, 1.0), 2.0)
    assert sol.cost == pytest.approx(6.0)
    np.testing.assert_allclose(sol.grad_p, [2, 2, 2])
    assert sol.hess_pp[1, 1] == pytest.approx(-1.0) and sol.hess_pp[1, 2] == pytest.approx(1.0)
    assert sol.dC_dy == pytest.approx(3.0)
    assert mes(sol, 1, 2) == 0.0 and mes(sol, 2, 1) == pytest.approx(0.5, abs=1e-12)
    assert mes(sol, 1, 2) != mes(sol, 2, 1)
    assert mes_alt(sol, 1, 2) == pytest.approx(0.5)
    assert price_elasticity(sol, 2, 3) == pytest.approx(0.5)
    assert uzawa_aes(sol)[2, 3] == pytest.approx(1.5)
    assert mes_matrix(sol).measure == "MES" and mes_matrix(sol, alt=True).measure == "MES_alt"
    assert price_elasticity_matrix(sol).measure == "EPS"
    with pytest.raises(NotDifferentiable):
        dx_dp_cofactor(sol, 1, 2)
    with pytest.raises(DomainError):
        blackorby_cost((1.0, 1.0), 2.0)


def test_blackorby_identity_and_homogeneity():
    r = inst.rng(36)
    for _ in range(20):
        p, y = inst.log_uniform(r, 3), float(inst.log_uniform(r, 1)[0])
        sol = blackorby_cost(p, y)
        C = sol.grad_p
        assert C[0] ** 2 == pytest.approx(C[1] * C[2], rel=1e-12)
        assert np.abs(sol.hess_pp @ p).max() <= 1e-12 * y
        assert blackorby_cost(2 * p, y).cost == pytest.approx(2 * sol.cost, rel=1e-14)


def test_hes_cost_dimension():
    with pytest.raises(DimensionError):
        hes_cost(blackorby_cost((1.0, 1.0, 1.0), 2.0))


def test_uzawa_matches_primal_for_homogeneous_too():
    r = inst.rng(37)
    for _ in range(10):
        spec, x = inst.ces(r)
        sol = solve_cost_min(spec, canonical_problem(spec, x))
        np.testing.assert_allclose(uzawa_aes(sol).values,
                                   aes_matrix(differentiate(spec, x)).values, rtol=1e-7)


def test_deterministic_under_threads():
    r = inst.rng(38)
    problems = [inst.quadratic(r) for _ in range(16)]

    def solve(item):
        spec, x = item
        return solve_cost_min(spec, canonical_problem(spec, x)).x_star

    serial = [solve(it) for it in problems]
    with ThreadPoolExecutor(4) as pool:
        threaded = list(pool.map(solve, problems))
    for a, b in zip(serial, threaded):
        assert np.array_equal(a, b)


def test_ray_fallback_reaches_isoquant():
    # f(t, t) peaks below y, but y is attainable off the diagonal
    spec = QuadraticConcave((3.0, 0.5), [[1.0, 0.0], [0.0, 1.0]])
    x = np.array([2.0, 0.2])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        sol = solve_cost_min(spec, canonical_problem(spec, x))
    np.testing.assert_allclose(sol.x_star, x, rtol=1e-10)
