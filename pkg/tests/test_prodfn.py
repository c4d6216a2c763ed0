import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import instances as inst
from escalc.errors import DomainError, NotDifferentiable, SpecError
from escalc.prodfn import (CES, CobbDouglas, Homothetic, NestedMin, QuadraticConcave,
                           ShiftedCobbDouglas, check_smoothness, differentiate, evaluate,
                           fd_differentiate, homogeneity_degree, load_spec, spec_from_dict,
                           spec_to_dict)

CD = CobbDouglas(1.0, (0.3, 0.5))
QUAD = QuadraticConcave((2.0, 2.0), np.eye(2))


def test_evaluate_examples():
    assert evaluate(CD, [1, 1]) == 1.0
    assert evaluate(NestedMin(), [2, 1, 1]) == 1.0
    assert evaluate(QUAD, [1, 1]) == 3.0


def test_differentiate_examples():
    b = differentiate(CD, [1, 1])
    assert b.value == pytest.approx(1.0)
    np.testing.assert_allclose(b.gradient, [0.3, 0.5])
    np.testing.assert_allclose(b.hessian, [[-0.21, 0.15], [0.15, -0.25]])
    q = differentiate(QUAD, [1, 1])
    np.testing.assert_allclose(q.gradient, [1, 1])
    np.testing.assert_allclose(q.hessian, -np.eye(2))
    c = differentiate(CES(1.0, (0.5, 0.5), 0.5), [1, 1])
    assert c.value == pytest.approx(1.0)
    np.testing.assert_allclose(c.gradient, [0.5, 0.5])


def test_nested_min_not_differentiable_anywhere():
    for x in ([1, 1, 1], [2, 1, 1], [0.5, 1, 1]):
        with pytest.raises(NotDifferentiable):
            differentiate(NestedMin(), x)


@pytest.mark.parametrize("family", sorted(inst.SMOOTH))
def test_analytic_matches_fd(family):
    r = inst.rng(11)
    for _ in range(100):
        spec, x = inst.SMOOTH[family](r)
        a, f = differentiate(spec, x), fd_differentiate(spec, x)
        gscale = max(1.0, np.abs(a.gradient).max())
        assert np.abs(a.gradient - f.gradient).max() / gscale < 1e-6
        hscale = np.maximum(np.abs(a.hessian), 1.0)
        assert (np.abs(a.hessian - f.hessian) / hscale).max() < 1e-4
        assert np.array_equal(f.hessian, f.hessian.T)
        np.testing.assert_allclose(a.hessian, a.hessian.T, rtol=0, atol=1e-14 * hscale.max())


def test_fd_quadratic_hessian_exact():
    f = fd_differentiate(QUAD, [1.0, 1.0])
    assert np.abs(f.hessian + np.eye(2)).max() < 1e-7
    # otherwise only roundoff in f remains, about eps |f| / h^2 with h^2 = sqrt(eps)
    B = np.array([[2.0, 0.3], [0.3, 1.0]])
    spec = QuadraticConcave((5.0, 5.0), B)
    x = np.array([1.0, 2.0])
    bound = 8 * np.sqrt(np.finfo(float).eps) * abs(evaluate(spec, x))
    assert np.abs(fd_differentiate(spec, x).hessian + B).max() < bound


def test_fd_stencil_leaving_domain():
    spec = ShiftedCobbDouglas(1.0, (0.3, 0.5), (1.0, 1.0))
    with pytest.raises(DomainError):
        fd_differentiate(spec, [1.0 + 1e-6, 2.0])


def test_positive_marginal_products():
    r = inst.rng(12)
    for fam in ("shifted_cd", "cobb_douglas", "ces", "homothetic"):
        for _ in range(20):
            spec, x = inst.SMOOTH[fam](r)
            assert np.all(differentiate(spec, x).gradient > 0)


def test_domain_errors():
    with pytest.raises(DomainError):
        evaluate(CD, [1.0, -1.0])
    with pytest.raises(DomainError):
        evaluate(CD, [1.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        evaluate(ShiftedCobbDouglas(1.0, (0.3, 0.5), (0.5, 0.5)), [0.5, 2.0])
    with pytest.raises(DomainError):
        evaluate(CD, [np.nan, 1.0])


@pytest.mark.parametrize("make", [
    lambda: CobbDouglas(1.0, (0.3, -0.5)),
    lambda: CobbDouglas(0.0, (0.3, 0.5)),
    lambda: CES(1.0, (0.5, 0.5), 1.0),
    lambda: CES(1.0, (0.5, 0.5), 0.0),
    lambda: ShiftedCobbDouglas(1.0, (0.3, 0.5), (-0.1, 0.0)),
    lambda: QuadraticConcave((1.0, 1.0), [[1.0, 2.0], [2.0, 1.0]]),
    lambda: QuadraticConcave((1.0, 1.0), [[1.0, 0.1], [0.0, 1.0]]),
    lambda: Homothetic(CobbDouglas(1.0, (0.3, 0.5)), "power", 0.5),
    lambda: Homothetic(CES(1.0, (0.5, 0.5), 0.5), "power", -1.0),
    lambda: Homothetic(CES(1.0, (0.5, 0.5), 0.5), "exp"),
])
def test_invalid_parameters(make):
    with pytest.raises(SpecError):
        make()


def test_smoothness_kink_on_curve():
    rep = check_smoothness(NestedMin(), [1, 1, 1])
    assert rep.kinks[0] and rep.has_kink
    assert rep.left[0] == pytest.approx(1.0, abs=1e-6)
    assert rep.right[0] == pytest.approx(0.0, abs=1e-6)


def test_smoothness_off_curve_and_smooth_family():
    rep = check_smoothness(NestedMin(), [2, 1, 1])
    assert not rep.has_kink
    assert rep.left[0] == pytest.approx(0.0, abs=1e-6)
    assert rep.left[1] == pytest.approx(0.5, abs=1e-6)
    r = inst.rng(13)
    for _ in range(20):
        spec, x = inst.cobb_douglas(r)
        assert not check_smoothness(spec, x).has_kink


def test_kink_flag_iff_mismatch_exceeds_tolerance():
    r = inst.rng(14)
    for _ in range(50):
        x = inst.log_uniform(r, 3)
        rep = check_smoothness(NestedMin(), x)
        assert rep.has_kink == (rep.max_mismatch > rep.tolerance)


def test_homogeneity_examples():
    assert homogeneity_degree(CD, [1.3, 0.7]) == pytest.approx(0.8, abs=1e-12)
    assert homogeneity_degree(ShiftedCobbDouglas(1.0, (0.3, 0.5), (0.5, 0.5)), [2, 2]) is None
    assert homogeneity_degree(CES(1.0, (0.4, 0.6), -0.5), [1.0, 2.0]) == pytest.approx(1.0)
    assert homogeneity_degree(QUAD, [1.0, 1.0]) is None
    quad_form = QuadraticConcave((0.0, 0.0), [[2.0, 0.5], [0.5, 1.0]])
    assert homogeneity_degree(quad_form, [1.0, 1.0]) == pytest.approx(2.0)
    # homothetic but not homogeneous
    assert homogeneity_degree(Homothetic(CES(1.0, (0.5, 0.5), 0.5), "log1p"), [1, 2]) is None


def test_euler_and_gradient_homogeneity():
    r = inst.rng(15)
    for _ in range(50):
        spec, x = (inst.cobb_douglas if r.random() < 0.5 else inst.ces)(r)
        k = sum(spec.alpha) if isinstance(spec, CobbDouglas) else spec.k
        b = differentiate(spec, x)
        assert abs(np.dot(x, b.gradient) - k * b.value) <= 1e-10 * abs(k * b.value)
        for t in (0.5, 0.8, 1.25, 2.0):
            bt = differentiate(spec, t * x)
            np.testing.assert_allclose(bt.gradient, t ** (k - 1) * b.gradient, rtol=1e-8)
            assert bt.value == pytest.approx(t**k * b.value, rel=1e-12)


# -- JSON ----------------------------------------------------------------

EXAMPLES = [
    CD,
    CES(2.0, (0.4, 0.6, 0.2), -0.5, 0.9),
    ShiftedCobbDouglas(1.5, (0.3, 0.5), (0.5, 0.0)),
    QUAD,
    NestedMin(),
    Homothetic(CES(1.0, (0.5, 0.5), 0.5), "power", 0.5),
    Homothetic(CobbDouglas(1.0, (0.25, 0.75)), "log1p"),
]


@pytest.mark.parametrize("spec", EXAMPLES, ids=lambda s: s.family)
def test_json_round_trip(spec, tmp_path):
    d = spec_to_dict(spec)
    text = json.dumps(d)
    path = tmp_path / "spec.json"
    path.write_text(text)
    back = load_spec(path)
    assert spec_to_dict(back) == d
    x = np.full(spec.n, 1.7)
    assert evaluate(back, x) == evaluate(spec, x)


@pytest.mark.parametrize("bad", [
    {"family": "cobb_douglas", "params": {"alpha": [0.3, 0.5], "beta": 1}},
    {"family": "cobb_douglas", "params": {}},
    {"family": "translog", "params": {}},
    {"family": "ces", "params": {"delta": [0.5, 0.5], "rho": 0.5}},
    {"family": "cobb_douglas", "params": {"alpha": [0.3, 0.5]}, "extra": 1},
    {"family": "homothetic", "params": {"inner": {"family": "cobb_douglas",
                                                   "params": {"alpha": [0.5, 0.5]}},
                                         "outer": {"kind": "power", "gamma": 0.5, "x": 1}}},
    {"family": "quadratic", "params": {"a": [1, 1], "B": "identity"}},
    [],
])
def test_strict_json_rejects(bad):
    with pytest.raises(SpecError):
        spec_from_dict(bad)


def test_invalid_json_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(SpecError):
        load_spec(path)


@settings(max_examples=60, deadline=None)
@given(alpha=st.lists(st.floats(0.05, 2.0), min_size=2, max_size=5),
       A=st.floats(0.1, 10.0))
def test_cobb_douglas_json_property(alpha, A):
    spec = CobbDouglas(A, alpha)
    back = spec_from_dict(json.loads(json.dumps(spec_to_dict(spec))))
    assert back == spec


@settings(max_examples=60, deadline=None)
@given(x=st.lists(st.floats(0.2, 5.0), min_size=2, max_size=2),
       rho=st.one_of(st.floats(-3.0, -0.05), st.floats(0.05, 0.9)))
def test_ces_fd_property(x, rho):
    spec = CES(1.0, (0.4, 0.6), rho)
    a, f = differentiate(spec, x), fd_differentiate(spec, x)
    assert np.abs(a.gradient - f.gradient).max() / max(1.0, np.abs(a.gradient).max()) < 1e-6
