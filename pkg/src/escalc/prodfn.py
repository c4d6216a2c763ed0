"""Production-function families with analytic derivatives.

Each family is a frozen dataclass exposing ``value``, ``gradient`` and
``hessian`` on a point ``x`` (a 1-D float array of input quantities).
The module-level functions (:func:`evaluate`, :func:`differentiate`,
:func:`fd_differentiate`, :func:`check_smoothness`,
:func:`homogeneity_degree`) validate the point against the family domain
before delegating.

JSON representation (see :func:`spec_from_dict`)::

    {"family": "cobb_douglas",         "params": {"A": 1.0, "alpha": [...]}}
    {"family": "ces",                  "params": {"A": 1.0, "delta": [...], "rho": 0.5, "k": 1.0}}
    {"family": "shifted_cobb_douglas", "params": {"A": 1.0, "alpha": [...], "shift": [...]}}
    {"family": "quadratic",            "params": {"a": [...], "B": [[...], ...]}}
    {"family": "nested_min",           "params": {}}
    {"family": "homothetic",           "params": {"inner": <spec>, "outer": {"kind": "power", "gamma": 0.5}}}

``A`` defaults to 1 where listed; every other key is required, and unknown
keys are rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import DomainError, NotDifferentiable, SpecError

EPS = np.finfo(float).eps

__all__ = [
    "ProductionFunction",
    "CobbDouglas",
    "CES",
    "ShiftedCobbDouglas",
    "QuadraticConcave",
    "NestedMin",
    "Homothetic",
    "DiffBundle",
    "SmoothnessReport",
    "evaluate",
    "differentiate",
    "fd_differentiate",
    "check_smoothness",
    "homogeneity_degree",
    "spec_from_dict",
    "spec_to_dict",
    "load_spec",
]


def _vec(values, name):
    try:
        arr = np.asarray(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"{name} must be a list of numbers") from exc
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise SpecError(f"{name} must be a non-empty finite vector")
    return tuple(float(v) for v in arr)


class ProductionFunction:
    """Common behaviour of all families."""

    family: ClassVar[str] = ""
    smooth: ClassVar[bool] = True

    @property
    def n(self) -> int:
        raise NotImplementedError

    def lower_bounds(self) -> np.ndarray:
        """Open lower bound of the domain per coordinate."""
        return np.zeros(self.n)

    def in_domain(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == (self.n,) and bool(np.all(x > self.lower_bounds()))

    def interior_point(self) -> np.ndarray:
        return self.lower_bounds() + 1.0

    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def hessian(self, x):
        raise NotImplementedError

    def params(self) -> dict:
        raise NotImplementedError


def _cd_parts(A, alpha, z):
    alpha = np.asarray(alpha)
    f = A * float(np.prod(z**alpha))
    g = alpha * f / z
    H = np.outer(g, g) / f - np.diag(alpha * f / z**2)
    return f, g, H


def _check_cd(A, alpha):
    if not A > 0:
        raise SpecError("A must be positive")
    if any(a <= 0 for a in alpha):
        raise SpecError("all alpha must be positive")
    if len(alpha) < 2:
        raise SpecError("at least two inputs are required")


@dataclass(frozen=True)
class CobbDouglas(ProductionFunction):
    """``A * prod(x_i ** alpha_i)``; homogeneous of degree ``sum(alpha)``."""

    A: float
    alpha: tuple
    family: ClassVar[str] = "cobb_douglas"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _vec(self.alpha, "alpha"))
        object.__setattr__(self, "A", float(self.A))
        _check_cd(self.A, self.alpha)

    @property
    def n(self):
        return len(self.alpha)

    def value(self, x):
        return _cd_parts(self.A, self.alpha, x)[0]

    def gradient(self, x):
        return _cd_parts(self.A, self.alpha, x)[1]

    def hessian(self, x):
        return _cd_parts(self.A, self.alpha, x)[2]

    def params(self):
        return {"A": self.A, "alpha": list(self.alpha)}


@dataclass(frozen=True)
class ShiftedCobbDouglas(ProductionFunction):
    """``A * prod((x_i - s_i) ** alpha_i)`` on ``x_i > s_i``.

    Any nonzero shift breaks homogeneity, which makes this the basic
    nonhomogeneous test family.
    """

    A: float
    alpha: tuple
    shift: tuple
    family: ClassVar[str] = "shifted_cobb_douglas"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _vec(self.alpha, "alpha"))
        object.__setattr__(self, "shift", _vec(self.shift, "shift"))
        object.__setattr__(self, "A", float(self.A))
        _check_cd(self.A, self.alpha)
        if len(self.shift) != len(self.alpha):
            raise SpecError("shift and alpha differ in length")
        if any(s < 0 for s in self.shift):
            raise SpecError("shift entries must be non-negative")

    @property
    def n(self):
        return len(self.alpha)

    def lower_bounds(self):
        return np.asarray(self.shift)

    def value(self, x):
        return _cd_parts(self.A, self.alpha, np.asarray(x) - self.shift)[0]

    def gradient(self, x):
        return _cd_parts(self.A, self.alpha, np.asarray(x) - self.shift)[1]

    def hessian(self, x):
        return _cd_parts(self.A, self.alpha, np.asarray(x) - self.shift)[2]

    def params(self):
        return {"A": self.A, "alpha": list(self.alpha), "shift": list(self.shift)}


@dataclass(frozen=True)
class CES(ProductionFunction):
    """``A * (sum(delta_i * x_i ** rho)) ** (k / rho)`` with ``rho < 1, rho != 0``.

    Homogeneous of degree ``k``; for ``k = 1`` the elasticity of
    substitution is the constant ``1 / (1 - rho)``.
    """

    A: float
    delta: tuple
    rho: float
    k: float = 1.0
    family: ClassVar[str] = "ces"

    def __post_init__(self):
        object.__setattr__(self, "delta", _vec(self.delta, "delta"))
        for name in ("A", "rho", "k"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.A > 0:
            raise SpecError("A must be positive")
        if any(d <= 0 for d in self.delta) or len(self.delta) < 2:
            raise SpecError("delta needs at least two positive entries")
        if not self.rho < 1 or self.rho == 0:
            raise SpecError("rho must satisfy rho < 1 and rho != 0")
        if not self.k > 0:
            raise SpecError("k must be positive")

    @property
    def n(self):
        return len(self.delta)

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        d, r, k = np.asarray(self.delta), self.rho, self.k
        xr = x ** (r - 1.0)
        S = float(np.dot(d, x**r))
        f = self.A * S ** (k / r)
        w = d * xr
        g = self.A * k * S ** (k / r - 1.0) * w
        H = self.A * k * (k - r) * S ** (k / r - 2.0) * np.outer(w, w)
        H += np.diag(self.A * k * (r - 1.0) * S ** (k / r - 1.0) * d * x ** (r - 2.0))
        return f, g, H

    def value(self, x):
        return self._parts(x)[0]

    def gradient(self, x):
        return self._parts(x)[1]

    def hessian(self, x):
        return self._parts(x)[2]

    def params(self):
        return {"A": self.A, "delta": list(self.delta), "rho": self.rho, "k": self.k}


@dataclass(frozen=True)
class QuadraticConcave(ProductionFunction):
    """``a . x - x' B x / 2`` with ``B`` symmetric positive semidefinite."""

    a: tuple
    B: tuple
    family: ClassVar[str] = "quadratic"

    def __post_init__(self):
        a = _vec(self.a, "a")
        try:
            B = np.asarray(self.B, dtype=float)
        except (TypeError, ValueError) as exc:
            raise SpecError("B must be a square numeric matrix") from exc
        if B.shape != (len(a), len(a)) or len(a) < 2:
            raise SpecError("B must be n x n with n = len(a) >= 2")
        if not np.all(np.isfinite(B)) or not np.allclose(B, B.T, rtol=0, atol=1e-12):
            raise SpecError("B must be finite and symmetric")
        if np.linalg.eigvalsh(B).min() < -1e-12 * max(1.0, np.abs(B).max()):
            raise SpecError("B must be positive semidefinite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "B", tuple(tuple(float(v) for v in row) for row in B))

    @property
    def n(self):
        return len(self.a)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        B = np.asarray(self.B)
        return float(np.dot(self.a, x) - 0.5 * x @ B @ x)

    def gradient(self, x):
        return np.asarray(self.a) - np.asarray(self.B) @ np.asarray(x, dtype=float)

    def hessian(self, x):
        return -np.array(self.B)

    def params(self):
        return {"a": list(self.a), "B": [list(row) for row in self.B]}


@dataclass(frozen=True)
class NestedMin(ProductionFunction):
    """``min(x1, sqrt(x2 * x3))``, the classic three-factor counterexample.

    Not twice differentiable anywhere useful: on each smooth piece the
    bordered Hessian is singular, and on ``x1**2 == x2*x3`` there is a kink.
    The piecewise derivatives are only reachable through
    :meth:`branch_bundles`.
    """

    family: ClassVar[str] = "nested_min"
    smooth: ClassVar[bool] = False

    @property
    def n(self):
        return 3

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return float(min(x[0], math.sqrt(x[1] * x[2])))

    def gradient(self, x):
        raise NotDifferentiable("nested_min is not C^2 (kinked along x1^2 = x2*x3)")

    hessian = gradient

    def active_branch(self, x, rtol=1e-12):
        x = np.asarray(x, dtype=float)
        a, b = x[0], math.sqrt(x[1] * x[2])
        if abs(a - b) <= rtol * max(a, b):
            return "kink"
        return "x1" if a < b else "sqrt_x2x3"

    def branch_bundles(self, x):
        """Derivatives of both smooth pieces at ``x`` (diagnostic use only)."""
        x = _as_point(self, x)
        x1, x2, x3 = x
        r = math.sqrt(x2 * x3)
        first = DiffBundle(float(x1), np.array([1.0, 0.0, 0.0]), np.zeros((3, 3)), x)
        g = np.array([0.0, 0.5 * r / x2, 0.5 * r / x3])
        H = np.zeros((3, 3))
        H[1, 1] = -0.25 * r / x2**2
        H[2, 2] = -0.25 * r / x3**2
        H[1, 2] = H[2, 1] = 0.25 / r
        second = DiffBundle(r, g, H, x)
        return {"x1": first, "sqrt_x2x3": second}

    def params(self):
        return {}


_OUTER_KINDS = ("power", "log1p")


@dataclass(frozen=True)
class Homothetic(ProductionFunction):
    """``g(h(x))`` with ``h`` linear homogeneous and ``g`` increasing.

    ``outer`` is ``"power"`` (``g(t) = t**gamma``) or ``"log1p"``
    (``g(t) = log(1 + t)``). The inner spec must be a Cobb-Douglas with
    exponents summing to one or a CES with ``k = 1``.
    """

    inner: ProductionFunction
    outer: str = "power"
    gamma: float | None = None
    family: ClassVar[str] = "homothetic"

    def __post_init__(self):
        inner = self.inner
        if isinstance(inner, CobbDouglas):
            ok = abs(sum(inner.alpha) - 1.0) <= 1e-12
        elif isinstance(inner, CES):
            ok = inner.k == 1.0
        else:
            ok = False
        if not ok:
            raise SpecError("homothetic inner spec must be degree-1 cobb_douglas or ces")
        if self.outer not in _OUTER_KINDS:
            raise SpecError(f"outer kind must be one of {_OUTER_KINDS}")
        if self.outer == "power":
            if self.gamma is None or not float(self.gamma) > 0:
                raise SpecError("power outer requires gamma > 0")
            object.__setattr__(self, "gamma", float(self.gamma))
        elif self.gamma is not None:
            raise SpecError("log1p outer takes no gamma")

    @property
    def n(self):
        return self.inner.n

    def _outer(self, t):
        if self.outer == "power":
            c = self.gamma
            return t**c, c * t ** (c - 1.0), c * (c - 1.0) * t ** (c - 2.0)
        return math.log1p(t), 1.0 / (1.0 + t), -1.0 / (1.0 + t) ** 2

    def value(self, x):
        return self._outer(self.inner.value(x))[0]

    def gradient(self, x):
        return self._outer(self.inner.value(x))[1] * self.inner.gradient(x)

    def hessian(self, x):
        _, d1, d2 = self._outer(self.inner.value(x))
        gh = self.inner.gradient(x)
        return d2 * np.outer(gh, gh) + d1 * self.inner.hessian(x)

    def params(self):
        outer = {"kind": self.outer}
        if self.outer == "power":
            outer["gamma"] = self.gamma
        return {"inner": spec_to_dict(self.inner), "outer": outer}


@dataclass(frozen=True)
class DiffBundle:
    """Value, gradient and Hessian of a function at ``point``."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    point: np.ndarray

    @property
    def n(self):
        return len(self.gradient)


@dataclass(frozen=True)
class SmoothnessReport:
    point: np.ndarray
    left: np.ndarray
    right: np.ndarray
    kinks: tuple
    max_mismatch: float
    tolerance: float = 1e-3

    @property
    def has_kink(self):
        return any(self.kinks)

    def to_dict(self):
        return {
            "point": self.point.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "kinks": list(self.kinks),
            "max_mismatch": self.max_mismatch,
        }


def _as_point(spec, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != spec.n:
        raise DomainError(f"expected a point of dimension {spec.n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("point has non-finite coordinates")
    if not spec.in_domain(x):
        lb = spec.lower_bounds()
        bad = [i + 1 for i in range(spec.n) if not x[i] > lb[i]]
        raise DomainError(f"coordinates {bad} violate the {spec.family} domain (x_i > {lb.tolist()})")
    return x


def evaluate(spec: ProductionFunction, x) -> float:
    return float(spec.value(_as_point(spec, x)))


def differentiate(spec: ProductionFunction, x) -> DiffBundle:
    """Analytic value, gradient and Hessian at ``x``.

    Raises
    ------
    NotDifferentiable
        For non-C^2 families (``nested_min``).
    DomainError
        If ``x`` is outside the family domain.
    """
    if not spec.smooth:
        raise NotDifferentiable(f"{spec.family} is not twice differentiable")
    x = _as_point(spec, x)
    return DiffBundle(float(spec.value(x)), np.asarray(spec.gradient(x), dtype=float),
                      np.asarray(spec.hessian(x), dtype=float), x)


def _stencil_eval(spec, x):
    if not spec.in_domain(x):
        raise DomainError(f"finite-difference stencil point {x.tolist()} leaves the domain")
    return float(spec.value(x))


def fd_differentiate(spec: ProductionFunction, x) -> DiffBundle:
    """Central-difference derivative bundle, used as an oracle.

    Gradient step ``cbrt(eps) * max(|x_i|, 1)``, Hessian step
    ``eps**0.25 * max(|x_i|, 1)``. The Hessian is symmetrized.
    """
    x = _as_point(spec, x)
    n = x.size
    scale = np.maximum(np.abs(x), 1.0)
    # round steps so that x + h is exact
    h1 = (x + np.cbrt(EPS) * scale) - x
    h2 = (x + EPS**0.25 * scale) - x
    f0 = _stencil_eval(spec, x)

    def f_at(*moves):
        z = x.copy()
        for i, s in moves:
            z[i] += s
        return _stencil_eval(spec, z)

    grad = np.empty(n)
    for i in range(n):
        grad[i] = (f_at((i, h1[i])) - f_at((i, -h1[i]))) / (2 * h1[i])

    hess = np.empty((n, n))
    for i in range(n):
        hi = h2[i]
        hess[i, i] = (f_at((i, hi)) - 2 * f0 + f_at((i, -hi))) / hi**2
        for j in range(i + 1, n):
            hj = h2[j]
            hess[i, j] = (f_at((i, hi), (j, hj)) - f_at((i, hi), (j, -hj))
                          - f_at((i, -hi), (j, hj)) + f_at((i, -hi), (j, -hj))) / (4 * hi * hj)
            hess[j, i] = hess[i, j]
    hess = 0.5 * (hess + hess.T)
    return DiffBundle(f0, grad, hess, x)


def check_smoothness(spec: ProductionFunction, x, tol: float = 1e-3) -> SmoothnessReport:
    """Compare one-sided difference quotients per coordinate.

    A coordinate is flagged as a kink when
    ``|right - left| / max(|left|, |right|, 1) > tol``.
    """
    x = _as_point(spec, x)
    lb = spec.lower_bounds()
    f0 = float(spec.value(x))
    left, right = np.empty(x.size), np.empty(x.size)
    for i in range(x.size):
        h = min(np.sqrt(EPS) * max(abs(x[i]), 1.0), 0.5 * (x[i] - lb[i]))
        z = x.copy()
        z[i] = x[i] + h
        right[i] = (spec.value(z) - f0) / h
        z[i] = x[i] - h
        left[i] = (f0 - spec.value(z)) / h
    mismatch = np.abs(right - left) / np.maximum(np.maximum(np.abs(left), np.abs(right)), 1.0)
    return SmoothnessReport(x, left, right, tuple(bool(m > tol) for m in mismatch),
                            float(mismatch.max()), tol)


PROBE_GRID = (0.5, 0.8, 1.25, 2.0)


def homogeneity_degree(spec: ProductionFunction, x, tol: float = 1e-8, grid=PROBE_GRID):
    """Detect the degree of homogeneity of ``spec`` around ``x``.

    The candidate degree is the Euler ratio ``sum(x_i f_i) / f`` at ``x``.
    It is accepted only if the Euler ratio is the same at every ``t * x``
    on the probe grid and ``f(t x) = t**k f(x)`` there, both within ``tol``
    relative. Returns ``None`` otherwise.
    """
    x = _as_point(spec, x)
    b = differentiate(spec, x)
    if b.value == 0:
        return None
    k = float(np.dot(x, b.gradient) / b.value)
    for t in grid:
        bt = differentiate(spec, t * x)
        if bt.value == 0:
            return None
        kt = float(np.dot(t * x, bt.gradient) / bt.value)
        if abs(kt - k) > tol * max(1.0, abs(k)):
            return None
        expected = t**k * b.value
        if abs(bt.value - expected) > tol * abs(expected):
            return None
    return k


# -- JSON ---------------------------------------------------------------

_KEYS = {
    "cobb_douglas": ({"alpha"}, {"A"}),
    "ces": ({"delta", "rho", "k"}, {"A"}),
    "shifted_cobb_douglas": ({"alpha", "shift"}, {"A"}),
    "quadratic": ({"a", "B"}, set()),
    "nested_min": (set(), set()),
    "homothetic": ({"inner", "outer"}, set()),
}


def _check_keys(where, got, required, optional=frozenset()):
    missing = required - set(got)
    unknown = set(got) - required - set(optional)
    if missing:
        raise SpecError(f"{where}: missing keys {sorted(missing)}")
    if unknown:
        raise SpecError(f"{where}: unknown keys {sorted(unknown)}")


def spec_from_dict(d: dict) -> ProductionFunction:
    """Strictly parse the JSON form of a production function."""
    if not isinstance(d, dict):
        raise SpecError("spec must be a JSON object")
    _check_keys("spec", d, {"family"}, {"params"})
    family = d["family"]
    params = d.get("params", {})
    if family not in _KEYS:
        raise SpecError(f"unknown family {family!r}; expected one of {sorted(_KEYS)}")
    if not isinstance(params, dict):
        raise SpecError("params must be a JSON object")
    required, optional = _KEYS[family]
    _check_keys(f"{family} params", params, required, optional)
    A = params.get("A", 1.0)
    try:
        if family == "cobb_douglas":
            return CobbDouglas(A, params["alpha"])
        if family == "ces":
            return CES(A, params["delta"], params["rho"], params["k"])
        if family == "shifted_cobb_douglas":
            return ShiftedCobbDouglas(A, params["alpha"], params["shift"])
        if family == "quadratic":
            return QuadraticConcave(params["a"], params["B"])
        if family == "nested_min":
            return NestedMin()
        outer = params["outer"]
        if not isinstance(outer, dict):
            raise SpecError("outer must be a JSON object")
        _check_keys("outer", outer, {"kind"}, {"gamma"})
        return Homothetic(spec_from_dict(params["inner"]), outer["kind"], outer.get("gamma"))
    except TypeError as exc:
        raise SpecError(f"bad parameter types for {family}: {exc}") from exc


def spec_to_dict(spec: ProductionFunction) -> dict:
    return {"family": spec.family, "params": spec.params()}


def load_spec(path) -> ProductionFunction:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: invalid JSON ({exc})") from exc
    return spec_from_dict(data)
