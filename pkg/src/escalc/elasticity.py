"""Primal-side elasticities of substitution.

Factor indices in scalar results follow the bordered-matrix convention:
factor ``i`` is row ``i`` of the bordered Hessian, ``i = 1..n``. Matrix
results are plain ``n x n`` numpy arrays (0-based).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bmatrix
from .errors import (DegenerateDenominator, DimensionError, IsoquantTraceFailure,
                     NotLinearHomogeneous, SingularBorderedHessian, ZeroCrossPartial,
                     ZeroGradient)
from .prodfn import differentiate, homogeneity_degree

MEASURES = ("AES", "HES", "HES_hom", "MES", "MES_alt", "EPS", "HLES", "MGES")


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, dict):
        return {k: _jsonable(w) for k, w in v.items()}
    return v


@dataclass
class ElasticityReport:
    """A labeled elasticity matrix or scalar at a quantity or price point."""

    measure: str
    values: np.ndarray | float
    point: object
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}")

    @property
    def is_matrix(self):
        return isinstance(self.values, np.ndarray)

    def __getitem__(self, ij):
        i, j = ij
        return float(self.values[i - 1, j - 1])

    def to_dict(self):
        out = {"measure": self.measure, "point": _jsonable(self.point)}
        if self.is_matrix:
            out["matrix"] = self.values.tolist()
        else:
            out["scalar"] = float(self.values)
        out["diagnostics"] = list(self.diagnostics)
        return out

    def rows(self):
        """CSV rows ``(measure, i, j, value)`` with 1-based factor indices."""
        if not self.is_matrix:
            return [(self.measure, "", "", float(self.values))]
        n, m = self.values.shape
        return [(self.measure, i + 1, j + 1, float(self.values[i, j]))
                for i in range(n) for j in range(m)]


def aes_matrix(d) -> ElasticityReport:
    """Allen elasticities from bordered-Hessian cofactors.

    ``sigma_ij = (sum_k x_k f_k) / (x_i x_j) * F_ij / F``.

    Only ``i <= j`` is computed; the lower triangle is mirrored, so the
    result is exactly symmetric. Diagonal entries are reported but are not
    substitution elasticities.

    Raises
    ------
    SingularBorderedHessian
        When ``|F|`` is below the scaled singularity threshold.
    """
    M = bmatrix.bordered_hessian(d)
    F = bmatrix.determinant(M)
    if bmatrix.is_singular(M, det=F):
        raise SingularBorderedHessian(
            f"bordered Hessian determinant {F:.3e} is numerically zero at {d.point.tolist()}")
    x = d.point
    scale = float(np.dot(x, d.gradient))
    n = d.n
    S = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            S[i, j] = scale / (x[i] * x[j]) * bmatrix.cofactor(M, i + 1, j + 1) / F
            S[j, i] = S[i, j]
    return ElasticityReport("AES", S, x.copy(),
                            ["diagonal entries are not substitution elasticities"])


def _require_two(d):
    if d.n != 2:
        raise DimensionError(f"two-factor measure requested for n = {d.n}")


def hes_denominator(d) -> float:
    """``-f11 f2^2 + 2 f12 f1 f2 - f22 f1^2``, the 3x3 bordered determinant."""
    _require_two(d)
    (f1, f2), H = d.gradient, d.hessian
    return -H[0, 0] * f2**2 + 2 * H[0, 1] * f1 * f2 - H[1, 1] * f1**2


def hes_determinant(d) -> float:
    """Hicks elasticity from the bordered-determinant formula (two factors)."""
    den = hes_denominator(d)
    (f1, f2), H = d.gradient, d.hessian
    scale = max(abs(H[0, 0]) * f2**2, abs(H[0, 1] * f1 * f2), abs(H[1, 1]) * f1**2)
    if den == 0 or abs(den) <= bmatrix.SINGULAR_RTOL * scale:
        raise DegenerateDenominator("bordered determinant vanishes")
    x1, x2 = d.point
    return (x1 * f1 + x2 * f2) / (x1 * x2) * f1 * f2 / den


def hes_homogeneous(d, spec=None, tol: float = 1e-8) -> float:
    """``f1 f2 / (f f12)``, valid for linear homogeneous functions only.

    Linear homogeneity is certified with :func:`homogeneity_degree` when
    ``spec`` is given; otherwise from the Euler identities available in the
    bundle (``x.grad f = f`` and ``H x = 0``).
    """
    _require_two(d)
    if spec is not None:
        k = homogeneity_degree(spec, d.point)
        linear = k is not None and abs(k - 1.0) <= tol
    else:
        x, g, H = d.point, d.gradient, d.hessian
        linear = (abs(np.dot(x, g) - d.value) <= tol * abs(d.value)
                  and np.all(np.abs(H @ x) <= tol * np.abs(g).max()))
    if not linear:
        raise NotLinearHomogeneous("the homogeneous HES form needs a degree-1 function")
    f12 = d.hessian[0, 1]
    if f12 == 0:
        raise ZeroCrossPartial("f12 = 0")
    f1, f2 = d.gradient
    return f1 * f2 / (d.value * f12)


def _solve_x1(spec, x1, x2, y, max_iter=50):
    # Newton on f(., x2) = y with step halving to stay in the domain
    lb = spec.lower_bounds()[0]
    for _ in range(max_iter):
        z = np.array([x1, x2])
        r = spec.value(z) - y
        if abs(r) <= 4 * np.finfo(float).eps * abs(y):
            return x1
        f1 = spec.gradient(z)[0]
        if not f1 > 0:
            break
        step = r / f1
        t = 1.0
        while x1 - t * step <= lb and t > 1e-12:
            t *= 0.5
        new = x1 - t * step
        if new == x1:
            return x1
        x1 = new
    z = np.array([x1, x2])
    if abs(spec.value(z) - y) <= 1e-12 * abs(y):
        return x1
    raise IsoquantTraceFailure(f"could not return to the isoquant f = {y} at x2 = {x2}")


def hes_log_derivative(spec, x, rel_step: float = 1e-4) -> float:
    """Hicks elasticity as ``d ln(x1/x2) / d ln(f2/f1)`` traced along the isoquant.

    The isoquant through ``x`` is followed numerically: ``x2`` is moved by
    ``+-h`` and ``x1`` re-solved by Newton so that ``f`` stays at ``f(x)``.
    The elasticity is the ratio of the central differences of
    ``ln(x1/x2)`` and ``ln(f2/f1)``.
    """
    b = differentiate(spec, x)
    _require_two(b)
    if not (b.gradient[0] > 0 and b.gradient[1] > 0):
        raise IsoquantTraceFailure("marginal products must be positive")
    y = b.value
    x1, x2 = b.point
    h = rel_step * x2

    def log_pair(x2v):
        x1v = _solve_x1(spec, x1, x2v, y)
        g = spec.gradient(np.array([x1v, x2v]))
        return math.log(x1v / x2v), math.log(g[1] / g[0])

    u_plus, v_plus = log_pair(x2 + h)
    u_minus, v_minus = log_pair(x2 - h)
    dv = v_plus - v_minus
    if dv == 0:
        raise IsoquantTraceFailure("marginal rate of substitution does not vary along the isoquant")
    return (u_plus - u_minus) / dv


def isoquant_curvature(d) -> float:
    """Unsigned curvature of the level curve through the bundle's point."""
    g = d.gradient
    norm2 = float(np.dot(g, g))
    if norm2 == 0:
        raise ZeroGradient("isoquant curvature undefined at a critical point")
    return abs(hes_denominator(d)) / norm2**1.5
