"""scikit-learn compatible wrappers.

The estimators are stateless apart from the validated spec: ``fit`` only
checks the spec and the input width, and ``transform``/``predict`` map
each row of ``X`` to a measure. Rows are input bundles ``x`` for the
primal measures, ``(p_1 .. p_n, y)`` for cost-side ones and
``(p_1 .. p_n, p_y)`` for profit-side ones.

>>> from escalc.prodfn import CobbDouglas
>>> AllenElasticity(CobbDouglas(1.0, (0.3, 0.5))).fit_transform([[1.0, 1.0]]).round(12)
array([[1.]])
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .duality import PriceOutput, canonical_problem, mes_matrix, solve_cost_min, uzawa_aes
from .elasticity import aes_matrix
from .errors import DimensionError, DomainError, SpecError
from .prodfn import ProductionFunction, differentiate, spec_from_dict
from .profit import hles_matrix, mges_matrix, solve_profit_max


def check_spec(spec) -> ProductionFunction:
    """Accept a spec object or its JSON dict form."""
    if isinstance(spec, ProductionFunction):
        return spec
    if isinstance(spec, dict):
        return spec_from_dict(spec)
    raise SpecError(f"expected a production function spec, got {type(spec).__name__}")


def check_rows(X, width: int, positive: bool = True) -> np.ndarray:
    X = check_array(X, dtype=float)
    if X.shape[1] != width:
        raise DimensionError(f"X has {X.shape[1]} columns, expected {width}")
    if positive and not np.all(X > 0):
        raise DomainError("all entries of X must be strictly positive")
    return X


def _upper_pairs(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _off_diagonal(n):
    return [(i, j) for i in range(n) for j in range(n) if i != j]


class _SpecEstimator(BaseEstimator):
    extra_columns = 0

    def __init__(self, spec=None):
        self.spec = spec

    def fit(self, X=None, y=None):
        self.spec_ = check_spec(self.spec)
        self.n_features_in_ = self.spec_.n + self.extra_columns
        if X is not None:
            check_rows(X, self.n_features_in_)
        return self

    def _rows(self, X):
        check_is_fitted(self, "spec_")
        return check_rows(X, self.n_features_in_)


class AllenElasticity(TransformerMixin, _SpecEstimator):
    """Off-diagonal Allen elasticities at each input bundle.

    Parameters
    ----------
    spec : ProductionFunction or dict
    route : {"primal", "uzawa"}
        ``"primal"`` uses bordered-Hessian cofactors at ``x``; ``"uzawa"``
        solves the cost problem at ``(grad f(x), f(x))`` and uses the cost
        function form. Both give the same numbers for smooth specs.
    """

    def __init__(self, spec=None, route="primal"):
        super().__init__(spec)
        self.route = route

    def fit(self, X=None, y=None):
        if self.route not in ("primal", "uzawa"):
            raise ValueError(f"route must be 'primal' or 'uzawa', got {self.route!r}")
        return super().fit(X, y)

    def transform(self, X):
        X = self._rows(X)
        pairs = _upper_pairs(self.spec_.n)
        out = np.empty((X.shape[0], len(pairs)))
        for r, x in enumerate(X):
            if self.route == "primal":
                S = aes_matrix(differentiate(self.spec_, x)).values
            else:
                S = uzawa_aes(solve_cost_min(self.spec_, canonical_problem(self.spec_, x))).values
            out[r] = [S[i, j] for i, j in pairs]
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "spec_")
        return np.array([f"aes_{i + 1}_{j + 1}" for i, j in _upper_pairs(self.spec_.n)], dtype=object)


class CostMinimizer(_SpecEstimator):
    """Conditional factor demands: ``predict`` maps ``(p, y)`` rows to ``x*``."""

    extra_columns = 1

    def __init__(self, spec=None, max_iter=100):
        super().__init__(spec)
        self.max_iter = max_iter

    def solve(self, X):
        X = self._rows(X)
        n = self.spec_.n
        return [solve_cost_min(self.spec_, PriceOutput(row[:n], row[n]), max_iter=self.max_iter)
                for row in X]

    def predict(self, X):
        return np.array([s.x_star for s in self.solve(X)])

    def cost(self, X):
        return np.array([s.cost for s in self.solve(X)])


class MorishimaElasticity(TransformerMixin, CostMinimizer):
    """Off-diagonal Morishima elasticities for each ``(p, y)`` row."""

    def __init__(self, spec=None, alt=False, max_iter=100):
        super().__init__(spec, max_iter)
        self.alt = alt

    def transform(self, X):
        sols = self.solve(X)
        pairs = _off_diagonal(self.spec_.n)
        return np.array([[mes_matrix(s, self.alt).values[i, j] for i, j in pairs] for s in sols])

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "spec_")
        tag = "mes_alt" if self.alt else "mes"
        return np.array([f"{tag}_{i + 1}_{j + 1}" for i, j in _off_diagonal(self.spec_.n)], dtype=object)


class ProfitMaximizer(_SpecEstimator):
    """Unconditional factor demands: ``predict`` maps ``(p, p_y)`` rows to ``x*``."""

    extra_columns = 1

    def __init__(self, spec=None, max_iter=200):
        super().__init__(spec)
        self.max_iter = max_iter

    def solve(self, X):
        X = self._rows(X)
        n = self.spec_.n
        return [solve_profit_max(self.spec_, row[:n], row[n], max_iter=self.max_iter) for row in X]

    def predict(self, X):
        return np.array([s.x_star for s in self.solve(X)])


class GrossElasticity(TransformerMixin, ProfitMaximizer):
    """Hotelling-Lau (``measure="hles"``) or gross Morishima (``"mges"``) elasticities."""

    def __init__(self, spec=None, measure="mges", max_iter=200):
        super().__init__(spec, max_iter)
        self.measure = measure

    def _pairs(self):
        n = self.spec_.n
        return _upper_pairs(n) if self.measure == "hles" else _off_diagonal(n)

    def transform(self, X):
        if self.measure not in ("hles", "mges"):
            raise ValueError(f"measure must be 'hles' or 'mges', got {self.measure!r}")
        sols = self.solve(X)
        fn = hles_matrix if self.measure == "hles" else mges_matrix
        pairs = self._pairs()
        return np.array([[fn(s).values[i, j] for i, j in pairs] for s in sols])

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "spec_")
        return np.array([f"{self.measure}_{i + 1}_{j + 1}" for i, j in self._pairs()], dtype=object)
