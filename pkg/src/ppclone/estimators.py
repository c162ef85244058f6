"""scikit-learn style wrappers.

Rows of ``X`` are tuples over the algebra's domain ``{0, ..., size-1}``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .closure import sg
from .core import Algebra, Relation, Sort, Verdict, formula_holds
from .errors import ArityMismatch, ElementOutOfRange, NotInvariant
from .ppdef import DefinitionResult, short_pp_definition
from .subpowers import smp


def _tuples(X, algebra: Algebra, n_features: int | None = None, min_samples: int = 0) -> np.ndarray:
    X = check_array(X, dtype=None, ensure_min_samples=min_samples, ensure_min_features=1)
    if not np.issubdtype(X.dtype, np.integer):
        if not np.issubdtype(X.dtype, np.number) or not np.array_equal(X, np.round(X)):
            raise ValueError("entries must be integers")
    X = X.astype(np.int64)
    if n_features is not None and X.shape[1] != n_features:
        raise ArityMismatch(f"X has {X.shape[1]} columns, the estimator was fitted on {n_features}")
    if X.size and (X.min() < 0 or X.max() >= algebra.size):
        raise ElementOutOfRange(f"entries must lie in 0..{algebra.size - 1}")
    return X


def _require_algebra(algebra) -> Algebra:
    if not isinstance(algebra, Algebra):
        raise TypeError("pass an Algebra as the `algebra` parameter")
    return algebra


class PpDefiner(BaseEstimator):
    """Learn a verified pp-definition of the subpower spanned by (or equal to) the rows of ``X``.

    Parameters
    ----------
    algebra : Algebra
    method : {"auto", "baker-pixley", "affine", "chain", "composite"}
    k : int or None
        Edge parameter; inferred when None.
    close : bool
        Generate the subpower from the rows; otherwise the rows must already
        form an invariant relation.
    name : str
        Name of the defined relation.
    """

    def __init__(self, algebra=None, method: str = "auto", k: int | None = None, close: bool = False, name: str = "R"):
        self.algebra = algebra
        self.method = method
        self.k = k
        self.close = close
        self.name = name

    def fit(self, X, y=None):
        alg = _require_algebra(self.algebra)
        X = _tuples(X, alg)
        sort = Sort.base(alg)
        sorts = (sort,) * X.shape[1]
        if self.close:
            R = sg(sorts, X, name=self.name)
        else:
            R = Relation(self.name, sorts, X.tolist())
            closed = sg(sorts, X)
            if len(closed) != len(R):
                raise NotInvariant("the rows are not closed under the operations; use close=True")
        result: DefinitionResult = short_pp_definition(R, alg, k=self.k, method=self.method)
        self.relation_ = R
        self.definition_ = result
        self.formula_ = result.formula
        self.basis_ = result.basis
        self.length_report_ = result.report
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        """Truth value of the fitted formula on each row."""
        check_is_fitted(self, "formula_")
        X = _tuples(X, self.algebra, self.n_features_in_)
        return np.array([formula_holds(self.formula_, self.basis_, tuple(row)) for row in X.tolist()], dtype=bool)

    def score(self, X, y=None) -> float:
        """Formula length per squared arity (lower is shorter)."""
        check_is_fitted(self, "formula_")
        return self.length_report_.length / self.n_features_in_**2


class SubpowerClosure(BaseEstimator):
    """Subpower generated by the rows of ``X``; predicts membership with certificates on request."""

    def __init__(self, algebra=None):
        self.algebra = algebra

    def fit(self, X, y=None):
        alg = _require_algebra(self.algebra)
        X = _tuples(X, alg)
        self.generators_ = [tuple(r) for r in X.tolist()]
        self.subpower_ = sg((Sort.base(alg),) * X.shape[1], X)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "subpower_")
        X = _tuples(X, self.algebra, self.n_features_in_)
        return np.array([tuple(r) in self.subpower_ for r in X.tolist()], dtype=bool)

    def tuples(self) -> np.ndarray:
        """All tuples of the generated subpower, in lexicographic order."""
        check_is_fitted(self, "subpower_")
        return np.asarray(self.subpower_.tuples, dtype=np.int64).reshape(-1, self.n_features_in_)

    def certify(self, target) -> Verdict:
        """Membership of one tuple with a derivation trace or a separating formula."""
        check_is_fitted(self, "subpower_")
        t = _tuples(np.atleast_2d(target), self.algebra, self.n_features_in_, min_samples=1)[0]
        return smp(self.algebra, tuple(int(a) for a in t), self.generators_)
