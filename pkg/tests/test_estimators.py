from __future__ import annotations

import itertools

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ppclone.errors import ArityMismatch, ElementOutOfRange, NotInvariant
from ppclone.estimators import PpDefiner, SubpowerClosure

PARITY4 = np.array([t for t in itertools.product(range(2), repeat=4) if sum(t) % 2 == 0])
SPACE4 = np.array(list(itertools.product(range(2), repeat=4)))


def test_definer_fit_predict(z2):
    est = PpDefiner(z2).fit(PARITY4)
    assert est.n_features_in_ == 4 and est.length_report_.length == 9
    assert (est.predict(SPACE4) == (SPACE4.sum(axis=1) % 2 == 0)).all()


def test_definer_close(z2):
    est = PpDefiner(z2, close=True).fit(PARITY4[[0, 1, 2, 4]])
    assert len(est.relation_) == 8


def test_definer_rejects_non_invariant(z2):
    with pytest.raises(NotInvariant):
        PpDefiner(z2).fit(PARITY4[:3])


def test_params_and_clone(z2):
    est = PpDefiner(z2, method="affine:2")
    assert est.get_params()["method"] == "affine:2"
    twin = clone(est).set_params(method="chain")
    assert twin.method == "chain" and est.method == "affine:2"


def test_input_validation(z2):
    est = PpDefiner(z2).fit(PARITY4)
    with pytest.raises(ArityMismatch):
        est.predict(np.zeros((1, 3), dtype=int))
    with pytest.raises(ElementOutOfRange):
        est.predict(np.full((1, 4), 2))
    with pytest.raises(ValueError):
        PpDefiner(z2).fit(np.array([[0.5, 1.0]]))
    with pytest.raises(TypeError):
        PpDefiner().fit(PARITY4)


def test_not_fitted(z2):
    with pytest.raises(NotFittedError):
        PpDefiner(z2).predict(PARITY4)
    with pytest.raises(NotFittedError):
        SubpowerClosure(z2).predict(PARITY4)


def test_closure_estimator(z2):
    est = SubpowerClosure(z2).fit([[0, 0, 0], [1, 1, 0]])
    assert est.tuples().tolist() == [[0, 0, 0], [1, 1, 0]]
    assert est.predict([[1, 0, 0], [1, 1, 0]]).tolist() == [False, True]
    assert est.certify([1, 1, 0])
    assert not est.certify([1, 0, 0])


def test_majority_definer(maj):
    rows = np.array([[0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 1, 1]])
    est = PpDefiner(maj, close=True).fit(rows)
    assert est.definition_.method == "baker_pixley"
    assert set(map(tuple, SPACE4[est.predict(SPACE4)])) == set(est.relation_.tuples)
