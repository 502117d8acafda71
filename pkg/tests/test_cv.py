import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdst.base_models import BaseModelSpec
from cdst.cv import FoldError, FoldPlan, OofFitError, build_oof, make_folds
from cdst.dataset import Dataset


@given(st.integers(2, 60), st.data())
def test_fold_plan_partitions_rows(n, data):
    K = data.draw(st.integers(2, n))
    fp = make_folds(n, K, seed=data.draw(st.integers(0, 100)))
    counts = np.bincount(fp.assignment, minlength=K)
    assert counts.sum() == n and counts.max() - counts.min() <= 1
    for k in range(K):
        assert set(fp.test_rows(k)).isdisjoint(fp.train_rows(k))


def test_loo_ignores_seed():
    np.testing.assert_array_equal(make_folds(7, 7, 1).assignment, np.arange(7))
    np.testing.assert_array_equal(make_folds(7, 7, 99).assignment, np.arange(7))


@pytest.mark.parametrize("n,K", [(5, 1), (5, 6), (1, 1)])
def test_bad_fold_counts(n, K):
    with pytest.raises(FoldError):
        make_folds(n, K)


def test_loo_intercept_only_oof():
    y = np.array([1.0, 2.0, 4.0, 7.0])
    d = Dataset(np.zeros((4, 1)), np.zeros((4, 1)), y)
    oof = build_oof([BaseModelSpec("ols", ())], d, make_folds(4, 4))
    np.testing.assert_allclose(oof.F[:, 0], (y.sum() - y) / 3)


def test_oof_is_independent_of_held_out_response():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(20, 2))
    y = x @ [1.0, -1.0] + rng.normal(size=20)
    folds = make_folds(20, 4, seed=1)
    specs = [BaseModelSpec("ols"), BaseModelSpec("knn", k=3)]
    base = build_oof(specs, Dataset(x, x, y), folds).F
    rows = folds.test_rows(2)
    y2 = y.copy()
    y2[rows] += 1000.0
    moved = build_oof(specs, Dataset(x, x, y2), folds).F
    np.testing.assert_array_equal(moved[rows], base[rows])


def test_oof_fit_error_names_fold_and_model():
    x = np.array([[-1.0], [-0.5], [1.0], [2.0]])
    d = Dataset(x, x, np.arange(4.0))
    specs = [BaseModelSpec("ols"), BaseModelSpec("regional_ols", column=0, threshold=0.0, side="lt")]
    with pytest.raises(OofFitError) as ei:
        build_oof(specs, d, FoldPlan(np.array([0, 0, 1, 1]), 2, 0))
    assert (ei.value.fold, ei.value.model) == (0, 1)


def test_oof_csv(tmp_path):
    d = Dataset(np.arange(6.0)[:, None], np.zeros((6, 1)), np.arange(6.0))
    oof = build_oof([BaseModelSpec("ols")], d, make_folds(6, 3, seed=0))
    oof.to_csv(tmp_path / "oof.csv")
    lines = (tmp_path / "oof.csv").read_text().splitlines()
    assert lines[0] == "f1,fold" and len(lines) == 7
