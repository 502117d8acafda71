"""Fold plans and the out-of-fold prediction matrix."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import base_models
from .dataset import Dataset, atomic_write_rows


class FoldError(ValueError):
    pass


@dataclass(frozen=True)
class FoldPlan:
    assignment: np.ndarray
    K: int
    seed: int

    @property
    def n(self):
        return self.assignment.shape[0]

    def test_rows(self, k):
        return np.flatnonzero(self.assignment == k)

    def train_rows(self, k):
        return np.flatnonzero(self.assignment != k)


def make_folds(n, K, seed=0) -> FoldPlan:
    """Deal a seeded random permutation of ``range(n)`` round-robin into ``K`` folds.

    ``K = n`` gives leave-one-out with fold ``i`` holding row ``i``, whatever
    the seed.
    """
    if not 2 <= K <= n:
        raise FoldError(f"fold count K={K} outside [2, n={n}]")
    if K == n:
        assignment = np.arange(n)
    else:
        perm = np.random.default_rng(seed).permutation(n)
        assignment = np.empty(n, dtype=int)
        assignment[perm] = np.arange(n) % K
    assignment.setflags(write=False)
    return FoldPlan(assignment, int(K), int(seed))


@dataclass(frozen=True)
class OofMatrix:
    F: np.ndarray
    specs: tuple
    folds: FoldPlan

    @property
    def J(self):
        return self.F.shape[1]

    def to_csv(self, path):
        names = [f"f{j + 1}" for j in range(self.J)] + ["fold"]
        rows = [[*map(float, r), int(k)] for r, k in zip(self.F, self.folds.assignment)]
        atomic_write_rows(Path(path), names, rows)


class OofFitError(RuntimeError):
    def __init__(self, fold, model, cause):
        super().__init__(f"fold {fold}, model {model}: {cause}")
        self.fold = fold
        self.model = model
        self.cause = cause


def build_oof(specs: Sequence, data: Dataset, folds: FoldPlan,
              fitter: Callable = base_models.fit) -> OofMatrix:
    """Refit every model on each fold's complement and predict the held-out rows.

    ``fitter(spec, x, y)`` must return an object with ``predict(x)``; the
    default fits :class:`~cdst.base_models.BaseModelSpec` entries.
    """
    if data.y is None:
        raise FoldError("out-of-fold predictions need a response")
    if folds.n != data.n:
        raise FoldError(f"fold plan covers {folds.n} rows, data has {data.n}")
    F = np.empty((data.n, len(specs)))
    for k in range(folds.K):
        test = folds.test_rows(k)
        train = folds.train_rows(k)
        for j, spec in enumerate(specs):
            try:
                model = fitter(spec, data.x[train], data.y[train])
                F[test, j] = model.predict(data.x[test])
            except Exception as exc:
                raise OofFitError(k, j, exc) from exc
    if not np.all(np.isfinite(F)):
        raise FoldError("non-finite out-of-fold prediction")
    F.setflags(write=False)
    return OofMatrix(F, tuple(specs), folds)
