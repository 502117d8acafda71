"""Simple base regressors with a uniform fit/predict contract.

Every model appends an unpenalized intercept. Linear kinds solve their
normal equations by Cholesky with jitter escalation; ``knn`` keeps a copy
of its training set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._linalg import FactorizationError, spd_solve

KINDS = ("ols", "ridge", "regional_ols", "knn", "poly_ridge")
LIKELIHOOD_KINDS = ("ols", "ridge", "regional_ols", "poly_ridge")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class BaseModelSpec:
    """Configuration of one base learner.

    ``feature_columns`` indexes columns of ``x``; ``None`` means all of them
    and ``()`` an intercept-only fit (``ols``/``ridge`` only). For
    ``regional_ols`` the predicate ``x[:, column] < threshold`` (``side="lt"``)
    or ``>= threshold`` (``side="ge"``) selects the training rows; ``column``
    indexes the full ``x``, not the feature subset.
    """

    kind: str
    feature_columns: tuple | None = None
    alpha: float = 0.0
    k: int = 5
    degree: int = 2
    column: int = 0
    threshold: float = 0.0
    side: str = "lt"
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown model kind {self.kind!r}")
        if self.feature_columns is not None:
            fc = tuple(int(c) for c in self.feature_columns)
            object.__setattr__(self, "feature_columns", fc)
            if not fc and self.kind not in ("ols", "ridge"):
                raise ModelError(f"{self.kind} needs at least one feature column")
        if self.alpha < 0:
            raise ModelError(f"alpha must be >= 0, got {self.alpha}")
        if self.k < 1:
            raise ModelError(f"k must be >= 1, got {self.k}")
        if self.degree < 1:
            raise ModelError(f"degree must be >= 1, got {self.degree}")
        if self.side not in ("lt", "ge"):
            raise ModelError(f"side must be 'lt' or 'ge', got {self.side!r}")
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    def columns(self, d):
        return tuple(range(d)) if self.feature_columns is None else self.feature_columns

    def region(self, x):
        col = x[:, self.column]
        return col < self.threshold if self.side == "lt" else col >= self.threshold

    def to_dict(self):
        out = {"name": self.name, "kind": self.kind,
               "features": None if self.feature_columns is None else list(self.feature_columns)}
        if self.kind in ("ridge", "poly_ridge"):
            out["alpha"] = self.alpha
        if self.kind == "knn":
            out["k"] = self.k
        if self.kind == "poly_ridge":
            out["degree"] = self.degree
        if self.kind == "regional_ols":
            out.update(column=self.column, threshold=self.threshold, side=self.side)
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        feats = d.pop("features", None)
        return cls(feature_columns=feats, **d)


@dataclass(frozen=True)
class FittedBaseModel:
    spec: BaseModelSpec
    n_features: int
    coef: np.ndarray | None = None  # intercept first
    train_x: np.ndarray | None = None  # knn snapshot, feature columns only
    train_y: np.ndarray | None = None
    training_rss: float = 0.0
    n_train: int = 0
    parameter_count: int = 1

    def predict(self, x):
        return predict(self, x)


def poly_features(z, degree):
    """All monomials of total degree 1..``degree`` in the columns of ``z``."""
    cols = []
    p = z.shape[1]
    for deg in range(1, degree + 1):
        for combo in itertools.combinations_with_replacement(range(p), deg):
            cols.append(np.prod(z[:, list(combo)], axis=1))
    return np.column_stack(cols) if cols else np.empty((z.shape[0], 0))


def _design(spec, z):
    if spec.kind == "poly_ridge":
        z = poly_features(z, spec.degree)
    return np.column_stack([np.ones(z.shape[0]), z])


def _solve_penalized(X, y, alpha):
    G = X.T @ X
    if alpha > 0:
        pen = np.full(X.shape[1], alpha)
        pen[0] = 0.0
        G = G + np.diag(pen)
    try:
        return spd_solve(G, X.T @ y, start=1e-8, stop=1e-2)
    except FactorizationError as exc:
        raise ModelError(f"normal equations singular: {exc}") from None


def fit(spec: BaseModelSpec, x, y) -> FittedBaseModel:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape[0] != y.shape[0]:
        raise ModelError(f"x has {x.shape[0]} rows, y has {y.shape[0]}")
    if x.shape[0] < 1:
        raise ModelError("no training rows")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ModelError("non-finite training data")
    d = x.shape[1]
    cols = list(spec.columns(d))
    if any(c < 0 or c >= d for c in cols):
        raise ModelError(f"feature columns {cols} out of range for {d} columns")

    if spec.kind == "regional_ols":
        if not 0 <= spec.column < d:
            raise ModelError(f"region column {spec.column} out of range")
        mask = spec.region(x)
        if not mask.any():
            raise ModelError(f"regional_ols {spec.name!r}: no training rows satisfy the region predicate")
        x, y = x[mask], y[mask]

    z = x[:, cols]
    if spec.kind == "knn":
        k = min(spec.k, z.shape[0])
        pred = _knn_predict(z, y, z, k)
        rss = float(np.sum((y - pred) ** 2))
        return FittedBaseModel(spec, d, train_x=z.copy(), train_y=y.copy(),
                               training_rss=rss, n_train=z.shape[0], parameter_count=1)

    X = _design(spec, z)
    alpha = spec.alpha if spec.kind in ("ridge", "poly_ridge") else 0.0
    coef = _solve_penalized(X, y, alpha)
    rss = float(np.sum((y - X @ coef) ** 2))
    return FittedBaseModel(spec, d, coef=coef, training_rss=rss,
                           n_train=z.shape[0], parameter_count=X.shape[1])


def _knn_predict(train_z, train_y, query, k):
    d2 = ((query[:, None, :] - train_z[None, :, :]) ** 2).sum(axis=2)
    if k >= d2.shape[1]:
        return np.broadcast_to(train_y.mean(), (query.shape[0],)).copy()
    kth = np.partition(d2, k - 1, axis=1)[:, k - 1:k]
    closer = d2 < kth
    # ties at the k-th distance go to the lowest training row indices
    tied = d2 == kth
    need = k - closer.sum(axis=1, keepdims=True)
    chosen = closer | (tied & (np.cumsum(tied, axis=1) <= need))
    return (chosen @ train_y) / k


def predict(m: FittedBaseModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[1] != m.n_features:
        raise ModelError(f"x has {x.shape[1]} columns, model {m.spec.name!r} expects {m.n_features}")
    z = x[:, list(m.spec.columns(m.n_features))]
    if m.spec.kind == "knn":
        return _knn_predict(m.train_x, m.train_y, z, min(m.spec.k, m.n_train))
    return _design(m.spec, z) @ m.coef


def aic(m: FittedBaseModel, n=None) -> float:
    """Gaussian AIC up to a constant: ``n log(rss/n) + 2 (p + 1)``.

    ``n`` defaults to the number of rows the model was fitted on.
    """
    if m.spec.kind not in LIKELIHOOD_KINDS:
        raise ModelError(f"AIC unsupported for model kind {m.spec.kind!r}")
    n = m.n_train if n is None else n
    if not m.training_rss > 0:
        raise ModelError("AIC undefined for zero training RSS")
    return n * np.log(m.training_rss / n) + 2.0 * (m.parameter_count + 1)
