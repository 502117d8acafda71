"""Constant-weight ensembles: vanilla stacking, simple averaging, smoothed AIC."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import FactorizationError, spd_solve


@dataclass(frozen=True)
class ConstantWeights:
    w: np.ndarray
    method: str
    excluded: tuple = ()  # model indices given zero weight (saic without a likelihood)

    def predict(self, base_predictions):
        return np.asarray(base_predictions, dtype=float) @ self.w


def _F(F):
    return np.asarray(getattr(F, "F", F), dtype=float)


def vanilla_stack(y, F) -> ConstantWeights:
    """Unconstrained least-squares weights on out-of-fold predictions."""
    F = _F(F)
    y = np.asarray(y, dtype=float)
    try:
        w = spd_solve(F.T @ F, F.T @ y, start=1e-8, stop=1e-2)
    except FactorizationError as exc:
        raise ValueError(f"stacking normal equations singular: {exc}") from None
    return ConstantWeights(w, "stacking")


def simple_average(J) -> ConstantWeights:
    if J < 1:
        raise ValueError("simple average needs at least one model")
    return ConstantWeights(np.full(J, 1.0 / J), "simple_average")


def saic(aics) -> ConstantWeights:
    """Akaike weights ``exp(-delta_j / 2) / sum_k exp(-delta_k / 2)``.

    Entries that are ``None`` or NaN mark models without a likelihood; they
    get weight zero and are listed in ``excluded``.
    """
    aics = list(aics)
    if not aics:
        raise ValueError("saic needs at least one AIC value")
    a = np.array([np.nan if v is None else float(v) for v in aics])
    ok = ~np.isnan(a)
    if not ok.any():
        raise ValueError("no model has an AIC value")
    if np.any(np.isinf(a[ok])):
        raise ValueError("AIC values must be finite")
    delta = a[ok] - a[ok].min()
    e = np.exp(-0.5 * delta)
    w = np.zeros(len(a))
    w[ok] = e / e.sum()
    return ConstantWeights(w, "saic", tuple(int(i) for i in np.flatnonzero(~ok)))
