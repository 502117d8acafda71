from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def mse(y, yhat) -> float:
    y = np.asarray(y, dtype=float).reshape(-1)
    yhat = np.asarray(yhat, dtype=float).reshape(-1)
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.shape[0]} vs {yhat.shape[0]}")
    if y.size == 0:
        raise ValueError("mse of an empty vector")
    return float(np.mean((y - yhat) ** 2))


def ape(y, yhat) -> np.ndarray:
    """Absolute percentage error ``100 |y - yhat| / y``; requires ``y > 0``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    yhat = np.asarray(yhat, dtype=float).reshape(-1)
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.shape[0]} vs {yhat.shape[0]}")
    bad = np.flatnonzero(~(y > 0))
    if bad.size:
        raise ValueError(f"APE needs positive responses; row {bad[0]} has y={y[bad[0]]}")
    return 100.0 * np.abs(y - yhat) / y


@dataclass(frozen=True)
class ReplicationSummary:
    method: str
    values: tuple
    failures: int = 0

    @property
    def count(self):
        return len(self.values)

    @property
    def mean(self):
        return float(np.mean(self.values)) if self.values else float("nan")

    @property
    def sd(self):
        if len(self.values) < 2:
            return 0.0 if self.values else float("nan")
        return float(np.std(self.values, ddof=1))


def summarize(method, values, failures=0) -> ReplicationSummary:
    return ReplicationSummary(method, tuple(float(v) for v in values), failures)
