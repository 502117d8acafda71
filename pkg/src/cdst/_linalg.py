"""Symmetric positive-definite solves with diagonal jitter escalation."""

import numpy as np
from scipy import linalg


class FactorizationError(np.linalg.LinAlgError):
    """Raised when a matrix stays indefinite after the jitter budget is spent."""


def spd_factor(A, start=1e-8, stop=1e-2):
    """Cholesky-factorize ``A``, adding diagonal jitter on failure.

    The first attempt uses ``A`` as given. On failure, ``start * trace/dim``
    is added to the diagonal and multiplied by ten until the relative
    jitter exceeds ``stop``.

    Returns
    -------
    factor : tuple
        ``(c, lower)`` as accepted by :func:`scipy.linalg.cho_solve`.
    jitter : float
        Absolute jitter that was added (0.0 if none).
    """
    A = np.asarray(A, dtype=float)
    dim = A.shape[0]
    if dim == 0:
        return (A.copy(), True), 0.0
    if not np.all(np.isfinite(A)):
        raise FactorizationError("matrix contains non-finite entries")
    scale = np.trace(A) / dim
    if not scale > 0:
        scale = 1.0
    rel = 0.0
    while True:
        jitter = rel * scale
        try:
            c = linalg.cholesky(A + jitter * np.eye(dim), lower=True, check_finite=False)
            return (c, True), jitter
        except np.linalg.LinAlgError:
            pass
        rel = start if rel == 0.0 else rel * 10.0
        if rel > stop * (1 + 1e-9):
            raise FactorizationError(
                f"matrix of size {dim} not positive definite after jitter up to {stop:g}*trace/dim"
            )


def spd_solve(A, B, start=1e-8, stop=1e-2):
    B = np.asarray(B, dtype=float)
    if B.shape[0] == 0:
        return B.copy()
    factor, _ = spd_factor(A, start, stop)
    return linalg.cho_solve(factor, B, check_finite=False)
