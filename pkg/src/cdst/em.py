"""Covariate-dependent stacking fitted by EM.

The stacked predictor is ``g(x) = sum_j w_j(xt) f_j(x)`` with weight fields
``w_j(xt) = mu_j + E(xt) @ gamma_j``. Treating each ``gamma_j`` as a
``N(0, tau_j^2 I_M)`` random effect in a Gaussian working model for the
out-of-fold predictions, EM estimates ``(mu, tau^2, sigma^2)``; the
posterior mean of ``gamma`` then solves the ridge-penalized cross-validation
problem with penalties ``lambda_j = sigma^2 / tau_j^2``.

Layout conventions: ``F`` is ``n x J``, ``E`` is ``n x M`` and the design
``W`` is ``n x JM`` with model ``j`` occupying columns ``j*M:(j+1)*M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from . import base_models
from ._linalg import FactorizationError, spd_factor, spd_solve
from .basis import BasisSpec, build_basis, eval_basis
from .cv import FoldPlan, build_oof, make_folds
from .dataset import Dataset

TAU2_FLOOR = 1e-12
SIGMA2_FLOOR_REL = 1e-12


class StackingError(RuntimeError):
    pass


@dataclass(frozen=True)
class StackParams:
    mu: np.ndarray
    tau2: np.ndarray
    sigma2: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float).reshape(-1)
        tau2 = np.asarray(self.tau2, dtype=float).reshape(-1)
        if mu.shape != tau2.shape:
            raise ValueError("mu and tau2 must have one entry per base model")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(tau2)) and math.isfinite(self.sigma2)):
            raise ValueError("non-finite stacking parameters")
        if np.any(tau2 <= 0) or not self.sigma2 > 0:
            raise ValueError("tau2 and sigma2 must be positive")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "tau2", tau2)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def J(self):
        return self.mu.shape[0]

    def as_vector(self):
        return np.concatenate([self.mu, self.tau2, [self.sigma2]])

    @property
    def lambdas(self):
        """Ridge penalties implied by the working model."""
        return self.sigma2 / self.tau2


@dataclass(frozen=True)
class PosteriorGamma:
    m_gamma: np.ndarray
    S_gamma: np.ndarray

    def block(self, j, M):
        s = slice(j * M, (j + 1) * M)
        return self.m_gamma[s], self.S_gamma[s, s]


@dataclass
class EmConfig:
    tol: float = 1e-5
    max_iter: int = 500
    mode: str = "paper"
    init: StackParams | None = None
    track_loglik: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.mode not in ("paper", "exact"):
            raise ValueError(f"mode must be 'paper' or 'exact', got {self.mode!r}")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    params: StackParams
    step: float  # L1 distance to the previous iterate; nan for the initial one
    loglik: float | None
    tau2_floored: tuple = ()


def design_matrix(F, E):
    """Row ``i`` is ``(E[i] * F[i, 0], ..., E[i] * F[i, J-1])``."""
    F = np.asarray(F, dtype=float)
    E = np.asarray(E, dtype=float)
    if F.ndim != 2 or E.ndim != 2 or F.shape[0] != E.shape[0]:
        raise ValueError(f"F {F.shape} and E {E.shape} must be matrices with equal row counts")
    n, J = F.shape
    return (F[:, :, None] * E[:, None, :]).reshape(n, J * E.shape[1])


def _basis_count(F, W):
    J = F.shape[1]
    if W.shape[0] != F.shape[0] or W.shape[1] % J:
        raise ValueError(f"W {W.shape} is not conformable with F {F.shape}")
    return W.shape[1] // J


def _posterior(WtW, Wtr, rtr, n, p: StackParams, M):
    """Posterior of gamma and the marginal log-likelihood, sharing one factorization."""
    prior_prec = np.repeat(1.0 / p.tau2, M)
    A = WtW / p.sigma2 + np.diag(prior_prec)
    try:
        factor, _ = spd_factor(A, start=1e-10, stop=1e-4)
    except FactorizationError as exc:
        raise StackingError(f"posterior precision not positive definite: {exc}") from None
    JM = A.shape[0]
    if JM:
        S = linalg.cho_solve(factor, np.eye(JM), check_finite=False)
        S = 0.5 * (S + S.T)
        b = Wtr / p.sigma2
        m = linalg.cho_solve(factor, b, check_finite=False)
        logdet_A = 2.0 * np.sum(np.log(np.diag(factor[0])))
    else:
        S = np.zeros((0, 0))
        b = m = np.zeros(0)
        logdet_A = 0.0
    # log det(sigma2 I + W Lambda W') = n log sigma2 + log det Lambda + log det A
    logdet = n * math.log(p.sigma2) - np.sum(np.log(prior_prec)) + logdet_A
    quad = rtr / p.sigma2 - float(b @ m)
    loglik = -0.5 * (n * math.log(2 * math.pi) + logdet + quad)
    return PosteriorGamma(m, S), loglik


def e_step(y, F, W, p: StackParams) -> PosteriorGamma:
    """Posterior ``N(m, S)`` of gamma given the data under parameters ``p``."""
    y = np.asarray(y, dtype=float)
    F = np.asarray(F, dtype=float)
    W = np.asarray(W, dtype=float)
    M = _basis_count(F, W)
    r = y - F @ p.mu
    post, _ = _posterior(W.T @ W, W.T @ r, float(r @ r), len(y), p, M)
    return post


def marginal_loglik(y, F, W, p: StackParams) -> float:
    """Log density of ``y ~ N(F mu, sigma2 I + W (D^-1 kron I_M) W')``."""
    y = np.asarray(y, dtype=float)
    F = np.asarray(F, dtype=float)
    W = np.asarray(W, dtype=float)
    M = _basis_count(F, W)
    r = y - F @ p.mu
    return _posterior(W.T @ W, W.T @ r, float(r @ r), len(y), p, M)[1]


def _sigma2_floor(y):
    return SIGMA2_FLOOR_REL * max(float(np.mean(np.square(y))), 1.0)


def m_step(y, F, W, post: PosteriorGamma, mode="paper", prev: StackParams | None = None) -> StackParams:
    """Closed-form parameter update given the posterior of gamma.

    ``mode="exact"`` adds the posterior-variance term ``mean_i w_i' S w_i``
    to the noise-variance update. With no basis (``M = 0``) the ``tau2``
    values of ``prev`` are carried over (ones if ``prev`` is None).
    """
    y = np.asarray(y, dtype=float)
    F = np.asarray(F, dtype=float)
    W = np.asarray(W, dtype=float)
    n, J = F.shape
    M = _basis_count(F, W)
    ystar = y - W @ post.m_gamma
    try:
        mu = spd_solve(F.T @ F, F.T @ ystar, start=1e-8, stop=1e-2)
    except FactorizationError as exc:
        raise StackingError(f"base-model predictions are collinear: {exc}") from None
    resid = ystar - F @ mu
    sigma2 = float(resid @ resid) / n
    if mode == "exact" and M:
        sigma2 += float(np.sum((W @ post.S_gamma) * W)) / n
    sigma2 = max(sigma2, _sigma2_floor(y))
    if M:
        tau2 = np.empty(J)
        for j in range(J):
            mj, Sjj = post.block(j, M)
            tau2[j] = (float(mj @ mj) + float(np.trace(Sjj))) / M
        tau2 = np.maximum(tau2, TAU2_FLOOR)
    else:
        tau2 = np.ones(J) if prev is None else prev.tau2.copy()
    return StackParams(mu, tau2, sigma2)


def default_init(y, F) -> StackParams:
    """Start from the simple average: ``mu = 1/J``, ``tau2 = 1``."""
    J = F.shape[1]
    resid = y - F.mean(axis=1)
    sigma2 = float(np.var(resid, ddof=1)) if len(y) > 1 else 1.0
    return StackParams(np.full(J, 1.0 / J), np.ones(J), max(sigma2, _sigma2_floor(y)))


@dataclass(frozen=True)
class CdstModel:
    """Fitted covariate-dependent stack."""

    params: StackParams
    gamma_hat: np.ndarray
    basis: object = None
    full_models: tuple = ()
    trace: tuple = ()
    converged: bool = False
    n_iter: int = 0
    x_names: tuple = ()
    xtilde_names: tuple = ()
    model_names: tuple = ()
    posterior: PosteriorGamma | None = field(default=None, repr=False, compare=False)

    @property
    def J(self):
        return self.params.J

    @property
    def M(self):
        return self.gamma_hat.shape[0] // self.J

    @property
    def lambdas(self):
        return self.params.lambdas

    def gamma_blocks(self):
        """``J x M`` view of the basis coefficients."""
        return self.gamma_hat.reshape(self.J, self.M)

    def basis_matrix(self, xtilde):
        xtilde = np.asarray(xtilde, dtype=float)
        if xtilde.ndim == 1:
            xtilde = xtilde[:, None]
        if self.M == 0:
            return np.empty((xtilde.shape[0], 0))
        return self.basis(xtilde)

    def weights_at(self, xtilde):
        return weights_at(self, xtilde)

    def base_predictions(self, x):
        if len(self.full_models) != self.J:
            raise StackingError("model has no fitted base models attached")
        return np.column_stack([m.predict(x) for m in self.full_models])

    def predict(self, x, xtilde):
        return predict(self, x, xtilde)


def weights_at(model: CdstModel, xtilde) -> np.ndarray:
    """``m x J`` matrix of ``mu_j + E(xt_i) @ gamma_j``."""
    E = model.basis_matrix(xtilde)
    return model.params.mu[None, :] + E @ model.gamma_blocks().T


def predict(model: CdstModel, x, xtilde) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    w = weights_at(model, xtilde)
    if w.shape[0] != x.shape[0]:
        raise ValueError(f"x has {x.shape[0]} rows, xtilde has {w.shape[0]}")
    return np.sum(w * model.base_predictions(x), axis=1)


def fit_em(y, F, E, cfg: EmConfig | None = None, basis=None) -> CdstModel:
    """Run EM from ``cfg.init`` (or :func:`default_init`) until the L1 change
    in ``(mu, tau2, sigma2)`` drops below ``cfg.tol`` or ``cfg.max_iter``
    iterations pass. Non-convergence is flagged, not raised.

    The returned ``gamma_hat`` is the posterior mean evaluated at the final
    parameter estimate.
    """
    cfg = cfg or EmConfig()
    y = np.asarray(y, dtype=float).reshape(-1)
    F = np.asarray(F, dtype=float)
    E = np.asarray(E, dtype=float)
    if E.ndim == 1:
        E = E[:, None]
    n, J = F.shape
    if len(y) != n or E.shape[0] != n:
        raise ValueError(f"y ({len(y)}), F {F.shape} and E {E.shape} disagree on n")
    if n < J + 1:
        raise ValueError(f"need n >= J + 1, got n={n}, J={J}")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(F)) and np.all(np.isfinite(E))):
        raise ValueError("non-finite inputs to EM")
    M = E.shape[1]
    W = design_matrix(F, E)
    WtW = W.T @ W

    def posterior(p):
        r = y - F @ p.mu
        return _posterior(WtW, W.T @ r, float(r @ r), n, p, M)

    p = cfg.init if cfg.init is not None else default_init(y, F)
    if p.J != J:
        raise ValueError(f"initial parameters have {p.J} models, F has {J}")
    trace = []
    pending = TraceEntry(0, p, float("nan"), None)
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        post, ll = posterior(p)
        trace.append(_with_loglik(pending, ll, cfg))
        try:
            new = m_step(y, F, W, post, cfg.mode, prev=p)
        except ValueError as exc:
            raise StackingError(f"EM iteration {it}: {exc}") from None
        if not np.all(np.isfinite(new.as_vector())):
            raise StackingError(f"EM iteration {it}: NaN in parameter update")
        step = float(np.sum(np.abs(new.as_vector() - p.as_vector())))
        floored = tuple(bool(t <= TAU2_FLOOR) for t in new.tau2) if M else ()
        pending = TraceEntry(it, new, step, None, floored)
        p = new
        if step < cfg.tol:
            converged = True
            break
    post, ll = posterior(p)
    trace.append(_with_loglik(pending, ll, cfg))
    return CdstModel(p, post.m_gamma.copy(), basis=basis, trace=tuple(trace),
                     converged=converged, n_iter=it, posterior=post)


def _with_loglik(entry, ll, cfg):
    return TraceEntry(entry.iteration, entry.params, entry.step,
                      ll if cfg.track_loglik else None, entry.tau2_floored)


def fit_cdst(data: Dataset, specs: Sequence[base_models.BaseModelSpec], basis_spec: BasisSpec,
             folds: int | FoldPlan | None = None, cfg: EmConfig | None = None,
             fold_seed: int = 0) -> CdstModel:
    """Out-of-fold predictions, basis placement, EM, then full-data refits.

    ``folds`` is a fold count (``None`` for leave-one-out) or a prepared
    :class:`~cdst.cv.FoldPlan`.
    """
    if data.y is None:
        raise ValueError("training data needs a response")
    if not isinstance(folds, FoldPlan):
        folds = make_folds(data.n, data.n if folds is None else int(folds), fold_seed)
    oof = build_oof(specs, data, folds)
    basis = build_basis(basis_spec, data.xtilde)
    E = eval_basis(basis, data.xtilde)
    em = fit_em(data.y, oof.F, E, cfg, basis=basis)
    full = tuple(base_models.fit(s, data.x, data.y) for s in specs)
    return CdstModel(em.params, em.gamma_hat, basis, full, em.trace, em.converged, em.n_iter,
                     data.x_names, data.xtilde_names, tuple(s.name for s in specs), em.posterior)
