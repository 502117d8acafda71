"""Monte Carlo comparison of CDST against constant-weight ensembles.

Replication ``r`` draws its dataset, split and folds from ``master_seed + r``
alone, so results do not depend on which other replications run or on how
many worker processes share the work.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import base_models
from .base_models import BaseModelSpec
from .baselines import saic, simple_average, vanilla_stack
from .basis import BasisSpec, build_basis, eval_basis
from .cv import build_oof, make_folds
from .dataset import atomic_write_rows, split
from .em import CdstModel, EmConfig, fit_em
from .metrics import mse, summarize
from .synth import ScenarioSpec, generate

log = logging.getLogger(__name__)

ENSEMBLES = ("cdst", "st", "sa", "saic")


def covariate_roster():
    """Stand-ins for linear regression, an additive model, random forest and GP regression."""
    return (
        BaseModelSpec("ols", name="linear"),
        BaseModelSpec("poly_ridge", degree=2, alpha=1.0, name="quadratic"),
        BaseModelSpec("knn", (0, 1, 2), k=10, name="knn"),
        BaseModelSpec("knn", (0, 1), k=15, name="knn_x12"),
    )


def spatial_roster():
    """Stand-ins for an additive model, spatial random forest, spatial lag model and GWR.

    Column order of the spatial family is ``(s1, s2, x1, ..., x5)``.
    """
    return (
        BaseModelSpec("poly_ridge", (2, 3, 4, 5, 6), degree=2, alpha=1.0, name="quadratic"),
        BaseModelSpec("knn", (0, 1), k=10, name="knn_space"),
        BaseModelSpec("ols", name="linear"),
        BaseModelSpec("poly_ridge", (0, 1, 2, 3, 4), degree=2, alpha=1.0, name="varying_coef"),
    )


def default_roster(family):
    return covariate_roster() if family == "covariate" else spatial_roster()


@dataclass(frozen=True)
class BenchPlan:
    scenario: ScenarioSpec
    replications: int = 20
    roster: tuple = ()
    basis: BasisSpec = field(default_factory=BasisSpec)
    folds: int | None = None  # None: leave-one-out
    methods: tuple = ENSEMBLES
    master_seed: int = 0
    train_fraction: float = 0.75
    em: EmConfig = field(default_factory=EmConfig)

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.methods:
            raise ValueError("methods must be non-empty")
        if not self.roster:
            object.__setattr__(self, "roster", default_roster(self.scenario.family))
        object.__setattr__(self, "roster", tuple(self.roster))
        object.__setattr__(self, "methods", tuple(self.methods))
        names = [s.name for s in self.roster]
        if len(set(names)) != len(names):
            raise ValueError(f"roster model names must be unique, got {names}")
        unknown = [m for m in self.methods if m not in ENSEMBLES and m not in names]
        if unknown:
            raise ValueError(f"unknown methods {unknown}; use {ENSEMBLES} or roster names {names}")


@dataclass
class ReplicationResult:
    replication: int
    mse: dict  # method -> value, in plan method order
    failures: dict  # method -> message
    weights: dict = field(default_factory=dict)  # method -> constant weights (cdst: mu)
    model: CdstModel | None = None


def run_replication(plan: BenchPlan, r: int, keep_model=False) -> ReplicationResult:
    seed = plan.master_seed + r
    out = ReplicationResult(r, {}, {})
    try:
        data = generate(replace(plan.scenario, seed=seed))
        sp = split(data.n, plan.train_fraction, seed)
        train, test = data.subset(sp.train_indices), data.subset(sp.test_indices)
        K = train.n if plan.folds is None else plan.folds
        oof = build_oof(plan.roster, train, make_folds(train.n, K, seed))
        full = [base_models.fit(s, train.x, train.y) for s in plan.roster]
        P = np.column_stack([m.predict(test.x) for m in full])
    except Exception as exc:
        log.warning("replication %d failed: %s", r, exc)
        for m in plan.methods:
            out.failures[m] = f"{type(exc).__name__}: {exc}"
        return out

    names = [s.name for s in plan.roster]
    for method in plan.methods:
        try:
            if method == "cdst":
                basis = build_basis(plan.basis, train.xtilde)
                em = fit_em(train.y, oof.F, eval_basis(basis, train.xtilde), plan.em, basis=basis)
                model = CdstModel(em.params, em.gamma_hat, basis, tuple(full), em.trace,
                                  em.converged, em.n_iter, train.x_names, train.xtilde_names,
                                  tuple(names))
                yhat = np.sum(model.weights_at(test.xtilde) * P, axis=1)
                out.weights[method] = model.params.mu
                if keep_model:
                    out.model = model
            elif method in ("st", "sa", "saic"):
                if method == "st":
                    cw = vanilla_stack(train.y, oof.F)
                elif method == "sa":
                    cw = simple_average(len(names))
                else:
                    cw = saic([base_models.aic(m) if m.spec.kind in base_models.LIKELIHOOD_KINDS else None
                               for m in full])
                yhat = P @ cw.w
                out.weights[method] = cw.w
            else:
                yhat = P[:, names.index(method)]
            out.mse[method] = mse(test.y, yhat)
        except Exception as exc:
            log.warning("replication %d, method %s failed: %s", r, method, exc)
            out.failures[method] = f"{type(exc).__name__}: {exc}"
    return out


def _run_one(args):
    plan, r = args
    return run_replication(plan, r)


@dataclass
class BenchResult:
    plan: BenchPlan
    replications: list

    def summaries(self) -> dict:
        out = {}
        for m in self.plan.methods:
            vals = [rr.mse[m] for rr in self.replications if m in rr.mse]
            fails = sum(m in rr.failures for rr in self.replications)
            out[m] = summarize(m, vals, fails)
        return out

    def rows(self):
        sc = self.plan.scenario
        for rr in self.replications:
            for m in self.plan.methods:
                if m in rr.mse:
                    yield [sc.family, sc.scenario, rr.replication, m, rr.mse[m]]

    def write_csv(self, path):
        atomic_write_rows(path, ["family", "scenario", "replication", "method", "mse"], self.rows())

    def write_weights_csv(self, path):
        sc = self.plan.scenario
        names = [s.name for s in self.plan.roster]
        rows = [[sc.family, sc.scenario, rr.replication, m, names[j], float(w[j])]
                for rr in self.replications for m, w in rr.weights.items() for j in range(len(names))]
        atomic_write_rows(path, ["family", "scenario", "replication", "method", "model", "weight"], rows)

    @property
    def all_failed(self):
        return all(not rr.mse for rr in self.replications)


def run_bench(plan: BenchPlan, workers=1) -> BenchResult:
    jobs = [(plan, r) for r in range(plan.replications)]
    if workers <= 1:
        results = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    return BenchResult(plan, results)


def format_summary(summaries: dict) -> str:
    lines = [f"{'method':<14}{'mean':>12}{'sd':>12}{'count':>7}{'failed':>8}"]
    for s in summaries.values():
        lines.append(f"{s.method:<14}{s.mean:>12.5f}{s.sd:>12.5f}{s.count:>7}{s.failures:>8}")
    return "\n".join(lines)
