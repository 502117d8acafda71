"""Command-line entry point: ``cdst {simulate,fit,predict,weights,bench}``.

Exit codes: 0 success, 1 other error, 2 configuration error, 3 numerical
or fitting error.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from dataclasses import replace

import numpy as np

from . import bench as bench_mod
from . import io
from .base_models import ModelError
from .basis import BasisError
from .cv import FoldError, OofFitError
from .dataset import DataError, Roles, atomic_write_rows, read_csv, split, write_csv
from .em import StackingError, fit_cdst
from .metrics import ape, mse
from .synth import ScenarioSpec, generate
from ._linalg import FactorizationError

DEFAULT_SEED = 0

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_FIT = 0, 1, 2, 3

log = logging.getLogger("cdst")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def cmd_simulate(args):
    try:
        spec = ScenarioSpec(args.family, args.scenario, n=args.n, seed=args.seed, noise_sd=args.noise_sd,
                            gp_range=args.gp_range, rho=args.rho)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_CONFIG) from None
    data = generate(spec)
    write_csv(data, args.out)
    print(f"wrote {data.n} rows to {args.out}")


def cmd_fit(args):
    cfg = io.RunConfig.load(args.config)
    data_path = args.data or cfg.data_path
    model_out = args.model_out or cfg.model_out
    if not data_path:
        raise CliError("no data file given (--data or config data.path)", EXIT_CONFIG)
    if not model_out:
        raise CliError("no model output path given (--model-out or config output.model)", EXIT_CONFIG)
    data = read_csv(data_path, cfg.roles)
    test = None
    if cfg.split:
        sp = split(data.n, cfg.split["train_fraction"], cfg.split.get("seed", DEFAULT_SEED))
        data, test = data.subset(sp.train_indices), data.subset(sp.test_indices)
    model = fit_cdst(data, cfg.models, cfg.basis, cfg.folds, cfg.em, cfg.fold_seed)
    io.save_model(model, model_out)
    print(f"converged={str(model.converged).lower()} iterations={model.n_iter}")
    print(f"sigma2={model.params.sigma2:.10g}")
    for name, lam in zip(model.model_names, model.lambdas):
        print(f"lambda[{name}]={lam:.10g}")
    if test is not None:
        print(f"test_mse={mse(test.y, model.predict(test.x, test.xtilde)):.10g}")


def cmd_predict(args):
    model = io.load_model(args.model)
    roles = Roles(args.response, model.x_names, model.xtilde_names)
    data = read_csv(args.data, roles, require_response=False)
    yhat = model.predict(data.x, data.xtilde)
    atomic_write_rows(args.out, ["row", "yhat"], [[i, float(v)] for i, v in enumerate(yhat)])
    if data.y is not None:
        print(f"mse={mse(data.y, yhat):.10g}")
        if np.all(data.y > 0):
            print(f"mean_ape={np.mean(ape(data.y, yhat)):.10g}")


def parse_grid(text, dim):
    axes = []
    for part in text.split(","):
        try:
            lo, hi, count = part.split(":")
            lo, hi, count = float(lo), float(hi), int(count)
        except ValueError:
            raise CliError(f"bad grid axis {part!r}; expected lo:hi:count", EXIT_CONFIG) from None
        if count < 1:
            raise CliError(f"grid axis {part!r} needs count >= 1", EXIT_CONFIG)
        axes.append(np.linspace(lo, hi, count) if count > 1 else np.array([lo]))
    if len(axes) != dim:
        raise CliError(f"grid has {len(axes)} axes, model weight covariates have {dim}", EXIT_CONFIG)
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, dim)


def cmd_weights(args):
    model = io.load_model(args.model)
    pts = parse_grid(args.grid, len(model.xtilde_names))
    w = model.weights_at(pts)
    names = list(model.model_names) or [f"f{j + 1}" for j in range(model.J)]
    header = list(model.xtilde_names) + [f"w_{n}" for n in names]
    atomic_write_rows(args.out, header, np.column_stack([pts, w]))
    print(f"wrote {len(pts)} grid points to {args.out}")


def cmd_bench(args):
    plan = io.bench_plan_from_config(io.load_json(args.plan))
    if args.replications is not None:
        plan = replace(plan, replications=args.replications)
    result = bench_mod.run_bench(plan, workers=args.workers)
    result.write_csv(args.out)
    if args.weights_out:
        result.write_weights_csv(args.weights_out)
    print(bench_mod.format_summary(result.summaries()))
    for rr in result.replications:
        for m, msg in rr.failures.items():
            print(f"replication {rr.replication} {m} failed: {msg}", file=sys.stderr)
    if result.all_failed:
        raise CliError("all replications failed", EXIT_FIT)


def build_parser():
    p = argparse.ArgumentParser(prog="cdst", description="Covariate-dependent stacking.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="write a simulated scenario dataset to CSV")
    s.add_argument("--family", required=True, choices=["covariate", "spatial"])
    s.add_argument("--scenario", required=True, type=int)
    s.add_argument("--n", type=int, default=400)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--noise-sd", type=float, default=0.7)
    s.add_argument("--gp-range", type=float, default=0.5)
    s.add_argument("--rho", type=float, default=0.2)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit a CDST model from a JSON config")
    f.add_argument("--config", required=True)
    f.add_argument("--data")
    f.add_argument("--model-out")
    f.set_defaults(func=cmd_fit)

    pr = sub.add_parser("predict", help="predict with a fitted model file")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.add_argument("--response", default="y", help="response column, used for scoring when present")
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_predict)

    w = sub.add_parser("weights", help="evaluate the weight fields on a grid")
    w.add_argument("--model", required=True)
    w.add_argument("--grid", required=True, help="per-axis lo:hi:count, comma separated")
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_weights)

    b = sub.add_parser("bench", help="run a Monte Carlo benchmark plan")
    b.add_argument("--plan", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--replications", type=int)
    b.add_argument("--weights-out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except io.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StackingError, OofFitError, ModelError, FactorizationError, BasisError, FoldError) as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (DataError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
