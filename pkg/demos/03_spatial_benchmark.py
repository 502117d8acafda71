"""A small Monte Carlo run on the spatial scenarios.

Each replication simulates 400 points, trains on 300 and scores on
the other 100. The ensembles compared are CDST, least-squares stacking
(st), the simple average (sa) and Akaike weights (saic). The base roster
is a quadratic ridge on the features, kNN on the coordinates, ordinary
least squares on everything, and a quadratic in coordinates and
features that acts as a varying-coefficient model.

Replications are kept to five so the script runs in well under a minute.
Pass a larger count on the command line for steadier means.
"""

import sys

from cdst.basis import BasisSpec
from cdst.bench import BenchPlan, format_summary, run_bench
from cdst.synth import ScenarioSpec

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 5

for scenario in (1, 3, 4):
    plan = BenchPlan(ScenarioSpec("spatial", scenario, n=400), replications=reps,
                     basis=BasisSpec("kmeans", M=10, bandwidths=1.0), folds=10)
    result = run_bench(plan)
    print(f"\nspatial scenario {scenario}, {reps} replications, test MSE")
    print(format_summary(result.summaries()))
    mu = sum(rr.weights["cdst"] for rr in result.replications) / reps
    names = [s.name for s in plan.roster]
    print("mean CDST intercept weights:", ", ".join(f"{n} {v:.3f}" for n, v in zip(names, mu)))
