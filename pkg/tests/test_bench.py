import numpy as np
import pytest

from cdst.base_models import BaseModelSpec
from cdst.basis import BasisSpec
from cdst.bench import BenchPlan, format_summary, run_bench, run_replication
from cdst.synth import ScenarioSpec


def small_plan(**kw):
    base = dict(scenario=ScenarioSpec("covariate", 2, n=60), replications=2, basis=BasisSpec(M=4), folds=5)
    base.update(kw)
    return BenchPlan(**base)


def test_replication_scores_every_method():
    rr = run_replication(small_plan(), 0, keep_model=True)
    assert not rr.failures
    assert list(rr.mse) == ["cdst", "st", "sa", "saic"]
    assert all(v > 0 for v in rr.mse.values())
    assert rr.model is not None and rr.model.J == 4
    np.testing.assert_allclose(rr.weights["sa"], 0.25)


def test_single_model_methods():
    plan = small_plan(methods=("linear", "sa"))
    rr = run_replication(plan, 1)
    assert set(rr.mse) == {"linear", "sa"}


def test_replication_independent_of_order():
    plan = small_plan(replications=3)
    full = run_bench(plan)
    alone = run_replication(plan, 2)
    assert full.replications[2].mse == alone.mse


def test_failed_method_is_recorded_not_raised():
    roster = (BaseModelSpec("ols", name="a"), BaseModelSpec("ols", name="b"))
    plan = small_plan(roster=roster, methods=("cdst", "saic", "a"), basis=BasisSpec(M=100))
    rr = run_replication(plan, 0)
    assert "cdst" in rr.failures and "a" in rr.mse


def test_summary_and_csv(tmp_path):
    res = run_bench(small_plan())
    s = res.summaries()
    assert s["cdst"].count == 2
    res.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "family,scenario,replication,method,mse" and len(lines) == 1 + 2 * 4
    assert "cdst" in format_summary(s)


def test_plan_validation():
    with pytest.raises(ValueError):
        small_plan(replications=0)
    with pytest.raises(ValueError):
        small_plan(methods=("boosting",))
