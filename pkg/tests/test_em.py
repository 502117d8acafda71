import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdst.base_models import BaseModelSpec
from cdst.basis import BasisEvaluator, BasisSpec
from cdst.dataset import Dataset
from cdst.em import (CdstModel, EmConfig, PosteriorGamma, StackParams, design_matrix, e_step,
                     fit_cdst, fit_em, m_step, marginal_loglik)
from cdst._linalg import FactorizationError, spd_factor
from oracles import dense_e_step, dense_marginal_loglik, random_instance


def test_design_matrix_layout():
    W = design_matrix([[1, 2], [3, 4]], [[5, 6], [7, 8]])
    np.testing.assert_array_equal(W, [[5, 6, 10, 12], [21, 24, 28, 32]])


def test_e_step_scalar():
    post = e_step([1.0], [[1.0]], [[1.0]], StackParams([0.0], [1.0], 1.0))
    np.testing.assert_allclose(post.m_gamma, [0.5])
    np.testing.assert_allclose(post.S_gamma, [[0.5]])


def test_m_step_worked_example():
    y, F, W = np.array([3.0, 1.0]), np.array([[1.0], [2.0]]), np.array([[1.0], [2.0]])
    post = PosteriorGamma(np.array([1.0]), np.array([[0.5]]))
    p = m_step(y, F, W, post, "paper")
    np.testing.assert_allclose(p.mu, [0.0], atol=1e-14)
    assert p.sigma2 == pytest.approx(2.5)
    np.testing.assert_allclose(p.tau2, [1.5])
    assert m_step(y, F, W, post, "exact").sigma2 == pytest.approx(3.75)


@pytest.mark.parametrize("seed", range(5))
def test_e_step_and_loglik_match_dense(seed):
    rng = np.random.default_rng(seed)
    y, F, E = random_instance(rng, 25, 3, 4)
    p = StackParams(rng.normal(size=3), rng.uniform(0.2, 3, 3), 0.7)
    m, S = dense_e_step(y, F, E, p.mu, p.tau2, p.sigma2)
    W = design_matrix(F, E)
    post = e_step(y, F, W, p)
    np.testing.assert_allclose(post.m_gamma, m, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(post.S_gamma, S, rtol=1e-9, atol=1e-12)
    assert marginal_loglik(y, F, W, p) == pytest.approx(dense_marginal_loglik(y, F, W, p.mu, p.tau2, p.sigma2),
                                                       rel=1e-10)


def test_em_without_basis_is_least_squares():
    rng = np.random.default_rng(1)
    F = rng.normal(size=(20, 3))
    y = F @ [0.2, 0.5, 0.3] + 0.1 * rng.normal(size=20)
    model = fit_em(y, F, np.empty((20, 0)))
    assert model.converged
    np.testing.assert_allclose(model.params.mu, np.linalg.lstsq(F, y, rcond=None)[0], rtol=1e-10)
    assert model.M == 0


def test_exact_mode_loglik_monotone():
    y, F, E = random_instance(np.random.default_rng(7), 40, 2, 5)
    model = fit_em(y, F, E, EmConfig(mode="exact", max_iter=300))
    ll = np.array([t.loglik for t in model.trace])
    assert np.all(np.diff(ll) >= -1e-8 * np.abs(ll[:-1]))


def test_trace_steps_are_l1_distances():
    y, F, E = random_instance(np.random.default_rng(2), 30, 2, 3)
    model = fit_em(y, F, E, EmConfig(max_iter=20))
    tr = model.trace
    assert len(tr) == model.n_iter + 1 and np.isnan(tr[0].step)
    for a, b in zip(tr, tr[1:]):
        assert b.step == pytest.approx(np.abs(b.params.as_vector() - a.params.as_vector()).sum())


def test_max_iter_one_flags_not_converged():
    y, F, E = random_instance(np.random.default_rng(3), 30, 2, 3)
    model = fit_em(y, F, E, EmConfig(max_iter=1))
    assert not model.converged and model.n_iter == 1


def test_duplicated_predictions_rescued_by_jitter():
    rng = np.random.default_rng(0)
    f = rng.normal(size=(15, 1))
    model = fit_em(rng.normal(size=15), np.hstack([f, f]), np.ones((15, 1)), EmConfig(max_iter=50))
    assert np.all(np.isfinite(model.params.mu))


def test_indefinite_matrix_exhausts_jitter():
    with pytest.raises(FactorizationError):
        spd_factor(np.diag([1.0, -1.0]))
    (c, _), jitter = spd_factor(np.diag([1.0, 0.0]))
    assert 0 < jitter <= 1e-2


def test_exact_fit_instance():
    y, F, E = random_instance(np.random.default_rng(11), 30, 1, 3)
    model = fit_em(F[:, 0], F, E)
    assert abs(model.params.mu[0] - 1) < 1e-3
    assert np.linalg.norm(model.gamma_hat) < 1e-3


def test_bad_config():
    with pytest.raises(ValueError):
        EmConfig(tol=0)
    with pytest.raises(ValueError):
        EmConfig(mode="fast")
    with pytest.raises(ValueError):
        StackParams([0.0], [0.0], 1.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_weights_sum_field_is_affine_in_basis(seed):
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-1, 1, (3, 1))
    ev = BasisEvaluator(centers, ((0,),), (0.5,))
    mu, gamma = rng.normal(size=2), rng.normal(size=6)
    model = CdstModel(StackParams(mu, np.ones(2), 1.0), gamma, basis=ev)
    x = rng.uniform(-1, 1, (5, 1))
    E = ev(x)
    np.testing.assert_allclose(model.weights_at(x), mu + E @ gamma.reshape(2, 3).T)


def test_weights_two_point_example():
    ev = BasisEvaluator(np.array([[0.0]]), ((0,),), (1.0,))
    model = CdstModel(StackParams([0.25, 0.75], [1.0, 1.0], 1.0), np.array([1.0, -1.0]), basis=ev)
    w = model.weights_at(np.array([[0.0], [1.0]]))
    np.testing.assert_allclose(w, [[1.25, -0.25], [0.25 + np.exp(-0.5), 0.75 - np.exp(-0.5)]])


def test_fit_cdst_end_to_end_predicts():
    rng = np.random.default_rng(5)
    x = rng.uniform(-1, 1, (80, 2))
    y = np.where(x[:, 0] < 0, x[:, 1], -x[:, 1]) + 0.1 * rng.normal(size=80)
    data = Dataset(x, x[:, :1], y, ("a", "b"), ("a",))
    specs = [BaseModelSpec("regional_ols", column=0, side="lt", name="west"),
             BaseModelSpec("regional_ols", column=0, side="ge", name="east")]
    model = fit_cdst(data, specs, BasisSpec(M=4), folds=5)
    assert model.model_names == ("west", "east")
    yhat = model.predict(x, x[:, :1])
    assert np.mean((yhat - y) ** 2) < np.var(y)
    w = model.weights_at(np.array([[-0.9], [0.9]]))
    assert w[0, 0] > w[1, 0] and w[1, 1] > w[0, 1]
