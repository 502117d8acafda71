import numpy as np
import pytest

from cdst.synth import GpKernelSpec, ScenarioSpec, covariate_mean, generate, gp_sample, spatial_mean


def test_kernel_values():
    k = GpKernelSpec(1.0, 0.5)
    K = k(np.array([[0.0, 0.0], [0.5, 0.0]]))
    np.testing.assert_allclose(K, [[1, np.exp(-1)], [np.exp(-1), 1]])
    k2 = GpKernelSpec(0.09, 0.3)
    np.testing.assert_allclose(k2(np.array([[0.0, 0.0]]), np.array([[0.3, 0.0]])), [[0.09 * np.exp(-1)]])


def test_gp_sample_deterministic_and_shaped():
    loc = np.random.default_rng(0).uniform(-1, 1, (20, 2))
    a = gp_sample(loc, GpKernelSpec(), 3)
    np.testing.assert_array_equal(a, gp_sample(loc, GpKernelSpec(), 3))
    assert gp_sample(loc, GpKernelSpec(), 3, size=4).shape == (4, 20)


def test_gp_sample_duplicate_locations_are_handled():
    loc = np.zeros((3, 2))
    draw = gp_sample(loc, GpKernelSpec(), 0)
    np.testing.assert_allclose(draw, draw[0], atol=1e-3)


def test_covariate_mean_formulas():
    x = np.array([[-0.5, 0.5, 1.0, 0, 0], [0.5, 0.5, 1.0, 0, 0]])
    np.testing.assert_allclose(covariate_mean(1, x), [0.0, 0.5])
    np.testing.assert_allclose(covariate_mean(2, x), [0.5 + 1.5, 1.5 + 0.5])


def test_spatial_mean_scenario_4():
    s = np.array([[0.0, 0.0]])
    x = np.array([[1.0, 0.0, 2.0, 0.0, 0.0]])
    np.testing.assert_allclose(spatial_mean(4, s, x, np.array([0.5])), [1.0 + 1.0 + 4.0])


@pytest.mark.parametrize("family,scenario,cols", [("covariate", 1, 5), ("covariate", 2, 5),
                                                   ("spatial", 1, 7), ("spatial", 4, 7)])
def test_generate_shapes_and_seed(family, scenario, cols):
    spec = ScenarioSpec(family, scenario, n=50, seed=2)
    d = generate(spec)
    assert d.x.shape == (50, cols) and d.xtilde.shape == (50, 2)
    np.testing.assert_array_equal(d.y, generate(spec).y)
    assert not np.array_equal(d.y, generate(ScenarioSpec(family, scenario, n=50, seed=3)).y)
    assert np.all(np.abs(d.xtilde) <= 1)


def test_scenario_validation():
    with pytest.raises(ValueError):
        ScenarioSpec("covariate", 3)
    with pytest.raises(ValueError):
        ScenarioSpec("temporal", 1)
    with pytest.raises(ValueError):
        ScenarioSpec("spatial", 1, n=1)
