import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cdst.basis import BasisError, BasisEvaluator, BasisSpec, build_basis, eval_basis, kmeans, kmeans_fit
from oracles import best_partition_means


def test_kmeans_two_clusters():
    pts = np.array([[0.0], [0.1], [10.0], [10.1]])
    c = np.sort(kmeans(pts, 2, seed=0)[:, 0])
    np.testing.assert_allclose(c, [0.05, 10.05])


def test_kmeans_single_cluster_is_mean():
    pts = np.random.default_rng(0).normal(size=(30, 2))
    np.testing.assert_allclose(kmeans(pts, 1)[0], pts.mean(axis=0))


def test_kmeans_matches_exhaustive_optimum_on_separated_data():
    rng = np.random.default_rng(4)
    pts = np.concatenate([rng.normal(0, 0.1, (3, 2)), rng.normal(5, 0.1, (3, 2)), rng.normal([0, 5], 0.1, (2, 2))])
    best, centers = best_partition_means(pts, 3)
    res = kmeans_fit(pts, 3, seed=1)
    assert res.wcss[-1] == pytest.approx(best, rel=1e-10)
    got = res.centers[np.lexsort(res.centers.T[::-1])]
    want = centers[np.lexsort(centers.T[::-1])]
    np.testing.assert_allclose(got, want, atol=1e-12)


def test_kmeans_wcss_non_increasing():
    pts = np.random.default_rng(1).uniform(-1, 1, (200, 2))
    res = kmeans_fit(pts, 10, seed=3)
    assert res.converged
    assert all(b <= a + 1e-12 for a, b in zip(res.wcss, res.wcss[1:]))


def test_kmeans_deterministic():
    pts = np.random.default_rng(2).uniform(size=(50, 3))
    np.testing.assert_array_equal(kmeans(pts, 5, seed=9), kmeans(pts, 5, seed=9))


@pytest.mark.parametrize("k", [0, -1, 4])
def test_kmeans_bad_k(k):
    pts = np.array([[0.0], [0.0], [1.0], [2.0]])  # three distinct points
    with pytest.raises(BasisError):
        kmeans(pts, k)


def test_eval_basis_at_center_and_one_bandwidth_away():
    ev = BasisEvaluator(np.array([[0.0, 0.0]]), ((0, 1),), (1.0,))
    E = eval_basis(ev, np.array([[0.0, 0.0], [1.0, 0.0], [0.0, np.sqrt(2)]]))
    np.testing.assert_allclose(E[:, 0], [1.0, np.exp(-0.5), np.exp(-1.0)])


def test_product_basis_is_product_of_block_kernels():
    ev = BasisEvaluator(np.array([[0.0, 0.0, 0.0]]), ((0, 1), (2,)), (1.0, 2.0))
    x = np.array([[1.0, 1.0, 2.0]])
    np.testing.assert_allclose(eval_basis(ev, x)[0, 0], np.exp(-1.0) * np.exp(-0.5))


@settings(max_examples=40, deadline=None)
@given(arrays(float, (7, 2), elements=st.floats(-50, 50)), st.floats(0.05, 5))
def test_basis_values_in_unit_interval(x, h):
    ev = BasisEvaluator(np.array([[0.0, 0.0], [1.0, -1.0]]), ((0, 1),), (h,))
    E = eval_basis(ev, x)
    assert np.all((E >= 0) & (E <= 1))


def test_build_basis_zero_and_grid():
    pts = np.random.default_rng(0).uniform(-1, 1, (40, 2))
    assert build_basis(BasisSpec(M=0), pts).M == 0
    ev = build_basis(BasisSpec("grid", 9), pts)
    assert ev.M == 9
    np.testing.assert_allclose(ev.centers.min(axis=0), pts.min(axis=0))
    with pytest.raises(BasisError):
        build_basis(BasisSpec("grid", 8), pts)


def test_build_basis_product_ordering():
    rng = np.random.default_rng(3)
    pts = np.column_stack([rng.uniform(-1, 1, (60, 2)), rng.uniform(0, 10, 60)])
    spec = BasisSpec("product", 6, (0.5, 2.0), blocks=((0, 1), (2,)), block_counts=(3, 2))
    ev = build_basis(spec, pts)
    assert ev.M == 6
    # spatial center varies slowest
    np.testing.assert_array_equal(ev.centers[0, :2], ev.centers[1, :2])
    np.testing.assert_array_equal(ev.centers[0, 2], ev.centers[2, 2])


def test_basis_spec_validation():
    with pytest.raises(BasisError):
        BasisSpec("product", 6, (1.0,), blocks=((0,),), block_counts=(5,))
    with pytest.raises(BasisError):
        BasisSpec(bandwidths=(-1.0,))
    with pytest.raises(BasisError):
        BasisEvaluator(np.zeros((2, 2)), ((0,),), (1.0,))
