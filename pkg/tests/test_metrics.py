"""Metric implementations against exhaustive reference computations."""

import numpy as np
import pytest

from bridgeclust import (EvaluationError, PointSet, ami, d_y_mean, fit_lloyd,
                         misclustering_rate, mse, retrieval_mse, winrate)

from oracles import ami_by_enumeration, min_misclustering, winrate_by_scan


class TestMse:
    def test_zero_on_equal(self):
        v = np.random.default_rng(0).standard_normal((5, 3))
        assert mse(v, v) == 0.0

    def test_unit_offset(self):
        v = np.zeros((4, 6))
        assert mse(v + 1.0, v) == 1.0

    def test_dimension_averaging(self):
        pred = np.array([[0.0, 0.0], [0.0, 0.0]])
        truth = np.array([[0.0, 2.0], [np.sqrt(2), np.sqrt(2)]])
        # per-point means {2, 2} -> overall 2
        np.testing.assert_allclose(mse(pred, truth), 2.0)

    def test_empty_rejected(self):
        with pytest.raises(EvaluationError):
            mse(np.empty((0, 2)), np.empty((0, 2)))


class TestRetrievalMse:
    def test_pred_in_pool_equal_truth(self):
        pool = PointSet(points=np.array([[0.0, 0.0], [5.0, 5.0]]), ids=np.arange(2))
        pred = np.array([[5.0, 5.0]])
        assert retrieval_mse(pred, pool, np.array([[5.0, 5.0]])) == 0.0

    def test_singleton_pool(self):
        pool = PointSet(points=np.array([[1.0, 2.0]]), ids=np.arange(1))
        pred = np.array([[100.0, -100.0]])
        assert retrieval_mse(pred, pool, np.array([[1.0, 2.0]])) == 0.0

    def test_snaps_to_wrong_neighbor(self):
        pool = PointSet(points=np.array([[0.0], [1.0], [10.0]]), ids=np.arange(3))
        pred = np.array([[1.4]])   # nearest pool vector is 1.0, truth is 0.0
        truth = np.array([[0.0]])
        nearest = pool.points[np.argmin((pool.points[:, 0] - pred[0, 0]) ** 2)]
        np.testing.assert_allclose(retrieval_mse(pred, pool, truth),
                                   mse(nearest[None, :], truth))
        np.testing.assert_allclose(retrieval_mse(pred, pool, truth), 1.0)

    def test_multi_reference_takes_closest(self):
        pool = PointSet(points=np.array([[0.0], [4.0]]), ids=np.arange(2))
        pred = np.array([[0.1]])
        refs = [np.array([[0.0], [100.0]])]   # two references for the one point
        assert retrieval_mse(pred, pool, refs) == 0.0


class TestAmi:
    def test_identical_partitions(self):
        assert ami([0, 0, 1, 1, 2], [2, 2, 0, 0, 1]) == 1.0

    def test_constant_against_varying(self):
        assert ami([0, 1, 0, 1], [1, 1, 1, 1]) == 0.0

    def test_frozen_example(self):
        # MI = 0, expected MI = ln(2)/3, H = ln(2): AMI = -1/2
        np.testing.assert_allclose(ami([0, 0, 1, 1], [0, 1, 0, 1]), -0.5, atol=1e-12)

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(60):
            n = int(rng.integers(2, 9))
            a = rng.integers(0, 3, size=n)
            b = rng.integers(0, 3, size=n)
            np.testing.assert_allclose(ami(a, b), ami_by_enumeration(a, b),
                                       atol=1e-10, rtol=1e-8)

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(2)
        a = rng.integers(0, 3, size=30)
        b = rng.integers(0, 3, size=30)
        perm = rng.permutation(3)
        np.testing.assert_allclose(ami(perm[a], b), ami(a, b), atol=1e-12)

    def test_upper_bound(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a = rng.integers(0, 3, size=12)
            b = rng.integers(0, 3, size=12)
            assert ami(a, b) <= 1.0 + 1e-12


class TestMisclusteringRate:
    def test_equal_labels(self):
        rate, sigma = misclustering_rate([0, 1, 2, 0], [0, 1, 2, 0], 3)
        assert rate == 0.0
        np.testing.assert_array_equal(sigma, [0, 1, 2])

    def test_three_cycle(self):
        latents = np.array([0, 0, 1, 1, 2, 2])
        cycle = np.array([1, 2, 0])          # cluster c represents latent cycle[c]
        assignments = np.argsort(cycle)[latents]
        rate, sigma = misclustering_rate(assignments, latents, 3)
        assert rate == 0.0
        np.testing.assert_array_equal(sigma[assignments], latents)

    def test_one_flip_in_ten(self):
        latents = np.array([0] * 5 + [1] * 5)
        assignments = latents.copy()
        assignments[0] = 1
        rate, _ = misclustering_rate(assignments, latents, 2)
        assert rate == pytest.approx(0.1)

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(2, 9))
            C = int(rng.integers(1, 4))
            a = rng.integers(0, C, size=n)
            b = rng.integers(0, C, size=n)
            rate, sigma = misclustering_rate(a, b, C)
            assert rate == pytest.approx(min_misclustering(a, b, C))
            # returned permutation achieves the reported rate
            assert (sigma[a] != b).mean() == pytest.approx(rate)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        a = rng.integers(0, 3, size=40)
        b = rng.integers(0, 3, size=40)
        perm = rng.permutation(3)
        assert misclustering_rate(perm[a], b, 3)[0] == misclustering_rate(a, b, 3)[0]


class TestDyMean:
    def test_points_at_centroids(self):
        points = np.array([[0.0, 0.0], [4.0, 4.0]])
        model = fit_lloyd(points, 2, seed=0)
        ps = PointSet(points=points, ids=np.arange(2))
        assert d_y_mean(ps, model) == 0.0

    def test_single_cluster_line(self):
        points = np.array([[-1.0], [1.0]])
        model = fit_lloyd(points, 1, seed=0)
        ps = PointSet(points=points, ids=np.arange(2))
        assert d_y_mean(ps, model) == 1.0

    def test_two_cluster_hand_computation(self):
        points = np.array([[0.0], [2.0], [10.0], [14.0]])
        model = fit_lloyd(points, 2, seed=0)
        ps = PointSet(points=points, ids=np.arange(4))
        # centroids 1 and 12; distances 1,1,2,2
        np.testing.assert_allclose(d_y_mean(ps, model), 1.5)


class TestWinrate:
    def test_half_of_trials(self):
        a = [0.0] * 300 + [2.0] * 300
        b = [1.0] * 600
        rates = winrate({"a": a, "b": b})
        assert rates["a"] == 0.5
        assert rates["b"] == 0.5

    def test_single_model(self):
        assert winrate({"only": [3.0, 4.0]}) == {"only": 1.0}

    def test_full_tie_splits(self):
        rates = winrate({"a": [1.0, 2.0], "b": [1.0, 2.0]})
        assert rates == {"a": 0.5, "b": 0.5}

    def test_simplex_and_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            n = int(rng.integers(1, 9))
            models = {f"m{j}": rng.integers(0, 3, size=n).astype(float).tolist()
                      for j in range(int(rng.integers(1, 5)))}
            rates = winrate(models)
            assert sum(rates.values()) == pytest.approx(1.0)
            expected = winrate_by_scan(models)
            for m in models:
                assert rates[m] == pytest.approx(expected[m])

    def test_length_mismatch(self):
        with pytest.raises(EvaluationError):
            winrate({"a": [1.0], "b": [1.0, 2.0]})
