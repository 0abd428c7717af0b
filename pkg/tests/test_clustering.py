"""Clustering fitters against analytic cases and brute-force partitions."""

import numpy as np
import pytest

from bridgeclust import (NumericError, PointSet, assign, assign_many,
                         fit_balanced, fit_lloyd, fit_minibatch, kmeanspp_init)

from oracles import best_balanced_sse, best_sse_partition


def _blobs(centers, per_blob, sigma, seed, d=2):
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=float)
    points = np.vstack([c + sigma * rng.standard_normal((per_blob, d)) for c in centers])
    labels = np.repeat(np.arange(len(centers)), per_blob)
    return points, labels


class TestKmeansppInit:
    def test_c_equals_n_uses_every_point(self):
        points = np.arange(6, dtype=float).reshape(6, 1) * 10
        seeds = kmeanspp_init(points, 6, seed=0)
        assert sorted(seeds[:, 0].tolist()) == sorted(points[:, 0].tolist())

    def test_c_one_is_a_data_point(self):
        points = np.random.default_rng(1).standard_normal((10, 3))
        seeds = kmeanspp_init(points, 1, seed=2)
        assert any(np.array_equal(seeds[0], p) for p in points)

    def test_two_far_blobs_covered(self):
        # separation 100 sigma: D^2 weighting should cover both blobs
        # essentially always.
        points, _ = _blobs([[0, 0], [100, 0]], per_blob=20, sigma=1.0, seed=3)
        hit = 0
        for s in range(1000):
            seeds = kmeanspp_init(points, 2, seed=s)
            sides = set(seeds[:, 0] > 50)
            hit += sides == {True, False}
        assert hit >= 999

    def test_c_too_large(self):
        with pytest.raises(ValueError):
            kmeanspp_init(np.zeros((3, 2)), 4, seed=0)


class TestFitLloyd:
    def test_two_exact_blobs(self):
        points = np.vstack([np.zeros((5, 2)), np.full((5, 2), 10.0)])
        model = fit_lloyd(points, 2, seed=0)
        got = sorted(model.centroids.tolist())
        assert got == [[0.0, 0.0], [10.0, 10.0]]
        assert model.inertia == 0.0

    def test_c_one_is_global_mean(self):
        rng = np.random.default_rng(4)
        points = rng.standard_normal((20, 3))
        model = fit_lloyd(points, 1, seed=0)
        np.testing.assert_allclose(model.centroids[0], points.mean(axis=0), atol=1e-12)
        expected = ((points - points.mean(axis=0)) ** 2).sum()
        np.testing.assert_allclose(model.inertia, expected, rtol=1e-12)

    def test_line_instance_matches_bruteforce(self):
        points = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
        model = fit_lloyd(points, 2, seed=0)
        assert sorted(model.centroids[:, 0].tolist()) == [1.0, 11.0]
        np.testing.assert_allclose(model.inertia, best_sse_partition(points, 2), rtol=1e-12)

    def test_small_instances_reach_bruteforce_optimum(self):
        # restarted Lloyd attains the global SSE optimum on tiny instances
        rng = np.random.default_rng(5)
        for case in range(20):
            n = int(rng.integers(3, 9))
            points = rng.standard_normal((n, 2))
            model = fit_lloyd(points, 2, seed=case, restarts=50)
            target = best_sse_partition(points, 2)
            assert model.inertia <= target + 1e-9

    def test_monotone_inertia_trace(self):
        points, _ = _blobs([[0, 0], [4, 0], [0, 4]], per_blob=30, sigma=1.5, seed=6)
        model = fit_lloyd(points, 3, seed=1, restarts=3)
        trace = np.asarray(model.inertia_trace)
        assert (np.diff(trace) <= 1e-9).all()

    def test_assignment_consistency(self):
        points, _ = _blobs([[0, 0], [6, 0]], per_blob=25, sigma=1.0, seed=7)
        model = fit_lloyd(points, 2, seed=2)
        again = assign_many(model, points)
        np.testing.assert_array_equal(again, model.assignments)

    def test_seed_determinism(self):
        points, _ = _blobs([[0, 0], [5, 5]], per_blob=20, sigma=1.0, seed=8)
        a = fit_lloyd(points, 2, seed=9)
        b = fit_lloyd(points, 2, seed=9)
        np.testing.assert_array_equal(a.centroids, b.centroids)
        np.testing.assert_array_equal(a.assignments, b.assignments)
        assert a.inertia == b.inertia

    def test_nonfinite_rejected(self):
        points = np.array([[0.0], [np.nan]])
        with pytest.raises(NumericError):
            fit_lloyd(points, 1, seed=0)

    def test_accepts_pointset(self):
        ps = PointSet(points=np.array([[0.0], [1.0]]), ids=np.arange(2))
        model = fit_lloyd(ps, 1, seed=0)
        np.testing.assert_allclose(model.centroids[0], [0.5])


class TestFitBalanced:
    def test_line_pairs(self):
        points = np.array([[0.0], [1.0], [10.0], [11.0]])
        model = fit_balanced(points, 2, seed=0)
        np.testing.assert_allclose(model.inertia, best_balanced_sse(points, 2), rtol=1e-12)
        assert sorted(model.centroids[:, 0].tolist()) == [0.5, 10.5]

    def test_sizes_differ_by_at_most_one(self):
        rng = np.random.default_rng(10)
        for case in range(10):
            n = int(rng.integers(5, 20))
            C = int(rng.integers(2, 5))
            points = rng.standard_normal((n, 2))
            model = fit_balanced(points, C, seed=case, restarts=2)
            sizes = np.bincount(model.assignments, minlength=C)
            assert sizes.max() - sizes.min() <= 1

    def test_five_points_two_clusters(self):
        points = np.random.default_rng(11).standard_normal((5, 2))
        model = fit_balanced(points, 2, seed=0)
        sizes = sorted(np.bincount(model.assignments, minlength=2).tolist())
        assert sizes == [2, 3]

    def test_identical_points_forced_split(self):
        points = np.ones((6, 2))
        inertias = {fit_balanced(points, 2, seed=s).inertia for s in range(5)}
        assert len(inertias) == 1
        for s in range(5):
            sizes = np.bincount(fit_balanced(points, 2, seed=s).assignments, minlength=2)
            np.testing.assert_array_equal(sorted(sizes.tolist()), [3, 3])

    def test_matches_bruteforce_on_small_instances(self):
        rng = np.random.default_rng(12)
        for case in range(10):
            n = int(rng.integers(4, 9))
            points = rng.standard_normal((n, 1))
            model = fit_balanced(points, 2, seed=case, restarts=20)
            assert model.inertia <= best_balanced_sse(points, 2) + 1e-9


class TestFitMinibatch:
    def test_full_batch_matches_lloyd_partition(self):
        points, _ = _blobs([[0, 0], [10, 10]], per_blob=30, sigma=1.0, seed=13)
        mb = fit_minibatch(points, 2, seed=3, batch=len(points))
        ll = fit_lloyd(points, 2, seed=3)
        # same partition up to label swap, centroids close
        agree = (mb.assignments == ll.assignments).mean()
        assert agree in (0.0, 1.0) or min(agree, 1 - agree) == 0.0
        mb_sorted = np.asarray(sorted(mb.centroids.tolist()))
        ll_sorted = np.asarray(sorted(ll.centroids.tolist()))
        np.testing.assert_allclose(mb_sorted, ll_sorted, atol=0.1)

    def test_three_blobs_recovered(self):
        hits = 0
        for s in range(100):
            points, labels = _blobs([[0, 0], [20, 0], [0, 20]], per_blob=20,
                                    sigma=1.0, seed=500 + s)
            model = fit_minibatch(points, 3, seed=s, batch=32)
            ll = fit_lloyd(points, 3, seed=s)
            # same partition as Lloyd, up to relabeling
            remap = {}
            ok = True
            for a, b in zip(model.assignments, ll.assignments):
                if a in remap and remap[a] != b:
                    ok = False
                    break
                remap[a] = b
            hits += ok and len(set(remap.values())) == 3
        assert hits >= 95

    def test_c_one_converges_to_mean(self):
        rng = np.random.default_rng(14)
        points = rng.standard_normal((50, 2))
        model = fit_minibatch(points, 1, seed=0, batch=10, max_iter=200)
        assert (model.assignments == 0).all()
        np.testing.assert_allclose(model.centroids[0], points.mean(axis=0), atol=0.3)

    def test_bad_batch(self):
        with pytest.raises(ValueError):
            fit_minibatch(np.zeros((4, 1)), 1, seed=0, batch=5)


class TestAssign:
    def test_exact_centroid(self):
        model = fit_lloyd(np.array([[0.0], [10.0], [20.0]]), 3, seed=0)
        centroid_2 = model.centroids[2]
        assert assign(model, centroid_2) == 2

    def test_tie_goes_to_lowest_index(self):
        from bridgeclust.clustering import ClusterModel
        model = ClusterModel(centroids=np.array([[0.0, 0.0], [2.0, 0.0]]),
                             assignments=None, inertia=0.0, algo="lloyd")
        assert assign(model, np.array([1.0, 0.0])) == 0

    def test_simple_case(self):
        from bridgeclust.clustering import ClusterModel
        model = ClusterModel(centroids=np.array([[0.0, 0.0], [5.0, 0.0]]),
                             assignments=None, inertia=0.0, algo="lloyd")
        assert assign(model, np.array([1.0, 0.0])) == 0

    def test_dimension_mismatch(self):
        model = fit_lloyd(np.zeros((3, 2)), 1, seed=0)
        with pytest.raises(Exception):
            assign(model, np.array([1.0, 2.0, 3.0]))


class TestSerialization:
    def test_json_roundtrip(self, tmp_path):
        points, _ = _blobs([[0, 0], [8, 8]], per_blob=10, sigma=0.5, seed=15)
        model = fit_lloyd(points, 2, seed=0)
        path = tmp_path / "model.json"
        model.save(path)
        from bridgeclust.clustering import ClusterModel
        back = ClusterModel.load(path)
        np.testing.assert_array_equal(back.centroids, model.centroids)
        assert back.algo == model.algo
        assert back.inertia == model.inertia
