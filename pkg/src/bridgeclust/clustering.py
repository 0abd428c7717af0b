"""Plug-in C-clustering with nearest-centroid assignment.

Three fitters share one model type: classic Lloyd iterations with k-means++
restarts, a capacity-constrained variant that keeps cluster sizes balanced via
a linear-assignment step, and mini-batch updates for large pools.  Distance is
squared Euclidean throughout; assignment ties break toward the lowest cluster
index; empty clusters are re-seeded with the point currently farthest from its
centroid.  All fitters are deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import DimensionError, NumericError, PointSet, rng_from


@dataclass
class ClusterModel:
    """Fitted centroids plus the nearest-centroid assignment rule."""

    centroids: np.ndarray
    assignments: np.ndarray | None
    inertia: float
    algo: str
    n_iter: int = 0
    converged: bool = True
    inertia_trace: list = field(default_factory=list)
    distance_evals: int = 0

    @property
    def n_clusters(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def to_json(self) -> str:
        return json.dumps({
            "algo": self.algo,
            "C": self.n_clusters,
            "d": self.dim,
            "inertia": self.inertia,
            "centroids": self.centroids.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "ClusterModel":
        obj = json.loads(text)
        return cls(
            centroids=np.asarray(obj["centroids"], dtype=np.float64),
            assignments=None,
            inertia=float(obj["inertia"]),
            algo=obj["algo"],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "ClusterModel":
        return cls.from_json(Path(path).read_text())


def _as_points(data) -> np.ndarray:
    pts = data.points if isinstance(data, PointSet) else np.asarray(data, dtype=np.float64)
    if pts.ndim != 2:
        raise DimensionError(f"expected an n x d matrix, got shape {pts.shape}")
    if not np.isfinite(pts).all():
        raise NumericError("input contains non-finite coordinates")
    return pts


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """(n, C) squared Euclidean distances; shared by fitting and assign so the
    assignment rule is bit-identical everywhere."""
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ncd,ncd->nc", diff, diff)


def kmeanspp_init(data, C: int, seed: int) -> np.ndarray:
    """Pick C distinct seed rows by the standard D^2-weighting scheme."""
    points = _as_points(data)
    return _kmeanspp(points, C, rng_from(seed))


def _kmeanspp(points: np.ndarray, C: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    if C > n:
        raise ValueError(f"C={C} exceeds the number of points n={n}")
    if C < 1:
        raise ValueError("C must be >= 1")
    chosen = [int(rng.integers(n))]
    d2 = _sq_dists(points, points[chosen[-1]][None, :])[:, 0]
    for _ in range(C - 1):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # All remaining points coincide with chosen seeds; fall back to
            # uniform choice among unused indices to keep the seeds distinct.
            remaining = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(remaining))
        chosen.append(idx)
        d2 = np.minimum(d2, _sq_dists(points, points[idx][None, :])[:, 0])
    return points[chosen].copy()


def _reseed_empty(points, centroids, assign, assigned_d):
    """Move each empty cluster onto the point farthest from its centroid."""
    C = centroids.shape[0]
    sizes = np.bincount(assign, minlength=C)
    for c in np.flatnonzero(sizes == 0):
        far = int(assigned_d.argmax())
        centroids[c] = points[far]
        assign[far] = c
        assigned_d[far] = 0.0
        sizes = np.bincount(assign, minlength=C)
    return assign, assigned_d


def _lloyd_once(points, centroids, max_iter, tol):
    n, C = points.shape[0], centroids.shape[0]
    centroids = centroids.copy()
    trace = []
    evals = 0
    converged = False
    it = 0
    assign = np.zeros(n, dtype=np.int64)
    for it in range(1, max_iter + 1):
        dists = _sq_dists(points, centroids)
        evals += n * C
        assign = dists.argmin(axis=1)
        assigned_d = dists[np.arange(n), assign]
        assign, assigned_d = _reseed_empty(points, centroids, assign, assigned_d)
        trace.append(float(assigned_d.sum()))
        new_centroids = np.empty_like(centroids)
        for c in range(C):
            new_centroids[c] = points[assign == c].mean(axis=0)
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if shift < tol:
            converged = True
            break
    # Final pass so `assignments` matches `assign()` against the final centroids.
    dists = _sq_dists(points, centroids)
    evals += n * C
    assign = dists.argmin(axis=1)
    inertia = float(dists[np.arange(n), assign].sum())
    trace.append(inertia)
    return centroids, assign, inertia, trace, it, converged, evals


def fit_lloyd(data, C: int, seed: int, max_iter: int = 100, tol: float = 1e-6,
              restarts: int = 10) -> ClusterModel:
    """Lloyd's algorithm with k-means++ restarts, keeping the lowest inertia."""
    points = _as_points(data)
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    best = None
    for r in range(restarts):
        rng = rng_from(seed, r)
        init = _kmeanspp(points, C, rng)
        cents, assign, inertia, trace, n_iter, conv, evals = _lloyd_once(
            points, init, max_iter, tol)
        model = ClusterModel(centroids=cents, assignments=assign, inertia=inertia,
                             algo="lloyd", n_iter=n_iter, converged=conv,
                             inertia_trace=trace, distance_evals=evals)
        if best is None or model.inertia < best.inertia:
            best = model
    return best


def fit_balanced(data, C: int, seed: int, max_iter: int = 100, tol: float = 1e-6,
                 restarts: int = 10) -> ClusterModel:
    """Lloyd-style loop whose assignment step is a minimum-cost matching of
    points to per-cluster slots, keeping sizes within one of each other.

    Slot counts are ceil(n/C) for the first ``n mod C`` clusters and
    floor(n/C) for the rest, so every iterate satisfies the balance
    invariant exactly.
    """
    points = _as_points(data)
    n = points.shape[0]
    if C > n:
        raise ValueError(f"C={C} exceeds the number of points n={n}")
    q, r = divmod(n, C)
    slot_cluster = np.repeat(np.arange(C), [q + 1] * r + [q] * (C - r))
    best = None
    for rst in range(restarts):
        rng = rng_from(seed, rst)
        centroids = _kmeanspp(points, C, rng)
        trace = []
        evals = 0
        converged = False
        it = 0
        assign = np.zeros(n, dtype=np.int64)
        for it in range(1, max_iter + 1):
            dists = _sq_dists(points, centroids)
            evals += n * C
            cost = dists[:, slot_cluster]
            row, col = linear_sum_assignment(cost)
            assign = slot_cluster[col[np.argsort(row)]]
            trace.append(float(dists[np.arange(n), assign].sum()))
            new_centroids = np.empty_like(centroids)
            for c in range(C):
                new_centroids[c] = points[assign == c].mean(axis=0)
            shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
            centroids = new_centroids
            if shift < tol:
                converged = True
                break
        dists = _sq_dists(points, centroids)
        evals += n * C
        inertia = float(dists[np.arange(n), assign].sum())
        trace.append(inertia)
        model = ClusterModel(centroids=centroids, assignments=assign, inertia=inertia,
                             algo="balanced", n_iter=it, converged=converged,
                             inertia_trace=trace, distance_evals=evals)
        if best is None or model.inertia < best.inertia:
            best = model
    return best


def fit_minibatch(data, C: int, seed: int, batch: int, max_iter: int = 100) -> ClusterModel:
    """Mini-batch updates with per-centroid learning rate 1/(assignment count)."""
    points = _as_points(data)
    n = points.shape[0]
    if not 1 <= batch <= n:
        raise ValueError(f"batch must be in [1, n={n}], got {batch}")
    rng = rng_from(seed)
    centroids = _kmeanspp(points, C, rng)
    counts = np.zeros(C, dtype=np.int64)
    evals = 0
    for _ in range(max_iter):
        idx = rng.choice(n, size=batch, replace=False)
        bp = points[idx]
        a = _sq_dists(bp, centroids).argmin(axis=1)
        evals += batch * C
        for j in range(batch):
            c = a[j]
            counts[c] += 1
            centroids[c] += (bp[j] - centroids[c]) / counts[c]
    dists = _sq_dists(points, centroids)
    evals += n * C
    assign = dists.argmin(axis=1)
    inertia = float(dists[np.arange(n), assign].sum())
    return ClusterModel(centroids=centroids, assignments=assign, inertia=inertia,
                        algo="minibatch", n_iter=max_iter, converged=True,
                        inertia_trace=[inertia], distance_evals=evals)


FITTERS = {"lloyd": fit_lloyd, "balanced": fit_balanced, "minibatch": fit_minibatch}


def assign(model: ClusterModel, x: np.ndarray) -> int:
    """Index of the nearest centroid (squared Euclidean, ties to lowest index)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dim,):
        raise DimensionError(f"expected a vector of dim {model.dim}, got shape {x.shape}")
    return int(_sq_dists(x[None, :], model.centroids)[0].argmin())


def assign_many(model: ClusterModel, points: np.ndarray) -> np.ndarray:
    """Vectorized `assign` over the rows of ``points``."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != model.dim:
        raise DimensionError(
            f"expected an n x {model.dim} matrix, got shape {points.shape}")
    return _sq_dists(points, model.centroids).argmin(axis=1)
