"""Evaluation quantities: MSE (plain and retrieval), AMI, permutation-invariant
mis-clustering rates, mean in-cluster distance, and cross-model win-rates."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment
from sklearn.metrics import adjusted_mutual_info_score

from .core import EvaluationError, PointSet
from .clustering import ClusterModel, assign_many


@dataclass
class MetricsReport:
    mse: float
    retrieval_mse: float | None = None
    ami_x: float | None = None
    ami_y: float | None = None
    eps_x: float | None = None
    eps_y: float | None = None
    eps_b: float | None = None
    d_y_mean: float | None = None
    unresolved_count: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        return cls(**json.loads(text))


def mse(pred: np.ndarray, truth: np.ndarray) -> float:
    """Mean over points of the per-point mean-over-dimensions squared error.

    Averaging over dimensions keeps values comparable across output widths.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.size == 0:
        raise EvaluationError("mse of an empty prediction set is undefined")
    if pred.shape != truth.shape:
        raise EvaluationError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    return float(((pred - truth) ** 2).mean())


def retrieval_mse(pred: np.ndarray, pool: PointSet, truth) -> float:
    """Snap each prediction to its nearest pool vector, then score against the
    truth; multi-reference truths take the closest reference per point."""
    pred = np.asarray(pred, dtype=np.float64)
    if pool.n == 0:
        raise EvaluationError("retrieval pool is empty")
    d2 = ((pred[:, None, :] - pool.points[None, :, :]) ** 2).sum(axis=2)
    retrieved = pool.points[d2.argmin(axis=1)]
    if isinstance(truth, np.ndarray) and truth.ndim == 2:
        return mse(retrieved, truth)
    per_point = []
    for r, refs in zip(retrieved, truth):
        refs = np.atleast_2d(np.asarray(refs, dtype=np.float64))
        per_point.append(((refs - r) ** 2).mean(axis=1).min())
    return float(np.mean(per_point))


def ami(labels_a, labels_b) -> float:
    """Adjusted mutual information (permutation-model expectation,
    max-normalized); 1.0 iff the partitions agree up to relabeling."""
    labels_a = np.asarray(labels_a)
    labels_b = np.asarray(labels_b)
    if labels_a.shape != labels_b.shape:
        raise EvaluationError("label vectors must have equal length")
    if labels_a.size < 2:
        raise EvaluationError("ami needs at least two points")
    return float(adjusted_mutual_info_score(labels_a, labels_b, average_method="max"))


def misclustering_rate(assignments, latents, C: int):
    """Minimum disagreement over cluster-label permutations.

    Returns ``(rate, sigma)`` where ``sigma[c]`` is the latent label matched to
    cluster ``c`` by the agreement-maximizing assignment.
    """
    assignments = np.asarray(assignments, dtype=np.int64)
    latents = np.asarray(latents, dtype=np.int64)
    if assignments.shape != latents.shape:
        raise EvaluationError("assignments and latents must have equal length")
    if assignments.min(initial=0) < 0 or assignments.max(initial=0) >= C:
        raise EvaluationError(f"assignments must lie in [0, {C})")
    if latents.min(initial=0) < 0 or latents.max(initial=0) >= C:
        raise EvaluationError(f"latents must lie in [0, {C})")
    table = np.zeros((C, C), dtype=np.int64)
    np.add.at(table, (assignments, latents), 1)
    row, col = linear_sum_assignment(table, maximize=True)
    sigma = np.empty(C, dtype=np.int64)
    sigma[row] = col
    agree = int(table[row, col].sum())
    return 1.0 - agree / assignments.size, sigma


def d_y_mean(y_points: PointSet, y_model: ClusterModel) -> float:
    """Mean Euclidean distance from each point to its assigned centroid."""
    labels = assign_many(y_model, y_points.points)
    diffs = y_points.points - y_model.centroids[labels]
    return float(np.sqrt((diffs ** 2).sum(axis=1)).mean())


def winrate(per_trial_mse: dict) -> dict:
    """Fraction of trials each model achieves the strictly lowest MSE; exact
    ties split their unit of credit equally.  Fractions sum to 1."""
    models = list(per_trial_mse)
    if not models:
        raise EvaluationError("no models given")
    lengths = {len(v) for v in per_trial_mse.values()}
    if len(lengths) != 1:
        raise EvaluationError("all models need the same number of trials")
    (n_trials,) = lengths
    if n_trials < 1:
        raise EvaluationError("need at least one trial")
    scores = {m: 0.0 for m in models}
    for t in range(n_trials):
        vals = np.asarray([per_trial_mse[m][t] for m in models], dtype=np.float64)
        best = vals.min()
        winners = [m for m, v in zip(models, vals) if v == best]
        for m in winners:
            scores[m] += 1.0 / len(winners)
    return {m: s / n_trials for m, s in scores.items()}
