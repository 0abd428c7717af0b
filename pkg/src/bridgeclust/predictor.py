"""Bidirectional centroid prediction and the end-to-end pipeline.

A test point is assigned to its nearest input cluster, mapped across the
learned bridge, and answered with the linked output cluster's empirical
centroid; the inverse direction swaps the roles.  Points landing in a cluster
whose bridge row is unresolved are surfaced as such rather than guessed at.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DataSplit, PointSet, concat_pointsets, format_float, rng_from
from .clustering import FITTERS, ClusterModel, assign_many
from .bridge import LEARNERS, UNRESOLVED, Bridge, VoteMatrix, build_votes

STATUS_OK = "ok"
STATUS_UNRESOLVED = "unresolved_bridge"


@dataclass(frozen=True)
class Prediction:
    id: object
    source_cluster: int
    target_cluster: int
    status: str
    vector: np.ndarray | None


@dataclass
class PipelineConfig:
    """Clustering and bridge choices for one pipeline run."""

    c: int
    algo: str = "lloyd"
    bridge_method: str = "majority"
    enlarge_pools: bool = True
    restarts: int = 10
    max_iter: int = 100
    tol: float = 1e-6
    batch: int = 256


@dataclass
class PipelineResult:
    x_model: ClusterModel
    y_model: ClusterModel
    bridge: Bridge
    predictions: list
    votes: VoteMatrix
    x_fit_latents: np.ndarray | None = None
    y_fit_latents: np.ndarray | None = None
    timings: dict = field(default_factory=dict)


def predict_forward(x_test: PointSet, x_model: ClusterModel, y_model: ClusterModel,
                    bridge: Bridge) -> list:
    """Predict the output vector of each test input as the centroid of the
    bridged output cluster."""
    return _predict(x_test, x_model, y_model, bridge.forward)


def predict_inverse(y_test: PointSet, y_model: ClusterModel, x_model: ClusterModel,
                    bridge: Bridge) -> list:
    """Mirror of `predict_forward` using the inverse bridge map."""
    return _predict(y_test, y_model, x_model, bridge.inverse)


def _predict(queries: PointSet, source_model: ClusterModel, target_model: ClusterModel,
             mapping: np.ndarray) -> list:
    src = assign_many(source_model, queries.points)
    tgt = mapping[src]
    out = []
    for i in range(queries.n):
        if tgt[i] == UNRESOLVED:
            out.append(Prediction(id=queries.ids[i], source_cluster=int(src[i]),
                                  target_cluster=UNRESOLVED, status=STATUS_UNRESOLVED,
                                  vector=None))
        else:
            out.append(Prediction(id=queries.ids[i], source_cluster=int(src[i]),
                                  target_cluster=int(tgt[i]), status=STATUS_OK,
                                  vector=target_model.centroids[tgt[i]].copy()))
    return out


def run_pipeline(split: DataSplit, config: PipelineConfig, seed: int) -> PipelineResult:
    """Cluster both pools, learn the bridge from the paired set, and predict
    the test inputs.  With ``enlarge_pools`` the paired samples join both
    fitting pools (they carry information either way)."""
    if config.enlarge_pools:
        x_fit = concat_pointsets(split.x_pool, split.paired.x_points,
                                 split.paired.x_ids, split.paired.latent)
        y_fit = concat_pointsets(split.y_pool, split.paired.y_points,
                                 split.paired.y_ids, split.paired.latent)
    else:
        x_fit, y_fit = split.x_pool, split.y_pool

    fitter = FITTERS[config.algo]
    kwargs = {"max_iter": config.max_iter}
    if config.algo == "minibatch":
        kwargs["batch"] = min(config.batch, x_fit.n)
    else:
        kwargs.update(tol=config.tol, restarts=config.restarts)

    t0 = time.perf_counter()
    x_seed, y_seed = rng_from(seed, 1).integers(2 ** 63, size=2)
    x_model = fitter(x_fit, config.c, int(x_seed), **kwargs)
    if config.algo == "minibatch":
        kwargs["batch"] = min(config.batch, y_fit.n)
    y_model = fitter(y_fit, config.c, int(y_seed), **kwargs)
    t1 = time.perf_counter()
    votes = build_votes(x_model, y_model, split.paired)
    bridge = LEARNERS[config.bridge_method](votes)
    t2 = time.perf_counter()
    predictions = predict_forward(split.x_test, x_model, y_model, bridge)
    t3 = time.perf_counter()

    return PipelineResult(
        x_model=x_model, y_model=y_model, bridge=bridge, predictions=predictions,
        votes=votes,
        x_fit_latents=x_fit.latent, y_fit_latents=y_fit.latent,
        timings={"fit_s": t1 - t0, "bridge_s": t2 - t1, "predict_s": t3 - t2},
    )


def save_predictions(predictions: list, path: str | Path) -> None:
    """CSV schema: id, source_cluster, target_cluster, status, value columns."""
    dim = next((p.vector.shape[0] for p in predictions if p.vector is not None), 0)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "source_cluster", "target_cluster", "status"]
                        + [f"f{j}" for j in range(dim)])
        for p in predictions:
            values = ([format_float(v) for v in p.vector] if p.vector is not None
                      else [""] * dim)
            writer.writerow([p.id, p.source_cluster, p.target_cluster, p.status] + values)


def prediction_matrix(predictions: list) -> tuple[np.ndarray, np.ndarray]:
    """Stack resolved prediction vectors; returns (matrix, resolved row mask)."""
    mask = np.asarray([p.status == STATUS_OK for p in predictions], dtype=bool)
    vectors = [p.vector for p in predictions if p.status == STATUS_OK]
    matrix = np.vstack(vectors) if vectors else np.empty((0, 0))
    return matrix, mask
