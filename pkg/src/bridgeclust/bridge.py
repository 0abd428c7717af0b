"""Learning the cluster-to-cluster map from the paired examples.

The vote matrix counts how the supervised pairs co-assign across the fitted
input and output clusterings; the bridge itself is one of three vote readers:
plain per-row majority (rows with no votes stay unresolved), a maximum-weight
perfect matching, or greedy margin-ordered matching.  The inverse map is
learned from the transposed votes, not by inverting the forward map.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import DimensionError, EvaluationError, PairedSet
from .clustering import ClusterModel, assign_many

UNRESOLVED = -1


@dataclass(frozen=True)
class VoteMatrix:
    """counts[a, b] = number of paired samples landing in input cluster a and
    output cluster b."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError(f"vote matrix must be square C x C, got {counts.shape}")
        if (counts < 0).any():
            raise ValueError("vote counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def n_clusters(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class Bridge:
    """Total maps between cluster indices; UNRESOLVED (-1) marks rows that
    received no evidence."""

    forward: np.ndarray
    inverse: np.ndarray
    method: str
    votes: VoteMatrix | None = None

    def __post_init__(self):
        object.__setattr__(self, "forward", np.asarray(self.forward, dtype=np.int64))
        object.__setattr__(self, "inverse", np.asarray(self.inverse, dtype=np.int64))

    @property
    def n_clusters(self) -> int:
        return self.forward.shape[0]

    def to_json(self) -> str:
        return json.dumps({
            "method": self.method,
            "forward": self.forward.tolist(),
            "inverse": self.inverse.tolist(),
            "counts": None if self.votes is None else self.votes.counts.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "Bridge":
        obj = json.loads(text)
        votes = None if obj.get("counts") is None else VoteMatrix(np.asarray(obj["counts"]))
        return cls(forward=np.asarray(obj["forward"]), inverse=np.asarray(obj["inverse"]),
                   method=obj["method"], votes=votes)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "Bridge":
        return cls.from_json(Path(path).read_text())


def build_votes(x_model: ClusterModel, y_model: ClusterModel, paired: PairedSet) -> VoteMatrix:
    """Co-assignment counts of the paired samples under the two fitted models."""
    if paired.x_points.shape[1] != x_model.dim:
        raise DimensionError("paired x dimension does not match the x model")
    if paired.y_points.shape[1] != y_model.dim:
        raise DimensionError("paired y dimension does not match the y model")
    if x_model.n_clusters != y_model.n_clusters:
        raise ValueError("bridge requires the same C on both sides")
    C = x_model.n_clusters
    a = assign_many(x_model, paired.x_points)
    b = assign_many(y_model, paired.y_points)
    counts = np.zeros((C, C), dtype=np.int64)
    np.add.at(counts, (a, b), 1)
    return VoteMatrix(counts)


def learn_majority(votes: VoteMatrix) -> Bridge:
    """Row-wise argmax of the votes; ties go to the lowest column index and
    all-zero rows stay unresolved."""
    return Bridge(forward=_majority_map(votes.counts),
                  inverse=_majority_map(votes.counts.T),
                  method="majority", votes=votes)


def _majority_map(counts: np.ndarray) -> np.ndarray:
    out = counts.argmax(axis=1).astype(np.int64)
    out[counts.sum(axis=1) == 0] = UNRESOLVED
    return out


def learn_hungarian(votes: VoteMatrix) -> Bridge:
    """Maximum-total-vote perfect matching; injective by construction.

    Among matchings with equal vote totals the identity-like one is preferred:
    the integer objective is scaled by C+1 and one unit is added on the
    diagonal, which can never flip the ordering between distinct vote totals.
    """
    forward = _hungarian_map(votes.counts)
    return Bridge(forward=forward, inverse=np.argsort(forward).astype(np.int64),
                  method="hungarian", votes=votes)


def _hungarian_map(counts: np.ndarray) -> np.ndarray:
    C = counts.shape[0]
    perturbed = counts * (C + 1) + np.eye(C, dtype=np.int64)
    row, col = linear_sum_assignment(perturbed, maximize=True)
    forward = np.empty(C, dtype=np.int64)
    forward[row] = col
    return forward


def learn_margin(votes: VoteMatrix) -> Bridge:
    """Greedy matching ordered by vote margin (top minus runner-up per row).

    There is no single canonical margin-voting procedure; this one resolves
    rows in decreasing-margin order, breaking margin ties toward the lower
    row index and column ties toward the lower column index.
    """
    return Bridge(forward=_margin_map(votes.counts),
                  inverse=_margin_map(votes.counts.T),
                  method="margin", votes=votes)


def _margin_map(counts: np.ndarray) -> np.ndarray:
    C = counts.shape[0]
    forward = np.full(C, UNRESOLVED, dtype=np.int64)
    open_rows = list(range(C))
    open_cols = list(range(C))
    while open_rows:
        best_row = best_col = -1
        best_margin = -1
        for r in open_rows:
            row = counts[r, open_cols]
            order = np.argsort(-row, kind="stable")
            top = int(row[order[0]])
            second = int(row[order[1]]) if len(order) > 1 else 0
            margin = top - second
            if margin > best_margin:
                best_margin = margin
                best_row = r
                best_col = open_cols[int(order[0])]
        forward[best_row] = best_col
        open_rows.remove(best_row)
        open_cols.remove(best_col)
    return forward


LEARNERS = {"majority": learn_majority, "hungarian": learn_hungarian, "margin": learn_margin}


def bridging_accuracy(bridge: Bridge, x_model: ClusterModel, y_model: ClusterModel,
                      x_latents: np.ndarray, y_latents: np.ndarray) -> float:
    """Fraction of input clusters (weighted by fitted cluster mass) whose
    bridge target agrees with the latent-reconstructed ground-truth map.

    The ground truth composes the two cluster-to-latent matchings recovered by
    maximum-agreement assignment on each side; unresolved rows count as wrong.
    """
    if x_model.assignments is None or y_model.assignments is None:
        raise EvaluationError("bridging accuracy needs models with fitted assignments")
    if x_latents is None or y_latents is None:
        raise EvaluationError("bridging accuracy needs latent labels on both pools")
    C = bridge.n_clusters
    sigma_x = _cluster_to_latent(x_model.assignments, np.asarray(x_latents), C)
    sigma_y = _cluster_to_latent(y_model.assignments, np.asarray(y_latents), C)
    latent_to_ycluster = np.argsort(sigma_y)
    truth = latent_to_ycluster[sigma_x]
    masses = np.bincount(x_model.assignments, minlength=C)
    # single division keeps the all-correct case at exactly 1.0
    return float(masses[bridge.forward == truth].sum() / masses.sum())


def _cluster_to_latent(assignments: np.ndarray, latents: np.ndarray, C: int) -> np.ndarray:
    if assignments.shape != latents.shape:
        raise EvaluationError("assignments and latents must have equal length")
    if latents.max(initial=0) >= C:
        raise EvaluationError(f"latent labels must lie in [0, {C})")
    table = np.zeros((C, C), dtype=np.int64)
    np.add.at(table, (assignments, latents), 1)
    row, col = linear_sum_assignment(table, maximize=True)
    sigma = np.empty(C, dtype=np.int64)
    sigma[row] = col
    return sigma
