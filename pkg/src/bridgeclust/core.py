"""Shared domain types, dataset splitting, seeded randomness, and file I/O.

Everything downstream operates on three containers: ``PointSet`` (an indexed
matrix of embedding vectors with optional hidden group labels used for
evaluation only), ``PairedSet`` (the few supervised input/output pairs), and
``DataSplit`` (the pools and test sets of one experiment trial).

Determinism contract: every stochastic operation in this package takes an
integer ``seed`` and is a pure function of its inputs and that seed.  Derived
streams are built with ``rng_from(seed, *salts)`` so that independent
sub-operations never share or race on a generator.
"""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

Mode = Literal["transductive", "inductive"]


class ParseError(ValueError):
    """A record in an input file could not be parsed."""


class DimensionError(ValueError):
    """A row or vector has the wrong number of coordinates."""


class SplitError(ValueError):
    """A requested data split cannot be satisfied."""


class NumericError(ValueError):
    """Non-finite values where finite numbers are required."""


class EvaluationError(ValueError):
    """An evaluation quantity cannot be computed from the given inputs."""


def rng_from(seed: int, *salts: int) -> np.random.Generator:
    """Deterministic generator for ``seed`` plus a derivation path.

    ``rng_from(s, a, b)`` and ``rng_from(s, a, c)`` are statistically
    independent streams; both are reproducible across platforms.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(s) for s in salts]]))


def format_float(x: float) -> str:
    """Serialize a float so that parsing the text recovers the exact value."""
    return repr(float(x))


@dataclass(frozen=True)
class PointSet:
    """An indexed collection of fixed-dimension real vectors.

    ``latent`` holds hidden group labels used only for evaluation; production
    inputs normally ship without it.
    """

    points: np.ndarray
    ids: np.ndarray
    latent: np.ndarray | None = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] < 1:
            raise DimensionError(f"points must be an n x d matrix with d >= 1, got shape {points.shape}")
        ids = np.asarray(self.ids)
        if ids.shape != (points.shape[0],):
            raise ValueError(f"ids length {ids.shape} does not match {points.shape[0]} points")
        if len(set(ids.tolist())) != len(ids):
            raise ValueError("ids must be unique within a PointSet")
        latent = self.latent
        if latent is not None:
            latent = np.asarray(latent, dtype=np.int64)
            if latent.shape != (points.shape[0],):
                raise ValueError("latent length does not match number of points")
            if latent.size and latent.min() < 0:
                raise ValueError("latent labels must be nonnegative")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "latent", latent)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def subset(self, indices: np.ndarray) -> "PointSet":
        """New PointSet keeping the given row indices, in the given order."""
        indices = np.asarray(indices)
        return PointSet(
            points=self.points[indices],
            ids=self.ids[indices],
            latent=None if self.latent is None else self.latent[indices],
        )

    def id_to_row(self) -> dict:
        return {i: r for r, i in enumerate(self.ids.tolist())}


@dataclass(frozen=True)
class PairedSet:
    """The k supervised (x, y) examples; row j of both matrices is one sample."""

    x_points: np.ndarray
    y_points: np.ndarray
    x_ids: np.ndarray
    y_ids: np.ndarray
    latent: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x_points, dtype=np.float64)
        y = np.asarray(self.y_points, dtype=np.float64)
        if x.ndim != 2 or y.ndim != 2:
            raise DimensionError("paired x_points and y_points must be 2-d matrices")
        if x.shape[0] != y.shape[0] or x.shape[0] < 1:
            raise ValueError("paired set needs k >= 1 rows with matching x/y counts")
        latent = self.latent
        if latent is not None:
            latent = np.asarray(latent, dtype=np.int64)
            if latent.shape != (x.shape[0],):
                raise ValueError("latent length does not match k")
        object.__setattr__(self, "x_points", x)
        object.__setattr__(self, "y_points", y)
        object.__setattr__(self, "x_ids", np.asarray(self.x_ids))
        object.__setattr__(self, "y_ids", np.asarray(self.y_ids))
        object.__setattr__(self, "latent", latent)

    @property
    def k(self) -> int:
        return self.x_points.shape[0]


@dataclass(frozen=True)
class DataSplit:
    """Training pools plus test sets for one trial.

    In transductive mode ``x_test`` is ``x_pool`` itself (and ``y_test`` is
    ``y_pool``); in inductive mode both test sets are disjoint holdouts.
    """

    x_pool: PointSet
    y_pool: PointSet
    paired: PairedSet
    x_test: PointSet
    y_test: PointSet
    mode: Mode
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("transductive", "inductive"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "transductive" and self.x_test is not self.x_pool:
            if not np.array_equal(self.x_test.ids, self.x_pool.ids):
                raise ValueError("transductive mode requires x_test == x_pool")
        if self.paired.k > min(self.x_pool.n + self.paired.k, self.y_pool.n + self.paired.k):
            raise ValueError("paired set larger than the available pools")


# ---------------------------------------------------------------------------
# File I/O
# ---------------------------------------------------------------------------

_FEATURE_RE = re.compile(r"^f(\d+)$")


def load_pointset(path: str | Path, fmt: str = "csv") -> PointSet:
    """Load a PointSet from a CSV (header ``f0..f{d-1}[,latent][,id]``) or a
    JSON-lines file (objects with ``features`` and optional ``latent``/``id``).
    """
    path = Path(path)
    if fmt == "csv":
        return _load_csv(path)
    if fmt == "jsonl":
        return _load_jsonl(path)
    raise ValueError(f"unknown format {fmt!r}")


def _load_csv(path: Path) -> PointSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        feature_cols = []
        latent_col = id_col = None
        for i, name in enumerate(h.strip() for h in header):
            m = _FEATURE_RE.match(name)
            if m:
                feature_cols.append((int(m.group(1)), i))
            elif name == "latent":
                latent_col = i
            elif name == "id":
                id_col = i
            else:
                raise ParseError(f"{path}: unknown column {name!r} in header")
        feature_cols.sort()
        if [k for k, _ in feature_cols] != list(range(len(feature_cols))) or not feature_cols:
            raise ParseError(f"{path}: feature columns must be a contiguous f0..f{{d-1}} block")
        cols = [i for _, i in feature_cols]
        rows, ids, latents = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DimensionError(
                    f"{path}: line {line_no}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(row[i]) for i in cols])
            except ValueError as exc:
                raise ParseError(f"{path}: line {line_no}: {exc}") from None
            if latent_col is not None:
                try:
                    latents.append(int(row[latent_col]))
                except ValueError:
                    raise ParseError(
                        f"{path}: line {line_no}: latent must be an integer, got {row[latent_col]!r}"
                    ) from None
            if id_col is not None:
                ids.append(row[id_col])
    points = np.asarray(rows, dtype=np.float64)
    return PointSet(
        points=points,
        ids=_normalize_ids(ids, points.shape[0]),
        latent=np.asarray(latents, dtype=np.int64) if latent_col is not None else None,
    )


def _load_jsonl(path: Path) -> PointSet:
    rows, ids, latents = [], [], []
    has_latent = has_id = False
    dim = None
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                feats = [float(v) for v in obj["features"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}: line {line_no}: {exc}") from None
            if dim is None:
                dim = len(feats)
            elif len(feats) != dim:
                raise DimensionError(
                    f"{path}: line {line_no}: expected {dim} features, got {len(feats)}"
                )
            rows.append(feats)
            if "latent" in obj:
                has_latent = True
                latents.append(int(obj["latent"]))
            if "id" in obj:
                has_id = True
                ids.append(obj["id"])
    if not rows:
        raise ParseError(f"{path}: empty file")
    if has_latent and len(latents) != len(rows):
        raise ParseError(f"{path}: latent present on some lines but not all")
    points = np.asarray(rows, dtype=np.float64)
    return PointSet(
        points=points,
        ids=_normalize_ids(ids if has_id else [], points.shape[0]),
        latent=np.asarray(latents, dtype=np.int64) if has_latent else None,
    )


def _normalize_ids(raw: list, n: int) -> np.ndarray:
    """Ids default to the row index; integer-looking ids are kept as ints."""
    if not raw:
        return np.arange(n)
    try:
        return np.asarray([int(r) for r in raw])
    except (ValueError, TypeError):
        return np.asarray(raw, dtype=object)


def save_pointset(ps: PointSet, path: str | Path, fmt: str = "csv") -> None:
    """Write a PointSet; floats are serialized losslessly (exact round-trip)."""
    path = Path(path)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = [f"f{j}" for j in range(ps.dim)] + ["id"]
            if ps.latent is not None:
                header.append("latent")
            writer.writerow(header)
            for r in range(ps.n):
                row = [format_float(v) for v in ps.points[r]] + [str(ps.ids[r])]
                if ps.latent is not None:
                    row.append(str(int(ps.latent[r])))
                writer.writerow(row)
    elif fmt == "jsonl":
        with open(path, "w") as fh:
            for r in range(ps.n):
                obj = {"features": [float(v) for v in ps.points[r]], "id": _plain(ps.ids[r])}
                if ps.latent is not None:
                    obj["latent"] = int(ps.latent[r])
                fh.write(json.dumps(obj) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _plain(v):
    return v.item() if isinstance(v, np.generic) else v


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def make_split(
    x: PointSet,
    y: PointSet,
    pairing: Sequence[tuple],
    mode: Mode,
    seed: int,
    pairs_per_cluster: int,
    holdout_fraction: float = 0.2,
    output_only_fraction: float | None = None,
) -> DataSplit:
    """Hide most pairings: sample a small supervised set and form the pools.

    ``pairing`` lists the (x_id, y_id) correspondences known to the caller.
    When latent labels are available on ``x``, ``pairs_per_cluster`` examples
    are drawn uniformly per latent group; without latents it is the total
    number of pairs drawn uniformly.  Paired rows are removed from both
    unpaired pools.

    ``output_only_fraction`` optionally partitions the remaining paired-by-
    construction samples into disjoint sources: that fraction keeps only its
    y-side (output pool) and the rest only its x-side, which mimics pools
    collected independently.  ``None`` keeps both sides of every sample.

    In inductive mode a disjoint test set of ``holdout_fraction`` is carved
    from the x pool (and symmetrically from the y pool for the inverse
    direction).
    """
    if pairs_per_cluster < 1:
        raise SplitError("pairs_per_cluster must be >= 1")
    x_index = x.id_to_row()
    y_index = y.id_to_row()
    pair_rows = []
    for xid, yid in pairing:
        if xid not in x_index:
            raise SplitError(f"pairing references unknown x id {xid!r}")
        if yid not in y_index:
            raise SplitError(f"pairing references unknown y id {yid!r}")
        pair_rows.append((x_index[xid], y_index[yid]))

    rng = rng_from(seed)
    if x.latent is not None:
        groups: dict[int, list[int]] = {}
        for j, (xr, _) in enumerate(pair_rows):
            groups.setdefault(int(x.latent[xr]), []).append(j)
        chosen = []
        for label in sorted(groups):
            members = groups[label]
            if len(members) < pairs_per_cluster:
                raise SplitError(
                    f"group {label} has only {len(members)} pairable points, "
                    f"need pairs_per_cluster={pairs_per_cluster}"
                )
            pick = rng.choice(len(members), size=pairs_per_cluster, replace=False)
            chosen.extend(members[i] for i in sorted(pick.tolist()))
    else:
        if len(pair_rows) < pairs_per_cluster:
            raise SplitError(
                f"only {len(pair_rows)} pairable points, need {pairs_per_cluster}"
            )
        pick = rng.choice(len(pair_rows), size=pairs_per_cluster, replace=False)
        chosen = sorted(pick.tolist())

    chosen_set = set(chosen)
    sup_x_rows = np.asarray([pair_rows[j][0] for j in chosen], dtype=np.int64)
    sup_y_rows = np.asarray([pair_rows[j][1] for j in chosen], dtype=np.int64)
    paired = PairedSet(
        x_points=x.points[sup_x_rows],
        y_points=y.points[sup_y_rows],
        x_ids=x.ids[sup_x_rows],
        y_ids=y.ids[sup_y_rows],
        latent=None if x.latent is None else x.latent[sup_x_rows],
    )

    x_keep = np.setdiff1d(np.arange(x.n), sup_x_rows)
    y_keep = np.setdiff1d(np.arange(y.n), sup_y_rows)

    if output_only_fraction is not None:
        if not 0.0 < output_only_fraction < 1.0:
            raise SplitError("output_only_fraction must be in (0, 1)")
        # Partition the remaining known correspondences between the two sides.
        rest = [j for j in range(len(pair_rows)) if j not in chosen_set]
        n_out = int(round(output_only_fraction * len(rest)))
        take = rng.choice(len(rest), size=n_out, replace=False) if rest else np.array([], int)
        out_side = {rest[i] for i in take.tolist()}
        drop_x = {pair_rows[j][0] for j in out_side}
        drop_y = {pair_rows[j][1] for j in range(len(pair_rows)) if j not in chosen_set and j not in out_side}
        x_keep = np.asarray([r for r in x_keep if r not in drop_x], dtype=np.int64)
        y_keep = np.asarray([r for r in y_keep if r not in drop_y], dtype=np.int64)

    x_pool = x.subset(x_keep)
    y_pool = y.subset(y_keep)

    if mode == "transductive":
        x_test, y_test = x_pool, y_pool
    elif mode == "inductive":
        x_pool, x_test = _carve_holdout(x_pool, holdout_fraction, rng)
        y_pool, y_test = _carve_holdout(y_pool, holdout_fraction, rng)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    meta = {
        "mode": mode,
        "k": paired.k,
        "pairs_per_cluster": pairs_per_cluster,
        "holdout_fraction": holdout_fraction,
        "output_only_fraction": output_only_fraction,
        "seed": int(seed),
    }
    return DataSplit(x_pool=x_pool, y_pool=y_pool, paired=paired,
                     x_test=x_test, y_test=y_test, mode=mode, metadata=meta)


def _carve_holdout(pool: PointSet, fraction: float, rng: np.random.Generator):
    if not 0.0 < fraction < 1.0:
        raise SplitError("holdout_fraction must be in (0, 1)")
    n_test = max(1, int(round(fraction * pool.n)))
    if n_test >= pool.n:
        raise SplitError(f"holdout of {n_test} would empty a pool of {pool.n}")
    take = np.sort(rng.choice(pool.n, size=n_test, replace=False))
    keep = np.setdiff1d(np.arange(pool.n), take)
    return pool.subset(keep), pool.subset(take)


def concat_pointsets(a: PointSet, b_points: np.ndarray, b_ids: np.ndarray,
                     b_latent: np.ndarray | None) -> PointSet:
    """Append rows to a PointSet (used for optional pool enlargement)."""
    latent = None
    if a.latent is not None and b_latent is not None:
        latent = np.concatenate([a.latent, b_latent])
    ids = np.concatenate([np.asarray(a.ids, dtype=object), np.asarray(b_ids, dtype=object)])
    return PointSet(points=np.vstack([a.points, b_points]), ids=ids, latent=latent)
