"""Experiment driver: seeded sweeps over (C x supervision) grids, model
comparison, aggregation, win-rate tables, and the scaling benchmark.

Result files are deterministic for a fixed config and master seed regardless
of worker count: trial seeds derive from grid indices, rows are sorted before
writing, and floats serialize exactly.  Wall-clock timings are machine
dependent, so they are written to a separate timings file that carries no
determinism guarantee.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import DataSplit, PointSet, format_float, load_pointset, make_split, rng_from
from .baselines import GwConfig, eot_predict, gw_predict, knn_predict
from .bridge import bridging_accuracy
from .metrics import MetricsReport, ami, d_y_mean, misclustering_rate, mse, retrieval_mse, winrate
from .predictor import (PipelineConfig, PipelineResult, predict_inverse,
                        prediction_matrix, run_pipeline)
from .synth import make_separated_spec, sample_mixture

ALL_MODELS = ("bc", "knn", "eot", "gw")


@dataclass
class ExperimentConfig:
    data: dict
    c_values: list = field(default_factory=lambda: [3, 4, 5, 6, 7])
    pairs_per_cluster: list = field(default_factory=lambda: [1, 2, 3, 4])
    seeds: int = 30
    master_seed: int = 0
    mode: str = "transductive"
    direction: str = "forward"
    models: list = field(default_factory=lambda: list(ALL_MODELS))
    holdout_fraction: float = 0.2
    output_only_fraction: float | None = None
    retrieval: bool = False
    workers: int = 1
    bc: dict = field(default_factory=dict)
    knn: dict = field(default_factory=dict)
    eot: dict = field(default_factory=dict)
    gw: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.c_values or not self.pairs_per_cluster:
            raise ValueError("grids must be nonempty")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        if self.direction not in ("forward", "inverse", "both"):
            raise ValueError(f"unknown direction {self.direction!r}")
        unknown = set(self.models) - set(ALL_MODELS)
        if unknown:
            raise ValueError(f"unknown models: {sorted(unknown)}")

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(**json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text())

    @property
    def directions(self) -> list:
        return ["forward", "inverse"] if self.direction == "both" else [self.direction]


@dataclass
class TrialRow:
    c: int
    pairs_per_cluster: int
    seed: int
    mode: str
    direction: str
    model: str
    report: MetricsReport | None
    fit_s: float = 0.0
    bridge_s: float = 0.0
    predict_s: float = 0.0
    counters: dict = field(default_factory=dict)
    error: str | None = None


@dataclass
class TrialRecord:
    """All model rows of one (C, pairs_per_cluster, seed) trial."""

    c: int
    pairs_per_cluster: int
    seed: int
    mode: str
    rows: list = field(default_factory=list)


RESULT_COLUMNS = ["c", "pairs_per_cluster", "seed", "mode", "direction", "model",
                  "mse", "retrieval_mse", "eps_x", "eps_y", "eps_b", "ami_x", "ami_y",
                  "d_y_mean", "unresolved_count", "error"]
TIMING_COLUMNS = ["c", "pairs_per_cluster", "seed", "mode", "direction", "model",
                  "fit_s", "bridge_s", "predict_s"]


class _FileData:
    """Full embedding files with pairing by shared id, sampled per trial."""

    def __init__(self, data_cfg: dict):
        fmt = data_cfg.get("format", "csv")
        self.x = load_pointset(data_cfg["x"], fmt)
        self.y = load_pointset(data_cfg["y"], fmt)
        shared = set(self.x.ids.tolist()) & set(self.y.ids.tolist())
        if not shared:
            raise ValueError("x and y files share no ids; cannot form pairings")

    def trial_data(self, c: int, seed: int):
        x, y = self.x, self.y
        if x.latent is not None:
            labels = np.unique(x.latent)
            if len(labels) < c:
                raise ValueError(f"data has {len(labels)} groups, config asks for C={c}")
            take = rng_from(seed, 101).choice(len(labels), size=c, replace=False)
            keep_labels = set(labels[np.sort(take)].tolist())
            relabel = {lab: i for i, lab in enumerate(sorted(keep_labels))}
            xm = np.asarray([lab in keep_labels for lab in x.latent.tolist()])
            ym = np.asarray([lab in keep_labels for lab in y.latent.tolist()])
            x = PointSet(x.points[xm], x.ids[xm],
                         np.asarray([relabel[v] for v in x.latent[xm].tolist()]))
            y = PointSet(y.points[ym], y.ids[ym],
                         np.asarray([relabel[v] for v in y.latent[ym].tolist()]))
        y_rows = y.id_to_row()
        pairing = [(xid, xid) for xid in x.ids.tolist() if xid in y_rows]
        return x, y, pairing


def _trial_data(config: ExperimentConfig, c: int, seed: int, file_data=None):
    data = config.data
    if data.get("type", "synthetic") == "synthetic":
        spec = make_separated_spec(
            C=c, d=int(data.get("d", 8)), d_prime=int(data.get("d_prime", 8)),
            delta_over_sigma=float(data.get("delta_over_sigma", 10.0)),
            seed=int(rng_from(seed, 7).integers(2 ** 63)))
        n = int(data.get("n_per_cluster", 60)) * c
        x, y = sample_mixture(spec, n, seed=int(rng_from(seed, 8).integers(2 ** 63)))
        pairing = list(zip(x.ids.tolist(), y.ids.tolist()))
        return x, y, pairing
    if data["type"] == "files":
        return file_data.trial_data(c, seed)
    raise ValueError(f"unknown data type {data.get('type')!r}")


def _bc_metrics(result: PipelineResult, preds, truth, split: DataSplit,
                direction: str, config: ExperimentConfig) -> MetricsReport:
    matrix, mask = prediction_matrix(preds)
    value = mse(matrix, truth[mask]) if mask.any() else None
    x_lat, y_lat = result.x_fit_latents, result.y_fit_latents
    eps_x = eps_y = ami_x = ami_y = eps_b = None
    if x_lat is not None and y_lat is not None:
        c = result.x_model.n_clusters
        eps_x = misclustering_rate(result.x_model.assignments, x_lat, c)[0]
        eps_y = misclustering_rate(result.y_model.assignments, y_lat, c)[0]
        ami_x = ami(result.x_model.assignments, x_lat)
        ami_y = ami(result.y_model.assignments, y_lat)
        eps_b = 1.0 - bridging_accuracy(result.bridge, result.x_model, result.y_model,
                                        x_lat, y_lat)
    target_pool = split.y_pool if direction == "forward" else split.x_pool
    target_model = result.y_model if direction == "forward" else result.x_model
    r_mse = None
    if config.retrieval and mask.any():
        r_mse = retrieval_mse(matrix, target_pool, truth[mask])
    return MetricsReport(mse=value, retrieval_mse=r_mse, ami_x=ami_x, ami_y=ami_y,
                         eps_x=eps_x, eps_y=eps_y, eps_b=eps_b,
                         d_y_mean=d_y_mean(target_pool, target_model),
                         unresolved_count=int((~mask).sum()))


def _baseline_metrics(pred: np.ndarray, truth: np.ndarray, split: DataSplit,
                      direction: str, config: ExperimentConfig) -> MetricsReport:
    r_mse = None
    if config.retrieval:
        pool = split.y_pool if direction == "forward" else split.x_pool
        r_mse = retrieval_mse(pred, pool, truth)
    return MetricsReport(mse=mse(pred, truth), retrieval_mse=r_mse)


def run_trial(config: ExperimentConfig, c: int, ppc: int, seed_index: int,
              file_data=None) -> TrialRecord:
    """Generate/split the data for one grid cell and run every configured
    model in both requested directions."""
    ci = config.c_values.index(c)
    pi = config.pairs_per_cluster.index(ppc)
    trial_seed = int(rng_from(config.master_seed, ci, pi, seed_index).integers(2 ** 63))

    x_full, y_full, pairing = _trial_data(config, c, trial_seed, file_data)
    split = make_split(x_full, y_full, pairing, mode=config.mode,
                       seed=int(rng_from(trial_seed, 9).integers(2 ** 63)),
                       pairs_per_cluster=ppc,
                       holdout_fraction=config.holdout_fraction,
                       output_only_fraction=config.output_only_fraction)
    y_by_id = y_full.id_to_row()
    x_by_id = x_full.id_to_row()
    truth_fwd = y_full.points[[y_by_id[i] for i in split.x_test.ids.tolist()]]
    truth_inv = x_full.points[[x_by_id[i] for i in split.y_test.ids.tolist()]]
    truths = {"forward": truth_fwd, "inverse": truth_inv}

    record = TrialRecord(c=c, pairs_per_cluster=ppc, seed=seed_index, mode=config.mode)
    model_seed = int(rng_from(trial_seed, 10).integers(2 ** 63))

    for model in config.models:
        try:
            rows = _run_model(model, config, split, truths, model_seed, c)
        except Exception as exc:  # errors are per-trial data, not a sweep abort
            rows = [TrialRow(c=c, pairs_per_cluster=ppc, seed=seed_index, mode=config.mode,
                             direction=d, model=model, report=None, error=str(exc))
                    for d in config.directions]
        for row in rows:
            row.c, row.pairs_per_cluster, row.seed, row.mode = c, ppc, seed_index, config.mode
        record.rows.extend(rows)
    return record


def _run_model(model: str, config: ExperimentConfig, split: DataSplit, truths: dict,
               seed: int, c: int) -> list:
    rows = []
    if model == "bc":
        pipe_cfg = PipelineConfig(c=c, **config.bc)
        result = run_pipeline(split, pipe_cfg, seed)
        n_fit = split.x_pool.n + split.y_pool.n + 2 * split.paired.k
        counters = {"distance_evals": result.x_model.distance_evals
                    + result.y_model.distance_evals,
                    "memory_entries": split.x_pool.n * split.x_pool.dim
                    + split.y_pool.n * split.y_pool.dim
                    + c * (split.x_pool.dim + split.y_pool.dim) + c * c,
                    "n_fit": n_fit}
        for direction in config.directions:
            t0 = time.perf_counter()
            preds = (result.predictions if direction == "forward"
                     else predict_inverse(split.y_test, result.y_model,
                                          result.x_model, result.bridge))
            predict_s = (result.timings["predict_s"] if direction == "forward"
                         else time.perf_counter() - t0)
            rows.append(TrialRow(
                c=c, pairs_per_cluster=0, seed=0, mode=split.mode, direction=direction,
                model="bc",
                report=_bc_metrics(result, preds, truths[direction], split, direction, config),
                fit_s=result.timings["fit_s"], bridge_s=result.timings["bridge_s"],
                predict_s=predict_s, counters=counters))
        return rows

    for direction in config.directions:
        truth = truths[direction]
        t0 = time.perf_counter()
        counters = {}
        if model == "knn":
            paired = split.paired
            if direction == "inverse":
                from .core import PairedSet
                paired = PairedSet(x_points=paired.y_points, y_points=paired.x_points,
                                   x_ids=paired.y_ids, y_ids=paired.x_ids,
                                   latent=paired.latent)
            queries = split.x_test if direction == "forward" else split.y_test
            k_neighbors = min(int(config.knn.get("k_neighbors", 1)), paired.k)
            pred = knn_predict(paired, queries, k_neighbors)
        elif model == "eot":
            pred = eot_predict(split, direction=direction, **config.eot)
            counters["memory_entries"] = ((split.x_pool.n + split.paired.k)
                                          * (split.y_pool.n + split.paired.k))
        elif model == "gw":
            gw_kwargs = dict(config.gw)
            n_restarts = int(gw_kwargs.pop("n_restarts", 3))
            gw_cfg = GwConfig(**gw_kwargs)
            pred = gw_predict(split, gw_cfg, seed=seed, direction=direction,
                              n_restarts=n_restarts)
            n_s = split.x_pool.n + split.paired.k
            n_t = split.y_pool.n + split.paired.k
            counters["memory_entries"] = n_s * n_s + n_t * n_t + n_s * n_t
        else:
            raise ValueError(f"unknown model {model!r}")
        elapsed = time.perf_counter() - t0
        rows.append(TrialRow(c=c, pairs_per_cluster=0, seed=0, mode=split.mode,
                             direction=direction, model=model,
                             report=_baseline_metrics(pred, truth, split, direction, config),
                             fit_s=elapsed, counters=counters))
    return rows


def run_experiment(config: ExperimentConfig, out_dir: str | Path) -> dict:
    """Run the full sweep and write trials.csv, timings.csv, aggregates.json,
    and winrates.csv under ``out_dir``.  Returns the aggregate dict."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    file_data = _FileData(config.data) if config.data.get("type") == "files" else None

    cells = [(c, ppc, s) for c in config.c_values
             for ppc in config.pairs_per_cluster for s in range(config.seeds)]
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(
                lambda cell: run_trial(config, *cell, file_data=file_data), cells))
    else:
        records = [run_trial(config, *cell, file_data=file_data) for cell in cells]

    rows = [row for rec in records for row in rec.rows]
    rows.sort(key=lambda r: (r.c, r.pairs_per_cluster, r.seed, r.direction, r.model))

    _write_rows(out / "trials.csv", RESULT_COLUMNS, rows, _result_row)
    _write_rows(out / "timings.csv", TIMING_COLUMNS, rows, _timing_row)
    aggregates = _aggregate(rows, config)
    (out / "aggregates.json").write_text(json.dumps(aggregates, indent=2, sort_keys=True))
    _write_winrates(out / "winrates.csv", rows, config)
    return aggregates


def _result_row(r: TrialRow) -> list:
    rep = r.report
    def fmt(v):
        return "" if v is None else format_float(v)
    if rep is None:
        vals = [""] * 8 + ["", r.error or "failed"]
    else:
        vals = [fmt(rep.mse), fmt(rep.retrieval_mse), fmt(rep.eps_x), fmt(rep.eps_y),
                fmt(rep.eps_b), fmt(rep.ami_x), fmt(rep.ami_y), fmt(rep.d_y_mean),
                str(rep.unresolved_count), r.error or ""]
    return [str(r.c), str(r.pairs_per_cluster), str(r.seed), r.mode, r.direction,
            r.model] + vals


def _timing_row(r: TrialRow) -> list:
    return [str(r.c), str(r.pairs_per_cluster), str(r.seed), r.mode, r.direction,
            r.model, format_float(r.fit_s), format_float(r.bridge_s),
            format_float(r.predict_s)]


def _write_rows(path: Path, columns: list, rows: list, to_row) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for r in rows:
            writer.writerow(to_row(r))


def _aggregate(rows: list, config: ExperimentConfig) -> dict:
    groups: dict = {}
    for r in rows:
        if r.report is None or r.report.mse is None:
            continue
        key = (r.c, r.pairs_per_cluster, r.direction, r.model)
        groups.setdefault(key, []).append(r.report)
    agg = {}
    for (c, ppc, direction, model), reports in sorted(groups.items()):
        vals = np.asarray([rep.mse for rep in reports], dtype=np.float64)
        entry = {"trials": len(reports), "mse_mean": float(vals.mean()),
                 "mse_median": float(np.median(vals)), "mse_std": float(vals.std())}
        for name in ("eps_x", "eps_y", "eps_b", "ami_x", "ami_y", "d_y_mean"):
            xs = [getattr(rep, name) for rep in reports if getattr(rep, name) is not None]
            if xs:
                entry[f"{name}_mean"] = float(np.mean(xs))
        agg[f"C={c}/pairs={ppc}/{direction}/{model}"] = entry
    return agg


def _write_winrates(path: Path, rows: list, config: ExperimentConfig) -> None:
    """Win-rate table, one row per setting and per direction plus an overall
    row per direction; models as columns."""
    by_cell: dict = {}
    for r in rows:
        if r.report is None or r.report.mse is None:
            continue
        by_cell.setdefault((r.direction, r.c, r.pairs_per_cluster, r.seed), {})[r.model] = r.report.mse

    def rates(cells: list) -> dict | None:
        complete = [c for c in cells if set(c) == set(config.models)]
        if not complete:
            return None
        per_model = {m: [c[m] for c in complete] for m in config.models}
        return winrate(per_model)

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["direction", "c", "pairs_per_cluster"] + list(config.models))
        for direction in sorted({d for d, *_ in by_cell}):
            for c in config.c_values:
                for ppc in config.pairs_per_cluster:
                    cells = [v for (d, cc, pp, _), v in by_cell.items()
                             if d == direction and cc == c and pp == ppc]
                    rr = rates(cells)
                    if rr is not None:
                        writer.writerow([direction, str(c), str(ppc)]
                                        + [format_float(rr[m]) for m in config.models])
            overall = rates([v for (d, *_), v in by_cell.items() if d == direction])
            if overall is not None:
                writer.writerow([direction, "all", "all"]
                                + [format_float(overall[m]) for m in config.models])


def overall_winrates(out_dir: str | Path, direction: str = "forward") -> dict:
    """Read back the overall win-rate row for one direction."""
    with open(Path(out_dir) / "winrates.csv", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        for row in reader:
            if row[0] == direction and row[1] == "all":
                return {m: float(v) for m, v in zip(header[3:], row[3:])}
    raise KeyError(f"no overall row for direction {direction!r}")


# ---------------------------------------------------------------------------
# Scaling benchmark
# ---------------------------------------------------------------------------


def bc_memory_counter(n_x: int, d: int, n_y: int, d_prime: int, c: int) -> int:
    """Stored pools + centroids + the C x C bridge."""
    return n_x * d + n_y * d_prime + c * (d + d_prime) + c * c


def run_scaling_bench(sizes: list, c: int = 5, models=("bc", "eot", "gw"), seed: int = 0,
                      d: int = 8, d_prime: int = 8, delta_over_sigma: float = 10.0,
                      repeats: int = 3, lloyd_iters: int = 20, sinkhorn_iters: int = 10,
                      gw_outer_iters: int = 2, timeout_s: float | None = None) -> dict:
    """Measure training wall-clock and counter-based memory proxies per pool
    size, with fixed iteration caps, and report log-log slope estimates.

    Wall-clock numbers are machine dependent; the memory counters are exact
    by construction (pool entries for clustering-based prediction, coupling
    and distance-matrix entries for the transport baselines).
    """
    from .clustering import fit_lloyd
    from .baselines import sinkhorn as _sinkhorn, gw_align
    from scipy.spatial.distance import cdist

    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be increasing")
    spec = make_separated_spec(c, d, d_prime, delta_over_sigma, seed=seed)
    report = {"sizes": [int(n) for n in sizes], "models": {}}
    for model in models:
        walls, mems, skipped = [], [], False
        for n in sizes:
            if skipped:
                walls.append(None)
                mems.append(_memory_counter(model, n, d, d_prime, c))
                continue
            x, y = sample_mixture(spec, int(n), seed=seed + int(n))
            best = np.inf
            for rep in range(-1, repeats):  # rep -1 is an untimed warmup
                fit_seed = max(rep, 0)
                t0 = time.perf_counter()
                if model == "bc":
                    fit_lloyd(x, c, seed=fit_seed, max_iter=lloyd_iters, tol=0.0, restarts=1)
                    fit_lloyd(y, c, seed=fit_seed + 1, max_iter=lloyd_iters, tol=0.0, restarts=1)
                elif model == "eot":
                    cost = cdist(x.points, y.points, metric="sqeuclidean")
                    cost /= cost.mean()
                    m_marg = np.full(n, 1.0 / n)
                    _sinkhorn(cost, m_marg, m_marg, eps=0.05,
                              max_iter=sinkhorn_iters, tol=0.0)
                elif model == "gw":
                    dx = cdist(x.points, x.points)
                    dy = cdist(y.points, y.points)
                    dx /= dx.max()
                    dy /= dy.max()
                    m_marg = np.full(n, 1.0 / n)
                    gw_align(dx, dy, m_marg, m_marg,
                             GwConfig(eps=5e-3, max_iter=gw_outer_iters, tol=0.0,
                                      inner_max_iter=sinkhorn_iters, inner_tol=0.0))
                else:
                    raise ValueError(f"unknown model {model!r}")
                if rep >= 0:
                    best = min(best, time.perf_counter() - t0)
            walls.append(best)
            mems.append(_memory_counter(model, n, d, d_prime, c))
            if timeout_s is not None and best > timeout_s:
                skipped = True
        entry = {"wall_s": walls, "memory_counter": mems}
        measured = [(n, w) for n, w in zip(sizes, walls) if w is not None]
        if len(measured) >= 2:
            ns, ws = zip(*measured)
            entry["wall_slope"] = float(np.polyfit(np.log(ns), np.log(ws), 1)[0])
        entry["memory_slope"] = float(np.polyfit(np.log(sizes), np.log(mems), 1)[0])
        report["models"][model] = entry
    return report


def _memory_counter(model: str, n: int, d: int, d_prime: int, c: int) -> int:
    if model == "bc":
        return bc_memory_counter(n, d, n, d_prime, c)
    if model == "eot":
        return n * n
    if model == "gw":
        return n * n + n * n + n * n
    raise ValueError(model)
