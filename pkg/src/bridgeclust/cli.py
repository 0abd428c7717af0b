"""Command-line driver.

Subcommands mirror the pipeline stages: ``generate`` synthetic data,
``split`` it into pools, ``fit`` a clustering, ``bridge`` two fitted models,
``predict`` with a bridge, ``evaluate`` predictions, and the two sweep
entry points ``experiment`` and ``bench``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import PointSet, load_pointset, make_split, save_pointset
from .clustering import FITTERS, ClusterModel
from .bridge import LEARNERS, Bridge, build_votes
from .metrics import MetricsReport, mse, retrieval_mse
from .predictor import predict_forward, predict_inverse, save_predictions
from .harness import ExperimentConfig, run_experiment, run_scaling_bench
from .synth import MixtureSpec, sample_mixture


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgeclust",
        description="Cluster-bridged prediction from unpaired pools, with baselines.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a synthetic mixture to CSV files")
    p.add_argument("--spec", required=True, help="MixtureSpec JSON file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("split", help="sample a supervised set and form the pools")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "jsonl"])
    p.add_argument("--mode", default="transductive", choices=["transductive", "inductive"])
    p.add_argument("--pairs-per-cluster", type=int, required=True)
    p.add_argument("--holdout-fraction", type=float, default=0.2)
    p.add_argument("--output-only-fraction", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("fit", help="fit a clustering model")
    p.add_argument("--data", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "jsonl"])
    p.add_argument("--c", type=int, required=True)
    p.add_argument("--algo", default="lloyd", choices=sorted(FITTERS))
    p.add_argument("--batch", type=int, default=256, help="minibatch size")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model JSON path")

    p = sub.add_parser("bridge", help="learn the cluster-to-cluster map")
    p.add_argument("--x-model", required=True)
    p.add_argument("--y-model", required=True)
    p.add_argument("--paired-x", required=True)
    p.add_argument("--paired-y", required=True)
    p.add_argument("--format", default="csv", choices=["csv", "jsonl"])
    p.add_argument("--method", default="majority", choices=sorted(LEARNERS))
    p.add_argument("--out", required=True, help="bridge JSON path")

    p = sub.add_parser("predict", help="centroid predictions for test points")
    p.add_argument("--data", required=True, help="test PointSet")
    p.add_argument("--format", default="csv", choices=["csv", "jsonl"])
    p.add_argument("--x-model", required=True)
    p.add_argument("--y-model", required=True)
    p.add_argument("--bridge", required=True)
    p.add_argument("--direction", default="forward", choices=["forward", "inverse"])
    p.add_argument("--out", required=True, help="predictions CSV path")

    p = sub.add_parser("evaluate", help="score predictions against truth")
    p.add_argument("--pred", required=True, help="predictions CSV")
    p.add_argument("--truth", required=True, help="truth PointSet (ids must match)")
    p.add_argument("--format", default="csv", choices=["csv", "jsonl"])
    p.add_argument("--pool", default=None, help="optional retrieval pool PointSet")
    p.add_argument("--out", required=True, help="metrics JSON path")

    p = sub.add_parser("experiment", help="run a seeded sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="results directory")
    p.add_argument("--seed", type=int, default=None, help="override master seed")

    p = sub.add_parser("bench", help="runtime/memory scaling measurements")
    p.add_argument("--sizes", default="500,1000,2000,4000")
    p.add_argument("--c", type=int, default=5)
    p.add_argument("--models", default="bc,eot,gw")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--timeout", type=float, default=None, help="per-cell timeout (s)")
    p.add_argument("--out", required=True, help="report JSON path")
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "generate":
        spec = MixtureSpec.load(args.spec)
        x, y = sample_mixture(spec, args.n, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_pointset(x, out / "x.csv")
        save_pointset(y, out / "y.csv")
        print(f"wrote {out / 'x.csv'} and {out / 'y.csv'} ({args.n} rows, latents included)")
        return 0

    if args.command == "split":
        x = load_pointset(args.x, args.format)
        y = load_pointset(args.y, args.format)
        shared = [i for i in x.ids.tolist() if i in set(y.ids.tolist())]
        split = make_split(x, y, [(i, i) for i in shared], mode=args.mode,
                           seed=args.seed, pairs_per_cluster=args.pairs_per_cluster,
                           holdout_fraction=args.holdout_fraction,
                           output_only_fraction=args.output_only_fraction)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_pointset(split.x_pool, out / "x_pool.csv")
        save_pointset(split.y_pool, out / "y_pool.csv")
        paired_x = PointSet(split.paired.x_points, split.paired.x_ids, split.paired.latent)
        paired_y = PointSet(split.paired.y_points, split.paired.y_ids, split.paired.latent)
        save_pointset(paired_x, out / "paired_x.csv")
        save_pointset(paired_y, out / "paired_y.csv")
        save_pointset(split.x_test, out / "x_test.csv")
        save_pointset(split.y_test, out / "y_test.csv")
        (out / "split.json").write_text(json.dumps(split.metadata, indent=2))
        print(f"wrote split (k={split.paired.k}) under {out}")
        return 0

    if args.command == "fit":
        data = load_pointset(args.data, args.format)
        kwargs = {"max_iter": args.max_iter}
        if args.algo == "minibatch":
            kwargs["batch"] = min(args.batch, data.n)
        else:
            kwargs["restarts"] = args.restarts
        model = FITTERS[args.algo](data, args.c, args.seed, **kwargs)
        model.save(args.out)
        print(f"fitted {args.algo} model: C={args.c}, inertia={model.inertia:.6g}, "
              f"iterations={model.n_iter}")
        return 0

    if args.command == "bridge":
        x_model = ClusterModel.load(args.x_model)
        y_model = ClusterModel.load(args.y_model)
        px = load_pointset(args.paired_x, args.format)
        py = load_pointset(args.paired_y, args.format)
        from .core import PairedSet
        paired = PairedSet(x_points=px.points, y_points=py.points,
                           x_ids=px.ids, y_ids=py.ids, latent=px.latent)
        votes = build_votes(x_model, y_model, paired)
        bridge = LEARNERS[args.method](votes)
        bridge.save(args.out)
        unresolved = int((bridge.forward < 0).sum())
        print(f"learned {args.method} bridge from k={paired.k} pairs "
              f"({unresolved} unresolved rows)")
        return 0

    if args.command == "predict":
        data = load_pointset(args.data, args.format)
        x_model = ClusterModel.load(args.x_model)
        y_model = ClusterModel.load(args.y_model)
        bridge = Bridge.load(args.bridge)
        if args.direction == "forward":
            preds = predict_forward(data, x_model, y_model, bridge)
        else:
            preds = predict_inverse(data, y_model, x_model, bridge)
        save_predictions(preds, args.out)
        n_ok = sum(p.status == "ok" for p in preds)
        print(f"wrote {len(preds)} predictions ({len(preds) - n_ok} unresolved) to {args.out}")
        return 0

    if args.command == "evaluate":
        pred_rows, pred_ids = _load_prediction_vectors(args.pred)
        truth = load_pointset(args.truth, args.format)
        t_index = truth.id_to_row()
        missing = [i for i in pred_ids if i not in t_index]
        if missing:
            raise ValueError(f"truth file lacks ids such as {missing[:3]}")
        truth_rows = truth.points[[t_index[i] for i in pred_ids]]
        report = MetricsReport(mse=mse(pred_rows, truth_rows))
        if args.pool is not None:
            pool = load_pointset(args.pool, args.format)
            report.retrieval_mse = retrieval_mse(pred_rows, pool, truth_rows)
        report.save(args.out)
        print(f"mse={report.mse:.6g}"
              + ("" if report.retrieval_mse is None
                 else f" retrieval_mse={report.retrieval_mse:.6g}"))
        return 0

    if args.command == "experiment":
        config = ExperimentConfig.load(args.config)
        if args.seed is not None:
            config.master_seed = args.seed
        run_experiment(config, args.out)
        print(f"experiment results written under {args.out}")
        return 0

    if args.command == "bench":
        sizes = [int(s) for s in args.sizes.split(",")]
        models = [m.strip() for m in args.models.split(",")]
        report = run_scaling_bench(sizes, c=args.c, models=models, seed=args.seed,
                                   repeats=args.repeats, timeout_s=args.timeout)
        Path(args.out).write_text(json.dumps(report, indent=2))
        for model, entry in report["models"].items():
            wall = entry.get("wall_slope")
            print(f"{model}: memory slope {entry['memory_slope']:.3f}"
                  + ("" if wall is None else f", wall-clock slope {wall:.3f}"))
        return 0

    raise ValueError(f"unknown command {args.command!r}")


def _load_prediction_vectors(path: str):
    ids, vectors = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        value_cols = [i for i, name in enumerate(header) if name.startswith("f")]
        status_col = header.index("status")
        id_col = header.index("id")
        for row in reader:
            if row[status_col] != "ok":
                continue
            ids.append(_maybe_int(row[id_col]))
            vectors.append([float(row[i]) for i in value_cols])
    if not vectors:
        raise ValueError(f"{path}: no resolved predictions to evaluate")
    return np.asarray(vectors, dtype=np.float64), ids


def _maybe_int(v: str):
    try:
        return int(v)
    except ValueError:
        return v


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
