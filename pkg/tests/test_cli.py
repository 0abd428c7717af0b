"""CLI subcommands end to end in a temp directory."""

import json

import numpy as np
import pytest

from bridgeclust import make_separated_spec
from bridgeclust.cli import cli_main


@pytest.fixture()
def spec_file(tmp_path):
    spec = make_separated_spec(3, 3, 4, 12.0, seed=0)
    path = tmp_path / "spec.json"
    spec.save(path)
    return path


class TestFullFlow:
    def test_generate_through_evaluate(self, tmp_path, spec_file, capsys):
        data = tmp_path / "data"
        assert cli_main(["generate", "--spec", str(spec_file), "--n", "120",
                         "--seed", "1", "--out", str(data)]) == 0
        assert (data / "x.csv").exists() and (data / "y.csv").exists()
        assert "latent" in (data / "x.csv").read_text().splitlines()[0]

        splitdir = tmp_path / "split"
        assert cli_main(["split", "--x", str(data / "x.csv"), "--y", str(data / "y.csv"),
                         "--pairs-per-cluster", "2", "--seed", "2",
                         "--out", str(splitdir)]) == 0
        meta = json.loads((splitdir / "split.json").read_text())
        assert meta["k"] == 6

        xm = tmp_path / "xm.json"
        ym = tmp_path / "ym.json"
        assert cli_main(["fit", "--data", str(splitdir / "x_pool.csv"), "--c", "3",
                         "--seed", "3", "--out", str(xm)]) == 0
        assert cli_main(["fit", "--data", str(splitdir / "y_pool.csv"), "--c", "3",
                         "--seed", "4", "--out", str(ym)]) == 0

        bridge = tmp_path / "bridge.json"
        assert cli_main(["bridge", "--x-model", str(xm), "--y-model", str(ym),
                         "--paired-x", str(splitdir / "paired_x.csv"),
                         "--paired-y", str(splitdir / "paired_y.csv"),
                         "--out", str(bridge)]) == 0

        preds = tmp_path / "preds.csv"
        assert cli_main(["predict", "--data", str(splitdir / "x_test.csv"),
                         "--x-model", str(xm), "--y-model", str(ym),
                         "--bridge", str(bridge), "--out", str(preds)]) == 0

        metrics = tmp_path / "metrics.json"
        assert cli_main(["evaluate", "--pred", str(preds), "--truth", str(data / "y.csv"),
                         "--pool", str(splitdir / "y_pool.csv"),
                         "--out", str(metrics)]) == 0
        report = json.loads(metrics.read_text())
        assert report["mse"] < 5.0  # well-separated instance: near the noise floor
        assert report["retrieval_mse"] is not None

    def test_minibatch_and_inverse_paths(self, tmp_path, spec_file):
        data = tmp_path / "data"
        cli_main(["generate", "--spec", str(spec_file), "--n", "90", "--out", str(data)])
        splitdir = tmp_path / "split"
        cli_main(["split", "--x", str(data / "x.csv"), "--y", str(data / "y.csv"),
                  "--pairs-per-cluster", "1", "--out", str(splitdir)])
        xm, ym = tmp_path / "xm.json", tmp_path / "ym.json"
        assert cli_main(["fit", "--data", str(splitdir / "x_pool.csv"), "--c", "3",
                         "--algo", "minibatch", "--batch", "16", "--out", str(xm)]) == 0
        assert cli_main(["fit", "--data", str(splitdir / "y_pool.csv"), "--c", "3",
                         "--algo", "balanced", "--restarts", "2", "--out", str(ym)]) == 0
        bridge = tmp_path / "bridge.json"
        cli_main(["bridge", "--x-model", str(xm), "--y-model", str(ym),
                  "--paired-x", str(splitdir / "paired_x.csv"),
                  "--paired-y", str(splitdir / "paired_y.csv"),
                  "--method", "hungarian", "--out", str(bridge)])
        preds = tmp_path / "preds_inv.csv"
        assert cli_main(["predict", "--data", str(splitdir / "y_test.csv"),
                         "--x-model", str(xm), "--y-model", str(ym),
                         "--bridge", str(bridge), "--direction", "inverse",
                         "--out", str(preds)]) == 0
        assert preds.read_text().count("\n") > 1


class TestExperimentCommand:
    def test_experiment_runs(self, tmp_path):
        cfg = {"data": {"type": "synthetic", "d": 3, "d_prime": 3,
                        "delta_over_sigma": 10.0, "n_per_cluster": 20},
               "c_values": [3], "pairs_per_cluster": [1], "seeds": 2,
               "models": ["bc", "knn"], "bc": {"restarts": 2}}
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        out = tmp_path / "results"
        assert cli_main(["experiment", "--config", str(cfg_path),
                         "--out", str(out)]) == 0
        assert (out / "trials.csv").exists()
        assert (out / "winrates.csv").exists()

    def test_missing_config_exits_2(self, tmp_path, capsys):
        rc = cli_main(["experiment", "--config", str(tmp_path / "nope.json"),
                       "--out", str(tmp_path)])
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            cli_main(["frobnicate"])
        assert exc.value.code == 2


class TestBenchCommand:
    def test_bench_writes_report(self, tmp_path):
        out = tmp_path / "bench.json"
        assert cli_main(["bench", "--sizes", "80,160", "--c", "3", "--models", "bc",
                         "--repeats", "1", "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert report["sizes"] == [80, 160]
        assert "bc" in report["models"]
