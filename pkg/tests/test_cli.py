import csv
import json

import numpy as np
import pytest

from hdpareto import cli, dataio
from hdpareto.config import (
    ConfigError,
    ExperimentKind,
    FairnessConfig,
    SynthSweepConfig,
    load_config,
    parse_config,
    resolved,
)
from hdpareto.experiments import ExperimentResult, ResultRow, run_synth_sweep
from hdpareto.outputs import emit_outputs, read_results, results_csv_text

HEADER = "experiment,method,lambda,seed,metric,value"


def run(tmp_path, command, cfg, name="out"):
    path = tmp_path / f"{name}.json"
    path.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
    return cli.main([command, "--config", str(path), "--out", str(tmp_path / name)])


class TestConfig:
    def test_defaults_and_seeds(self):
        cfg = parse_config({"repeats": 3, "base_seed": 10}, ExperimentKind.SYNTH_SWEEP)
        assert cfg.seeds() == [10, 11, 12]
        assert cfg.d == SynthSweepConfig().d

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown"):
            parse_config({"repeat": 3}, ExperimentKind.SYNTH_SWEEP)

    @pytest.mark.parametrize("raw", [{"repeats": "3"}, {"repeats": 2.5}, {"repeats": True}, {"lam": 0.5},
                                     {"sparsities": [5, "x"]}, {"repeats": 0}, {"base_seed": -1}])
    def test_type_and_range_errors(self, raw):
        with pytest.raises(ConfigError):
            parse_config(raw, ExperimentKind.SYNTH_SWEEP)

    def test_int_accepted_for_float(self):
        assert parse_config({"noise_sd": 1}, ExperimentKind.SYNTH_SWEEP).noise_sd == 1.0

    def test_kind_must_match(self):
        with pytest.raises(ConfigError):
            parse_config({"kind": "hv-report"}, ExperimentKind.SYNTH_SWEEP)

    def test_not_an_object(self):
        with pytest.raises(ConfigError):
            parse_config([1, 2], ExperimentKind.SYNTH_SWEEP)

    def test_strict_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{"repeats": 2,}')
        with pytest.raises(ConfigError):
            load_config(p, ExperimentKind.SYNTH_SWEEP)
        p.write_text('{"noise_sd": NaN}')
        with pytest.raises(ConfigError):
            load_config(p, ExperimentKind.SYNTH_SWEEP)

    def test_missing_dataset_file(self):
        with pytest.raises(ConfigError, match="not found"):
            FairnessConfig(dataset="csv", csv_path="/nonexistent.csv", n_labeled=5).validate()

    def test_resolved_round_trips(self):
        cfg = parse_config({"repeats": 2}, ExperimentKind.FRONT_COMPARE)
        again = parse_config(json.loads(json.dumps(resolved(cfg))), ExperimentKind.FRONT_COMPARE)
        assert again == cfg


class TestOutputs:
    def test_empty_table_is_header_only(self):
        assert results_csv_text([]) == HEADER + "\n"

    def test_values_round_trip(self, tmp_path):
        rows = [ResultRow("e", "m", "0.5;0.5", 1, "x", 0.1 + 0.2), ResultRow("e", "m", "", 0, "x", -1e-300)]
        p = tmp_path / "r.csv"
        p.write_text(results_csv_text(rows))
        assert read_results(p) == sorted(rows)

    def test_unwritable_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        result = ExperimentResult("e", [])
        with pytest.raises(OSError):
            emit_outputs(result, {}, blocker / "sub")


class TestCli:
    def test_sweep_outputs(self, tmp_path):
        cfg = {"repeats": 1, "sparsities": [5, 25], "unlabeled": [15, 50]}
        assert run(tmp_path, "synth-sweep", cfg) == 0
        out = tmp_path / "out"
        with open(out / "results.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert ",".join(rows[0]) == HEADER
        assert len(rows) == 1 + 4
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["sparsities"] == [5, 25]
        assert summary["config"]["d"] == SynthSweepConfig().d
        assert summary["config"]["kind"] == "synth-sweep"
        assert isinstance(summary["git_describe"], str) and summary["git_describe"]
        assert (out / "front.svg").read_text().startswith("<svg")

    def test_seed_schedule(self, tmp_path):
        assert run(tmp_path, "adversarial-contrast", {"repeats": 3, "base_seed": 7, "d": 8, "n": 10}) == 0
        seeds = sorted({r.seed for r in read_results(tmp_path / "out" / "results.csv")})
        assert seeds == [7, 8, 9]

    def test_repeat_rows_do_not_depend_on_base(self, tmp_path):
        run(tmp_path, "adversarial-contrast", {"repeats": 2, "base_seed": 0, "d": 8, "n": 10}, "a")
        run(tmp_path, "adversarial-contrast", {"repeats": 1, "base_seed": 1, "d": 8, "n": 10}, "b")
        a = [r for r in read_results(tmp_path / "a" / "results.csv") if r.seed == 1]
        b = read_results(tmp_path / "b" / "results.csv")
        assert a == b

    def test_noiseless_adversarial_is_exact(self, tmp_path):
        assert run(tmp_path, "adversarial-contrast", {"repeats": 2, "d": 8, "n": 10, "noise_sd": 0.0}) == 0
        rows = read_results(tmp_path / "out" / "results.csv")
        assert all(r.value <= 1e-8 for r in rows if r.method == "two_stage")

    @pytest.mark.parametrize("cfg", ['{"repeats": 0}', '{"bogus": 1}', "not json", '{"repeats": 1,}'])
    def test_validation_exit_code(self, tmp_path, cfg):
        assert run(tmp_path, "synth-sweep", cfg) == 1

    def test_missing_config_file(self, tmp_path):
        assert cli.main(["synth-sweep", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 1

    def test_usage_errors(self):
        assert cli.main([]) == 1
        assert cli.main(["no-such-command", "--config", "x"]) == 1

    def test_bad_thread_count(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HDPARETO_THREADS", "zero")
        assert run(tmp_path, "synth-sweep", {"repeats": 1}) == 1

    def test_runtime_error_exit_code(self, tmp_path, monkeypatch):
        from hdpareto import experiments

        def boom(cfg):
            raise FloatingPointError("diverged")

        monkeypatch.setattr(experiments, "run_synth_sweep", boom)
        assert run(tmp_path, "synth-sweep", {"repeats": 1}) == 2

    def test_unwritable_output_exit_code(self, tmp_path):
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"repeats": 1, "sparsities": [5], "unlabeled": [15]}))
        assert cli.main(["synth-sweep", "--config", str(p), "--out", str(blocker / "x")]) == 2

    def test_fairness_on_csv(self, tmp_path):
        gen = np.random.default_rng(0)
        m, d = 120, 4
        X = gen.normal(size=(m, d))
        table = dataio.RawTable(X, X @ np.ones(d) + 3.0, np.where(gen.random(m) < 0.5, -1.0, 1.0),
                                tuple(f"f{j}" for j in range(d)))
        dataio.write_csv(table, tmp_path / "data.csv")
        cfg = {"repeats": 1, "dataset": "csv", "csv_path": str(tmp_path / "data.csv"), "n_labeled": 40,
               "n_unlabeled": 40, "grid_size": 3}
        assert run(tmp_path, "fairness-run", cfg) == 0
        rows = read_results(tmp_path / "out" / "results.csv")
        risk = [r.value for r in rows if r.method == "two_stage" and r.metric == "risk" and r.lam.startswith("1.0")]
        assert risk and risk[0] < 0.1

    def test_fairness_missing_column(self, tmp_path):
        (tmp_path / "data.csv").write_text("f1,target\n1,2\n")
        cfg = {"repeats": 1, "dataset": "csv", "csv_path": str(tmp_path / "data.csv"), "n_labeled": 1}
        assert run(tmp_path, "fairness-run", cfg) == 1

    def test_sweep_table_shape(self):
        res = run_synth_sweep(SynthSweepConfig(repeats=1, sparsities=(5, 15), unlabeled=(15, 24)))
        assert len(res.rows) == 4
