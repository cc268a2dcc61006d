import json
import subprocess
import sys

import numpy as np
import pytest

from vcplab.cli import main as cli_main
from vcplab.experiments import (
    CSV_FIELDS,
    ExperimentConfig,
    _aggregate,
    run_experiment,
    rows_to_csv,
)


def mini_config(**over):
    base = dict(experiment="fig3c", seed=7, num_qubits=2, depth=4, replicates=2, grid=(0.01,))
    base.update(over)
    return ExperimentConfig.from_dict(base)


class TestConfig:
    def test_unknown_experiment(self):
        with pytest.raises(ValueError, match="unknown experiment"):
            ExperimentConfig.from_dict({"experiment": "fig9", "seed": 1})

    def test_seed_required(self):
        with pytest.raises(ValueError, match="seed"):
            ExperimentConfig.from_dict({"experiment": "fig3c"})

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            ExperimentConfig.from_dict({"experiment": "fig3c", "seed": 1, "depht": 4})

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError, match="nonempty"):
            mini_config(grid=())

    def test_default_grids(self):
        cfg = ExperimentConfig.from_dict({"experiment": "fig7", "seed": 1})
        assert len(cfg.grid) == 51
        assert cfg.grid[0] == 0.0 and cfg.grid[-1] == 1.0

    def test_seeds_expand_from_base(self):
        cfg = mini_config(seed=100, replicates=3)
        assert cfg.seeds() == [100, 101, 102]

    def test_noise_from_file(self, tmp_path):
        path = tmp_path / "noise.txt"
        path.write_text("I 0.9\nX 0.1\n")
        cfg = mini_config(experiment="variance-mc", noise_file=str(path))
        chan = cfg.noise_channel({})
        assert chan.probability("X") == pytest.approx(0.1)


class TestAggregate:
    def test_mean_and_stderr(self):
        mean, stderr, n, err = _aggregate([1.0, 2.0, 3.0])
        assert mean == pytest.approx(2.0)
        assert stderr == pytest.approx(np.std([1, 2, 3], ddof=1) / np.sqrt(3))
        assert n == 3 and err == ""

    def test_degenerate_rows_recorded(self):
        mean, stderr, n, err = _aggregate([1.0, "degenerate: x", 3.0])
        assert mean == pytest.approx(2.0)
        assert n == 2
        assert "1 of 3 degenerate" in err

    def test_all_failed(self):
        mean, _, n, err = _aggregate(["degenerate: x"])
        assert mean is None and n == 0 and "degenerate" in err


class TestRunners:
    def test_fig3c_rows(self):
        rows, text = run_experiment(mini_config())
        metrics = {r["metric"] for r in rows}
        assert metrics == {"infid_vsp", "infid_vcp"}
        header = text.splitlines()[0]
        assert header == ",".join(CSV_FIELDS)

    def test_fig3b_layer_column(self):
        cfg = mini_config(experiment="fig3b", grid=(4,), layer_depth=2)
        rows, _ = run_experiment(cfg)
        vcp = next(r for r in rows if r["metric"] == "infid_vcp")
        assert vcp["L"] == 2

    def test_fig7_exact_columns(self):
        cfg = ExperimentConfig.from_dict(
            {"experiment": "fig7", "seed": 1, "num_qubits": 1, "grid": [0.0, 0.4, 2 / 3]}
        )
        rows, _ = run_experiment(cfg)
        direct = {r["p"]: r["value"] for r in rows if r["metric"] == "F_direct"}
        assert direct[0.4] == pytest.approx(1 - 0.3)
        purified = {r["p"]: r["value"] for r in rows if r["metric"] == "F_purified"}
        assert purified[2 / 3] == pytest.approx(0.5625, abs=1e-12)

    def test_variance_mc_consistency(self):
        cfg = ExperimentConfig.from_dict(
            {"experiment": "variance-mc", "seed": 3, "shots": 4000, "bootstrap": 100}
        )
        rows, _ = run_experiment(cfg)
        by_metric = {r["metric"]: r["value"] for r in rows}
        assert by_metric["mean_exact"] == pytest.approx(0.8 / 0.82, abs=1e-12)
        assert by_metric["c_em"] == pytest.approx(0.82**-2, abs=1e-12)
        assert abs(by_metric["var_empirical"] - by_metric["var_formula"]) < 4 * by_metric["var_boot_se"]

    def test_qec_merge_rows(self):
        cfg = ExperimentConfig.from_dict({"experiment": "qec-merge", "seed": 5, "replicates": 3})
        rows, _ = run_experiment(cfg)
        by_metric = {r["metric"]: r["value"] for r in rows}
        assert by_metric["factor_correct"] == pytest.approx(0.52**-2, abs=1e-9)
        assert by_metric["factor_postselect"] == pytest.approx(0.49**-2, abs=1e-9)
        assert by_metric["max_diff_correct"] < 1e-10

    def test_detectors_rows(self):
        cfg = ExperimentConfig.from_dict({"experiment": "detectors", "seed": 5})
        rows, _ = run_experiment(cfg)
        by_metric = {r["metric"]: r["value"] for r in rows}
        assert by_metric["p_minus"] == pytest.approx(0.09, abs=1e-12)
        assert by_metric["coherent_sum_choi_diff"] < 1e-12
        assert by_metric["incoherent_trace_sum_dev"] < 1e-12

    def test_budget_table_rows(self):
        cfg = ExperimentConfig.from_dict(
            {"experiment": "budget-table", "seed": 1, "num_qubits": 2, "depth": 6, "gate_error": 0.01}
        )
        rows, _ = run_experiment(cfg)
        per_layer = [r for r in rows if r["metric"] == "P_c_tot"]
        assert len(per_layer) == 6
        assert any(r["metric"] == "L_star_numeric" for r in rows)

    def test_fig3e_metrics(self):
        cfg = mini_config(experiment="fig3e", grid=(1, 2), replicates=1)
        rows, _ = run_experiment(cfg)
        metrics = {r["metric"] for r in rows}
        assert metrics == {"infid_tot", "infid_cir", "infid_sw"}

    def test_fig3fg_ratios(self):
        cfg = mini_config(experiment="fig3fg", grid=(0.01,), depth_grid=(), layer_candidates=(1, 2))
        rows, _ = run_experiment(cfg)
        metrics = {r["metric"] for r in rows}
        assert {"infid_vsp", "infid_vcp_single", "infid_vcp_opt", "ratio_single", "ratio_opt", "L_opt"} <= metrics

    def test_figA6_rows(self):
        cfg = mini_config(experiment="figA6", grid=(0.01,), depth_grid=(), layer_candidates=(1, 2))
        rows, _ = run_experiment(cfg)
        metrics = {r["metric"] for r in rows}
        assert {"L_opt_sim", "L_star_numeric", "L_star_closed"} <= metrics


class TestReproducibility:
    def test_identical_bytes_same_config(self):
        cfg = mini_config()
        _, a = run_experiment(cfg)
        _, b = run_experiment(mini_config())
        assert a == b

    def test_threads_do_not_change_bytes(self):
        cfg = mini_config(replicates=3)
        _, seq = run_experiment(cfg, threads=1)
        _, par = run_experiment(mini_config(replicates=3), threads=2)
        assert seq == par

    def test_different_seed_changes_values(self):
        _, a = run_experiment(mini_config(seed=7))
        _, b = run_experiment(mini_config(seed=8))
        assert a != b


class TestCli:
    def test_run_subcommand(self, tmp_path):
        config = dict(experiment="fig7", seed=1, num_qubits=1, grid=[0.0, 0.5])
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        out_dir = tmp_path / "results"
        rc = cli_main(["run", "--config", str(cfg_path), "--out", str(out_dir)])
        assert rc == 0
        out_file = out_dir / "fig7.csv"
        assert out_file.exists()
        assert out_file.read_text().startswith(",".join(CSV_FIELDS))

    def test_run_seed_override(self, tmp_path):
        config = dict(experiment="qec-merge", seed=1, replicates=1)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        rc = cli_main(["run", "--config", str(cfg_path), "--out", str(tmp_path), "--seed", "9"])
        assert rc == 0

    def test_budget_subcommand(self, tmp_path, capsys):
        params = dict(num_qubits=2, depth=8, gate_error=0.01)
        path = tmp_path / "params.json"
        path.write_text(json.dumps(params))
        out = tmp_path / "budget.csv"
        rc = cli_main(["budget", "--params", str(path), "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("N,D,p,")
        assert len(lines) == 9  # header + one row per layer count

    def test_validate_subcommand(self, capsys):
        assert cli_main(["validate"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out

    def test_entry_point_installed(self):
        proc = subprocess.run(
            [sys.executable, "-m", "vcplab.cli", "validate"], capture_output=True, text=True
        )
        assert proc.returncode == 0


class TestCsvFormat:
    def test_floats_round_trip(self):
        rows = [dict(zip(CSV_FIELDS, [""] * len(CSV_FIELDS)))]
        rows[0].update({"metric": "x", "value": 0.1 + 0.2})
        text = rows_to_csv(rows)
        cell = text.splitlines()[1].split(",")[CSV_FIELDS.index("value")]
        assert float(cell) == 0.1 + 0.2
