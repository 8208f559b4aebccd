"""Scenario config, replication rows, sweeps, CSV/JSON output, CLI exit codes."""
from __future__ import annotations

import dataclasses
import json
import math

import pytest
from scipy import stats

import edgestream.cli_metrics as cm
from edgestream.cli_metrics import (
    CSV_COLUMNS,
    ConfigError,
    ScenarioConfig,
    load_config,
    main,
    mean_ci,
    oracle_check,
    run_scenario,
    run_sweep,
    summarize,
    write_csv,
    write_json,
)

TINY = dataclasses.replace(
    ScenarioConfig(), schemes=("CPH", "CLIENT"), n_clients=2, n_videos=2,
    chunk_count=10, reps=2)


class TestScenarioConfig:
    def test_defaults_validate(self):
        ScenarioConfig().validate()

    @pytest.mark.parametrize("kw", [
        dict(schemes=()),
        dict(schemes=("NOPE",)),
        dict(n_clients=0),
        dict(levels=1),
        dict(min_bitrate_bps=2e6, max_bitrate_bps=1e6),
        dict(gamma=-1),
        dict(b_min_s=10.0, b_max_s=5.0),
        dict(pareto_cap=0),
        dict(cache_capacity_bits=0.0),
        dict(backhaul_mbps=-1.0),
        dict(start_offset_max_s=-1.0),
        dict(reps=0),
        dict(chunk_duration_s=0.0),
    ])
    def test_invalid_configs_rejected(self, kw):
        with pytest.raises(ConfigError):
            dataclasses.replace(ScenarioConfig(), **kw).validate()


class TestLoadConfig:
    def test_full_round_trip(self, tmp_path):
        path = tmp_path / "scenario.cfg"
        path.write_text(
            "# scenario\n"
            "n_clients = 3   # tail comment\n"
            "chunk_count = 12\n"
            "schemes = CPH, CLIENT\n"
            "pareto_cap = none\n"
            "max_time_s = 500.0\n"
            "mu_c = 1.5\n"
            "\n")
        cfg = load_config(str(path))
        assert cfg.n_clients == 3
        assert cfg.chunk_count == 12
        assert cfg.schemes == ("CPH", "CLIENT")
        assert cfg.pareto_cap is None
        assert cfg.max_time_s == 500.0
        assert cfg.mu_c == 1.5
        assert cfg.n_videos == 10  # untouched default

    @pytest.mark.parametrize("line", [
        "wat = 3",
        "n_clients = abc",
        "n_clients 3",
        "gamma = -2",
    ])
    def test_bad_lines_rejected(self, tmp_path, line):
        path = tmp_path / "bad.cfg"
        path.write_text(line + "\n")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "nope.cfg"))


class TestMeanCi:
    def test_empty(self):
        mean, half = mean_ci([])
        assert math.isnan(mean) and math.isnan(half)

    def test_single_value(self):
        mean, half = mean_ci([3.5])
        assert mean == 3.5 and math.isnan(half)

    def test_three_values(self):
        mean, half = mean_ci([1.0, 2.0, 3.0])
        assert mean == 2.0
        assert half == pytest.approx(stats.t.ppf(0.975, 2) * math.sqrt(1.0 / 3.0))

    def test_degenerate_spread(self):
        mean, half = mean_ci([5.0, 5.0, 5.0, 5.0])
        assert mean == 5.0 and half == 0.0


class TestRunScenario:
    def test_rows_cover_all_scheme_rep_pairs(self):
        rows, violations = run_scenario(TINY)
        assert violations == []
        assert len(rows) == 2 * 2
        assert {(r["scheme"], r["replication"]) for r in rows} == \
            {("CPH", 0), ("CPH", 1), ("CLIENT", 0), ("CLIENT", 1)}
        for r in rows:
            assert set(r) == set(CSV_COLUMNS)
            assert r["seed"] == TINY.base_seed + r["replication"]
            assert r["param"] == "" and r["param_value"] == ""
            assert r["mean_bitrate_kbps"] > 0

    def test_parallel_jobs_match_serial(self):
        serial, _ = run_scenario(TINY)
        parallel, _ = run_scenario(TINY, jobs=2)
        key = lambda r: (r["scheme"], r["replication"])
        assert sorted(serial, key=key) == sorted(parallel, key=key)


class TestRunSweep:
    def test_unknown_param_rejected(self):
        with pytest.raises(ConfigError):
            run_sweep(TINY, "radius_m", [50.0])

    def test_sweep_stamps_param_columns(self):
        cfg = dataclasses.replace(TINY, schemes=("CLIENT",), reps=1)
        rows, violations = run_sweep(cfg, "n_clients", [1, 2])
        assert violations == []
        assert len(rows) == 2
        assert {r["param_value"] for r in rows} == {"1", "2"}
        assert all(r["param"] == "n_clients" for r in rows)
        by_value = {r["param_value"]: r for r in rows}
        assert by_value["1"]["n_clients"] == 1
        assert by_value["2"]["n_clients"] == 2

    def test_invalid_sweep_value_rejected(self):
        with pytest.raises(ConfigError):
            run_sweep(TINY, "n_clients", [0])


class TestOutput:
    def _rows(self):
        rows, _ = run_scenario(TINY)
        return rows

    def test_csv_is_deterministic_and_sorted(self, tmp_path):
        rows = self._rows()
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(rows, str(a))
        write_csv(list(reversed(rows)), str(b))  # input order must not matter
        assert a.read_bytes() == b.read_bytes()
        header = a.read_text().splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)

    def test_json_document_shape(self, tmp_path):
        rows = self._rows()
        path = tmp_path / "out.json"
        write_json(TINY, rows, str(path))
        doc = json.loads(path.read_text())
        assert set(doc) == {"config", "rows", "summary"}
        assert doc["config"]["n_clients"] == 2
        assert doc["config"]["cache_capacity_bits"] == "inf"
        assert len(doc["rows"]) == len(rows)
        base = doc["summary"][""][""]
        assert set(base) == {"CPH", "CLIENT"}
        assert base["CPH"]["mean_bitrate_kbps"]["n"] == 2

    def test_summarize_drops_nan_cells(self):
        template = {c: 0 for c in CSV_COLUMNS}
        rows = []
        for rep, latency in enumerate([1.0, float("nan")]):
            row = dict(template, scheme="CPH", replication=rep,
                       param="", param_value="", initial_latency_s=latency)
            rows.append(row)
        block = summarize(rows)[""][""]["CPH"]
        assert block["initial_latency_s"]["n"] == 1
        assert block["initial_latency_s"]["mean"] == 1.0
        assert block["mean_bitrate_kbps"]["n"] == 2


def test_oracle_check_small_batch():
    checked, mismatches = oracle_check(25, seed=7)
    assert checked == 25
    assert mismatches == 0


class TestMainExitCodes:
    def test_config_error_is_exit_2(self, capsys):
        assert main(["run", "--gamma", "-1"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_run_success_is_exit_0(self, tmp_path):
        cfg = tmp_path / "tiny.cfg"
        cfg.write_text(
            "schemes = CLIENT\nn_clients = 2\nn_videos = 2\n"
            "chunk_count = 8\nreps = 1\n")
        out_csv = tmp_path / "rows.csv"
        code = main(["run", "--config", str(cfg), "--out-csv", str(out_csv)])
        assert code == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 2 and lines[1].startswith("CLIENT,0,1,")

    def test_violations_are_exit_3(self, monkeypatch, capsys):
        monkeypatch.setattr(cm, "run_scenario",
                            lambda cfg, jobs=1: ([], ["fake violation"]))
        assert main(["run", "--clients", "1"]) == 3
        assert "invariant violation" in capsys.readouterr().err

    def test_oracle_check_clean_is_exit_0(self, capsys):
        assert main(["oracle-check", "--instances", "5", "--seed", "3"]) == 0
        assert "5 instances, 0 mismatches" in capsys.readouterr().out

    def test_sweep_cli_end_to_end(self, tmp_path):
        cfg = tmp_path / "tiny.cfg"
        cfg.write_text(
            "schemes = CLIENT\nn_clients = 2\nn_videos = 2\n"
            "chunk_count = 8\nreps = 1\n")
        out_csv = tmp_path / "sweep.csv"
        code = main(["sweep", "--config", str(cfg), "--param", "gamma",
                     "--values", "0,1", "--out-csv", str(out_csv)])
        assert code == 0
        lines = out_csv.read_text().splitlines()
        assert len(lines) == 1 + 2  # header + one row per gamma value
