"""Front-door behavior: exit statuses, manifests, reproducibility."""

import json


import pytest

from burgerslab.cli import main
from burgerslab.acceptance import run_checks
from burgerslab.experiments import (
    ConfigError,
    RunConfig,
    load_config_file,
    run_experiment,
)


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestExitCodes:
    def test_malformed_config_names_field(self, tmp_path, capsys):
        status = main(["sample", "--spacing", "-2",
                       "--out", str(tmp_path / "x")])
        assert status == 1
        assert "spacing" in capsys.readouterr().err

    def test_invalid_hurst(self, tmp_path, capsys):
        status = main(["dim", "--hurst", "1.5", "--out", str(tmp_path / "x")])
        assert status == 1
        assert "hurst" in capsys.readouterr().err

    def test_missing_manifest(self, tmp_path, capsys):
        status = main(["rerun", str(tmp_path / "nope.json")])
        assert status == 1

    def test_failed_check_exits_3(self, tmp_path):
        status = main(["persist", "--hurst", "0.5",
                       "--horizon", "8,16,32,64", "--replicas", "300",
                       "--seed", "4", "--out", str(tmp_path / "p"),
                       "--check"])
        assert status == 3  # tiny ladder misses the known exponent


class TestDeterminism:
    def test_same_config_same_bytes(self, tmp_path):
        args = ["persist", "--hurst", "0.4", "--horizon", "4,8,16,32",
                "--replicas", "200", "--seed", "7"]
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert read_bytes(a / "records.jsonl") == read_bytes(b / "records.jsonl")
        assert read_bytes(a / "fits.json") == read_bytes(b / "fits.json")

    def test_manifest_rerun_byte_identical(self, tmp_path):
        out = tmp_path / "run"
        status = main(["chain", "--hurst", "0.5", "--replicas", "300",
                       "--seed", "5", "--opt", "n=8", "--out", str(out)])
        assert status == 0
        again = tmp_path / "again"
        assert main(["rerun", str(out / "manifest.json"),
                     "--out", str(again)]) == 0
        assert read_bytes(out / "chain.json") == read_bytes(again / "chain.json")

    def test_worker_cap_does_not_change_outputs(self, tmp_path, monkeypatch):
        cfg = RunConfig("dim", hurst=(0.4, 0.6), replicas=2, seed=3,
                        options={"grid-log2": "11"})
        import dataclasses
        monkeypatch.setenv("BURGERSLAB_WORKERS", "1")
        run_experiment(dataclasses.replace(cfg, out=str(tmp_path / "w1")))
        monkeypatch.setenv("BURGERSLAB_WORKERS", "2")
        run_experiment(dataclasses.replace(cfg, out=str(tmp_path / "w2")))
        assert read_bytes(tmp_path / "w1" / "records.jsonl") == \
            read_bytes(tmp_path / "w2" / "records.jsonl")


class TestConfigFile:
    def test_file_plus_flag_override(self, tmp_path):
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text(
            "# dimension experiment\n"
            "experiment = dim\n"
            "hurst = 0.5\n"
            "replicas = 2\n"
            "seed = 11\n"
            "grid-log2 = 11\n")
        doc = load_config_file(cfg_file)
        assert doc["options"]["grid-log2"] == "11"
        out = tmp_path / "out"
        status = main(["dim", "--config", str(cfg_file), "--replicas", "3",
                       "--out", str(out)])
        assert status in (0, 2)
        manifest = json.loads(read_bytes(out / "manifest.json"))
        assert manifest["config"]["replicas"] == 3  # flag beat the file
        assert manifest["config"]["seed"] == 11

    def test_bad_line_reports_location(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("replicas 100\n")
        with pytest.raises(ConfigError, match="bad.cfg:1"):
            load_config_file(bad)


class TestArtifacts:
    def test_persist_record_fields(self, tmp_path):
        out = tmp_path / "p"
        assert main(["persist", "--hurst", "0.5", "--horizon", "4,8",
                     "--replicas", "150", "--seed", "2",
                     "--out", str(out)]) == 0
        rows = [json.loads(line) for line in
                (out / "records.jsonl").read_text().splitlines()]
        assert {"p", "se", "replicas", "seed", "spacing", "event",
                "horizon"} <= set(rows[0])

    def test_sample_and_solve_outputs(self, tmp_path):
        out = tmp_path / "s"
        assert main(["sample", "--hurst", "0.5", "--replicas", "2",
                     "--seed", "1", "--opt", "points=16",
                     "--out", str(out)]) == 0
        assert (out / "path_h0.5_r0.csv").exists()
        out2 = tmp_path / "sv"
        assert main(["solve", "--hurst", "0.5", "--replicas", "1",
                     "--seed", "1", "--opt", "half-points=32",
                     "--out", str(out2)]) == 0
        assert (out2 / "solution_h0.5_r0.csv").exists()
        assert (out2 / "clusters_h0.5_r0.jsonl").exists()

    def test_chain_json_keyed_by_relation(self, tmp_path):
        out = tmp_path / "c"
        assert main(["chain", "--hurst", "0.6", "--replicas", "200",
                     "--seed", "3", "--opt", "n=8", "--out", str(out)]) == 0
        doc = json.loads(read_bytes(out / "chain.json"))
        assert set(doc["h=0.6"]["relations"]) == {
            "telescoping", "eq10", "eq11", "eq14", "eq15", "eq16", "eq17"}

    def test_rkhs_verify_output(self, tmp_path):
        out = tmp_path / "r"
        assert main(["rkhs-verify", "--hurst", "0.5", "--replicas", "2000",
                     "--seed", "6", "--opt", "half-points=8",
                     "--opt", "trend=covcol@1*0.1", "--opt", "level=1",
                     "--out", str(out)]) == 0
        doc = json.loads(read_bytes(out / "shift.json"))
        assert {"p_trended", "p_plain", "norm", "lhs", "rhs",
                "pass"} <= set(doc["h=0.5"])


class TestCheckCommand:
    def test_list_names(self, capsys):
        assert main(["check", "--list"]) == 0
        names = capsys.readouterr().out.split()
        assert "dimension" in names and "rkhs" in names

    def test_unknown_check_name(self, capsys):
        assert main(["check", "--only", "bogus"]) == 1

    def test_negative_control_breaks_dimension_target(self):
        base = {"dim.replicas": "4", "dim.grid-log2": "13",
                "dim.slope-tol": "0.3"}
        good = run_checks(["dimension"], base)[0]
        assert good.passed
        broken = run_checks(["dimension"],
                            {**base, "dim.target-h0.5": "0.9"})[0]
        assert not broken.passed

    def test_check_report_written(self, tmp_path):
        report = tmp_path / "report.json"
        status = main(["check", "--only", "telescoping",
                       "--set", "telescoping.sequences=50",
                       "--out", str(report)])
        assert status == 0
        doc = json.loads(report.read_text())
        assert doc["telescoping"]["pass"] is True
