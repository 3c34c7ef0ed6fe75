import json
import math
import os

import pytest

from latticegate import ConfigError
from latticegate.cli import (ExperimentConfig, main, parse_config, recipe_text,
                             run_config)

RAMSEY_CFG = """\
[run]
command = ramsey

[lattice]
n_atoms = 4

[calibration]
anchors = 210e-6:1pi 450e-6:2pi

[noise]
ensemble_size = 3
fill_probability = 0.9
seed = 5

[scan]
t_hold_us = 120
alpha_points = 16
"""


class TestParseConfig:
    def test_minimal_with_defaults(self):
        cfg = parse_config(RAMSEY_CFG, "ramsey")
        assert cfg.get("lattice", "boundary") == "open"  # default applied
        assert cfg.get("scan", "alpha_points") == 16
        assert cfg.get("noise", "seed") == 5
        assert cfg.get("calibration", "anchors")[0][1] == pytest.approx(math.pi)

    def test_unknown_key_reports_line(self):
        bad = RAMSEY_CFG.replace("[scan]", "typo_key = 1\n[scan]")
        with pytest.raises(ConfigError, match=r"line 15: unknown key 'typo_key'"):
            parse_config(bad, "ramsey")

    def test_unknown_section_rejected(self):
        with pytest.raises(ConfigError, match=r"unknown section \[widgets\]"):
            parse_config(RAMSEY_CFG + "\n[widgets]\nfoo = 1\n", "ramsey")

    def test_negative_hold_rejected_before_running(self):
        bad = RAMSEY_CFG.replace("t_hold_us = 120", "t_hold_us = -3")
        with pytest.raises(ConfigError, match="non-negative"):
            parse_config(bad, "ramsey")

    def test_type_errors_carry_line_numbers(self):
        bad = RAMSEY_CFG.replace("n_atoms = 4", "n_atoms = four")
        with pytest.raises(ConfigError, match=r"line 5"):
            parse_config(bad, "ramsey")

    def test_duplicate_key_rejected(self):
        bad = RAMSEY_CFG + "\n[scan]\nt_hold_us = 10\n"
        with pytest.raises(ConfigError, match="duplicate key"):
            parse_config(bad, "ramsey")

    def test_command_mismatch(self):
        with pytest.raises(ConfigError, match="declares command"):
            parse_config(RAMSEY_CFG, "visibility-scan")

    def test_pi_literals(self):
        cfg = parse_config(RAMSEY_CFG.replace(
            "anchors = 210e-6:1pi 450e-6:2pi",
            "anchors = 210e-6:0.5pi 450e-6:pi"), "ramsey")
        assert cfg.get("calibration", "anchors")[0][1] == pytest.approx(math.pi / 2)

    def test_missing_required(self):
        bad = "\n".join(l for l in RAMSEY_CFG.splitlines() if "n_atoms" not in l)
        with pytest.raises(ConfigError, match=r"missing required key: \[lattice\] n_atoms"):
            parse_config(bad, "ramsey")

    def test_nested_dict_and_hash(self):
        cfg = parse_config(RAMSEY_CFG, "ramsey")
        assert isinstance(cfg, ExperimentConfig)
        d = cfg.as_nested_dict()
        assert d["lattice"]["n_atoms"] == 4
        assert len(cfg.sha256) == 64


class TestCommands:
    def test_ramsey_writes_csv_and_sidecar(self, tmp_path):
        files = run_config("ramsey", RAMSEY_CFG, str(tmp_path))
        names = sorted(os.path.basename(f) for f in files)
        assert names == ["ramsey.csv", "ramsey.csv.json"]
        lines = (tmp_path / "ramsey.csv").read_text().splitlines()
        assert lines[0] == "alpha_rad,p_one"
        assert len(lines) == 17
        meta = json.loads((tmp_path / "ramsey.csv.json").read_text())
        assert meta["command"] == "ramsey"
        assert meta["master_seed"] == 5
        assert meta["rng"] == "numpy.random.Philox"

    def test_seed_override(self, tmp_path):
        run_config("ramsey", RAMSEY_CFG, str(tmp_path), seed=99)
        meta = json.loads((tmp_path / "ramsey.csv.json").read_text())
        assert meta["master_seed"] == 99

    def test_calibrate_command(self, tmp_path):
        cfg = """\
[run]
command = calibrate
[calibration]
anchors = 210e-6:1pi 450e-6:2pi
"""
        files = run_config("calibrate", cfg, str(tmp_path))
        rows = (tmp_path / "calibration.csv").read_text().splitlines()
        slope, offset, u01, resid = map(float, rows[1].split(","))
        assert slope == pytest.approx(math.pi / 240e-6, rel=1e-9)
        assert offset == pytest.approx(math.pi / 8, rel=1e-6)
        assert u01 == pytest.approx(2083.33, rel=1e-4)
        assert resid < 1e-12
        assert len(files) == 2

    def test_cluster_command_with_verification(self, tmp_path):
        cfg = """\
[run]
command = cluster
[cluster]
dims = 4, 4
axes = xy
verify = true
"""
        run_config("cluster", cfg, str(tmp_path))
        lines = (tmp_path / "cluster.csv").read_text().splitlines()
        assert lines == ["size,count", "16,1"]

    def test_percolation_scan_and_threshold(self, tmp_path):
        scan_cfg = """\
[run]
command = percolation
[percolation]
mode = scan
dims = 8, 8, 8
p_list = 0.2, 0.6
trials = 10
"""
        run_config("percolation", scan_cfg, str(tmp_path))
        lines = (tmp_path / "percolation.csv").read_text().splitlines()
        assert lines[0].startswith("p,trials,spanning_prob")
        assert len(lines) == 3
        thr_cfg = """\
[run]
command = percolation
[percolation]
mode = threshold
ndim = 2
size = 16
trials = 40
tolerance = 0.02
[output]
prefix = thr
"""
        run_config("percolation", thr_cfg, str(tmp_path))
        head, row = (tmp_path / "thr.csv").read_text().splitlines()
        assert head.startswith("p_c,stderr")
        assert 0.4 < float(row.split(",")[0]) < 0.8

    def test_interference_command(self, tmp_path):
        cfg = """\
[run]
command = interference
[lattice]
n_atoms = 3
[calibration]
anchors = 210e-6:1pi 450e-6:2pi
[scan]
t_hold_us_list = 30, 210
x_points = 64
"""
        files = run_config("interference", cfg, str(tmp_path))
        assert sorted(os.path.basename(f) for f in files) == [
            "interference_a.csv", "interference_a.csv.json",
            "interference_b.csv", "interference_b.csv.json"]

    def test_failure_removes_partial_outputs(self, tmp_path):
        cfg = RAMSEY_CFG.replace("t_hold_us = 120",
                                 "t_hold_us_list = 120, 130, 140")
        import latticegate.analysis as analysis_mod
        original = analysis_mod.ramsey_scan
        calls = {"n": 0}

        def flaky(*args, **kwargs):
            calls["n"] += 1
            if calls["n"] == 3:
                raise RuntimeError("boom")
            return original(*args, **kwargs)

        analysis_mod.ramsey_scan = flaky
        try:
            with pytest.raises(RuntimeError):
                run_config("ramsey", cfg, str(tmp_path / "part"))
        finally:
            analysis_mod.ramsey_scan = original
        assert not list((tmp_path / "part").glob("*"))


class TestMain:
    def test_exit_codes_and_output_listing(self, tmp_path, capsys):
        cfg_path = tmp_path / "r.cfg"
        cfg_path.write_text(RAMSEY_CFG)
        rc = main(["ramsey", "--config", str(cfg_path), "--out", str(tmp_path / "o")])
        assert rc == 0
        out = capsys.readouterr().out.splitlines()
        assert any(line.endswith("ramsey.csv") for line in out)

    def test_bad_config_exits_nonzero(self, tmp_path, capsys):
        cfg_path = tmp_path / "bad.cfg"
        cfg_path.write_text(RAMSEY_CFG + "\nnonsense\n")
        rc = main(["ramsey", "--config", str(cfg_path), "--out", str(tmp_path)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["ramsey", "--config", str(tmp_path / "nope.cfg")])
        assert rc == 1


class TestRecipes:
    def test_bundled_recipes_parse(self):
        for name, command in [("fig2.cfg", "ramsey"), ("fig3.cfg", "visibility-scan"),
                              ("fig4.cfg", "interference"),
                              ("fig5.cfg", "interference-scan")]:
            cfg = parse_config(recipe_text(name), command)
            assert cfg.get("noise", "ensemble_size") == 200

    def test_fig4_hold_grid(self):
        cfg = parse_config(recipe_text("fig4.cfg"), "interference")
        assert cfg.get("scan", "t_hold_us_list") == [30, 90, 150, 210, 270, 330,
                                                     390, 450]
