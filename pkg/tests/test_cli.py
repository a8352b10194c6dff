import csv
import json

import pytest

from thermodamage.cli import main
from thermodamage.grid import read_snapshot

SHORT = ["--override", "schedule.T=0.003", "--override", "mesh.n=16"]


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "run"
    code = main(["run", "--out", str(out), *SHORT, "--override", "output.snapshot_every=1"])
    assert code == 0
    rows = list(csv.DictReader(open(out / "ledger.csv")))
    assert [int(r["k"]) for r in rows] == [1, 2, 3]
    # 17 significant digits
    assert len(rows[0]["slack"].lstrip("-").replace(".", "").split("e")[0].lstrip("0")) >= 15
    report = json.loads((out / "report.json").read_text())
    assert report["pass"] and report["experiment"] == "single_run"
    t, coords, cols = read_snapshot(out / "fields_k3.txt")
    assert t == pytest.approx(0.003)
    assert set(cols) == {"w", "chi", "u_0"}
    assert (out / "fields_k0.txt").exists()


def test_run_from_config_file(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text('scheme = "irreversible"\nmesh.dim = 1\nmesh.n = 8\nschedule.T = 0.002\n'
                   'schedule.tau = 0.001\nmaterial.mu = 1\nmaterial.W = "indicator0inf"\n')
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["checks"]["chi_nonincreasing"]


def test_bad_override_exit_code(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path), "--override", "material.mu=1"]) == 2
    assert "indicator0inf" in capsys.readouterr().err


def test_run_is_deterministic(tmp_path):
    for name in ("a", "b"):
        assert main(["run", "--out", str(tmp_path / name), *SHORT]) == 0
    assert (tmp_path / "a" / "ledger.csv").read_text() == (tmp_path / "b" / "ledger.csv").read_text()


def test_contdep_subcommand(tmp_path):
    code = main(["contdep", "--out", str(tmp_path), "--override", "schedule.T=0.004",
                 "--override", "experiment.epsilons=[0.01, 0.001]"])
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["experiment"] == "continuous_dependence"
    assert code == (0 if report["pass"] else 1)
    assert len(report["table"]) == 2


def test_sweep_delta_subcommand(tmp_path):
    code = main(["sweep-delta", "--out", str(tmp_path), "--override", "schedule.T=0.01",
                 "--override", "experiment.deltas=[0.1, 0.01]"])
    report = json.loads((tmp_path / "report.json").read_text())
    assert code == 0 and report["pass"]
    assert [r["delta"] for r in report["table"]] == [0.1, 0.01]


def test_refine_tau_subcommand(tmp_path):
    code = main(["refine-tau", "--out", str(tmp_path), "--override", "experiment.levels=3"])
    report = json.loads((tmp_path / "report.json").read_text())
    assert "trajectories" not in report
    assert code == (0 if report["pass"] else 1)


def test_check_subset(tmp_path, capsys):
    assert main(["check", "--only", "8,9", "--out", str(tmp_path), "--seed", "4"]) == 0
    out = capsys.readouterr().out
    assert "criterion 08" in out and "criterion 09" in out
    assert json.loads((tmp_path / "report.json").read_text())["pass"]
