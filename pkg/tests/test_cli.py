import json

import pytest

from piezobeam.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main

QUICK = ["--override", "T_final=0.05", "--override", "grid.N=16", "--override", "output.every=10"]


def test_run_writes_outputs(tmp_path, capsys):
    assert main(["run", "--out", str(tmp_path), *QUICK]) == EXIT_OK
    assert (tmp_path / "timeseries.csv").exists()
    assert "E(T)/E(0)" in capsys.readouterr().out


def test_run_with_config_file(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("model: MT_LIN\ncontroller:\n  mode: Partial\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), *QUICK]) == EXIT_OK
    assert "MT_LIN" in (tmp_path / "o" / "config.yaml").read_text()


@pytest.mark.parametrize("override", ["model=XX", "grid.N=1", "bogus=1", "controller.c1=-2", "integrator.dt=0"])
def test_bad_config_exit_code(tmp_path, override, capsys):
    assert main(["run", "--out", str(tmp_path), "--override", override]) == EXIT_CONFIG
    assert "config error" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == EXIT_CONFIG


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    import piezobeam.scenario as scenario
    from piezobeam.integrator import IntegratorError

    class Failing(scenario.Stepper):
        def step(self, t, y, fy=None):
            raise IntegratorError("Newton did not converge", t, [1.0])

    monkeypatch.setattr(scenario, "Stepper", Failing)
    assert main(["run", "--out", str(tmp_path), *QUICK]) == EXIT_SOLVER
    assert (tmp_path / "timeseries.csv").exists()


def test_converge_report(tmp_path):
    args = ["converge", "--override", "model=EB_LIN", "--levels", "16,32,64", "--t-final", "0.1", "--dt", "1e-3", "--out", str(tmp_path)]
    assert main(args) == EXIT_OK
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["kind"] == "space" and len(rep["errors"]) == 3


def test_converge_insufficient_levels():
    assert main(["converge", "--levels", "32"]) == EXIT_CONFIG
    assert main(["converge", "--levels", "a,b"]) == EXIT_CONFIG


def test_sweep_report(capsys):
    args = ["sweep", "--values", "1", "--t-final", "0.05", "--override", "grid.N=16", "--override", "output.every=10"]
    assert main(args) == EXIT_OK
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 1 and rows[0]["complete"]


def test_check_subcommand(capsys):
    assert main(["check", "1", "7"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2 and all(line.startswith("PASS") for line in out)


def test_check_unknown_key():
    assert main(["check", "42"]) == EXIT_CONFIG


def test_check_failure_exit_code(monkeypatch):
    import piezobeam.checks as checks

    monkeypatch.setitem(checks.CHECKS, "1", lambda: [checks.CheckResult("1", "forced", False, "red", {})])
    assert main(["check", "1"]) == EXIT_CHECK


def test_usage_errors():
    with pytest.raises(SystemExit):
        main([])
    with pytest.raises(SystemExit):
        main(["converge"])
