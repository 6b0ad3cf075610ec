"""Command-line harness: artifacts, determinism, seed precedence, exit codes."""

import json
import os

import pytest

from stosym import cli


def _write_config(tmp_path, name="config.json", **over):
    doc = {
        "problem": {"L": 1.0, "n_cells": 16, "T": 0.25, "epsilon": 2.0**0.5},
        "noise": {"M": 2},
        "run": {
            "dt": 2.0**-4,
            "n_paths": 3,
            "master_seed": 11,
            "output_dir": str(tmp_path / "out"),
        },
    }
    for path, value in over.items():
        section, _, key = path.partition("__")
        if value is None:
            doc.get(section, {}).pop(key, None)
        else:
            doc.setdefault(section, {})[key] = value
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _read(tmp_path, name):
    return (tmp_path / "out" / name).read_text()


def _meta(tmp_path):
    return json.loads(_read(tmp_path, "meta.json"))


def test_simulate_writes_artifacts_and_is_repeatable(tmp_path):
    cfg = _write_config(tmp_path)
    assert cli.main(["simulate", "--config", cfg]) == 0
    first = _read(tmp_path, "trajectory.csv")
    assert first.splitlines()[0] == "step,time,charge,energy,iterations"
    assert len(first.splitlines()) == 6  # header + steps 0..4
    meta = _meta(tmp_path)
    assert meta["command"] == "simulate"
    assert meta["master_seed"] == 11
    assert meta["backend"] in ("cython", "python")
    assert cli.main(["simulate", "--config", cfg]) == 0
    assert _read(tmp_path, "trajectory.csv") == first


def test_simulate_conserves_charge_column(tmp_path):
    cfg = _write_config(tmp_path, problem__epsilon=0.0)
    assert cli.main(["simulate", "--config", cfg]) == 0
    rows = _read(tmp_path, "trajectory.csv").splitlines()[1:]
    charges = [float(r.split(",")[2]) for r in rows]
    assert max(abs(q - charges[0]) for q in charges) <= 1e-8 * charges[0]


def test_config_errors_exit_2(tmp_path, capsys):
    bad_ratio = _write_config(tmp_path, run__dt=0.1)
    assert cli.main(["simulate", "--config", bad_ratio]) == 2
    unknown = _write_config(tmp_path, name="u.json", problem__bogus=1)
    assert cli.main(["simulate", "--config", unknown]) == 2
    assert "unknown key problem.bogus" in capsys.readouterr().err
    assert cli.main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2
    no_dts = _write_config(tmp_path, name="n.json")
    assert cli.main(["converge", "--config", no_dts]) == 2
    assert cli.main(["simulate", "--config", _write_config(tmp_path), "--threads", "0"]) == 2


def test_converge_with_plot(tmp_path):
    cfg = _write_config(
        tmp_path,
        run__dt=None,
        run__dt_list=[2.0**-3, 2.0**-4],
        run__dt_ref=2.0**-6,
    )
    assert cli.main(["converge", "--config", cfg, "--plot"]) == 0
    csv = _read(tmp_path, "convergence.csv")
    assert csv.splitlines()[0] == "dt,rms_error,n_paths,failed_paths"
    assert len(csv.splitlines()) == 3
    assert _read(tmp_path, "convergence.svg").startswith("<?xml")
    results = _meta(tmp_path)["results"]
    assert results["failed_paths"] == 0
    assert results["max_charge_drift"] <= 1e-9


def test_converge_thread_count_does_not_change_bytes(tmp_path):
    cfg = _write_config(
        tmp_path,
        run__dt=None,
        run__dt_list=[2.0**-3, 2.0**-4],
        run__dt_ref=2.0**-5,
        run__n_paths=4,
    )
    assert cli.main(["converge", "--config", cfg, "--threads", "1"]) == 0
    one = _read(tmp_path, "convergence.csv")
    assert cli.main(["converge", "--config", cfg, "--threads", "2"]) == 0
    assert _read(tmp_path, "convergence.csv") == one


def test_conserve_both_writes_comparison(tmp_path):
    cfg = _write_config(tmp_path, scheme__name="both", scheme__comparison_noise="multiplicative")
    assert cli.main(["conserve", "--config", cfg]) == 0
    main_csv = _read(tmp_path, "ensemble.csv")
    assert main_csv.splitlines()[0] == "time,mean_charge,mean_energy,max_charge_drift"
    assert os.path.exists(tmp_path / "out" / "ensemble_comparison.csv")
    results = _meta(tmp_path)["results"]
    assert results["midpoint"]["max_charge_drift"] <= 1e-9
    assert results["nonsymplectic"]["max_charge_drift"] > 1e-4
    assert results["theoretical_energy_slope"] > 0


def test_symplectic_check_pass_and_fail(tmp_path, capsys):
    good = _write_config(tmp_path)
    assert cli.main(["symplectic-check", "--config", good]) == 0
    assert "PASS" in capsys.readouterr().out
    bad = _write_config(tmp_path, name="bad.json", scheme__name="nonsymplectic")
    assert cli.main(["symplectic-check", "--config", bad]) == 4
    out = capsys.readouterr().out
    assert "FAIL" in out
    assert _meta(tmp_path)["results"]["passed"] is False


def test_seed_precedence(tmp_path, monkeypatch):
    cfg = _write_config(tmp_path)
    monkeypatch.setenv("STOSYM_SEED", "77")
    assert cli.main(["simulate", "--config", cfg]) == 0
    assert _meta(tmp_path)["master_seed"] == 77
    assert cli.main(["simulate", "--config", cfg, "--seed", "5"]) == 0
    assert _meta(tmp_path)["master_seed"] == 5
    monkeypatch.delenv("STOSYM_SEED")
    assert cli.main(["simulate", "--config", cfg]) == 0
    assert _meta(tmp_path)["master_seed"] == 11


def test_invalid_env_seed_exits_2(tmp_path, monkeypatch, capsys):
    cfg = _write_config(tmp_path)
    monkeypatch.setenv("STOSYM_SEED", "not-a-number")
    assert cli.main(["simulate", "--config", cfg]) == 2
    assert "STOSYM_SEED" in capsys.readouterr().err


def test_paper_scale_overrides_resolution(tmp_path):
    cfg = _write_config(
        tmp_path,
        problem__epsilon=0.0,
        problem__nonlinearity="free",
        run__dt=0.25,
    )
    assert cli.main(["simulate", "--config", cfg, "--paper-scale"]) == 0
    meta = _meta(tmp_path)
    assert meta["config"]["problem"]["n_cells"] == 512
    assert meta["config"]["run"]["n_paths"] == 500


def test_expression_problem_via_cli(tmp_path):
    cfg = _write_config(
        tmp_path,
        problem__initial={"expression": "cos(pi * x / 2)"},
        problem__nonlinearity={
            "psi": "s**2 / 2",
            "psi_prime": "s",
            "psi_double_prime": "1 + 0*s",
        },
    )
    assert cli.main(["simulate", "--config", cfg]) == 0
    bad = _write_config(
        tmp_path, name="bad_expr.json", problem__initial={"expression": "import_me(x)"}
    )
    assert cli.main(["simulate", "--config", bad]) == 2


def test_no_truncate_flag_is_echoed(tmp_path):
    cfg = _write_config(tmp_path)
    assert cli.main(["simulate", "--config", cfg, "--no-truncate"]) == 0
    assert _meta(tmp_path)["truncate"] is False
