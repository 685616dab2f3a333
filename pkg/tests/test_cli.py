"""Command-line interface: outputs, config precedence, failure paths."""

from __future__ import annotations

import numpy as np
import pytest

from travwave.cli import main


def test_speed_prints_cstar(capsys):
    rc = main(["speed", "--model", "weed", "--ustar", "0.3333333"])
    out = capsys.readouterr().out
    assert rc == 0
    c = float(out.split("=")[1].split()[0])
    assert abs(c - (-0.2357)) < 1e-3


def test_speed_csv_deterministic(tmp_path, capsys):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    assert main(["speed", "--out", str(a)]) == 0
    assert main(["speed", "--out", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "u,p,beta"


def test_csharp_prints_minus_one(capsys):
    rc = main(["model2", "csharp", "--k1", "1", "--k2", "1", "--d", "1"])
    out = capsys.readouterr().out.strip()
    assert rc == 0
    assert out == "-1.0"


def test_spectrum_and_demo(capsys, tmp_path):
    rc = main(["model2", "spectrum", "--c", "-0.9",
               "--out", str(tmp_path / "eig.csv")])
    out = capsys.readouterr().out
    assert rc == 0
    assert "lemma71_regime" in out
    assert (tmp_path / "eig.csv").read_text().splitlines()[0] == "index,re,im"

    rc = main(["model2", "demo", "--c", "-0.9",
               "--json", str(tmp_path / "demo.json")])
    out = capsys.readouterr().out
    assert rc == 0
    assert "within 3 periods: True" in out
    import json
    payload = json.loads((tmp_path / "demo.json").read_text())
    assert payload["results"]["within_three_periods"] is True


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sample config\nmodel = weed\nustar = 0.5\n")
    rc = main(["speed", "--config", str(cfg)])
    out = capsys.readouterr().out
    assert rc == 0
    assert abs(float(out.split("=")[1].split()[0])) < 1e-5  # balanced case

    rc = main(["speed", "--config", str(cfg), "--ustar", "0.3333333"])
    out = capsys.readouterr().out
    assert rc == 0
    assert abs(float(out.split("=")[1].split()[0]) + 0.2357) < 1e-3


def test_unknown_subcommand_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_solver_failure_exit_code(capsys):
    # far above the reachable speed range: no shooting root
    rc = main(["optimal", "--c", "0.75"])
    err = capsys.readouterr().err
    assert rc == 1
    assert "error:" in err


def test_invalid_model_parameter(capsys):
    rc = main(["speed", "--model", "weed", "--ustar", "0.9"])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_effort_csv(tmp_path, capsys, c_star_weed):
    out = tmp_path / "effort.csv"
    rc = main(["effort", "--cmin", "-0.2", "--cmax", "-0.15", "--n", "2",
               "--out", str(out)])
    capsys.readouterr()
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "c,E"
    assert len(lines) == 3
    values = np.array([[float(v) for v in line.split(",")]
                       for line in lines[1:]])
    assert values[0, 1] <= values[1, 1]


def test_optimal_csv_surface(tmp_path, capsys):
    out = tmp_path / "opt.csv"
    rc = main(["optimal", "--c", "-0.2", "--out", str(out)])
    capsys.readouterr()
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "u,p,beta,y"
    body = np.array([[float(v) for v in line.split(",")]
                     for line in lines[1:]])
    active = body[:, 2] > 0.0
    assert np.any(active)
    # stationarity on the active arc: y = -L_beta(u, beta)
    from travwave.model import make_weed_model
    weed = make_weed_model(1.0 / 3.0)
    lb = np.asarray(weed.L_beta(body[active, 0], body[active, 2]))
    assert np.max(np.abs(body[active, 3] + lb)) < 1e-6


def test_verify_single_criterion(capsys):
    rc = main(["verify", "--only", "7"])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.startswith("PASS")
