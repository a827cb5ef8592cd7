import json

from grauert_lab import cli


def test_pass_exit_code_and_json(tmp_path, capsys):
    out = tmp_path / "o.json"
    rc = cli.main(["oracle", "--config", "builtin:toeplitz-diagonality", "--format", "json", "--out", str(out)])
    assert rc == 0
    data = json.loads(out.read_text())
    assert data["passed"] and data["kind"] == "oracle"
    assert "PASS" in capsys.readouterr().out


def test_fail_exit_code(tmp_path):
    rc = cli.main(["oracle", "--config", "builtin:toeplitz-diagonality", "--set", "toeplitz_offdiag_tol = 1e-30",
                   "-q"])
    assert rc == 1


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("nope = 1\n")
    assert cli.main(["geometry", "--config", str(bad)]) == 2
    assert "unknown key" in capsys.readouterr().err
    assert cli.main(["geometry", "--threads", "0"]) == 2
    assert cli.main(["geometry", "--set", "novalue"]) == 2


def test_runtime_error_exit_code():
    assert cli.main(["szego-diag", "--set", "max_modes = 10", "-q"]) == 2


def test_plot_and_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("GRAUERT_LAB_OUTDIR", str(tmp_path))
    cli.main(["szego-diag", "--plot-data", "-q", "--set", "lambdas = 100, 200, 300, 400",
              "--set", "diag_check_lambdas = 400", "--set", "diag_check_tols = 0.1"])
    text = (tmp_path / "szego-diag.plot.csv").read_text()
    assert text.startswith("series,x,y\n") and "abs_kernel" in text


def test_seed_recorded(tmp_path):
    out = tmp_path / "g.json"
    cli.main(["oracle", "--config", "builtin:toeplitz-diagonality", "--seed", "7", "--format", "json",
              "--out", str(out), "-q"])
    assert json.loads(out.read_text())["config"]["seed"] == 7
