import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grauert_lab import lab_harness as lh


def test_defaults_load_and_echo():
    cfg = lh.load_config()
    assert cfg.d == 2 and cfg.tau == 0.5 and cfg.window == "bump"
    assert cfg.lambdas == (250.0, 500.0, 1000.0, 2000.0, 4000.0)
    assert set(cfg.as_dict()) == set(lh._PARSERS)


def test_user_file_overlays_defaults(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\ntau = 0.25   # inline\nlambdas = 100, 200\n")
    cfg = lh.load_config(p)
    assert cfg.tau == 0.25 and cfg.lambdas == (100.0, 200.0) and cfg.d == 2


@pytest.mark.parametrize("text,msg", [
    ("nonsense = 3", "unknown key"),
    ("tau = 0.5\ntau = 0.6", "duplicate"),
    ("d = two", "bad value"),
    ("window = square", "bad value"),
    ("just words", "expected"),
])
def test_parse_errors(text, msg):
    with pytest.raises(lh.ConfigError, match=msg):
        lh.parse_config_text(text)


@pytest.mark.parametrize("ov,msg", [
    ({"d": 1}, "d must be"),
    ({"tau": 0.0}, "tau"),
    ({"lambdas": (500.0, 250.0)}, "strictly increasing"),
    ({"decay_delta": 0.2}, "decay_delta"),
    ({"threads": 0}, "threads"),
    ({"near_ratio_range": (1.1, 0.9)}, "increasing pair"),
])
def test_validation(ov, msg):
    with pytest.raises(lh.ConfigError, match=msg):
        lh.load_config(overrides=ov)


def test_unknown_override_and_builtin():
    with pytest.raises(lh.ConfigError):
        lh.load_config(overrides={"zzz": 1})
    with pytest.raises(lh.ConfigError):
        lh.load_config("builtin:nope")
    with pytest.raises(lh.ConfigError):
        lh.load_config("/nonexistent/file.cfg")


def test_every_builtin_resolves():
    for name in lh.BUILTIN_CONFIGS:
        kind, cfg = lh.builtin_config(name)
        assert kind in lh.EXPERIMENT_KINDS
    assert lh.builtin_config("stationary-phase")[1].oracle_suite == "stationary"
    assert lh.builtin_config("weyl-laws")[1].window == "fejer"


def test_fit_exact_and_constant():
    lams = np.geomspace(100, 4000, 8)
    f = lh.fit_power_law(lams, 3.0 * lams**1.5)
    assert f.exponent == pytest.approx(1.5, abs=1e-12)
    assert f.prefactor == pytest.approx(3.0, rel=1e-10)
    assert f.r2 == pytest.approx(1.0) and f.n == 8
    assert lh.fit_power_law(lams, np.full(8, 2.0)).exponent == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_fit_with_noise(p, seed):
    rng = np.random.default_rng(seed)
    lams = np.geomspace(250, 4000, 10)
    vals = lams**p * (1 + 0.01 * rng.uniform(-1, 1, lams.size))
    assert lh.fit_power_law(lams, vals).exponent == pytest.approx(p, abs=0.05)


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        lh.fit_power_law([1, 2, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        lh.fit_power_law([1, 2, 3, 4], [1, 0, 3, 4])


def test_check_semantics():
    assert lh.Check("a", 0.5, "in", (0.0, 1.0)).passed
    assert not lh.Check("a", float("nan"), "<=", 1.0).passed
    assert lh.Check("a", 1.0, "<=", 1.0).line().startswith("PASS")
    assert lh.Check("a", 2.0, ">=", 3.0).line().startswith("FAIL")


def test_empty_report_csv_is_header_only():
    rep = lh.RunReport(kind="szego-diag", config={})
    assert lh.render_report(rep, "csv") == ",".join(lh.CSV_COLUMNS) + "\n"
    assert lh.render_report(rep, "plot") == "series,x,y\n"


def _sample_report():
    rep = lh.RunReport(kind="szego-near", config=lh.load_config().as_dict())
    rep.rows.append(lh.Row("a", 100.0, 1 + 2j, 1 + 1.9j, 1e-15))
    rep.rows.append(lh.Row("b", 200.0, 0.5j, 0j, 0.0))
    rep.check("x", 0.1, "in", (0.0, 1.0))
    rep.check("y", 3.0, "<=", 1.0, "note")
    rep.fits["f"] = lh.FitResult(-1.0, 2.0, 0.99, 4)
    rep.diagnostics["n"] = 3
    return rep


def test_json_round_trip():
    rep = _sample_report()
    text = lh.render_report(rep, "json")
    data = json.loads(text)
    assert data["schema_version"] == lh.SCHEMA_VERSION
    back = lh.report_from_dict(data)
    assert lh.render_report(back, "json") == text
    assert back.rows == rep.rows and back.checks == rep.checks and back.fits == rep.fits
    data["schema_version"] = "0"
    with pytest.raises(ValueError):
        lh.report_from_dict(data)


def test_csv_columns_and_nan_handling():
    lines = lh.render_report(_sample_report(), "csv").splitlines()
    assert lines[0].split(",") == list(lh.CSV_COLUMNS)
    row_b = lines[2].split(",")
    assert row_b[6] == "nan" and row_b[7] == "nan"


def test_emit_paths(tmp_path, monkeypatch):
    rep = _sample_report()
    monkeypatch.delenv(lh.OUTDIR_ENV, raising=False)
    assert lh.emit_report(rep, "csv") is None
    monkeypatch.setenv(lh.OUTDIR_ENV, str(tmp_path / "o"))
    p = lh.emit_report(rep, "json")
    assert p == tmp_path / "o" / "szego-near.json"
    q = lh.emit_report(rep, "csv", tmp_path / "explicit.csv")
    assert q.read_text().startswith("experiment,")
    assert "wall_clock_s" not in p.read_text()
    assert "wall_clock_s" in lh.render_report(rep, "json", timing=True)


def test_run_is_byte_stable(tmp_path):
    kind, cfg = lh.builtin_config("toeplitz-diagonality")
    a = lh.render_report(lh.run_experiment(cfg, kind), "json")
    b = lh.render_report(lh.run_experiment(cfg, kind), "json")
    assert a == b


def test_unknown_kind_and_wrapped_errors():
    cfg = lh.load_config()
    with pytest.raises(lh.ConfigError):
        lh.run_experiment(cfg, "nope")
    bad = cfg.replace(max_modes=10)
    with pytest.raises(lh.ExperimentError, match="szego-diag"):
        lh.run_experiment(bad, "szego-diag")


def test_replace_rejects_unknown():
    with pytest.raises(lh.ConfigError):
        lh.load_config().replace(bogus=1)


def test_small_diag_run_threads_agree():
    cfg = lh.load_config(overrides={"lambdas": (100.0, 200.0, 300.0, 400.0), "diag_check_lambdas": (400.0,),
                                    "diag_check_tols": (0.1,)})
    a = lh.run_experiment(cfg, "szego-diag")
    b = lh.run_experiment(cfg.replace(threads=3), "szego-diag")
    assert [r.kernel for r in a.rows] == [r.kernel for r in b.rows]
    assert lh.render_report(a, "csv") == lh.render_report(b, "csv")
