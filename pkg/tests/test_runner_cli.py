import csv
import json
import time

import numpy as np
import pytest

from roughhawkes import cli, runner
from roughhawkes.errors import ConfigError, MissingDataError

TINY = {
    "bracket-identity": {"ladder": ["100"], "replicas": 10, "n": 100},
    "simulator-crossval": {"ladder": ["20"], "replicas": 300},
    "ucp-ecdf": {"ladder": ["1000", "10000"], "samples": 2000},
    "samelim-decay": {"ladder": ["1000", "10000", "100000"], "replicas": 10},
    "limit-properties": {"n": 1024, "paths": 200, "holder_paths": 20, "eint_paths": 3},
    "convergence-in-law": {"replicas": 1000, "paths": 1000},
}


def _doc(scenario, **kw):
    return {"scenario": scenario, **TINY.get(scenario, {}), **kw}


def _csvs(d):
    return {p.name: p.read_bytes() for p in sorted(d.glob("*.csv"))}


# ---------------------------------------------------------------- config


def test_unknown_scenario():
    cfg, errs = runner.parse_config({"scenario": "nope"})
    assert cfg is None and "unknown scenario" in errs[0]
    with pytest.raises(ConfigError):
        runner.run_scenario({"scenario": "nope"})


def test_decimal_strings_parse_like_numbers():
    a, _ = runner.parse_config({"scenario": "ucp-ecdf", "regime": {"alpha": "0.6"}})
    b, _ = runner.parse_config('{"scenario": "ucp-ecdf", "regime": {"alpha": 0.6}}')
    assert a.regime["alpha"] == b.regime["alpha"] == 0.6


def test_validate_alpha_for_volterra():
    errs = runner.validate_config(_doc("limit-properties", regime={"alpha": "0.4"}))
    assert any("regime.alpha=0.4" in e and "alpha > 1/2" in e for e in errs)


def test_validate_admissible_boundary():
    T0 = 3.772720513507691700522267  # (lam delta)^(1/alpha) for alpha 0.6, lam 1
    errs = runner.validate_config(_doc("bracket-identity", ladder=[repr(T0)]))
    assert any("not admissible" in e for e in errs)
    assert runner.validate_config(_doc("bracket-identity", ladder=["4"])) == []


def test_validate_reports_every_violation():
    errs = runner.validate_config({"scenario": "simulator-crossval", "seed": -1, "threads": 0, "method": "x", "hawkes": {"mu": "0", "a": "1.5"}, "bogus": 1})
    for frag in ("unknown config key", "seed", "threads", "hawkes.mu", "hawkes.a", "method"):
        assert any(frag in e for e in errs), frag


@pytest.mark.parametrize("sc", runner.SCENARIOS)
def test_defaults_are_valid(sc):
    assert runner.validate_config({"scenario": sc}) == []


# ---------------------------------------------------------------- runs


def test_bracket_tiny_run(tmp_path):
    t0 = time.perf_counter()
    rep = runner.run_scenario(_doc("bracket-identity"), out=tmp_path)
    assert time.perf_counter() - t0 < 10
    assert rep["passed"]
    man = json.loads((tmp_path / "manifest.json").read_text())
    for k in ("config", "versions", "wall_clock_seconds", "outputs"):
        assert k in man
    for name, rows in man["outputs"].items():
        with (tmp_path / name).open(newline="") as fh:
            assert sum(1 for _ in csv.reader(fh)) - 1 == rows
    assert not list(tmp_path.glob("*.partial"))
    assert runner.emit_plotdata(tmp_path) == {}


@pytest.mark.parametrize("sc", ["simulator-crossval", "ucp-ecdf", "bracket-identity"])
def test_reruns_and_threads_are_byte_identical(tmp_path, sc):
    runs = []
    for k, threads in enumerate((1, 1, 2)):
        d = tmp_path / str(k)
        runner.run_scenario(_doc(sc, threads=threads), out=d, raise_on_failure=False)
        runs.append(_csvs(d))
    assert runs[0] and runs[0] == runs[1] == runs[2]


def test_plotdata_conserves_rows(tmp_path):
    runner.run_scenario(_doc("ucp-ecdf"), out=tmp_path, raise_on_failure=False)
    got = runner.emit_plotdata(tmp_path)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert got == {"plot_ecdf.csv": man["outputs"]["ecdf_jt.csv"]}
    with (tmp_path / "plot_ecdf.csv").open(newline="") as fh:
        rd = csv.reader(fh)
        assert next(rd) == ["scenario", "T", "x", "ecdf", "analytic"]
        rows = list(rd)
    ecdf = np.array([float(r[3]) for r in rows])
    assert np.all((ecdf > 0) & (ecdf <= 1))


def test_plotdata_missing(tmp_path):
    with pytest.raises(MissingDataError):
        runner.emit_plotdata(tmp_path)
    with pytest.raises(MissingDataError):
        runner.emit_plotdata(tmp_path / "absent")


def test_plotdata_detects_truncation(tmp_path):
    runner.run_scenario(_doc("ucp-ecdf"), out=tmp_path, raise_on_failure=False)
    f = tmp_path / "ecdf_jt.csv"
    f.write_text("".join(f.read_text().splitlines(keepends=True)[:-1]))
    with pytest.raises(MissingDataError):
        runner.emit_plotdata(tmp_path)


def test_fractional_errors_small():
    e = runner.fractional_errors(1024)
    assert e["inversion"] < 1e-3 and e["semigroup"] < 1e-4 and e["integration_by_parts"] < 1e-3


# ---------------------------------------------------------------- cli


def _cfg(tmp_path, doc):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_cli_exit_codes(tmp_path, capsys):
    assert cli.main(["validate", "--config", _cfg(tmp_path, {"scenario": "nope"})]) == 2
    assert cli.main(["run", "--config", _cfg(tmp_path, {"scenario": "nope"})]) == 2
    assert cli.main(["bogus-verb"]) == 2
    assert cli.main(["validate", "--config", _cfg(tmp_path, _doc("bracket-identity"))]) == 0
    assert capsys.readouterr().out.strip().endswith("ok")
    out = tmp_path / "run"
    assert cli.main(["run", "--config", _cfg(tmp_path, _doc("bracket-identity")), "--out", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(l.startswith("PASS ") for l in lines)
    assert (out / "report.json").exists()


def test_cli_criterion_failure_exit(tmp_path, capsys):
    # too few samples for the KS threshold to hold at the largest horizon
    doc = _doc("ucp-ecdf", samples=1000, ks_threshold="0.0001", threshold_T="1000")
    assert cli.main(["run", "--config", _cfg(tmp_path, doc), "--out", str(tmp_path / "o")]) == 1
    assert any(l.startswith("FAIL ") for l in capsys.readouterr().out.splitlines())


def test_cli_ml_eval(capsys):
    assert cli.main(["ml", "eval", "--alpha", "1", "--beta", "1", "--z", "0", "1"]) == 0
    vals = [float(v) for v in capsys.readouterr().out.split()]
    assert vals[0] == 1.0 and vals[1] == pytest.approx(np.e, rel=1e-14)
    assert cli.main(["ml", "eval", "--alpha", "0", "--z", "1"]) == 2


def test_cli_hawkes_and_holder(tmp_path, capsys):
    ev = tmp_path / "ev.csv"
    assert cli.main(["hawkes", "simulate", "--mu", "1", "--a", "0.5", "--alpha", "0.6", "--T", "100", "--out", str(ev)]) == 0
    head = ev.read_text().splitlines()[0]
    assert head == "time,generation"
    d = tmp_path / "vol"
    assert cli.main(["volterra", "simulate", "--alpha", "0.75", "--n", "1024", "--out", str(d)]) == 0
    capsys.readouterr()
    assert cli.main(["diag", "holder", "--in", str(d / "path_00000.csv"), "--col", "Y"]) == 0
    est = json.loads(capsys.readouterr().out)
    assert 0.0 < est["exponent"] < 1.0
    assert cli.main(["diag", "holder", "--in", str(d / "path_00000.csv")]) == 2
