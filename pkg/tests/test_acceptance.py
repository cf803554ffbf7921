"""Acceptance suite: every criterion at its stated scale and tolerance.

Each scenario runs once with one worker thread; criterion 9 reruns all of
them with several threads and compares the written CSVs and reports byte for
byte. Run with ``pytest tests/test_acceptance.py -v`` or directly as a script.
"""

import os
import sys
from pathlib import Path

import pytest

from roughhawkes import runner

CRITERIA = {
    1: "special-functions",
    2: "fractional-identities",
    3: "simulator-crossval",
    4: "bracket-identity",
    5: "ucp-ecdf",
    6: "samelim-decay",
    7: "limit-properties",
    8: "convergence-in-law",
}
THREADS = max(2, min(4, os.cpu_count() or 1))

pytestmark = pytest.mark.acceptance


def _line(tag, ok, msg):
    return f"{'PASS' if ok else 'FAIL'} criterion {tag}: {msg}"


def _g(v):
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_g(x) for x in v) + "]"
    return f"{v:.4g}" if isinstance(v, float) else str(v)


def _summary(rep):
    return "; ".join(f"{c['id']} {_g(c['value'])} (thr {_g(c['threshold'])}){'' if c['passed'] else ' FAILED'}" for c in rep["criteria"])


def _outputs(d: Path):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.suffix == ".csv" or p.name == "report.json"}


class _Runs:
    def __init__(self, root: Path):
        self.root = root
        self.reports = {}

    def get(self, k, threads=1):
        key = (k, threads)
        if key not in self.reports:
            d = self.root / f"c{k}_t{threads}"
            self.reports[key] = runner.run_scenario({"scenario": CRITERIA[k], "seed": 0, "threads": threads}, out=d, raise_on_failure=False)
        return self.reports[key], self.root / f"c{k}_t{threads}"


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    return _Runs(tmp_path_factory.mktemp("acceptance"))


def _emit(capsys, line):
    if capsys is None:
        print(line, flush=True)
    else:
        with capsys.disabled():
            print("\n" + line, flush=True)


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(runs, capsys, k):
    rep, _ = runs.get(k)
    _emit(capsys, _line(k, rep["passed"], f"{CRITERIA[k]}: {_summary(rep)}"))
    assert rep["passed"], _summary(rep)


def test_criterion_9_determinism(runs, capsys):
    bad = []
    for k in sorted(CRITERIA):
        _, d1 = runs.get(k)
        _, dn = runs.get(k, THREADS)
        a, b = _outputs(d1), _outputs(dn)
        if not a or a != b:
            bad.append(CRITERIA[k])
    ok = not bad
    msg = f"all scenarios byte-identical on rerun with threads=1 vs threads={THREADS}" if ok else f"outputs differ for {', '.join(bad)}"
    _emit(capsys, _line(9, ok, msg))
    assert ok, msg


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        r = _Runs(Path(tmp))
        failed = 0
        for k in sorted(CRITERIA):
            rep, _ = r.get(k)
            failed += not rep["passed"]
            _emit(None, _line(k, rep["passed"], f"{CRITERIA[k]}: {_summary(rep)}"))
        bad = [CRITERIA[k] for k in sorted(CRITERIA) if _outputs(r.get(k)[1]) != _outputs(r.get(k, THREADS)[1])]
        failed += bool(bad)
        _emit(None, _line(9, not bad, "byte-identical across reruns and thread counts" if not bad else f"differ: {bad}"))
    sys.exit(1 if failed else 0)
