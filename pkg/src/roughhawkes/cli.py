"""Command-line entry point.

Exit codes: 0 ok, 1 criterion failure, 2 configuration or argument error,
3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as D
from . import hawkes as H
from . import runner
from . import scaling as S
from . import special_fn as sf
from . import volterra as V
from .errors import ConfigError, CriterionFailure, DegenerateError, DomainError, MissingDataError, ResourceError
from .kernels import FAMILIES, KernelSpec, laplace_phi, sample_delays
from .rng import KERNEL, stream

EXIT_OK, EXIT_CRITERION, EXIT_CONFIG, EXIT_RESOURCE = 0, 1, 2, 3


def _writer(out: str | None, name: str):
    """CSV writer into ``out/name`` or stdout; returns (writer, close)."""
    if out is None:
        return csv.writer(sys.stdout, lineterminator="\n"), lambda: None
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    fh = (d / name).open("w", newline="")
    return csv.writer(fh), fh.close


def _f(v) -> str:
    return repr(float(v))


def _dump(out: str | None, name: str, obj):
    text = json.dumps(obj, indent=2, sort_keys=True, default=runner._json_default) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        runner._atomic(d / name, text)


# ---------------------------------------------------------------------------
# verbs


def _lines(out: str | None, name: str, values):
    """One decimal value per line, to stdout or ``out/name``."""
    text = "".join(_f(v) + "\n" for v in values)
    if out is None:
        sys.stdout.write(text)
    else:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        runner._atomic(d / name, text)


def _ml(a):
    if a.z:
        if a.alpha is None:
            raise DomainError("--alpha is required with --z")
        vals = np.atleast_1d(sf.mittag_leffler(np.asarray(a.z, dtype=float), a.alpha, a.beta, rel_tol=a.tol))
    else:
        # batch mode: whitespace-separated triples alpha beta z
        toks = sys.stdin.read().split()
        if not toks or len(toks) % 3:
            raise DomainError("batch input must be whitespace-separated triples: alpha beta z")
        t = np.array(toks, dtype=float).reshape(-1, 3)
        vals = [sf.ml_eval(sf.MLQuery(al, be, z, a.tol)) for al, be, z in t]
    _lines(a.out, "ml.txt", vals)


def _kernel(a):
    k = KernelSpec(a.family, a.alpha)
    if a.action == "sample":
        _lines(a.out, "delays.txt", sample_delays(k, stream(a.seed, KERNEL), a.n))
    else:
        if not a.z:
            raise DomainError("laplace needs at least one --z")
        _lines(a.out, "laplace.txt", [laplace_phi(k, z) for z in a.z])


def _hawkes(a):
    p = H.HawkesParams(a.mu, a.a, KernelSpec(a.family, a.alpha), a.T)
    r = H.simulate(p, a.seed, a.replica, a.method)
    buf = io.StringIO(newline="")
    w = csv.writer(buf)
    w.writerow(["time", "generation"])
    w.writerows([_f(t), int(g)] for t, g in zip(r.times, r.generation))
    if a.out is None:
        sys.stdout.write(buf.getvalue())
        return
    # --out names the CSV file, or a directory that receives events.csv
    target = Path(a.out)
    if target.suffix.lower() != ".csv":
        target.mkdir(parents=True, exist_ok=True)
        target = target / "events.csv"
    else:
        target.parent.mkdir(parents=True, exist_ok=True)
    runner._atomic(target, buf.getvalue())


def _scaling(a):
    reg = S.make_regime(a.alpha, a.lam, a.mu_star, a.alpha, a.T, a.family)
    p = reg.hawkes_params()
    out = a.out or "."

    def one(r):
        X, L, Z = S.rescale_paths(r, reg, a.n)
        return len(r), np.column_stack([X.t, X.values, L.values, Z.values])

    res = H.simulate_many(p, a.seed, a.replicas, one, a.method, a.threads)
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    for i, (_, tab) in enumerate(res):
        with (d / f"replica_{i:05d}.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "X", "Lambda", "Z"])
            w.writerows([_f(x) for x in row] for row in tab)
    x1 = np.array([tab[-1, 1] for _, tab in res])
    expect = S.expected_count(p, p.horizon) * reg.x_scale
    summary = {"regime": reg.constants(), "events": [n for n, _ in res], "seed": a.seed, "n": a.n, "mean_X1": float(x1.mean()), "expected_X1": expect}
    if a.replicas > 1:
        se = float(x1.std(ddof=1) / np.sqrt(x1.size))
        summary["se_X1"] = se
        summary["z_X1"] = (float(x1.mean()) - expect) / se if se > 0 else None
    _dump(out, "summary.json", summary)


def _volterra(a):
    p = V.LimitParams(a.alpha, a.lam, a.mu_star, a.n, a.seed)
    e = V.simulate_ensemble(p, a.paths)
    X, Z = e.X(), e.Z()
    t = p.h * np.arange(p.n + 1)
    out = a.out or "."
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    for i in range(a.paths):
        with (d / f"path_{i:05d}.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "Y", "X", "Z"])
            w.writerows([_f(t[j]), _f(e.Y[i, j]), _f(X[i, j]), _f(Z[i, j])] for j in range(p.n + 1))
    _dump(out, "summary.json", {"paths": a.paths, "n": a.n, "seed": a.seed, "X1": X[:, -1].tolist(), "negative_fraction": e.negative_fraction()})


def _read_col(path, col):
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames is None or col not in rd.fieldnames:
            raise MissingDataError(f"column {col!r} not in {path}")
        rows = list(rd)
    return np.array([float(r[col]) for r in rows]), rows


def _diag(a):
    if a.action == "holder":
        v, rows = _read_col(a.input, a.col)
        if "t" in rows[0]:
            t = np.array([float(r["t"]) for r in rows])
            step = (t[-1] - t[0]) / (t.size - 1)
        else:
            step = 1.0 / (v.size - 1)
        est = D.holder_estimate(v, step=step, method=a.method)
        _dump(a.out, "holder.json", {"exponent": est.exponent, "stderr": est.stderr, "method": est.method, "h_min": est.h_min, "h_max": est.h_max})
        return EXIT_OK
    d = Path(a.dir)
    lim = d / "x1_limit.csv"
    if not lim.exists():
        raise MissingDataError(f"{lim} not found")
    ref, _ = _read_col(lim, "x1")
    rows = []
    for T in a.ladder:
        f = d / f"x1_T{T:g}.csv"
        if not f.exists():
            raise MissingDataError(f"{f} not found")
        x, _ = _read_col(f, "x1")
        ks, w1 = D.ecdf_distance(x, ref)
        rows.append({"T": T, "ks": ks, "w1": w1})
    ok = D.strictly_decreasing([r["w1"] for r in rows])
    crit = {"name": "W1(X^T_1, X_1) strictly decreasing in T", "value": [r["w1"] for r in rows], "passed": ok}
    _dump(a.out, "converge.json", {"distances": rows, "criteria": [crit]})
    return EXIT_OK if ok else EXIT_CRITERION


def _overrides(a, doc):
    for k in ("seed", "threads", "out"):
        v = getattr(a, k)
        if v is not None:
            doc[k] = v
    return doc


def _load(path):
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}")
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def _run(a):
    doc = _overrides(a, _load(a.config))
    try:
        rep = runner.run_scenario(doc)
        code = EXIT_OK
    except CriterionFailure as e:
        rep, code = e.report, EXIT_CRITERION
    for c in rep["criteria"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['id']}: {c['name']} value={c['value']} threshold={c['threshold']}")
    return code


def _validate(a):
    errs = runner.validate_config(_overrides(a, _load(a.config)))
    for e in errs:
        print(e)
    if not errs:
        print("ok")
    return EXIT_CONFIG if errs else EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _regime_args(p, T=True):
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--lam", "--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--mu-star", "--mustar", dest="mu_star", type=float, default=1.0)
    if T:
        p.add_argument("--T", type=float, required=True)
        p.add_argument("--family", choices=FAMILIES, default="ShiftedPareto")


def build_parser() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output directory")

    ap = argparse.ArgumentParser(prog="roughhawkes", parents=[g], description="Nearly unstable Hawkes processes and their rough limits.")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("ml", parents=[g], help="Mittag-Leffler function")
    p.add_argument("action", choices=["eval"])
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--z", type=float, nargs="*", help="arguments; without --z, read alpha beta z triples from stdin")
    p.add_argument("--tol", type=float, default=sf.DEFAULT_TOL)
    p.set_defaults(fn=_ml)

    p = sub.add_parser("kernel", parents=[g], help="heavy-tailed kernels")
    p.add_argument("action", choices=["sample", "laplace"])
    p.add_argument("--family", choices=FAMILIES, default="ShiftedPareto")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--z", type=float, nargs="*")
    p.set_defaults(fn=_kernel)

    p = sub.add_parser("hawkes", parents=[g], help="simulate a Hawkes path")
    p.add_argument("action", choices=["simulate"])
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--family", choices=FAMILIES, default="ShiftedPareto")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--method", choices=["cluster", "thinning"], default="cluster")
    p.add_argument("--replica", type=int, default=0)
    p.set_defaults(fn=_hawkes)

    p = sub.add_parser("scaling", parents=[g], help="rescaled Hawkes paths in the nearly unstable regime")
    p.add_argument("action", choices=["run"])
    _regime_args(p)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--method", choices=["cluster", "thinning"], default="cluster")
    p.set_defaults(fn=_scaling)

    p = sub.add_parser("volterra", parents=[g], help="simulate the square-root Volterra limit")
    p.add_argument("action", choices=["simulate"])
    _regime_args(p, T=False)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--paths", type=int, default=1)
    p.set_defaults(fn=_volterra)

    p = sub.add_parser("diag", parents=[g], help="diagnostics on saved outputs")
    p.add_argument("action", choices=["holder", "converge"])
    p.add_argument("--in", dest="input")
    p.add_argument("--col")
    p.add_argument("--method", choices=["moments", "modulus"], default="moments")
    p.add_argument("--ladder", type=lambda s: [float(x) for x in s.split(",")])
    p.add_argument("--dir")
    p.set_defaults(fn=_diag)

    p = sub.add_parser("run", parents=[g], help="run an acceptance scenario from a JSON config")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_run)

    p = sub.add_parser("validate", parents=[g], help="list every violation in a JSON config")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_validate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    for k, v in (("seed", None), ("threads", None), ("out", None)):
        if not hasattr(a, k):
            setattr(a, k, v)
    if a.verb not in ("run", "validate"):
        a.seed = 0 if a.seed is None else a.seed
        a.threads = 1 if a.threads is None else a.threads
    if a.verb == "diag":
        need = ("input", "col") if a.action == "holder" else ("ladder", "dir")
        miss = [k for k in need if getattr(a, k) is None]
        if miss:
            print(f"error: diag {a.action} needs --{' --'.join('in' if m == 'input' else m for m in miss)}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        code = a.fn(a)
        return EXIT_OK if code is None else code
    except ResourceError as e:
        print(f"resource cap: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ConfigError, DomainError, DegenerateError, MissingDataError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
