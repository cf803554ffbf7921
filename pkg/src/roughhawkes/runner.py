"""Experiment orchestration: configs, scenarios, reports and plot bundles.

A config is one JSON document. Numeric parameters are given as decimal
strings (plain JSON numbers are accepted too) and parsed with ``float``, which
rounds correctly, so "0.6" maps to the same binary value in every language
that rounds to nearest.

Every scenario writes its CSV files, ``report.json`` (one entry per criterion)
and ``manifest.json`` (config echo, library versions, wall-clock time, row
counts) into the output directory. Files are written under a ``.partial``
name and renamed into place once complete.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import time
from dataclasses import asdict, dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np
from scipy import special, stats

from . import __version__
from . import diagnostics as D
from . import fractional_calc as fc
from . import hawkes as H
from . import scaling as S
from . import special_fn as sf
from . import volterra as V
from .errors import ConfigError, CriterionFailure, MissingDataError
from .kernels import FAMILIES, KernelSpec

SCENARIOS = (
    "special-functions",
    "fractional-identities",
    "simulator-crossval",
    "bracket-identity",
    "ucp-ecdf",
    "samelim-decay",
    "limit-properties",
    "convergence-in-law",
)
_NEEDS_Y = ("limit-properties", "convergence-in-law")
_NEEDS_REGIME = ("bracket-identity", "ucp-ecdf", "samelim-decay", "convergence-in-law")

# acceptance-scale defaults; a config only lists what it changes
DEFAULTS = {
    "special-functions": {},
    "fractional-identities": {"n": 4096},
    "simulator-crossval": {"hawkes": {"mu": "1", "a": "0.9"}, "regime": {"alpha": "0.6"}, "ladder": ["50"], "replicas": 10000},
    "bracket-identity": {"ladder": ["1000", "10000", "100000"], "replicas": 10, "n": 1000},
    "ucp-ecdf": {"ladder": ["1000", "10000", "100000"], "samples": 1000000, "ks_threshold": "0.02", "threshold_T": "10000"},
    "samelim-decay": {"ladder": ["1000", "10000", "100000"], "replicas": 1000, "history_tol": "1e-8"},
    "limit-properties": {"regime": {"alpha": "0.75"}, "n": 1024, "paths": 10000, "holder_paths": 100, "eint_paths": 20},
    "convergence-in-law": {"ladder": ["1000", "3000", "10000"], "replicas": 10000, "paths": 10000, "n": 1024},
}
_REGIME_DEFAULT = {"alpha": "0.6", "lam": "1", "mu_star": "1", "family": "ShiftedPareto"}


@dataclass
class ExperimentConfig:
    scenario: str
    seed: int = 0
    out: str = "out"
    threads: int = 1
    method: str = "cluster"
    regime: dict = field(default_factory=dict)
    hawkes: dict = field(default_factory=dict)
    ladder: tuple = ()
    replicas: int = 0
    samples: int = 0
    paths: int = 0
    holder_paths: int = 0
    eint_paths: int = 0
    n: int = 0
    history_tol: float | None = None
    ks_threshold: float = 0.02
    threshold_T: float = 1e4

    def echo(self) -> dict:
        d = asdict(self)
        d["ladder"] = list(self.ladder)
        return d


def _num(v, name, errs, kind=float):
    if isinstance(v, bool) or v is None:
        errs.append(f"{name}: expected a number, got {v!r}")
        return None
    if isinstance(v, str):
        try:
            d = Decimal(v.strip())
        except InvalidOperation:
            errs.append(f"{name}: {v!r} is not a decimal number")
            return None
        if not d.is_finite():
            return float(d)
        v = float(d) if kind is float else d
    if kind is int:
        if isinstance(v, float) and not v.is_integer():
            errs.append(f"{name}: expected an integer, got {v}")
            return None
        try:
            iv = int(v)
        except (TypeError, ValueError):
            errs.append(f"{name}: expected an integer, got {v!r}")
            return None
        if iv != v:
            errs.append(f"{name}: expected an integer, got {v}")
            return None
        return iv
    try:
        return float(v)
    except (TypeError, ValueError):
        errs.append(f"{name}: expected a number, got {v!r}")
        return None


def _or(v, default):
    return default if v is None else v


def parse_config(doc) -> tuple[ExperimentConfig | None, list[str]]:
    """Parse a JSON document (dict, str or path) into a config plus parse errors."""
    errs: list[str] = []
    if isinstance(doc, (str, os.PathLike)) and not (isinstance(doc, str) and doc.lstrip().startswith("{")):
        try:
            doc = json.loads(Path(doc).read_text())
        except FileNotFoundError:
            return None, [f"config file {doc} not found"]
        except json.JSONDecodeError as e:
            return None, [f"config is not valid JSON: {e}"]
    elif isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            return None, [f"config is not valid JSON: {e}"]
    if not isinstance(doc, dict):
        return None, ["config must be a JSON object"]
    sc = doc.get("scenario")
    if sc not in SCENARIOS:
        return None, [f"unknown scenario {sc!r}; expected one of {', '.join(SCENARIOS)}"]
    known = set(ExperimentConfig.__dataclass_fields__)
    for k in doc:
        if k not in known:
            errs.append(f"unknown config key {k!r}")
    merged = {**DEFAULTS[sc], **{k: v for k, v in doc.items() if k in known}}
    reg = {**_REGIME_DEFAULT, **DEFAULTS[sc].get("regime", {}), **(doc.get("regime") or {})}
    cfg = ExperimentConfig(scenario=sc)
    cfg.seed = _or(_num(merged.get("seed", 0), "seed", errs, int), 0)
    cfg.out = str(merged.get("out", "out"))
    cfg.threads = _or(_num(merged.get("threads", 1), "threads", errs, int), 1)
    cfg.method = str(merged.get("method", "cluster"))
    cfg.regime = {}
    for k in ("alpha", "lam", "mu_star"):
        cfg.regime[k] = _num(reg.get(k), f"regime.{k}", errs)
    cfg.regime["family"] = reg.get("family", "ShiftedPareto")
    if "K" in reg:
        cfg.regime["K"] = _num(reg["K"], "regime.K", errs)
    hk = merged.get("hawkes") or {}
    cfg.hawkes = {k: _num(v, f"hawkes.{k}", errs) for k, v in hk.items()}
    lad = merged.get("ladder", [])
    if not isinstance(lad, (list, tuple)):
        errs.append("ladder must be a list")
        lad = []
    cfg.ladder = tuple(x for x in (_num(v, "ladder", errs) for v in lad) if x is not None)
    for k in ("replicas", "samples", "paths", "holder_paths", "eint_paths", "n"):
        cfg.__dict__[k] = _or(_num(merged.get(k, 0), k, errs, int), 0)
    ht = merged.get("history_tol")
    cfg.history_tol = None if ht is None else _num(ht, "history_tol", errs)
    cfg.ks_threshold = _num(merged.get("ks_threshold", "0.02"), "ks_threshold", errs)
    cfg.threshold_T = _num(merged.get("threshold_T", "10000"), "threshold_T", errs)
    return cfg, errs


def validate_config(cfg) -> list[str]:
    """Every constraint violation of ``cfg`` (a config object or JSON document); no side effects."""
    if isinstance(cfg, ExperimentConfig):
        errs = []
    else:
        cfg, errs = parse_config(cfg)
        if cfg is None:
            return errs
    sc = cfg.scenario
    if cfg.seed < 0:
        errs.append("seed must be non-negative")
    if cfg.threads < 1:
        errs.append("threads must be at least 1")
    r = cfg.regime
    a = r.get("alpha")
    if sc != "special-functions" and sc != "fractional-identities":
        if a is None or not 0.0 < a < 1.0:
            errs.append(f"regime.alpha={a} must lie in (0, 1)")
        if r.get("family") not in FAMILIES:
            errs.append(f"regime.family {r.get('family')!r} must be one of {FAMILIES}")
        for k in ("lam", "mu_star"):
            v = r.get(k)
            if v is None or not (v > 0 and math.isfinite(v)):
                errs.append(f"regime.{k}={v} must be positive and finite")
    if sc in _NEEDS_Y and a is not None and not a > 0.5:
        errs.append(f"regime.alpha={a}: the square-root Volterra equation for Y requires alpha > 1/2")
    if "K" in r and a is not None and r["K"] is not None and abs(r["K"] - a) > 1e-12 * a:
        errs.append(f"regime.K={r['K']} does not match the kernel tail constant K=alpha={a}")
    if sc in _NEEDS_REGIME and not errs:
        T0 = S.admissible_T(a, r["lam"], a)
        for T in cfg.ladder:
            if not T > T0 * (1 + 1e-12):
                errs.append(f"ladder T={T:g} not admissible: regime needs T > (lam delta)^(1/alpha) = {T0:.6g}")
    need_ladder = {"samelim-decay": 3, "convergence-in-law": 3, "ucp-ecdf": 2, "bracket-identity": 1}
    if sc in need_ladder and len(cfg.ladder) < need_ladder[sc]:
        errs.append(f"{sc} needs at least {need_ladder[sc]} ladder values")
    if sc == "samelim-decay" and cfg.replicas < 2:
        errs.append("samelim-decay needs at least 2 replicas per horizon")
    if sc in ("simulator-crossval", "bracket-identity", "convergence-in-law") and cfg.replicas < 1:
        errs.append("replicas must be at least 1")
    if sc == "simulator-crossval":
        hk = cfg.hawkes
        if not (hk.get("mu") is not None and hk["mu"] > 0):
            errs.append("hawkes.mu must be positive")
        if not (hk.get("a") is not None and 0.0 < hk["a"] < 1.0):
            errs.append("hawkes.a must lie in (0, 1)")
        if len(cfg.ladder) != 1 or not cfg.ladder[0] > 0:
            errs.append("simulator-crossval takes exactly one positive horizon in ladder")
        if cfg.replicas < 2:
            errs.append("simulator-crossval needs at least 2 replicas")
    if sc in ("ucp-ecdf",) and cfg.samples < 1000:
        errs.append("ucp-ecdf needs at least 1000 samples")
    if sc == "ucp-ecdf" and cfg.threshold_T not in cfg.ladder:
        errs.append(f"threshold_T={cfg.threshold_T:g} must be one of the ladder values")
    if sc == "convergence-in-law" and (cfg.replicas < 1000 or cfg.paths < 1000):
        errs.append("convergence-in-law needs at least 1000 replicas and 1000 paths")
    if sc in _NEEDS_Y:
        n = cfg.n
        if n < 256 or n & (n - 1):
            errs.append(f"n={n} must be a power of two and at least 256")
    if sc == "limit-properties":
        if cfg.paths < 2 or cfg.holder_paths < 1 or cfg.eint_paths < 1:
            errs.append("limit-properties needs paths >= 2, holder_paths >= 1, eint_paths >= 1")
        if cfg.n < 1024:
            errs.append("limit-properties needs n >= 1024 for the three-level residual ladder")
    if sc == "fractional-identities" and (cfg.n < 1024 or cfg.n & (cfg.n - 1)):
        errs.append("fractional-identities needs n a power of two, at least 1024")
    if sc == "bracket-identity" and cfg.n < 1:
        errs.append("n must be positive")
    if cfg.method not in ("cluster", "thinning"):
        errs.append(f"method {cfg.method!r} must be cluster or thinning")
    if cfg.history_tol is not None and not 0.0 < cfg.history_tol < 1e-3:
        errs.append("history_tol must lie in (0, 1e-3)")
    return errs


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def _atomic(path: Path, text: str):
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text, newline="")
    os.replace(tmp, path)


class _Out:
    def __init__(self, root: Path):
        self.root = root
        self.rows: dict[str, int] = {}
        root.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, header, rows):
        buf = io.StringIO(newline="")
        w = csv.writer(buf)
        w.writerow(header)
        k = 0
        for row in rows:
            w.writerow([_fmt(v) for v in row])
            k += 1
        _atomic(self.root / name, buf.getvalue())
        self.rows[name] = k

    def json(self, name: str, obj):
        _atomic(self.root / name, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serialisable: {type(o)}")


def _crit(cid, name, value, threshold, passed):
    return {"id": cid, "name": name, "value": value, "threshold": threshold, "passed": bool(passed)}


def _regime(cfg, T):
    r = cfg.regime
    return S.make_regime(r["alpha"], r["lam"], r["mu_star"], r.get("K", r["alpha"]), T, r["family"])


def _ecdf_rows(scenario, T, xs, ref, max_rows=20000):
    xs = np.sort(xs)
    n = xs.size
    idx = np.unique(np.linspace(0, n - 1, min(n, max_rows)).astype(np.int64))
    F = ref(xs[idx])
    return [(scenario, T, xs[i], (i + 1) / n, F[j]) for j, i in enumerate(idx)]


# ---------------------------------------------------------------------------
# scenarios


def _sc_special(cfg, out):
    crits = []
    rows = []
    z = np.linspace(-30.0, 5.0, 2001)
    e = sf.mittag_leffler(z, 1.0, 1.0)
    err1 = float(np.max(np.abs(e / np.exp(z) - 1.0)))
    rows += [("E11_vs_exp", a, b, c) for a, b, c in zip(z[::50], e[::50], np.exp(z[::50]))]
    crits.append(_crit("1a", "E_{1,1}(z) = exp(z), z in [-30, 5]", err1, 1e-12, err1 <= 1e-12))
    x = np.linspace(0.0, 10.0, 2001)
    e = sf.mittag_leffler(-x, 0.5, 1.0)
    o = special.erfcx(x)
    err2 = float(np.max(np.abs(e / o - 1.0)))
    rows += [("E05_vs_erfcx", a, b, c) for a, b, c in zip(x[::50], e[::50], o[::50])]
    crits.append(_crit("1b", "E_{1/2,1}(-x) = exp(x^2) erfc(x), x in [0, 10]", err2, 1e-8, err2 <= 1e-8))
    xs = 1e-5
    p = sf.FracKernelParams(0.6, 1.0)
    q = sf.FracKernelParams(0.75, 1.0)
    ratios = {
        "f_frac": sf.f_frac(p, xs) / (p.lam / special.gamma(p.alpha) * xs ** (p.alpha - 1)),
        "frac_deriv_f": sf.frac_deriv_f(q, 0.25, xs) / (q.lam / special.gamma(0.5) * xs ** (q.alpha - 1.25)),
        "frac_integ_f": sf.frac_integ_f(p, 0.3, xs) / (p.lam / special.gamma(0.9) * xs ** (p.alpha - 0.7)),
    }
    for k, v in ratios.items():
        rows.append((f"small_x_ratio_{k}", xs, v, 1.0))
    worst = max(abs(v - 1.0) for v in ratios.values())
    crits.append(_crit("1c", "small-x ratio limits at x = 1e-5", worst, 0.01, worst <= 0.01))
    out.csv("special_checks.csv", ["check", "x", "value", "oracle"], rows)
    return crits, {}


def fractional_errors(n: int) -> dict:
    """Identity errors on a grid of n cells (used by the identities scenario and its tests)."""
    h = 1.0 / n
    x = h * np.arange(n + 1)
    sm = fc.GridFn(h, x * (1.0 - x))
    inv = fc.rl_derivative(fc.rl_integral(sm, 0.4), 0.4).values
    m = (x >= 0.05) & (x <= 0.95)
    e_inv = float(np.max(np.abs(inv[m] / (x[m] * (1 - x[m])) - 1.0)))
    ab = fc.rl_integral(fc.rl_integral(sm, 0.3), 0.4).values
    direct = fc.rl_integral(sm, 0.7).values
    m2 = x >= 0.05
    e_sg = float(np.max(np.abs(ab[m2] / direct[m2] - 1.0)))
    p3 = sf.FracKernelParams(0.3, 1.0)
    phi = fc.GridFn.from_function(lambda z: sf.f_frac(p3, z), n, -0.7, 0.3)
    psi = fc.GridFn(h, x**0.9, 0.9)
    lhs = fc.conv_singular(phi, psi).values
    rhs = fc.conv_singular(fc.rl_integral(phi, 0.3), fc.rl_derivative(psi, 0.3)).values
    e_ibp = float(np.max(np.abs(lhs - rhs)))
    return {"inversion": e_inv, "semigroup": e_sg, "integration_by_parts": e_ibp}


_FRAC_TOL = {"inversion": 1e-3, "semigroup": 1e-4, "integration_by_parts": 1e-3}


def _sc_fractional(cfg, out):
    n = cfg.n
    ns = (n // 4, n // 2, n)
    errs = {k: fractional_errors(k) for k in ns}
    rows = [(name, k, errs[k][name]) for name in _FRAC_TOL for k in ns]
    out.csv("identities.csv", ["identity", "n", "error"], rows)
    crits = []
    for i, (name, tol) in enumerate(_FRAC_TOL.items()):
        e = errs[n][name]
        ratios = [errs[ns[j]][name] / errs[ns[j + 1]][name] for j in range(2)]
        crits.append(_crit(f"2{'abc'[i]}", f"{name} error at n={n}", e, tol, e <= tol))
        crits.append(_crit(f"2{'abc'[i]}-rate", f"{name} error reduction per doubling", min(ratios), 2.0, min(ratios) >= 2.0))
    return crits, {}


def _sc_crossval(cfg, out):
    T = cfg.ladder[0]
    k = KernelSpec(cfg.regime["family"], cfg.regime["alpha"])
    p = H.HawkesParams(cfg.hawkes["mu"], cfg.hawkes["a"], k, T)

    def stats_of(r):
        return (len(r), r.count(T / 2), r.times[0] if len(r) else T)

    res = {}
    for m in ("cluster", "thinning"):
        res[m] = np.array(H.simulate_many(p, cfg.seed, cfg.replicas, stats_of, method=m, threads=cfg.threads))
        out.csv(f"counts_{m}.csv", ["replica", "N_T", "N_half", "first_time"], [(i, int(a), int(b), c) for i, (a, b, c) in enumerate(res[m])])
    crits = []
    for j, name in enumerate(("N_T", "N_half", "first_time")):
        pv = float(stats.ks_2samp(res["cluster"][:, j], res["thinning"][:, j]).pvalue)
        crits.append(_crit(f"3-ks-{name}", f"cluster vs thinning two-sample KS on {name}", pv, 0.01, pv > 0.01))
    en = S.expected_count(p, T)
    for m in ("cluster", "thinning"):
        c = res[m][:, 0]
        se = c.std(ddof=1) / math.sqrt(c.size)
        z = abs(c.mean() - en) / se
        crits.append(_crit(f"3-mean-{m}", f"E[N_T] formula vs {m} mean (in SE)", float(z), 3.0, z <= 3.0))
    return crits, {"expected_count": en}


def _sc_bracket(cfg, out):
    crits = []
    reports = []
    rows = []
    for T in cfg.ladder:
        reg = _regime(cfg, T)
        p = reg.hawkes_params()
        recs = [H.simulate(p, cfg.seed, i, cfg.method) for i in range(cfg.replicas)]
        paths = [S.rescale_paths(r, reg, cfg.n) for r in recs]
        rep = D.bracket_report(recs, reg, z_paths=[z for _, _, z in paths], x_paths=[x for x, _, _ in paths])
        reports.append(rep)
        for i, r in enumerate(recs):
            rows.append((T, i, len(r), math.fsum([reg.jump**2] * len(r)), paths[i][0].values[-1]))
        X, L, Z = paths[0]
        out.csv(f"paths_T{T:g}.csv", ["t", "X", "Lambda", "Z"], zip(X.t, X.values, L.values, Z.values))
        vt = abs(reg.v_T - reg.lam) / reg.lam
        crits.append(_crit(f"4-vT-{T:g}", f"v_T = lam at T={T:g}", vt, 4 * np.finfo(float).eps, vt <= 4 * np.finfo(float).eps))
        crits.append(_crit(f"4-bracket-{T:g}", f"sum of squared jumps = X_1 at T={T:g}", rep.max_identity_error, 1e-12, rep.ok))
    out.csv("bracket.csv", ["T", "replica", "N_T", "sum_sq_jumps", "X1"], rows)
    out.csv("jumps.csv", ["T", "jump", "closed_form", "max_grid_jump"], [(r.T, r.jump, r.jump_closed_form, r.max_grid_jump) for r in reports])
    if len(reports) > 1:
        ok = D.strictly_decreasing([r.jump for r in reports])
        crits.append(_crit("4-jump-decay", "max jump of Z^T decreasing along the ladder", [r.jump for r in reports], "decreasing", ok))
    kp = sf.FracKernelParams(cfg.regime["alpha"], cfg.regime["lam"])
    n = 1024
    w = sf.kernel_weights(kp, 1.0 / n, n)
    tel = abs(math.fsum(w) - sf.F_frac(kp, 1.0))
    crits.append(_crit("4-telescoping", "kernel weights sum to F(1)", tel, 1e-12, tel <= 1e-12))
    return crits, {"regimes": [_regime(cfg, T).constants() for T in cfg.ladder]}


def _sc_ucp(cfg, out):
    a, lam = cfg.regime["alpha"], cfg.regime["lam"]
    ref = D.frac_cdf(a, lam)
    ks = {}
    rows = []
    for T in cfg.ladder:
        reg = _regime(cfg, T)
        s = S.sample_JT(reg, cfg.seed, cfg.samples, cfg.threads)
        k, w = D.ecdf_distance(s, ref)
        ks[T] = (k, w)
        rows += _ecdf_rows("ucp-ecdf", T, s, ref)
    out.csv("ecdf_jt.csv", ["scenario", "T", "x", "ecdf", "analytic"], rows)
    out.csv("distances.csv", ["T", "ks", "w1_on_sample_range"], [(T, k, w) for T, (k, w) in ks.items()])
    seq = [ks[T][0] for T in sorted(ks)]
    crits = [
        _crit("5-monotone", "KS(J^T, F) strictly decreasing in T", seq, "decreasing", D.strictly_decreasing(seq)),
        _crit(
            "5-threshold",
            f"KS(J^T, F) at T={cfg.threshold_T:g}",
            ks[cfg.threshold_T][0],
            cfg.ks_threshold,
            ks[cfg.threshold_T][0] < cfg.ks_threshold,
        ),
    ]
    return crits, {"samples_per_T": cfg.samples}


def _sc_samelim(cfg, out):
    ens = {}
    for T in cfg.ladder:
        reg = _regime(cfg, T)
        p = reg.hawkes_params()
        v = np.array(
            H.simulate_many(p, cfg.seed, cfg.replicas, lambda r, reg=reg: S.sup_gap_sq(r, reg, cfg.history_tol), cfg.method, cfg.threads)
        )
        ens[reg] = v
        out.csv(f"sup_T{T:g}.csv", ["replica", "sup_sq"], enumerate(v))
    fit = D.samelim_decay(ens)
    Ts = sorted(cfg.ladder)
    out.csv("decay.csv", ["scenario", "T", "x", "y", "se"], [("samelim-decay", T, x, y, s) for T, x, y, s in zip(Ts, fit.x, fit.y, fit.y_se)])
    means = [math.exp(y) for y in fit.y]
    crits = [
        _crit("6-slope", "log-log slope of E[sup (X - Lambda)^2] vs (1 - a_T)/T^alpha", fit.slope, [0.7, 1.3], fit.within),
        _crit("6-decreasing", "E[sup (X - Lambda)^2] decreasing in T", means, "decreasing", D.strictly_decreasing(means)),
    ]
    return crits, {"fit": {"C": fit.C, "slope": fit.slope, "stderr": fit.stderr}}


def _sc_limit(cfg, out):
    r = cfg.regime
    p = V.LimitParams(r["alpha"], r["lam"], r["mu_star"], cfg.n, cfg.seed)
    ens = V.simulate_ensemble(p, cfg.paths)
    crits = []
    rows = []
    for t in (0.25, 0.5, 1.0):
        i = int(round(t * cfg.n))
        y = ens.Y[:, i]
        se = y.std(ddof=1) / math.sqrt(y.size)
        F = sf.F_frac(p.kernel, t)
        z = abs(y.mean() - F) / se
        rows.append((t, y.mean(), se, F))
        crits.append(_crit(f"7-mean-{t:g}", f"E[Y_{t:g}] = F({t:g}) (in SE)", float(z), 3.0, z <= 3.0))
    out.csv("mean_Y.csv", ["t", "mean", "se", "F"], rows)
    hp = min(cfg.holder_paths, cfg.paths)
    X = ens.X()
    hy = D.holder_ensemble(ens.Y[:hp], p.h)
    hx = D.holder_ensemble(X[:hp], p.h)
    crits.append(_crit("7-holder-Y", "ensemble Hölder exponent of Y", hy.exponent, [0.15, 0.35], 0.15 <= hy.exponent <= 0.35))
    crits.append(_crit("7-holder-X", "ensemble Hölder exponent of X", hx.exponent, 0.9, hx.exponent >= 0.9))
    hrows = []
    for name, est, vals in (("Y", hy, ens.Y[:hp]), ("X", hx, X[:hp])):
        lags = 2 ** np.arange(est.levels)
        tab = D._moment_table(vals, lags, est.qs)
        for a_, q in enumerate(est.qs):
            for b_, lag in enumerate(lags):
                hrows.append(("limit-properties", name, q, lag * p.h, math.log(tab[a_, b_])))
    out.csv("holder.csv", ["scenario", "target", "q", "h", "log_m"], hrows)
    # residual self-convergence on refinement-consistent Brownian paths
    ns = (cfg.n // 4, cfg.n // 2, cfg.n)
    res = np.empty((cfg.eint_paths, 3))
    sup_x = np.empty(cfg.eint_paths)
    for j, n in enumerate(ns):
        q = V.LimitParams(r["alpha"], r["lam"], r["mu_star"], n, cfg.seed)
        e = V.simulate_ensemble(q, cfg.eint_paths)
        for k in range(cfg.eint_paths):
            y = e.path(k)
            x = V.integrate_Y_to_X(y)
            res[k, j] = V.eint_residual(y, x, e.dB[k], q)
            if n == cfg.n:
                sup_x[k] = np.max(np.abs(x.values))
    med = np.median(res, axis=0)
    out.csv("eint.csv", ["n", "median_residual"], zip(ns, med))
    ratios = [med[0] / med[1], med[1] / med[2]]
    crits.append(_crit("7-eint-rate", "median residual reduction per doubling", min(ratios), 1.5, min(ratios) >= 1.5))
    rel = med[2] / np.median(sup_x)
    crits.append(_crit("7-eint-size", "median residual / median sup|X| at finest grid", float(rel), 0.05, rel < 0.05))
    Z = ens.Z()
    qv = (np.diff(Z, axis=1) ** 2).sum(axis=1) - X[:, -1]
    zq = abs(qv.mean()) / (qv.std(ddof=1) / math.sqrt(qv.size))
    crits.append(_crit("7-qv", "E[sum dZ^2 - X_1] = 0 (in SE)", float(zq), 3.0, zq <= 3.0))
    z1 = Z[:, -1]
    d = z1**2 - X[:, -1]
    zz = abs(d.mean()) / (d.std(ddof=1) / math.sqrt(d.size))
    crits.append(_crit("7-Z2", "E[Z_1^2] = E[X_1] (in SE)", float(zz), 3.0, zz <= 3.0))
    zm = abs(z1.mean()) / (z1.std(ddof=1) / math.sqrt(z1.size))
    crits.append(_crit("7-Z1", "E[Z_1] = 0 (in SE)", float(zm), 3.0, zm <= 3.0))
    return crits, {"negative_fraction": ens.negative_fraction()}


def _sc_law(cfg, out):
    r = cfg.regime
    p = V.LimitParams(r["alpha"], r["lam"], r["mu_star"], cfg.n, cfg.seed)
    X1 = np.sort(V.simulate_ensemble(p, cfg.paths).X()[:, -1])
    out.csv("x1_limit.csv", ["path", "x1"], enumerate(X1))

    def ref(x):
        return np.searchsorted(X1, x, side="right") / X1.size

    w = {}
    rows = []
    for T in cfg.ladder:
        reg = _regime(cfg, T)
        N = np.array(H.simulate_many(reg.hawkes_params(), cfg.seed, cfg.replicas, len, cfg.method, cfg.threads))
        xT = reg.x_scale * N
        out.csv(f"x1_T{T:g}.csv", ["replica", "x1"], enumerate(xT))
        w[T] = D.ecdf_distance(xT, X1)
        rows += _ecdf_rows("convergence-in-law", T, xT, ref)
    out.csv("ecdf_x1.csv", ["scenario", "T", "x", "ecdf", "analytic"], rows)
    out.csv("distances.csv", ["T", "ks", "w1"], [(T, k, v) for T, (k, v) in w.items()])
    seq = [w[T][1] for T in sorted(w)]
    return [_crit("8-w1", "W1(X^T_1, X_1) strictly decreasing in T", seq, "decreasing", D.strictly_decreasing(seq))], {}


_RUNNERS = {
    "special-functions": _sc_special,
    "fractional-identities": _sc_fractional,
    "simulator-crossval": _sc_crossval,
    "bracket-identity": _sc_bracket,
    "ucp-ecdf": _sc_ucp,
    "samelim-decay": _sc_samelim,
    "limit-properties": _sc_limit,
    "convergence-in-law": _sc_law,
}


def _versions():
    import numba
    import scipy

    return {
        "roughhawkes": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def run_scenario(cfg, out: str | os.PathLike | None = None, raise_on_failure: bool = True) -> dict:
    """Run a scenario and return its report.

    Raises ConfigError on invalid configs, ResourceError when a simulation hits
    the event cap and CriterionFailure (carrying the report) when a criterion
    fails and ``raise_on_failure`` is set.
    """
    if not isinstance(cfg, ExperimentConfig):
        cfg, errs = parse_config(cfg)
        if cfg is None:
            raise ConfigError("; ".join(errs))
    else:
        errs = []
    errs = errs + validate_config(cfg)
    if errs:
        raise ConfigError("; ".join(errs))
    if out is not None:
        cfg.out = str(out)
    o = _Out(Path(cfg.out))
    t0 = time.perf_counter()
    crits, extra = _RUNNERS[cfg.scenario](cfg, o)
    wall = time.perf_counter() - t0
    passed = all(c["passed"] for c in crits)
    report = {"scenario": cfg.scenario, "passed": passed, "criteria": crits, "details": extra}
    o.json("report.json", report)
    manifest = {
        "scenario": cfg.scenario,
        "config": cfg.echo(),
        "versions": _versions(),
        "wall_clock_seconds": wall,
        "outputs": dict(sorted(o.rows.items())),
    }
    o.json("manifest.json", manifest)
    if not passed and raise_on_failure:
        raise CriterionFailure(f"{cfg.scenario}: {sum(not c['passed'] for c in crits)} criteria failed", report)
    return report


# ---------------------------------------------------------------------------
# plot bundles

_BUNDLES = {
    "plot_ecdf.csv": (("ecdf_jt.csv", "ecdf_x1.csv"), ["scenario", "T", "x", "ecdf", "analytic"]),
    "plot_holder.csv": (("holder.csv",), ["scenario", "target", "q", "h", "log_m"]),
    "plot_decay.csv": (("decay.csv",), ["scenario", "T", "x", "y", "se"]),
}


def emit_plotdata(directory) -> dict:
    """Collect tidy long-format CSVs for plotting from a finished scenario directory.

    Returns the row count of every bundle written (empty when the scenario
    produces nothing plottable).
    """
    d = Path(directory)
    man = d / "manifest.json"
    if not d.is_dir() or not man.exists():
        raise MissingDataError(f"{d} holds no completed scenario (manifest.json missing)")
    manifest = json.loads(man.read_text())
    o = _Out(d)
    written = {}
    for bundle, (sources, header) in _BUNDLES.items():
        rows = []
        for src in sources:
            f = d / src
            if not f.exists():
                continue
            with f.open(newline="") as fh:
                rd = csv.reader(fh)
                head = next(rd)
                if head != header:
                    raise MissingDataError(f"{src} has unexpected columns {head}")
                got = list(rd)
            if len(got) != manifest["outputs"].get(src, -1):
                raise MissingDataError(f"{src} row count disagrees with the manifest")
            rows += got
        if rows:
            o.csv(bundle, header, rows)
            written[bundle] = len(rows)
    return written
