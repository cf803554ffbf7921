"""Estimators and distances linking Hawkes ensembles to their limits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, stats

from . import special_fn as sf
from .errors import DegenerateError, DomainError

QS = (0.5, 1.0, 2.0)
EXPONENT_CAP = 1.5


@dataclass(frozen=True)
class HolderEstimate:
    exponent: float
    stderr: float
    qs: tuple
    h_min: float
    h_max: float
    method: str = "moments"
    slopes: dict = field(default_factory=dict)

    @property
    def levels(self) -> int:
        return int(round(math.log2(self.h_max / self.h_min))) + 1


def _lags(n: int, max_level: int | None):
    top = int(math.log2(n)) - 4 if max_level is None else int(max_level)
    top = min(top, int(math.log2(n)) - 2)
    if top < 2:
        raise DomainError("path too short for three dyadic scales")
    return 2 ** np.arange(top + 1)


def _moment_table(values: np.ndarray, lags, qs):
    # values: (paths, n + 1); mean over paths and positions of |increment|^q
    out = np.empty((len(qs), len(lags)))
    for b, lag in enumerate(lags):
        d = np.abs(values[:, lag:] - values[:, :-lag])
        for a, q in enumerate(qs):
            out[a, b] = np.mean(d**q)
    return out


def _fit(logm, logh, qs):
    slopes = {}
    ests = []
    errs = []
    for a, q in enumerate(qs):
        res = stats.linregress(logh, logm[a])
        slopes[q] = res.slope / q
        ests.append(res.slope / q)
        errs.append(res.stderr / q)
    return float(np.mean(ests)), float(np.sqrt(np.mean(np.square(errs)))), slopes


def holder_estimate(path, qs=QS, step: float | None = None, method: str = "moments", max_level: int | None = None):
    """Hölder exponent by dyadic scaling regression.

    ``method="moments"`` regresses log mean |x(t+h) - x(t)|^q on log h and
    averages slope / q over ``qs``. ``method="modulus"`` regresses the log of
    the sup-norm modulus of continuity instead; it targets functions whose
    roughness is concentrated at a point (e.g. x^H at the origin), which the
    averaged moments cannot see.

    ``path`` is a GridPath, GridFn or 1-d array (then ``step`` is required).
    Lags run over 2^0 .. 2^{log2(n) - 4} grid steps unless ``max_level`` is set.
    """
    values, h = _unpack(path, step)
    return _estimate(values[None, :], h, qs, method, max_level)


def holder_ensemble(paths, step: float, qs=QS, method: str = "moments", max_level: int | None = None):
    """Pooled estimate over an ensemble (paths along axis 0)."""
    values = np.asarray(paths, dtype=float)
    if values.ndim != 2:
        raise DomainError("ensemble must be two-dimensional")
    return _estimate(values, step, qs, method, max_level)


def _unpack(path, step):
    if hasattr(path, "values") and hasattr(path, "step"):
        return np.asarray(path.values, dtype=float), float(path.step)
    if step is None:
        raise DomainError("step is required for raw arrays")
    return np.asarray(path, dtype=float), float(step)


def _estimate(values, h, qs, method, max_level):
    qs = tuple(float(q) for q in qs)
    if not qs or any(q not in QS for q in qs):
        raise DomainError(f"qs must be a non-empty subset of {QS}")
    n = values.shape[1] - 1
    if n < 512:
        raise DomainError("need at least 512 grid steps")
    if not np.all(np.isfinite(values)):
        raise DomainError("path values must be finite")
    if np.all(values == values[:, :1]):
        raise DegenerateError("constant path has no roughness")
    lags = _lags(n, max_level)
    logh = np.log(lags * h)
    if method == "moments":
        logm = np.log(_moment_table(values, lags, qs))
        exponent, err, slopes = _fit(logm, logh, qs)
    elif method == "modulus":
        mod = np.array([np.max(np.abs(values[:, lag:] - values[:, :-lag]), axis=1).mean() for lag in lags])
        res = stats.linregress(logh, np.log(mod))
        exponent, err, slopes = float(res.slope), float(res.stderr), {"sup": float(res.slope)}
    else:
        raise DomainError(f"unknown method {method!r}")
    return HolderEstimate(min(exponent, EXPONENT_CAP), err, qs, float(lags[0] * h), float(lags[-1] * h), method, slopes)


# ---------------------------------------------------------------------------
# distances between laws


class TabulatedCDF:
    """Monotone interpolation of a CDF in log x, with power-law ends.

    Below the table F(x) = F(lo) (x / lo)^{alpha_lo}; above it the tail
    1 - F is continued as a power with the last local exponent.
    """

    def __init__(self, fn, lo: float, hi: float, n: int = 4001):
        x = np.geomspace(lo, hi, n)
        Fx = np.asarray(fn(x), dtype=float)
        if np.any(np.diff(Fx) < -1e-14):
            raise DomainError("tabulated function is not a CDF")
        self._lx = np.log(x)
        self._F = Fx
        self._interp = interpolate.PchipInterpolator(self._lx, Fx)
        self._lo_pow = (math.log(Fx[1]) - math.log(Fx[0])) / (self._lx[1] - self._lx[0])
        t1, t0 = 1.0 - Fx[-1], 1.0 - Fx[-2]
        self._hi_pow = (math.log(t1) - math.log(t0)) / (self._lx[-1] - self._lx[-2]) if t1 > 0 and t0 > 0 else -np.inf

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        pos = x > 0
        out[~pos] = 0.0
        lx = np.log(x[pos])
        mid = np.clip(lx, self._lx[0], self._lx[-1])
        v = self._interp(mid)
        below = lx < self._lx[0]
        above = lx > self._lx[-1]
        v[below] = self._F[0] * np.exp(self._lo_pow * (lx[below] - self._lx[0]))
        v[above] = 1.0 - (1.0 - self._F[-1]) * np.exp(self._hi_pow * (lx[above] - self._lx[-1]))
        out[pos] = np.clip(v, 0.0, 1.0)
        return out


def frac_cdf(alpha: float, lam: float, lo: float = 1e-12, hi: float = 1e12) -> TabulatedCDF:
    """Tabulated F^{alpha,lam}; interpolation error is about 1e-9."""
    p = sf.FracKernelParams(alpha, lam)
    return TabulatedCDF(lambda x: sf.F_frac(p, x), lo, hi)


def ecdf_distance(a, b, min_samples: int = 1000):
    """(KS, W1) between sample ``a`` and a sample or CDF callable ``b``.

    Against a CDF, W1 is the integral of |F_n - F| over the sample range with
    F averaged over each gap (trapezoid), which is the honest finite quantity
    for laws without a first moment.
    """
    a = np.sort(np.asarray(a, dtype=float))
    if a.size < min_samples:
        raise DomainError(f"need at least {min_samples} samples, got {a.size}")
    if callable(b):
        n = a.size
        F = b(a)
        ks = float(max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n)))
        Fn = np.arange(1, n) / n
        w1 = float(np.sum(np.diff(a) * np.abs(Fn - 0.5 * (F[1:] + F[:-1]))))
        return ks, w1
    b = np.asarray(b, dtype=float)
    if b.size < min_samples:
        raise DomainError(f"need at least {min_samples} samples, got {b.size}")
    ks = float(stats.ks_2samp(a, b).statistic)
    w1 = float(stats.wasserstein_distance(a, b))
    return ks, w1


# ---------------------------------------------------------------------------
# bracket and decay reports


@dataclass(frozen=True)
class BracketReport:
    T: float
    paths: int
    max_identity_error: float
    jump: float
    jump_closed_form: float
    max_grid_jump: float

    @property
    def ok(self) -> bool:
        return self.max_identity_error <= 1e-12 and self.jump == self.jump_closed_form

    def as_dict(self):
        return {**self.__dict__, "ok": self.ok}


def bracket_report(records, reg, z_paths=None, x_paths=None) -> BracketReport:
    """Check sum (Delta Z^T)^2 = X^T_1 per path and tabulate the jump size.

    Every jump of Z^T equals sqrt(x_scale); the sum of squared jumps is taken
    event by event with exact summation and compared with X^T_1, either the
    supplied grid value or x_scale N_T.
    """
    jump = reg.jump
    worst = 0.0
    grid_jump = 0.0
    for i, r in enumerate(records):
        n = len(r)
        qv = math.fsum([jump * jump] * n)
        x1 = x_paths[i].values[-1] if x_paths is not None else reg.x_scale * n
        worst = max(worst, abs(qv - x1) / max(1.0, abs(x1)))
        if z_paths is not None:
            grid_jump = max(grid_jump, float(np.max(np.abs(np.diff(z_paths[i].values)), initial=0.0)))
    closed = math.sqrt((1.0 - reg.a_T) / (reg.T**reg.alpha * reg.mu_star / reg.delta))
    # 1 - a_T recomputed from a_T differs from the exact construction by rounding only
    closed_exact = math.sqrt(reg.one_minus_a / reg.norm)
    if abs(closed - closed_exact) > 1e-12 * closed_exact:
        raise DomainError("jump closed form disagrees with the regime construction")
    return BracketReport(float(reg.T), len(records), worst, jump, closed_exact, grid_jump)


@dataclass(frozen=True)
class DecayFit:
    C: float
    slope: float
    stderr: float
    x: tuple
    y: tuple
    y_se: tuple

    @property
    def within(self) -> bool:
        return 0.7 <= self.slope <= 1.3


def samelim_decay(ensembles) -> DecayFit:
    """Fit log E[sup (X^T - Lambda^T)^2] = log C + slope log((1 - a_T) / T^alpha).

    ``ensembles`` maps each regime to an array of per-replica sup values, as
    an iterable of (regime, values) pairs or a dict keyed by regime.
    """
    items = list(ensembles.items()) if isinstance(ensembles, dict) else list(ensembles)
    if len(items) < 3:
        raise DegenerateError(f"need at least 3 horizons, got {len(items)}")
    xs, ys, ses = [], [], []
    for reg, vals in sorted(items, key=lambda it: it[0].T):
        v = np.asarray(vals, dtype=float)
        if v.size < 2:
            raise DegenerateError("need replicated values at every horizon")
        m = float(v.mean())
        xs.append(math.log(reg.one_minus_a / reg.T**reg.alpha))
        ys.append(math.log(m))
        ses.append(float(v.std(ddof=1) / math.sqrt(v.size) / m))
    res = stats.linregress(xs, ys)
    return DecayFit(math.exp(res.intercept), float(res.slope), float(res.stderr), tuple(xs), tuple(ys), tuple(ses))


def strictly_decreasing(values) -> bool:
    v = list(values)
    return all(b < a for a, b in zip(v, v[1:]))
