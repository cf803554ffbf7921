"""Two-parameter Mittag-Leffler function on the real line and the kernel f^{alpha,lam}.

E_{a,b}(z) = sum_n z^n / Gamma(a n + b) is evaluated by one of three methods:

``series``
    Term-ratio-stopped power series, summed exactly-rounded with ``math.fsum``.
    Accepted only when its own cancellation estimate meets the tolerance.
``asymptotic``
    E_{a,b}(-y) ~ sum_{k>=1} (-1)^{k+1} y^{-k} / Gamma(b - a k) for a < 1,
    truncated before the terms start growing.
``integral``
    The real Laplace-inversion representation for negative arguments,

        E_{a,b}(-y) = 1/pi int_0^inf e^{-r} r^{a-b}
                      (r^a sin(b pi) + y sin((b-a) pi)) / (r^{2a} + 2 y r^a cos(a pi) + y^2) dr,

    valid for 0 < a < 1, 0 < b < 1 + a; larger b is reached by the
    recurrence E_{a,b+a}(z) = (E_{a,b}(z) - 1/Gamma(b)) / z.

``method="auto"`` tries them in that order and raises :class:`AccuracyError`
when none attains ``rel_tol``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import AccuracyError, DomainError

Z_MAX = 1e8
Z_SWITCH = 15.0
DEFAULT_TOL = 1e-10
_EPS = np.finfo(float).eps
# beyond this y**(1/alpha) the alternating series loses > ~13 digits
_SERIES_CANCEL_LIMIT = 30.0


@dataclass(frozen=True)
class MLQuery:
    alpha: float
    beta: float
    z: float
    rel_tol: float = DEFAULT_TOL

    def __post_init__(self):
        _check_ab(self.alpha, self.beta)
        if not 0.0 < self.rel_tol <= 1e-3:
            raise DomainError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol}")


@dataclass(frozen=True)
class FracKernelParams:
    """Parameters of f^{alpha,lam}(x) = lam x^{alpha-1} E_{alpha,alpha}(-lam x^alpha)."""

    alpha: float
    lam: float

    def __post_init__(self):
        # alpha = 1 is accepted as the exponential special case
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.lam > 0.0:
            raise DomainError(f"lam must be positive, got {self.lam}")


def _check_ab(alpha, beta):
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta}")


# ---------------------------------------------------------------------------
# individual methods; each returns (value, estimated relative error)


def _series(z, alpha, beta):
    if z == 0.0:
        return float(special.rgamma(beta)), 0.0
    logy = math.log(abs(z))
    neg = z < 0.0
    terms = []
    big = 0.0
    abserr = 0.0
    prev = math.inf
    n = 0
    while True:
        arg = alpha * n + beta
        a = n * logy
        g = float(special.gammaln(arg))
        lt = a - g
        if lt > 700.0:
            return math.nan, math.inf
        t = math.exp(lt)
        terms.append(-t if (neg and n % 2) else t)
        # rounding in the exponent scales with the operands, not their difference
        abserr += t * _EPS * (4.0 + abs(a) + abs(g))
        big = max(big, t)
        n += 1
        # past the peak the terms decrease geometrically
        if t < prev and t <= 1e-18 * big and n > 2:
            break
        prev = t
        if n > 100000:
            return math.nan, math.inf
    s = math.fsum(terms)
    if s == 0.0:
        return s, math.inf
    return s, abserr / abs(s)


def _asymptotic(y, alpha, beta):
    """Algebraic expansion of E_{alpha,beta}(-y); alpha < 1 only.

    Terms are not monotone (1/Gamma(beta - alpha k) oscillates with period
    ~1/alpha), so convergence is declared only after a full run of small terms.
    """
    run = int(math.ceil(2.0 / alpha)) + 2
    logy = math.log(y)
    s = 0.0
    best = (math.inf, 0.0)  # (smallest term, partial sum just before it)
    small_run = 0
    err = math.inf
    for k in range(1, 2000):
        x = beta - alpha * k
        if x <= 0.0 and abs(x - round(x)) < 1e-9:
            continue  # 1/Gamma vanishes at the poles
        rg = float(special.rgamma(x))
        mag = math.exp(-k * logy + math.log(abs(rg)))
        if k > run and mag > 100.0 * best[0]:
            # divergent tail: truncate optimally, before the smallest term
            s = best[1]
            err = 10.0 * run * best[0]
            break
        if mag < best[0]:
            best = (mag, s)
        s += mag * math.copysign(1.0, rg) * (1.0 if k % 2 else -1.0)
        if mag <= 1e-17 * abs(s):
            small_run += 1
            if small_run >= run:
                err = mag * run
                break
        else:
            small_run = 0
    if s == 0.0:
        return s, math.inf
    return s, err / abs(s) + 4 * _EPS


def _integral_core(y, alpha, beta, rel_tol):
    sb = math.sin(beta * math.pi)
    sba = math.sin((beta - alpha) * math.pi)
    ca = math.cos(alpha * math.pi)

    def g(r):
        ra = r**alpha
        return math.exp(-r) * (ra * sb + y * sba) / (ra * ra + 2.0 * y * ra * ca + y * y)

    rs = y ** (1.0 / alpha)
    if ca < 0.0:
        rs = (-y * ca) ** (1.0 / alpha)
    lo = min(rs, 1.0)
    hi = max(rs, 1.0)
    eps = max(min(rel_tol, 1e-10) * 1e-2, 1e-13)
    opts = dict(epsabs=0.0, epsrel=eps, limit=400)
    v1, e1 = integrate.quad(g, 0.0, lo, weight="alg", wvar=(alpha - beta, 0.0), **opts)
    def gw(r):
        return g(r) * r ** (alpha - beta)

    v2, e2 = (0.0, 0.0) if hi == lo else integrate.quad(gw, lo, hi, points=[rs] if lo < rs < hi else None, **opts)
    v3, e3 = integrate.quad(gw, hi, math.inf, **opts)
    val = (v1 + v2 + v3) / math.pi
    err = (e1 + e2 + e3) / math.pi
    if val == 0.0:
        return val, math.inf
    return val, err / abs(val) + 8 * _EPS


def _integral(y, alpha, beta, rel_tol):
    if alpha >= 1.0:
        return math.nan, math.inf
    if beta < 1.0 + alpha:
        return _integral_core(y, alpha, beta, rel_tol)
    # downward recurrence; subtraction is benign for y >= ~1
    inner, err = _integral(y, alpha, beta - alpha, rel_tol)
    val = (float(special.rgamma(beta - alpha)) - inner) / y
    if val == 0.0:
        return val, math.inf
    return val, err * abs(inner) / abs(val * y) + 4 * _EPS


def _alpha_one(z, beta, rel_tol):
    """E_{1,beta}: exp for beta = 1, beta-integral or recurrence otherwise."""
    if beta == 1.0:
        return math.exp(z), _EPS
    if z >= -1.0:
        return _series(z, 1.0, beta)
    if beta > 1.0:
        # E_{1,b}(z) = 1/Gamma(b-1) int_0^1 e^{zs} (1-s)^{b-2} ds
        eps = max(min(rel_tol, 1e-10) * 1e-2, 1e-13)
        v, e = integrate.quad(lambda s: math.exp(z * s), 0.0, 1.0, weight="alg",
                              wvar=(0.0, beta - 2.0), epsabs=0.0, epsrel=eps, limit=400)
        r = float(special.rgamma(beta - 1.0))
        return v * r, e / abs(v) + 4 * _EPS
    up, err = _alpha_one(z, beta + 1.0, rel_tol)
    val = float(special.rgamma(beta)) + z * up
    return val, (err * abs(z * up) + _EPS) / abs(val)


@lru_cache(maxsize=65536)
def _ml_scalar(z, alpha, beta, rel_tol, method):
    with warnings.catch_warnings():
        # quad's own roundoff warning is superseded by the error estimates
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return _ml_dispatch(z, alpha, beta, rel_tol, method)


def _ml_dispatch(z, alpha, beta, rel_tol, method):
    if z == 0.0:
        return float(special.rgamma(beta))
    if abs(z) > Z_MAX:
        if z > 0:
            raise DomainError(f"|z| exceeds Z_MAX={Z_MAX:g}")
        # leading algebraic term only
        return float(special.rgamma(beta - alpha)) / (-z)
    if method == "auto":
        if alpha == 1.0:
            val, err = _alpha_one(z, beta, rel_tol)
            if err <= rel_tol:
                return val
            raise AccuracyError(f"E_1,{beta}({z}) reached only {err:.2e}")
        y = -z
        tried = []
        if z > 0 or y ** (1.0 / alpha) <= _SERIES_CANCEL_LIMIT:
            val, err = _series(z, alpha, beta)
            if err <= rel_tol:
                return val
            tried.append(("series", err))
        if z < 0:
            if y >= 1.0:
                val, err = _asymptotic(y, alpha, beta)
                if err <= rel_tol:
                    return val
                tried.append(("asymptotic", err))
            val, err = _integral(y, alpha, beta, rel_tol)
            if err <= rel_tol:
                return val
            tried.append(("integral", err))
        raise AccuracyError(f"E_{alpha},{beta}({z}): no method reached {rel_tol:g}; {tried}")
    if method == "series":
        val, err = _series(z, alpha, beta)
    elif method == "asymptotic":
        if z >= 0 or alpha >= 1.0:
            raise DomainError("asymptotic expansion needs z < 0 and alpha < 1")
        val, err = _asymptotic(-z, alpha, beta)
    elif method == "integral":
        if z >= 0 or alpha >= 1.0:
            raise DomainError("integral representation needs z < 0 and alpha < 1")
        val, err = _integral(-z, alpha, beta, rel_tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not err <= rel_tol:
        raise AccuracyError(f"{method} reached only {err:.2e} for E_{alpha},{beta}({z})")
    return val


def mittag_leffler(z, alpha, beta=1.0, rel_tol=DEFAULT_TOL, method="auto"):
    """Evaluate E_{alpha,beta}(z) for real scalar or array ``z``.

    Parameters
    ----------
    z : float or array_like
        Real argument(s), |z| <= Z_MAX for positive z.
    alpha : float
        Series parameter in (0, 1].
    beta : float
        Positive second parameter.
    rel_tol : float
        Target relative accuracy.
    method : {"auto", "series", "asymptotic", "integral"}
        Force a single evaluation method (used to probe regime crossovers).
    """
    _check_ab(alpha, beta)
    alpha, beta, rel_tol = float(alpha), float(beta), float(rel_tol)
    if np.ndim(z) == 0:
        return _ml_scalar(float(z), alpha, beta, rel_tol, method)
    zz = np.asarray(z, dtype=float)
    flat = zz.ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    vals = np.array([_ml_scalar(float(u), alpha, beta, rel_tol, method) for u in uniq])
    return vals[inv].reshape(zz.shape)


def ml_eval(q: MLQuery) -> float:
    return mittag_leffler(q.z, q.alpha, q.beta, q.rel_tol)


def series_switch_point(alpha, beta=1.0, rel_tol=DEFAULT_TOL):
    """Largest y (on a coarse scan) where the series still meets ``rel_tol`` at z=-y.

    Returned value is where ``auto`` hands over from the series to another method.
    """
    _check_ab(alpha, beta)
    ys = np.geomspace(0.05, min(Z_SWITCH, _SERIES_CANCEL_LIMIT**alpha), 200)
    last = None
    for y in ys:
        _, err = _series(-float(y), alpha, beta)
        if err > rel_tol:
            break
        last = float(y)
    return last


# ---------------------------------------------------------------------------
# f^{alpha,lam} and its fractional relatives


def _as_positive(x, name="x", allow_zero=False):
    arr = np.asarray(x, dtype=float)
    bad = (arr < 0) if allow_zero else (arr <= 0)
    if np.any(bad) or np.any(~np.isfinite(arr)):
        raise DomainError(f"{name} must be {'non-negative' if allow_zero else 'positive'} and finite")
    return arr


def _ret(x, arr):
    return float(arr) if np.ndim(x) == 0 else arr


def _power_ml(p, x, shift, beta, rel_tol):
    # lam * x^{alpha - 1 + shift} * E_{alpha,beta}(-lam x^alpha)
    a, lam = p.alpha, p.lam
    return lam * x ** (a - 1.0 + shift) * mittag_leffler(-lam * x**a, a, beta, rel_tol)


def f_frac(p: FracKernelParams, x, rel_tol=DEFAULT_TOL):
    """Mittag-Leffler density lam x^{alpha-1} E_{alpha,alpha}(-lam x^alpha), x > 0."""
    arr = _as_positive(x)
    return _ret(x, _power_ml(p, arr, 0.0, p.alpha, rel_tol))


def F_frac(p: FracKernelParams, t, rel_tol=DEFAULT_TOL):
    """Distribution function of f_frac.

    Computed as lam t^alpha E_{alpha,alpha+1}(-lam t^alpha), which equals
    1 - E_{alpha,1}(-lam t^alpha) without the cancellation near t = 0.
    """
    arr = _as_positive(t, "t", allow_zero=True)
    out = np.zeros_like(arr)
    pos = arr > 0
    if np.any(pos):
        out[pos] = _power_ml(p, arr[pos], 1.0, p.alpha + 1.0, rel_tol)
    return _ret(t, out)


def frac_deriv_f(p: FracKernelParams, nu, x, rel_tol=DEFAULT_TOL):
    """Riemann-Liouville derivative D^nu f_frac(x) = lam x^{alpha-1-nu} E_{alpha,alpha-nu}(-lam x^alpha)."""
    if not 0.0 <= nu < p.alpha:
        raise DomainError(f"nu must lie in [0, alpha={p.alpha}), got {nu}")
    arr = _as_positive(x)
    if nu == 0.0:
        return f_frac(p, x, rel_tol)
    return _ret(x, _power_ml(p, arr, -nu, p.alpha - nu, rel_tol))


def frac_integ_f(p: FracKernelParams, nu_p, x, rel_tol=DEFAULT_TOL):
    """Riemann-Liouville integral I^nu' f_frac(x) = lam x^{alpha-1+nu'} E_{alpha,alpha+nu'}(-lam x^alpha)."""
    if not nu_p > 0.0:
        raise DomainError(f"nu_p must be positive, got {nu_p}")
    arr = _as_positive(x)
    return _ret(x, _power_ml(p, arr, nu_p, p.alpha + nu_p, rel_tol))


def kernel_weights(p: FracKernelParams, grid_step: float, n: int, rel_tol=DEFAULT_TOL):
    """Exact cell masses w_k = F(k h) - F((k-1) h), k = 1..n."""
    if not grid_step > 0 or n < 1:
        raise DomainError("grid_step must be positive and n >= 1")
    if grid_step * n > 1.0 + grid_step * (1 + 1e-9):
        raise DomainError("grid must not extend beyond [0, 1 + h]")
    cum = F_frac(p, grid_step * np.arange(n + 1), rel_tol)
    return np.diff(cum)


def kernel_moments(p: FracKernelParams, grid_step: float, n: int, rel_tol=DEFAULT_TOL):
    """Exact zeroth and first moments of f_frac over cells [k h, (k+1) h], k = 0..n-1.

    Returns ``(m0, m1)`` with m0_k = int f and m1_k = int (u - k h) f(u) du; the
    first moment uses int_0^x u f(u) du = x F(x) - I^2 f(x).
    """
    x = grid_step * np.arange(n + 1)
    F = F_frac(p, x, rel_tol)
    G = np.zeros_like(x)
    G[1:] = frac_integ_f(p, 2.0, x[1:], rel_tol)
    U = x * F - G
    m0 = np.diff(F)
    m1 = np.diff(U) - x[:-1] * m0
    return m0, m1
