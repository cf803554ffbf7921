"""Nearly unstable regime, rescaled paths and the renewal function.

A regime fixes (alpha, lam, mu_star, K) and a horizon T and sets

    delta = K Gamma(1 - alpha) / alpha
    1 - a_T = lam delta T^{-alpha}
    mu_T = mu_star T^{alpha - 1} / delta

exactly, so the rescaling constants have no o(1) slack. Paths on [0, 1]:

    X^T_t = (1 - a_T) N_{Tt} / norm,   Lambda^T_t = (1 - a_T) Lambda_{Tt} / norm,
    Z^T_t = sqrt(norm / (1 - a_T)) (X^T_t - Lambda^T_t),   norm = T^alpha mu_star / delta.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np
from scipy import special

from . import hawkes, kernels
from .errors import AccuracyError, ConsistencyError, DomainError
from .kernels import KernelSpec, _delay
from .rng import JT, stream

LABELS = ("X_T", "Lambda_T", "Z_T", "Y_limit", "X_limit")
_MONOTONE = ("X_T", "Lambda_T", "X_limit")


@dataclass(frozen=True, eq=False)
class GridPath:
    """Values at t_i = i * step, i = 0..n, on [0, 1]."""

    step: float
    values: np.ndarray
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise DomainError(f"unknown path label {self.label!r}")
        self.values.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    @property
    def t(self) -> np.ndarray:
        return self.step * np.arange(self.values.shape[0])

    def check(self, atol: float = 0.0):
        """Raise ConsistencyError if the label's invariants fail."""
        if self.label in _MONOTONE:
            if self.values[0] != 0.0:
                raise ConsistencyError(f"{self.label} must start at 0")
            if np.any(np.diff(self.values) < -atol):
                raise ConsistencyError(f"{self.label} must be nondecreasing")


@dataclass(frozen=True)
class ScalingRegime:
    alpha: float
    lam: float
    mu_star: float
    K: float
    T: float
    family: str = "ShiftedPareto"

    @property
    def delta(self) -> float:
        return self.K * special.gamma(1.0 - self.alpha) / self.alpha

    @property
    def one_minus_a(self) -> float:
        return self.lam * self.delta * self.T ** (-self.alpha)

    @property
    def a_T(self) -> float:
        return 1.0 - self.one_minus_a

    @property
    def mu_T(self) -> float:
        return self.mu_star * self.T ** (self.alpha - 1.0) / self.delta

    @property
    def v_T(self) -> float:
        return self.T**self.alpha * self.one_minus_a / self.delta

    @property
    def gamma_T(self) -> float:
        return (self.mu_T * self.T * self.one_minus_a) ** -0.5

    @property
    def norm(self) -> float:
        """T^alpha mu_star / delta, the count normalisation before the (1 - a_T) factor."""
        return self.T**self.alpha * self.mu_star / self.delta

    @property
    def x_scale(self) -> float:
        """X^T = x_scale * N_{T.}."""
        return self.one_minus_a / self.norm

    @property
    def jump(self) -> float:
        """Size of every jump of Z^T."""
        return math.sqrt(self.x_scale)

    @property
    def kernel(self) -> KernelSpec:
        k = KernelSpec(self.family, self.alpha)
        if abs(k.K - self.K) > 1e-12 * k.K:
            raise ConsistencyError(f"{self.family} has tail constant {k.K}, regime declares K={self.K}")
        return k

    def hawkes_params(self) -> hawkes.HawkesParams:
        return hawkes.HawkesParams(self.mu_T, self.a_T, self.kernel, self.T)

    def constants(self) -> dict:
        return {
            k: float(getattr(self, k))
            for k in ("alpha", "lam", "mu_star", "K", "T", "delta", "a_T", "one_minus_a", "mu_T", "v_T", "gamma_T")
        }


def admissible_T(alpha: float, lam: float, K: float) -> float:
    """Smallest horizon (excluded) for which a_T > 0."""
    return (lam * K * special.gamma(1.0 - alpha) / alpha) ** (1.0 / alpha)


def make_regime(alpha, lam, mu_star, K, T, family: str = "ShiftedPareto") -> ScalingRegime:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    for name, v in (("lam", lam), ("mu_star", mu_star), ("K", K), ("T", T)):
        if not (v > 0 and math.isfinite(v)):
            raise DomainError(f"{name} must be positive and finite, got {v}")
    reg = ScalingRegime(float(alpha), float(lam), float(mu_star), float(K), float(T), family)
    # a_T <= 0 at and below the admissibility boundary; allow for rounding in the power
    if reg.one_minus_a >= 1.0 - 1e-12:
        raise DomainError(f"T={T} not admissible: need T > {admissible_T(alpha, lam, K):.6g}")
    return reg


# ---------------------------------------------------------------------------
# rescaled paths


def _check_record(r: hawkes.EventRecord, reg: ScalingRegime):
    p = r.params
    want = reg.hawkes_params()
    bad = [
        name
        for name, x, y in (("mu", p.mu, want.mu), ("a", p.a, want.a), ("horizon", p.horizon, want.horizon))
        if abs(x - y) > 1e-12 * abs(y)
    ]
    if p.kernel != want.kernel:
        bad.append("kernel")
    if bad:
        raise ConsistencyError(f"event record inconsistent with regime in: {', '.join(bad)}")


def rescale_paths(r: hawkes.EventRecord, reg: ScalingRegime, n: int = 1000, history_tol: float | None = None):
    """Grid paths (X^T, Lambda^T, Z^T) on t_i = i / n."""
    _check_record(r, reg)
    if n < 1:
        raise DomainError("n must be positive")
    real_t = reg.T * np.arange(n + 1) / n
    real_t[-1] = reg.T
    counts = np.searchsorted(r.times, real_t, side="right").astype(float)
    comp = hawkes.compensator_at(r, real_t, history_tol)
    xs = reg.x_scale
    X = xs * counts
    L = xs * comp
    Z = (counts - comp) * reg.jump
    h = 1.0 / n
    return GridPath(h, X, "X_T"), GridPath(h, L, "Lambda_T"), GridPath(h, Z, "Z_T")


def sup_gap_sq(r: hawkes.EventRecord, reg: ScalingRegime, history_tol: float | None = None) -> float:
    """sup_{t <= 1} (X^T_t - Lambda^T_t)^2 over continuous time.

    N - Lambda decreases between jumps, so its extremes sit just before and at
    event times and at the horizon.
    """
    _check_record(r, reg)
    q = np.append(r.times, reg.T)
    comp = hawkes.compensator_at(r, q, history_tol)
    i = np.arange(r.times.size, dtype=float)
    gap = max(
        np.max(np.abs(i - comp[:-1]), initial=0.0),
        np.max(np.abs(i + 1.0 - comp[:-1]), initial=0.0),
        abs(r.times.size - comp[-1]),
    )
    return float((gap * reg.x_scale) ** 2)


# ---------------------------------------------------------------------------
# renewal function


@dataclass(frozen=True, eq=False)
class RenewalGrid:
    """Cumulative renewal function Psi(t) = int_0^t psi on t_i = i * step.

    ``Psi[0] = 0``; ``psi`` holds cell averages of the density.
    """

    step: float
    Psi: np.ndarray

    @property
    def t(self):
        return self.step * np.arange(self.Psi.size)

    @property
    def psi(self):
        return np.diff(self.Psi) / self.step

    @property
    def mass(self) -> float:
        return float(self.Psi[-1])

    def laplace(self, z: float) -> float:
        """int e^{-z t} psi(t) dt with psi constant on each cell."""
        h = self.step
        lo = self.t[:-1]
        if z == 0:
            return self.mass
        cell = np.exp(-z * lo) * (-np.expm1(-z * h)) / (z * h)
        return float(np.dot(np.diff(self.Psi), cell))

    def integral(self, t: float) -> float:
        """int_0^t Psi(s) ds for t on or inside the grid."""
        h = self.step
        m = min(int(math.floor(t / h + 1e-9)), self.Psi.size - 1)
        dP = np.diff(self.Psi[: m + 1])
        mid = h * (np.arange(m) + 0.5)
        full = float(np.dot(dP, t - mid))
        if m < self.Psi.size - 1 and t > m * h:
            # partial last cell, density constant on it
            dens = (self.Psi[m + 1] - self.Psi[m]) / h
            full += dens * (t - m * h) ** 2 / 2.0
        return full


@numba.njit(cache=True, nogil=True)
def _renewal_solve(a, Fg, c):
    # Psi_i = a F_i + a sum_{j<=i} c_{i-j+1} dPsi_j, dPsi spread uniformly over cell j
    n = Fg.shape[0] - 1
    Psi = np.zeros(n + 1)
    d = np.zeros(n + 1)
    for i in range(1, n + 1):
        acc = 0.0
        for j in range(1, i):
            acc += c[i - j + 1] * d[j]
        # Psi_i - Psi_{i-1} = d_i, solve the implicit diagonal term
        rhs = a * Fg[i] + a * acc - Psi[i - 1]
        d[i] = rhs / (1.0 - a * c[1])
        Psi[i] = Psi[i - 1] + d[i]
    return Psi


def _psi_once(k: KernelSpec, a: float, horizon: float, n: int) -> RenewalGrid:
    h = horizon / n
    x = h * np.arange(n + 2)
    G = kernels.cdf_integral(k, x)
    c = np.empty(n + 2)
    c[0] = 0.0
    c[1:] = np.diff(G) / h
    Fg = kernels.cdf(k, x[: n + 1])
    return RenewalGrid(h, _renewal_solve(a, Fg, c))


def _checked_renewal(kernel, a, total, horizon, n, rtol):
    if n < 1000:
        raise DomainError("n must be at least 1000")
    g = _psi_once(kernel, a, horizon, n)
    if g.mass > total * (1 + rtol):
        raise AccuracyError(f"renewal mass {g.mass:.6g} exceeds a/(1-a)={total:.6g}")
    coarse = _psi_once(kernel, a, horizon, n // 2)
    if abs(coarse.mass - g.mass) > rtol * g.mass:
        raise AccuracyError(f"renewal mass not resolved: {coarse.mass:.6g} vs {g.mass:.6g} at half resolution")
    return g


def renewal_grid(kernel: KernelSpec, a: float, horizon: float, n: int = 4096, rtol: float = 0.01) -> RenewalGrid:
    """Solve Psi = a F + a phi * Psi on [0, horizon] for a branching ratio a < 1.

    Uses exact cell integrals of F (closed-form G). The solution is checked
    twice: its mass may not exceed a / (1 - a) by more than ``rtol``, and the
    value at the horizon must agree with a half-resolution solve to within
    ``rtol``; otherwise AccuracyError.
    """
    if not 0.0 <= a < 1.0:
        raise DomainError("branching ratio must lie in [0, 1)")
    return _checked_renewal(kernel, a, a / (1.0 - a), float(horizon), n, rtol)


def psi_grid(reg: ScalingRegime, n: int = 4096, horizon: float | None = None, rtol: float = 0.01) -> RenewalGrid:
    """Renewal function of the regime on [0, horizon] (default T); see :func:`renewal_grid`."""
    H = reg.T if horizon is None else float(horizon)
    # 1 - a_T from the exact construction keeps the mass bound sharp
    return _checked_renewal(reg.kernel, reg.a_T, reg.a_T / reg.one_minus_a, H, n, rtol)


def expected_count(reg, t: float, n: int = 4096) -> float:
    """E[N_t] = mu (t + int_0^t Psi(s) ds) for a ScalingRegime or HawkesParams."""
    if isinstance(reg, ScalingRegime):
        T, mu = reg.T, reg.mu_T
    else:
        T, mu = reg.horizon, reg.mu
    if not 0.0 <= t <= T * (1 + 1e-12):
        raise DomainError(f"t must lie in [0, T], got {t}")
    if t == 0:
        return 0.0
    if isinstance(reg, ScalingRegime):
        g = psi_grid(reg, n, horizon=t)
    else:
        g = renewal_grid(reg.kernel, reg.a, t, n)
    return mu * (t + g.integral(t))


# ---------------------------------------------------------------------------
# J^T


@numba.njit(cache=True, nogil=True)
def _jt_block(rng, p_geo, lag, alpha, T, n):
    out = np.empty(n)
    for s in range(n):
        m = rng.geometric(p_geo)
        acc = 0.0
        for _ in range(m):
            acc += _delay(lag, alpha, rng.random())
        out[s] = acc / T
    return out


JT_BLOCK = 1 << 16


def sample_JT(reg: ScalingRegime, seed: int, n_samples: int, threads: int = 1) -> np.ndarray:
    """Samples of J^T = T^{-1} sum_{i <= I} X_i, I ~ Geometric(1 - a_T) on {1, 2, ...}.

    Block b of ``JT_BLOCK`` samples uses the stream (seed, b), so the output
    does not depend on ``threads``.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be positive")
    k = reg.kernel
    sizes = [min(JT_BLOCK, n_samples - s) for s in range(0, n_samples, JT_BLOCK)]

    def block(b):
        return _jt_block(stream(seed, JT, b), reg.one_minus_a, k.lag, k.alpha, reg.T, sizes[b])

    if threads <= 1:
        parts = [block(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(block, range(len(sizes))))
    return np.concatenate(parts)
