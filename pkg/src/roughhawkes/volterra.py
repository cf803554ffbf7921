"""The rough square-root Volterra limit and its integrated process.

Y solves

    Y_t = F(t) + c int_0^t f(t - s) sqrt(Y_s) dB_s,   c = (mu_star lam)^{-1/2},

with f = f^{alpha,lam} the Mittag-Leffler density and F its CDF. The scheme is
left-point Euler with exact cell masses of f:

    Y_i = F(t_i) + c sum_{j<i} (w_{i-j} / h) sqrt(max(Y_j, 0)) dB_j,
    w_k = F(k h) - F((k-1) h).

Brownian paths are built by dyadic Brownian-bridge refinement from a single
normal stream per path, so the path on a grid of 2^m cells is exactly the
aggregation of the path on any finer dyadic grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import fractional_calc as fc
from . import special_fn as sf
from .errors import DomainError
from .rng import BROWNIAN, stream
from .scaling import GridPath

BATCH = 1024


@dataclass(frozen=True)
class LimitParams:
    alpha: float
    lam: float
    mu_star: float
    n: int = 1024
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError("lam must be positive and finite")
        if not self.mu_star > 0:
            raise DomainError("mu_star must be positive (inf selects the noiseless mode)")
        n = int(self.n)
        if n < 2 or n & (n - 1):
            raise DomainError(f"n must be a power of two, got {self.n}")

    @property
    def c_diff(self) -> float:
        """(mu_star lam)^{-1/2}; zero when mu_star is infinite."""
        return 0.0 if math.isinf(self.mu_star) else (self.mu_star * self.lam) ** -0.5

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def kernel(self) -> sf.FracKernelParams:
        return sf.FracKernelParams(self.alpha, self.lam)


def _require_y(p: LimitParams, n_min: int = 256):
    if p.alpha <= 0.5:
        raise DomainError(f"the square-root equation needs alpha > 1/2, got {p.alpha}")
    if p.n < n_min:
        raise DomainError(f"n must be at least {n_min}")


def brownian_path(seed: int, path: int, n: int) -> np.ndarray:
    """B on the dyadic grid i / n, i = 0..n, refinement consistent in n."""
    if n < 1 or n & (n - 1):
        raise DomainError("n must be a power of two")
    z = stream(seed, BROWNIAN, path).standard_normal(n)
    B = np.zeros(n + 1)
    B[n] = z[0]
    used = 1
    width = n
    while width > 1:
        half = width // 2
        mids = np.arange(half, n, width)
        k = mids.size
        sd = math.sqrt(half / n / 2.0)  # sqrt(dt_left dt_right / dt)
        B[mids] = 0.5 * (B[mids - half] + B[mids + half]) + sd * z[used : used + k]
        used += k
        width = half
    return B


def brownian_increments(seed: int, path: int, n: int) -> np.ndarray:
    return np.diff(brownian_path(seed, path, n))


@dataclass(frozen=True, eq=False)
class LimitEnsemble:
    """Raw Y values and the Brownian increments that drove them."""

    params: LimitParams
    Y: np.ndarray  # (paths, n + 1)
    dB: np.ndarray  # (paths, n)
    first_path: int = 0

    def path(self, i: int) -> GridPath:
        return GridPath(self.params.h, self.Y[i].copy(), "Y_limit")

    def X(self) -> np.ndarray:
        return integrate.cumulative_trapezoid(self.Y, dx=self.params.h, axis=1, initial=0.0)

    def Z(self) -> np.ndarray:
        s = np.sqrt(np.maximum(self.Y[:, :-1], 0.0)) * self.dB
        out = np.zeros_like(self.Y)
        np.cumsum(s, axis=1, out=out[:, 1:])
        return out

    def negative_fraction(self) -> float:
        return float(np.mean(self.Y[:, 1:] < 0.0))


def _euler(Fg, wh, c, dB):
    P, n = dB.shape
    Y = np.empty((P, n + 1))
    Y[:, 0] = Fg[0]
    S = np.zeros((P, n))
    wrev = wh[::-1].copy()  # wrev[n - k] = w_k / h
    for i in range(1, n + 1):
        S[:, i - 1] = np.sqrt(np.maximum(Y[:, i - 1], 0.0)) * dB[:, i - 1]
        # sum_{j<i} (w_{i-j}/h) S_j with w_{i-j} = wrev[n - i + j]
        Y[:, i] = Fg[i] + c * (S[:, :i] @ wrev[n - i :])
    return Y


def simulate_ensemble(p: LimitParams, n_paths: int, first_path: int = 0) -> LimitEnsemble:
    """Paths first_path .. first_path + n_paths - 1; path k uses stream (seed, k)."""
    _require_y(p)
    n, h = p.n, p.h
    Fg = np.empty(n + 1)
    Fg[0] = 0.0
    Fg[1:] = sf.F_frac(p.kernel, h * np.arange(1, n + 1))
    wh = sf.kernel_weights(p.kernel, h, n) / h
    ids = range(first_path, first_path + n_paths)
    dB = np.stack([brownian_increments(p.seed, k, n) for k in ids]) if n_paths else np.zeros((0, n))
    Ys = []
    for b in range(0, n_paths, BATCH):
        Ys.append(_euler(Fg, wh, p.c_diff, dB[b : b + BATCH]))
    Y = np.concatenate(Ys) if Ys else np.zeros((0, n + 1))
    return LimitEnsemble(p, Y, dB, first_path)


def simulate_Y(p: LimitParams, path: int = 0) -> GridPath:
    """One path of Y on i / n (raw values; negative parts are only cut inside the root)."""
    return simulate_ensemble(p, 1, path).path(0)


def integrate_Y_to_X(y: GridPath) -> GridPath:
    """X_t = int_0^t Y by the cumulative trapezoid rule."""
    v = integrate.cumulative_trapezoid(y.values, dx=y.step, initial=0.0)
    return GridPath(y.step, v, "X_limit")


def drift_X(p: LimitParams) -> np.ndarray:
    """int_0^t F = int_0^t s f(t - s) ds on the grid, from the closed form."""
    t = p.h * np.arange(p.n + 1)
    out = np.zeros(p.n + 1)
    out[1:] = sf.frac_integ_f(p.kernel, 2.0, t[1:])
    return out


def eint_residual(y: GridPath, x: GridPath, dB: np.ndarray, p: LimitParams) -> float:
    """sup_t |X_t - int_0^t F - c int_0^t f(t - s) Z_s ds| with Z = int sqrt(Y+) dB."""
    n, h = p.n, p.h
    if y.n != n or x.n != n or dB.shape != (n,):
        raise DomainError("path, integral and increments must live on the parameter grid")
    rhs = drift_X(p)
    c = p.c_diff
    if c:
        Z = np.zeros(n + 1)
        np.cumsum(np.sqrt(np.maximum(y.values[:-1], 0.0)) * dB, out=Z[1:])
        m0, m1 = sf.kernel_moments(p.kernel, h, n)
        f = fc.GridFn(h, np.r_[np.inf, sf.f_frac(p.kernel, h * np.arange(1, n + 1))], p.alpha - 1.0, p.alpha)
        rhs = rhs + c * fc.conv_singular(f, fc.GridFn(h, Z), moments=(m0, m1)).values
    return float(np.max(np.abs(x.values - rhs)))
