"""Heavy-tailed excitation kernels with unit L1 norm.

Both families have a closed-form CDF and an exact tail constant K = alpha:

* ``ShiftedPareto``: phi(x) = alpha (1 + x)^{-(1+alpha)},  F(x) = 1 - (1 + x)^{-alpha}
* ``ParetoFrom1``:   phi(x) = alpha x^{-(1+alpha)} 1{x >= 1}, F(x) = (1 - x^{-alpha}) 1{x >= 1}

``ParetoFrom1`` is ``ShiftedPareto`` delayed by one time unit; the simulators
exploit this through :attr:`KernelSpec.lag`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np
from scipy import integrate

from .errors import AccuracyError, DomainError

FAMILIES = ("ShiftedPareto", "ParetoFrom1")


@dataclass(frozen=True)
class KernelSpec:
    family: str
    alpha: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"tail index alpha must lie in (0, 1), got {self.alpha}")

    @property
    def code(self) -> int:
        """Integer tag used by the compiled simulators."""
        return FAMILIES.index(self.family)

    @property
    def lag(self) -> float:
        """Start of the support; the density is nonincreasing on [lag, inf)."""
        return 0.0 if self.family == "ShiftedPareto" else 1.0

    @property
    def K(self) -> float:
        """Tail constant lim alpha x^alpha (1 - F(x))."""
        return self.alpha


def _x(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0):
        raise DomainError("kernel argument must be non-negative")
    return arr


def _out(x, arr):
    return float(arr) if np.ndim(x) == 0 else arr


def phi(k: KernelSpec, x):
    """Density value(s) at x >= 0."""
    arr = _x(x)
    y = arr - k.lag
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.where(y >= 0, k.alpha * (1.0 + np.maximum(y, 0.0)) ** (-(1.0 + k.alpha)), 0.0)
    return _out(x, val)


def survival(k: KernelSpec, x):
    """1 - F(x)."""
    arr = _x(x)
    y = arr - k.lag
    val = np.where(y >= 0, (1.0 + np.maximum(y, 0.0)) ** (-k.alpha), 1.0)
    return _out(x, val)


def cdf(k: KernelSpec, x):
    arr = _x(x)
    y = arr - k.lag
    # -expm1(-a log1p(y)) keeps full relative precision for small y
    val = np.where(y >= 0, -np.expm1(-k.alpha * np.log1p(np.maximum(y, 0.0))), 0.0)
    return _out(x, val)


def cdf_integral(k: KernelSpec, x):
    """G(x) = int_0^x F(s) ds in closed form."""
    arr = _x(x)
    y = np.maximum(arr - k.lag, 0.0)
    a = k.alpha
    val = y - np.expm1((1.0 - a) * np.log1p(y)) / (1.0 - a)
    return _out(x, val)


def sample_delay(k: KernelSpec, u):
    """Inverse CDF F^{-1}(u) for u in (0, 1)."""
    arr = np.asarray(u, dtype=float)
    if np.any((arr <= 0) | (arr >= 1)):
        raise DomainError("u must lie in the open interval (0, 1)")
    val = k.lag + np.expm1(-np.log1p(-arr) / k.alpha)
    return _out(u, val)


def laplace_phi(k: KernelSpec, z, tol=1e-12):
    """Laplace transform int_0^inf e^{-z x} phi(x) dx by adaptive quadrature.

    The half-line is cut at geometric breakpoints up to ``50/z``; the remaining
    tail is bounded by e^{-50}(1 - F(50/z)) and checked rather than integrated.
    """
    if np.ndim(z) != 0:
        return np.array([laplace_phi(k, float(v), tol) for v in np.ravel(z)]).reshape(np.shape(z))
    z = float(z)
    if z < 0:
        raise DomainError("Laplace argument must be non-negative")
    if z == 0.0:
        return 1.0
    a, lag = k.alpha, k.lag

    def g(x):
        return math.exp(-z * x) * a * (1.0 + x - lag) ** (-(1.0 + a))

    upper = lag + 50.0 / z
    edges = [lag]
    e = lag + 1.0
    while e < upper:
        edges.append(e)
        e = lag + (e - lag) * 10.0
    edges.append(upper)
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            v, e_ = integrate.quad(g, lo, hi, epsabs=tol * 1e-2, epsrel=1e-13, limit=200)
            total += v
            err += e_
    tail = math.exp(-z * upper) * float(survival(k, upper))
    if err + tail > tol:
        raise AccuracyError(f"laplace_phi quadrature error {err + tail:.2e} exceeds {tol:g}")
    return total


# ---------------------------------------------------------------------------
# compiled helpers shared by the simulators


@numba.njit(cache=True, inline="always")
def _delay(lag, alpha, v):
    # v uniform on [0, 1); 1 - v is the survival level
    return lag + math.expm1(-math.log1p(-v) / alpha)


@numba.njit(cache=True, inline="always")
def _phi(lag, alpha, x):
    y = x - lag
    if y < 0.0:
        return 0.0
    return alpha * (1.0 + y) ** (-(1.0 + alpha))


@numba.njit(cache=True, inline="always")
def _cdf(lag, alpha, x):
    y = x - lag
    if y <= 0.0:
        return 0.0
    return -math.expm1(-alpha * math.log1p(y))


@numba.njit(cache=True)
def _sample_many(rng, lag, alpha, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = _delay(lag, alpha, rng.random())
    return out


def sample_delays(k: KernelSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` delays with the given generator."""
    return _sample_many(rng, k.lag, k.alpha, int(n))
