"""Sum-of-exponentials compression of power-law histories.

For x >= 0,

    (1 + x)^{-a}            = 1/Gamma(a) int e^{a u - e^u (1 + x)} du,
    a (1 + x)^{-(1 + a)}    = 1/Gamma(a) int e^{(1 + a) u - e^u (1 + x)} du,

and the trapezoid rule in u converges geometrically, so both functions are
sums of M exponentials e^{-s_m x} up to a relative error ``eps`` that is
measured (not assumed) on a dense grid of [0, x_max]. Each exponential mode
obeys an O(1) update, turning O(n^2) history sums into O(n M).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np
from scipy import special

from .errors import AccuracyError


@dataclass(frozen=True)
class SOE:
    rates: np.ndarray
    c_surv: np.ndarray
    c_phi: np.ndarray
    eps: float  # measured max relative error for both functions on [0, x_max]
    x_max: float

    def survival(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.multiply.outer(x, self.rates)) @ self.c_surv

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.multiply.outer(x, self.rates)) @ self.c_phi


def _build(alpha, x_max, h, tol):
    ga = special.gamma(alpha)
    # left cut: neglected mass e^{a u}/a must be << tol (1 + x_max)^{-a}
    u_min = (math.log(tol * 0.1 * alpha * ga) - alpha * math.log1p(x_max)) / alpha
    u_max = math.log(60.0)
    m = int(math.ceil((u_max - u_min) / h)) + 1
    u = u_min + h * np.arange(m)
    s = np.exp(u)
    base = h * np.exp(-s) / ga
    return s, base * np.exp(alpha * u), base * np.exp((1.0 + alpha) * u)


def _check_grid(x_max):
    return np.concatenate(([0.0], np.geomspace(1e-8, x_max, 4000), np.linspace(0.0, min(x_max, 50.0), 2001)[1:]))


@lru_cache(maxsize=64)
def soe_nodes(alpha: float, x_max: float, tol: float = 1e-8) -> SOE:
    """Nodes for (1+x)^{-alpha} and alpha (1+x)^{-1-alpha} on [0, x_max]."""
    xs = _check_grid(x_max)
    surv = (1.0 + xs) ** (-alpha)
    dens = alpha * (1.0 + xs) ** (-(1.0 + alpha))
    h = 0.6
    for _ in range(12):
        s, cs, cp = _build(alpha, x_max, h, tol)
        E = np.exp(-np.multiply.outer(xs, s))
        err = max(np.max(np.abs(E @ cs / surv - 1.0)), np.max(np.abs(E @ cp / dens - 1.0)))
        if err <= tol:
            return SOE(s, cs, cp, float(err), float(x_max))
        h *= 0.8
    raise AccuracyError(f"sum-of-exponentials could not reach {tol:g} (got {err:.2e})")


@numba.njit(cache=True, nogil=True)
def soe_compensator(act, queries, mu, a, rates, c_surv):
    """mu q + a sum_{act_i <= q} F(q - act_i) for sorted activation and query times."""
    m = rates.shape[0]
    state = np.zeros(m)
    out = np.empty(queries.shape[0])
    cur = 0.0
    p = 0
    n_act = 0
    for j in range(queries.shape[0]):
        q = queries[j]
        while p < act.shape[0] and act[p] <= q:
            dt = act[p] - cur
            if dt > 0.0:
                for k in range(m):
                    state[k] *= math.exp(-rates[k] * dt)
                cur = act[p]
            for k in range(m):
                state[k] += 1.0
            n_act += 1
            p += 1
        dt = q - cur
        if dt > 0.0:
            for k in range(m):
                state[k] *= math.exp(-rates[k] * dt)
            cur = q
        tail = 0.0
        for k in range(m):
            tail += c_surv[k] * state[k]
        out[j] = mu * q + a * (n_act - tail)
    return out
