"""Riemann-Liouville operators on uniform grids by product integration.

A :class:`GridFn` stores samples f(x_i), x_i = i h, and may declare an edge
expansion

    f(x) = x^p (c_0 + c_1 x^s + c_2 x^{2s} + ...)   near x = 0,

with edge exponent p > -1 and edge step s in (0, 1] (s = 1 means the regular
factor is smooth in x; Mittag-Leffler type functions have s = alpha).

Product integration treats the kernel (x - t)^{nu - 1} exactly and models the
integrand in two parts:

* a boundary layer [0, x_L] of fixed physical width, where the regular factor
  is fitted by least squares as a polynomial in y = x^s and every resulting
  power x^{p + ks} is integrated exactly (incomplete beta functions);
* the remaining cells, where f is interpolated linearly.

The layer has fixed width rather than a fixed number of cells, so fractional
powers in the edge expansion do not limit the order of the scheme; the
linear part converges at second order.

Edge data propagate: I^nu maps p to p + nu and D^nu maps p to p - nu, with the
same step s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal, special

from .errors import AccuracyError, DomainError

LAYER_FRACTION = 1.0 / 32.0
MAX_DEGREE = 12


@dataclass(frozen=True, eq=False)
class GridFn:
    step: float
    values: np.ndarray
    edge_exponent: float | None = None
    edge_step: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if not self.step > 0:
            raise DomainError("step must be positive")
        if v.ndim != 1 or v.size < 3:
            raise DomainError("need at least three grid values")
        p = self.edge_exponent
        if p is not None and not p > -1.0:
            raise DomainError(f"edge exponent must exceed -1, got {p}")
        if not 0.0 < self.edge_step <= 1.0:
            raise DomainError(f"edge step must lie in (0, 1], got {self.edge_step}")
        if not np.all(np.isfinite(v[1:])):
            raise DomainError("values must be finite away from the origin")
        if not np.isfinite(v[0]) and not (p is not None and p < 0):
            raise DomainError("value at 0 may be infinite only with a negative edge exponent")

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def x(self) -> np.ndarray:
        return self.step * np.arange(self.values.size)

    @property
    def singularity_exponent(self) -> float | None:
        """beta for x^{-beta} behaviour at the origin, if any."""
        p = self.edge_exponent
        return -p if p is not None and p < 0 else None

    @classmethod
    def from_function(cls, fn, n: int, edge_exponent=None, edge_step: float = 1.0, length: float = 1.0):
        h = length / n
        x = h * np.arange(n + 1)
        v = np.empty(n + 1)
        v[1:] = fn(x[1:])
        if edge_exponent is not None and edge_exponent < 0:
            v[0] = np.inf
        else:
            v[0] = fn(x[:1])[0]
        return cls(h, v, edge_exponent, edge_step)


def _p(f: GridFn) -> float:
    return 0.0 if f.edge_exponent is None else float(f.edge_exponent)


@dataclass(frozen=True)
class _Layer:
    L: int  # cells 0..L-1 belong to the layer
    powers: np.ndarray  # exponents p + k s
    coef: np.ndarray  # f(x) ~ sum coef_k x^{powers_k} on [0, x_L]


def _layer(f: GridFn) -> _Layer | None:
    if f.edge_exponent is None:
        return None
    n, h = f.n, f.step
    p, s = _p(f), f.edge_step
    K = min(MAX_DEGREE, int(math.ceil(4.0 / s)))
    L = min(n - 1, max(int(round(n * LAYER_FRACTION)), 2 * (K + 1)))
    K = min(K, L - 2)
    x = h * np.arange(1, L + 1)
    g = f.values[1 : L + 1] / x**p
    # Chebyshev fit in u = (x / x_L)^s, then monomials in u, then in x^s
    yL = x[-1] ** s
    u = x**s / yL
    mono_t = np.polynomial.chebyshev.cheb2poly(np.polynomial.chebyshev.chebfit(2.0 * u - 1.0, g, K))
    coef_u = np.zeros(K + 1)
    for j, cj in enumerate(mono_t):
        coef_u[: j + 1] += cj * np.polynomial.polynomial.polypow([-1.0, 2.0], j)
    k = np.arange(K + 1)
    return _Layer(L, p + s * k, coef_u / yL**k)


def _beta_prefix(x_t, hi, q, nu):
    """int_0^hi (x_t - s)^{nu-1} s^q ds for 0 < hi <= x_t."""
    r = np.minimum(hi / x_t, 1.0)
    return x_t ** (q + nu) * special.beta(q + 1.0, nu) * special.betainc(q + 1.0, nu, r)


def _cell_weights(nu: float, n: int):
    """Left/right hat weights of cell k = i - j (k = 1..n) for (k - u)^{nu-1}, u in [0,1]."""
    k = np.arange(1, n + 1, dtype=float)
    P = (k**nu - (k - 1.0) ** nu) / nu
    Q = (k ** (nu + 1.0) - (k - 1.0) ** (nu + 1.0)) / (nu + 1.0)
    R = k * P - Q  # weight of the right node
    Lw = P - R  # weight of the left node
    return Lw, R


def _conv(a, b, n):
    return signal.fftconvolve(a, b)[: n + 1]


def rl_integral(f: GridFn, nu: float) -> GridFn:
    """I^nu f(x_i) = 1/Gamma(nu) int_0^{x_i} (x_i - t)^{nu-1} f(t) dt for nu in (0, 1]."""
    if not 0.0 < nu <= 1.0:
        raise DomainError(f"nu must lie in (0, 1], got {nu}")
    n, h = f.n, f.step
    lay = _layer(f)
    L = lay.L if lay else 0
    Lw, R = _cell_weights(nu, n)
    v = np.array(f.values, dtype=float)
    # regular cells j >= L: node j carries Lw_{i-j}, node j+1 carries R_{i-j}
    left = v.copy()
    left[:L] = 0.0
    left[n] = 0.0
    right = v.copy()
    right[: L + 1] = 0.0
    out = _conv(left, np.concatenate(([0.0], Lw)), n) + _conv(right, np.concatenate((R, [0.0])), n)
    out *= h**nu / special.gamma(nu)
    p = _p(f)
    q = p + nu
    out[0] = 0.0
    if lay:
        xt = f.x[1:]
        hi = np.minimum(xt, L * h)
        acc = np.zeros(n)
        for c, pw in zip(lay.coef, lay.powers):
            acc += c * _beta_prefix(xt, hi, pw, nu)
        out[1:] += acc / special.gamma(nu)
        if not np.all(np.isfinite(out[1:])):
            raise AccuracyError("boundary layer integration produced non-finite values")
        if q < 0:
            out[0] = np.inf
        elif q == 0:
            out[0] = lay.coef[0] * special.gamma(p + 1.0)
    return GridFn(h, out, q, f.edge_step)


def rl_derivative(f: GridFn, nu: float) -> GridFn:
    """D^nu f = d/dx I^{1-nu} f for nu in (0, 1).

    With I^{1-nu} f = x^q G(x), the derivative is q x^{q-1} G + x^q G',
    G' by second-order differences with one-sided stencils at both ends.
    """
    if not 0.0 < nu < 1.0:
        raise DomainError(f"nu must lie in (0, 1), got {nu}")
    p = _p(f)
    if p - nu <= -1.0:
        raise DomainError(f"edge exponent {p} too singular for a derivative of order {nu}")
    J = rl_integral(f, 1.0 - nu)
    q = J.edge_exponent
    x = J.x
    G = np.empty_like(J.values)
    G[1:] = J.values[1:] / x[1:] ** q
    G[0] = 3.0 * G[1] - 3.0 * G[2] + G[3]
    dG = np.gradient(G, J.step, edge_order=2)
    out = np.empty_like(G)
    out[1:] = q * x[1:] ** (q - 1.0) * G[1:] + x[1:] ** q * dG[1:]
    r = q - 1.0
    if r < 0:
        out[0] = np.inf
    elif r == 0:
        out[0] = q * G[0]
    else:
        out[0] = 0.0
    return GridFn(J.step, out, r, f.edge_step)


def power_moments(f: GridFn):
    """Cell moments (int f, int (u - (k-1)h) f) over [(k-1)h, kh], k = 1..n.

    Layer cells integrate the fitted edge expansion exactly; other cells use
    the linear interpolant of f.
    """
    h = f.step
    x = f.x
    v = f.values
    with np.errstate(invalid="ignore"):
        m0 = 0.5 * h * (v[:-1] + v[1:])
        m1 = h * h * (v[:-1] + 2.0 * v[1:]) / 6.0
    lay = _layer(f)
    if lay:
        L = lay.L
        a, b = x[:L], x[1 : L + 1]
        P = lay.powers
        d0 = (np.power.outer(b, P + 1.0) - np.power.outer(a, P + 1.0)) / (P + 1.0)
        d1 = (np.power.outer(b, P + 2.0) - np.power.outer(a, P + 2.0)) / (P + 2.0)
        m0[:L] = d0 @ lay.coef
        m1[:L] = d1 @ lay.coef - a * m0[:L]
    return m0, m1


def conv_singular(f: GridFn, g: GridFn, moments=None) -> GridFn:
    """(f * g)(t_i) = int_0^{t_i} f(t_i - s) g(s) ds.

    ``moments=(m0, m1)`` supplies exact cell integrals of f and (u - (k-1)h) f
    over [(k-1)h, kh] (for instance from :func:`special_fn.kernel_moments`);
    otherwise they come from :func:`power_moments`. g is interpolated linearly.
    """
    if abs(f.step - g.step) > 1e-14 * f.step or f.n != g.n:
        raise DomainError("f and g must share the grid")
    if not np.all(np.isfinite(g.values)):
        raise DomainError("g must be finite on the grid")
    n, h = f.n, f.step
    m0, m1 = power_moments(f) if moments is None else (np.asarray(moments[0]), np.asarray(moments[1]))
    if m0.size != n or m1.size != n:
        raise DomainError("moments must have one entry per cell")
    if not (np.all(np.isfinite(m0)) and np.all(np.isfinite(m1))):
        raise DomainError("kernel moments are not finite; declare the edge exponent of f")
    W1 = m1 / h  # weight on g(t_i - kh)
    W0 = m0 - W1  # weight on g(t_i - (k-1)h)
    gv = g.values
    out = _conv(gv, np.concatenate((W0, [0.0])), n)
    out[:n] -= gv[0] * W0  # drop the k = i + 1 cell the full convolution includes
    out += _conv(gv, np.concatenate(([0.0], W1)), n)
    out[0] = 0.0
    if f.edge_exponent is None and g.edge_exponent is None:
        return GridFn(h, out)
    return GridFn(h, out, _p(f) + _p(g) + 1.0, min(f.edge_step, g.edge_step))
