"""Exact simulation of linear Hawkes processes with heavy-tailed kernels.

Two independent samplers are provided so that each certifies the other:

* :func:`simulate_cluster` builds the Poisson cluster (branching) representation
  generation by generation;
* :func:`simulate_thinning` runs Ogata thinning on the conditional intensity.

Both record, for every event, its generation (0 for immigrants) and the index of
its parent (-1 for immigrants).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from . import history, kernels
from .errors import DomainError, ResourceError
from .kernels import KernelSpec, _cdf, _delay
from .rng import HAWKES, stream

EVENT_CAP = 10**8


@dataclass(frozen=True)
class HawkesParams:
    mu: float
    a: float
    kernel: KernelSpec
    horizon: float

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise DomainError(f"mu must be positive, got {self.mu}")
        if not 0.0 < self.a < 1.0:
            raise DomainError(f"branching ratio must lie in (0, 1), got {self.a}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise DomainError(f"horizon must be positive, got {self.horizon}")


@dataclass(frozen=True, eq=False)
class EventRecord:
    times: np.ndarray
    generation: np.ndarray
    parent: np.ndarray
    seed: int
    params: HawkesParams
    replica: int = 0
    method: str = "cluster"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.times, self.generation, self.parent):
            arr.setflags(write=False)

    def __len__(self):
        return self.times.shape[0]

    def count(self, t: float) -> int:
        """N_t, the number of events in (0, t]."""
        return int(np.searchsorted(self.times, t, side="right"))


# ---------------------------------------------------------------------------
# cluster representation


@numba.njit(cache=True, nogil=True)
def _grow(arr, n):
    out = np.empty(max(2 * arr.shape[0], n), arr.dtype)
    out[: arr.shape[0]] = arr
    return out


@numba.njit(cache=True, nogil=True)
def _cluster_core(rng, mu, a, lag, alpha, T, cap):
    n_imm = rng.poisson(mu * T)
    if n_imm > cap:
        return np.empty(0), np.empty(0, np.int64), np.empty(0, np.int64), 1
    size = max(16, 2 * n_imm)
    times = np.empty(size)
    gen = np.empty(size, np.int64)
    par = np.empty(size, np.int64)
    for i in range(n_imm):
        times[i] = T * (1.0 - rng.random())  # uniform on (0, T]
        gen[i] = 0
        par[i] = -1
    n = n_imm
    head = 0
    while head < n:
        k = rng.poisson(a)
        t0 = times[head]
        for _ in range(k):
            t = t0 + _delay(lag, alpha, rng.random())
            if t <= T:
                if n >= cap:
                    return times[:n], gen[:n], par[:n], 1
                if n >= times.shape[0]:
                    times = _grow(times, n + 1)
                    gen = _grow(gen, n + 1)
                    par = _grow(par, n + 1)
                times[n] = t
                gen[n] = gen[head] + 1
                par[n] = head
                n += 1
        head += 1
    return times[:n], gen[:n], par[:n], 0


@numba.njit(cache=True, nogil=True)
def _cluster_sizes(rng, a, n_clusters):
    out = np.empty(n_clusters, np.int64)
    for c in range(n_clusters):
        pending = 1
        total = 0
        while pending > 0:
            pending -= 1
            total += 1
            pending += rng.poisson(a)
        out[c] = total
    return out


def _finish(times, gen, par):
    order = np.argsort(times, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    par_sorted = par[order]
    par_sorted = np.where(par_sorted >= 0, rank[np.maximum(par_sorted, 0)], -1)
    return times[order], gen[order], par_sorted


def simulate_cluster(p: HawkesParams, seed: int, replica: int = 0, cap: int = EVENT_CAP) -> EventRecord:
    """Sample N^T through its branching structure.

    Immigrants form a Poisson process of rate ``mu`` on (0, T]; every event has
    Poisson(a) children at kernel-distributed delays. Children after T are
    dropped, which loses nothing inside the horizon because delays are positive.
    """
    rng = stream(seed, HAWKES, replica, 0)
    k = p.kernel
    t, g, q, status = _cluster_core(rng, p.mu, p.a, k.lag, k.alpha, p.horizon, int(cap))
    if status:
        raise ResourceError(f"event count exceeded cap {cap}")
    t, g, q = _finish(t.copy(), g.copy(), q.copy())
    return EventRecord(t, g, q, int(seed), p, int(replica), "cluster")


def cluster_sizes(a: float, n_clusters: int, seed: int) -> np.ndarray:
    """Total progeny (including the root) of ``n_clusters`` independent clusters."""
    if not 0.0 <= a < 1.0:
        raise DomainError("a must lie in [0, 1)")
    return _cluster_sizes(stream(seed, HAWKES, 0, 7), float(a), int(n_clusters))


# ---------------------------------------------------------------------------
# thinning


@numba.njit(cache=True, inline="always")
def _phi_active(alpha, y):
    # density of an active term, y = t - (t_i + lag) >= 0; measuring from the
    # activation time keeps y exact at the boundary where a term switches on
    return alpha * (1.0 + max(y, 0.0)) ** (-(1.0 + alpha))


@numba.njit(cache=True, nogil=True)
def _attribute(times, n, cand, v, mu, a, lag, alpha):
    # the acceptance uniform v is uniform on [0, lambda(cand)] given acceptance,
    # so the intensity component it falls in picks the cause
    if v < mu:
        return -1
    acc = mu
    last = -1
    for i in range(n):
        c = a * _phi_active(alpha, cand - (times[i] + lag))
        if c > 0.0:
            last = i
            acc += c
            if acc >= v:
                return i
    return last


@numba.njit(cache=True, nogil=True)
def _thinning_core(rng, mu, a, lag, alpha, T, cap, use_soe, rates, c_phi):
    size = 1024
    times = np.empty(size)
    gen = np.empty(size, np.int64)
    par = np.empty(size, np.int64)
    n = 0
    s = 0.0
    p = 0  # first event not yet active at time s (activation = t_i + lag)
    m = rates.shape[0]
    state = np.zeros(m)
    cur = 0.0
    while True:
        # activate everything with t_i + lag <= s
        while p < n and times[p] + lag <= s:
            if use_soe:
                dt = times[p] + lag - cur
                if dt > 0.0:
                    for k in range(m):
                        state[k] *= math.exp(-rates[k] * dt)
                    cur = times[p] + lag
                for k in range(m):
                    state[k] += 1.0
            p += 1
        if use_soe:
            dt = s - cur
            if dt > 0.0:
                for k in range(m):
                    state[k] *= math.exp(-rates[k] * dt)
                cur = s
            acc = 0.0
            for k in range(m):
                acc += c_phi[k] * state[k]
            lam_bar = mu + a * acc
        else:
            acc = 0.0
            for i in range(p):
                acc += _phi_active(alpha, s - (times[i] + lag))
            lam_bar = mu + a * acc
        b = times[p] + lag if p < n else np.inf
        cand = s + rng.exponential(1.0) / lam_bar
        if cand >= b:
            # a new history term switches on before the candidate: restart there
            s = b
            continue
        if cand > T:
            break
        # no activation in (s, cand): the intensity at cand is from the same events
        if use_soe:
            dt = cand - cur
            for k in range(m):
                state[k] *= math.exp(-rates[k] * dt)
            cur = cand
            acc = 0.0
            for k in range(m):
                acc += c_phi[k] * state[k]
        else:
            acc = 0.0
            for i in range(p):
                acc += _phi_active(alpha, cand - (times[i] + lag))
        lam_c = mu + a * acc
        v = rng.random() * lam_bar
        if v <= lam_c:
            if n >= cap:
                return times[:n], gen[:n], par[:n], 1
            if n >= times.shape[0]:
                times = _grow(times, n + 1)
                gen = _grow(gen, n + 1)
                par = _grow(par, n + 1)
            j = _attribute(times, p, cand, v, mu, a, lag, alpha)
            times[n] = cand
            par[n] = j
            gen[n] = 0 if j < 0 else gen[j] + 1
            n += 1
        s = cand
    return times[:n], gen[:n], par[:n], 0


_NO_SOE = (np.zeros(0), np.zeros(0))


def simulate_thinning(
    p: HawkesParams,
    seed: int,
    replica: int = 0,
    cap: int = EVENT_CAP,
    history_tol: float | None = None,
) -> EventRecord:
    """Sample N^T by Ogata thinning.

    Between activations the intensity is nonincreasing, so lambda(s+) dominates
    on (s, b) where b is the next time a past event enters the kernel support
    (t_i + 1 for ``ParetoFrom1``). Proposals past b are discarded and the
    exponential clock restarts at b, which is exact by memorylessness.

    With ``history_tol`` set, history sums use a sum-of-exponentials kernel
    whose relative error is at most ``history_tol`` on [0, T]; the default
    (None) uses exact O(n^2) sums.
    """
    rng = stream(seed, HAWKES, replica, 1)
    k = p.kernel
    if history_tol is None:
        rates, c_phi = _NO_SOE
        use = False
        meta = {}
    else:
        soe = history.soe_nodes(k.alpha, float(p.horizon), float(history_tol))
        rates, c_phi, use = soe.rates, soe.c_phi, True
        meta = {"history_eps": soe.eps, "history_terms": int(rates.size)}
    t, g, q, status = _thinning_core(rng, p.mu, p.a, k.lag, k.alpha, p.horizon, int(cap), use, rates, c_phi)
    if status:
        raise ResourceError(f"event count exceeded cap {cap}")
    return EventRecord(t.copy(), g.copy(), q.copy(), int(seed), p, int(replica), "thinning", meta)


def simulate(p: HawkesParams, seed: int, replica: int = 0, method: str = "cluster", **kw) -> EventRecord:
    if method == "cluster":
        return simulate_cluster(p, seed, replica, **kw)
    if method == "thinning":
        return simulate_thinning(p, seed, replica, **kw)
    raise DomainError(f"unknown method {method!r}")


def simulate_many(p: HawkesParams, seed: int, n_replicas: int, fn, method="cluster", threads: int = 1, **kw):
    """Apply ``fn`` to replicas 0..n-1 and return the list of results.

    Replica i always uses the stream (seed, i), so results do not depend on
    ``threads``.
    """

    def one(i):
        return fn(simulate(p, seed, i, method, **kw))

    if threads <= 1:
        return [one(i) for i in range(n_replicas)]
    with ThreadPoolExecutor(threads) as ex:
        return list(ex.map(one, range(n_replicas)))


# ---------------------------------------------------------------------------
# intensity and compensator


def intensity_at(r: EventRecord, t: float) -> float:
    """mu + a sum_{t_i < t} phi(t - t_i)."""
    p = r.params
    _check_t(p, t)
    past = r.times[: np.searchsorted(r.times, t, side="left")]
    if past.size == 0:
        return p.mu
    return p.mu + p.a * math.fsum(kernels.phi(p.kernel, t - past))


def compensator(r: EventRecord, t: float) -> float:
    """Lambda(t) = mu t + a sum_{t_i < t} F(t - t_i)."""
    p = r.params
    _check_t(p, t)
    past = r.times[: np.searchsorted(r.times, t, side="left")]
    if past.size == 0:
        return p.mu * t
    return p.mu * t + p.a * math.fsum(kernels.cdf(p.kernel, t - past))


@numba.njit(cache=True, nogil=True)
def _compensator_exact(times, queries, mu, a, lag, alpha):
    out = np.empty(queries.shape[0])
    j = 0
    for q in range(queries.shape[0]):
        t = queries[q]
        while j < times.shape[0] and times[j] < t:
            j += 1
        acc = 0.0
        for i in range(j):
            acc += _cdf(lag, alpha, t - times[i])
        out[q] = mu * t + a * acc
    return out


def compensator_at(r: EventRecord, ts, history_tol: float | None = None) -> np.ndarray:
    """Vectorised compensator at nondecreasing times ``ts``.

    Exact sums cost O(len(ts) * N); with ``history_tol`` the cost is
    O((len(ts) + N) M) and the absolute error is at most ``a * history_tol * N``.
    """
    p = r.params
    ts = np.ascontiguousarray(ts, dtype=float)
    if ts.size and (np.any(np.diff(ts) < 0) or ts[0] < 0 or ts[-1] > p.horizon * (1 + 1e-12)):
        raise DomainError("query times must be sorted and inside [0, horizon]")
    k = p.kernel
    if history_tol is None:
        return _compensator_exact(r.times, ts, p.mu, p.a, k.lag, k.alpha)
    soe = history.soe_nodes(k.alpha, float(p.horizon), float(history_tol))
    act = np.ascontiguousarray(r.times + k.lag)
    return history.soe_compensator(act, ts, p.mu, p.a, soe.rates, soe.c_surv)


def _check_t(p, t):
    if not 0.0 <= t <= p.horizon:
        raise DomainError(f"t={t} outside [0, {p.horizon}]")
