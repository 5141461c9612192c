"""Queueing operators Q, D, R and the Burke-type verifiers built on them.

Continuous inputs are :class:`PointSet` counting functions; discrete inputs
are 0/1 arrays indexed from a truncation site.  All queue arithmetic is
exact integer arithmetic.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from . import _kernels as K
from .processes import ParameterError, PointSet, sample_poisson_1d
from .rng import RngStream
from .stats import (SubTest, TestReport, aggregate, chisq_discrete, corr_test,
                    dispersion_test, geom_pmf, mean_z_test)


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class QueueResult:
    """Queue driven by arrivals A and services S, scanned from ``truncation_lo``.

    ``grid`` holds the jump locations of A and S in ``(truncation_lo, hi]``;
    ``q[i]`` is the queue length on ``[grid[i], grid[i+1])`` and ``d``, ``r``
    the departure / recycled counts at ``grid[i]``.
    """

    grid: np.ndarray
    a: np.ndarray
    s: np.ndarray
    q: np.ndarray
    d: np.ndarray
    r: np.ndarray
    active: np.ndarray
    truncation_lo: float
    window: tuple[float, float]

    def _idx(self, t):
        return np.searchsorted(self.grid, t, "right") - 1

    def Q(self, t):
        i = self._idx(np.asarray(t, dtype=float))
        out = np.where(i >= 0, self.q[np.maximum(i, 0)], 0)
        return int(out) if out.ndim == 0 else out

    def _cum(self, x, t):
        c = np.concatenate([[0], np.cumsum(x)])
        return c[self._idx(np.asarray(t, dtype=float)) + 1]

    def D(self, s, t):
        return self._cum(self.d, t) - self._cum(self.d, s)

    def R(self, s, t):
        return self._cum(self.r, t) - self._cum(self.r, s)

    def boundary_active(self, t):
        """True where the supremum defining Q(t) is still attained at the truncation point."""
        i = self._idx(np.asarray(t, dtype=float))
        return np.where(i >= 0, self.active[np.maximum(i, 0)], True)

    @property
    def truncated(self) -> bool:
        return bool(self.boundary_active(self.window[1]))

    def _points(self, counts) -> PointSet:
        return PointSet(np.repeat(self.grid, counts), (self.truncation_lo, self.window[1]))

    def departures(self) -> PointSet:
        return self._points(self.d)

    def recycled(self) -> PointSet:
        return self._points(self.r)


def _grid(A: PointSet, S: PointSet, lo: float, hi: float):
    pa = A.points[(A.points > lo) & (A.points <= hi)]
    ps = S.points[(S.points > lo) & (S.points <= hi)]
    grid, inv = np.unique(np.concatenate([pa, ps]), return_inverse=True)
    ca = np.bincount(inv[: pa.size], minlength=grid.size).astype(np.int64)
    cs = np.bincount(inv[pa.size:], minlength=grid.size).astype(np.int64)
    return grid, ca, cs


def queue_cont(A: PointSet, S: PointSet, window=None, truncation_lo: float | None = None) -> QueueResult:
    """Q(t) = sup_{truncation_lo <= s <= t} (A(s,t] - S(s,t])."""
    if window is None:
        window = (max(A.window[0], S.window[0]), min(A.window[1], S.window[1]))
    lo, hi = float(window[0]), float(window[1])
    tlo = lo if truncation_lo is None else float(truncation_lo)
    if tlo > lo or hi < lo:
        raise ParameterError("need truncation_lo <= window.lo <= window.hi")
    for X in (A, S):
        if X.window[0] > tlo or X.window[1] < hi:
            raise ParameterError("inputs must cover [truncation_lo, window.hi]")
    grid, ca, cs = _grid(A, S, tlo, hi)
    q, active = K.queue_scan(ca, cs)
    qprev = np.concatenate([[0], q[:-1]])
    d = ca + qprev - q
    r = cs + q - qprev
    return QueueResult(grid, ca, cs, q, d, r, active, tlo, (lo, hi))


def queue_cont_widening(sample: Callable[[float], tuple[PointSet, PointSet]], window,
                        width: float, max_doublings: int = 8) -> QueueResult:
    """Re-run with doubled scan width until no report time is boundary-active."""
    lo, hi = window
    for _ in range(max_doublings + 1):
        A, S = sample(lo - width)
        res = queue_cont(A, S, window, truncation_lo=lo - width)
        if not bool(res.boundary_active(lo)):
            return res
        width *= 2
    warnings.warn("queue supremum still boundary-active after widening", TruncationWarning)
    return res


@dataclass(frozen=True)
class DiscreteQueueResult:
    q: np.ndarray
    d: np.ndarray
    r: np.ndarray
    active: np.ndarray
    lo: int

    @property
    def truncated(self) -> bool:
        return bool(np.any(self.active[..., -1]))


def queue_disc(a, s, lo: int = 0) -> DiscreteQueueResult:
    """Discrete queue on sites lo, lo+1, ... with empty history before ``lo``.

    Works row-wise on 2-D input (one replica per row).
    """
    a = np.asarray(a, dtype=np.int64)
    s = np.asarray(s, dtype=np.int64)
    if a.shape != s.shape:
        raise ParameterError("arrival and service sequences differ in length")
    c = np.cumsum(a - s, axis=-1)
    mn = np.minimum.accumulate(np.minimum(c, 0), axis=-1)
    q = c - mn
    qprev = np.concatenate([np.zeros_like(q[..., :1]), q[..., :-1]], axis=-1)
    return DiscreteQueueResult(q, qprev - q + a, q - qprev + s, mn == 0, int(lo))


# ---------------------------------------------------------------- identities

@dataclass(frozen=True)
class IdentityCheck:
    ok: bool
    max_defect: int
    n_checked: int
    inconclusive: bool


def pitman_check(jumps, interior: slice | None = None) -> IdentityCheck:
    """Check F(t) = inf_{s >= t}(2F(s) - f(s)) for a +-1 jump path ``f``.

    ``jumps`` lists the signed jumps in time order; f starts at 0 and
    F is its running maximum.  A time is checked when f returns to the level
    F(t) at or after t inside the path (otherwise the infimum is truncated).
    """
    j = np.asarray(jumps, dtype=np.int64)
    if j.size and not np.all(np.abs(j) == 1):
        raise ParameterError("jumps must be +1 or -1")
    f = np.concatenate([[0], np.cumsum(j)])
    F = np.maximum.accumulate(f)
    g = 2 * F - f
    inf_after = np.minimum.accumulate(g[::-1])[::-1]
    # latest time f reaches each level: returns to F(t) iff max_{s>=t} f >= F(t)
    max_after = np.maximum.accumulate(f[::-1])[::-1]
    ok_mask = max_after >= F
    if interior is not None:
        sel = np.zeros_like(ok_mask)
        sel[interior] = True
        ok_mask &= sel
    defects = np.abs(F - inf_after)[ok_mask]
    md = int(defects.max()) if defects.size else 0
    return IdentityCheck(md == 0, md, int(ok_mask.sum()), not bool(ok_mask.any()))


def pitman_jumps(A: PointSet, S: PointSet) -> np.ndarray:
    """Signed jumps of f = S - A in time order."""
    t = np.concatenate([S.points, A.points])
    sgn = np.concatenate([np.ones(len(S), np.int64), -np.ones(len(A), np.int64)])
    if np.unique(t).size != t.size:
        raise ParameterError("A and S share jump points")
    return sgn[np.argsort(t, kind="stable")]


def reconstruction_check(res: QueueResult) -> IdentityCheck:
    """Check Q(t) = sup_{s >= t}(D(t,s] - R(t,s]) on the grid of ``res``."""
    q = np.concatenate([[0], res.q])
    cd = np.concatenate([[0], np.cumsum(res.d - res.r)])
    # value(t, s) = cd[s] - cd[t]; sup over s >= t
    sup_after = np.maximum.accumulate(cd[::-1])[::-1]
    lhs = sup_after - cd
    empties = np.minimum.accumulate(q[::-1])[::-1] == 0
    defects = np.abs(lhs - q)[empties]
    md = int(defects.max()) if defects.size else 0
    return IdentityCheck(md == 0, md, int(empties.sum()), not bool(empties.any()))


# ---------------------------------------------------------------- Burke tests

MIN_REPLICAS = 100


def _burke_poisson_seed(lam, mu, window, replicas, stream: RngStream):
    lo, hi = window
    gaps, rc, dprev, rcur, q0, d0, r0 = (np.empty(replicas) for _ in range(7))
    ndep = 0
    span = 0.0
    for k in range(replicas):
        st = stream.child("queues", k)
        A = sample_poisson_1d(lam, window, st)
        S = sample_poisson_1d(mu, window, st)
        res = queue_cont(A, S, (lo, hi))
        dep = res.departures().points
        after = dep[dep > 0]
        gaps[k] = after[1] - after[0] if after.size >= 2 else np.nan
        rc[k] = res.R(0.0, 1.0)
        dprev[k] = res.D(-2.0, -1.0)
        rcur[k] = res.R(-1.0, 0.0)
        q0[k] = res.Q(0.0)
        d0[k] = res.D(-1.0, 0.0)
        r0[k] = rcur[k]
        m = (dep > lo / 2) & (dep <= hi)
        ndep += int(m.sum())
        span += hi - lo / 2
    g = gaps[np.isfinite(gaps)]
    out = []
    ks = stats.kstest(g, "expon", args=(0, 1 / lam))
    out.append(SubTest("departure_gaps_exp", ks.statistic, ks.pvalue))
    out.append(SubTest("recycled_dispersion", *dispersion_test(rc)))
    out.append(SubTest("recycled_mean", *mean_z_test(rc, mu)))
    out.append(SubTest("corr_D_R_disjoint", *corr_test(dprev, rcur)))
    r = 1 - lam / mu
    out.append(SubTest("queue_geom", *chisq_discrete(q0, lambda k: geom_pmf(k, r))))
    c1, p1 = corr_test(q0, d0)
    c2, p2 = corr_test(q0, r0)
    out.append(SubTest("past_future_indep", max(abs(c1), abs(c2)), min(1.0, 2 * min(p1, p2))))
    rate = ndep / span
    se = np.sqrt(lam / span)
    z = (rate - lam) / se
    out.append(SubTest("departure_rate", rate, float(2 * stats.norm.sf(abs(z)))))
    return out


def burke_poisson_test(lam: float, mu: float, window=(-40.0, 20.0), replicas: int = 10_000,
                       seeds=(0,), alpha: float = 0.01) -> TestReport:
    if not 0 < lam < mu:
        raise ParameterError("need 0 < lambda < mu")
    if replicas < MIN_REPLICAS:
        raise ParameterError(f"at least {MIN_REPLICAS} replicas required")
    per = [_burke_poisson_seed(lam, mu, window, replicas, RngStream(int(s), 0)) for s in seeds]
    rep = aggregate("burke_poisson", {"lambda": lam, "mu": mu, "window": list(window),
                                      "replicas": replicas}, per, list(seeds), alpha)
    return rep


def _burke_bernoulli_seed(p, u, length, replicas, stream: RngStream):
    g = stream.child("queues", 0)
    a = g.bernoulli(p, (replicas, length))
    s = g.bernoulli(u, (replicas, length))
    res = queue_disc(a, s, lo=-(length - 1))
    q0, d0, r0 = res.q[:, -1], res.d[:, -1], res.r[:, -1]
    dm = res.d[:, -2]
    v = (u - p) / ((1 - p) * u)
    out = []
    bt = stats.binomtest(int(d0.sum()), replicas, p)
    out.append(SubTest("departures_bernoulli", d0.mean(), bt.pvalue))
    bt = stats.binomtest(int(r0.sum()), replicas, u)
    out.append(SubTest("recycled_bernoulli", r0.mean(), bt.pvalue))
    out.append(SubTest("queue_geom", *chisq_discrete(q0, lambda k: geom_pmf(k, v))))
    out.append(SubTest("corr_d_r", *corr_test(d0, r0)))
    out.append(SubTest("corr_d_q", *corr_test(d0, q0)))
    out.append(SubTest("corr_r_q", *corr_test(r0, q0)))
    out.append(SubTest("corr_d_lag", *corr_test(dm, d0)))
    return out


def burke_bernoulli_test(p: float, u: float, length: int = 120, replicas: int = 10_000,
                         seeds=(0,), alpha: float = 0.01) -> TestReport:
    if not 0 < p < u < 1:
        raise ParameterError("need 0 < p < u < 1")
    if replicas < MIN_REPLICAS:
        raise ParameterError(f"at least {MIN_REPLICAS} replicas required")
    per = [_burke_bernoulli_seed(p, u, length, replicas, RngStream(int(s), 0)) for s in seeds]
    v = (u - p) / ((1 - p) * u)
    return aggregate("burke_bernoulli", {"p": p, "u": u, "v": v, "length": length,
                                         "replicas": replicas}, per, list(seeds), alpha)
