"""Scaling parameters, the recentering operator and the stationarity tests.

For a model at density ``rho`` the parameters (chi, alpha, beta, tau) fix the
shape ``alpha``, the boundary mean ``beta`` and the fluctuation scales
``chi N^{1/3}`` (height) and ``tau N^{2/3}`` (space).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .lpp_core import blpp, hammersley_lpp, lattice_lpp, lattice_to_point, lines_lpp, sj_lpp
from .processes import ParameterError
from .rng import RngStream
from .stationary import (ModelSpec, as_spec, height, mean_to_param, sample_boundary,
                         sample_environment)
from .stats import SubTest, TestReport, aggregate


@dataclass(frozen=True)
class ScalingParams:
    model: str
    rho: float
    chi: float
    alpha: float
    beta: float
    tau: float
    p: float | None = None
    gamma: float | None = None


def _defining(m: ModelSpec, rho: float):
    """Closed forms (chi^3, alpha, beta, chi/tau^2) for each model."""
    r = np.sqrt(rho)
    if m.name == "hammersley":
        return r, 2 * r, 1 / r, 1 / (4 * rho ** 1.5)
    if m.name == "lines":
        return r * (1 + r) ** 2, rho + 2 * r, 1 + 1 / r, 1 / (4 * rho ** 1.5)
    if m.name == "sj":
        lam = (1 - m.p) / m.p
        sl = np.sqrt(lam)
        chi3 = sl * (np.sqrt(lam * rho) - 1) ** 2 * (r + sl) ** 2 / (r * (lam + 1) ** 3)
        alpha = rho - (np.sqrt(rho * lam) - 1) ** 2 / (lam + 1)
        beta = 1 - (lam - np.sqrt(lam / rho)) / (lam + 1)
        return chi3, alpha, beta, sl / (4 * (lam + 1) * rho ** 1.5)
    if m.name == "exponential":
        return (r + 1) ** 4 / r, (r + 1) ** 2, 1 + 1 / r, 1 / (4 * rho ** 1.5)
    if m.name == "geometric":
        g = m.gamma
        gb = np.sqrt(g * (g + 1))
        chi3 = gb * (gb * (1 + rho) + (2 * g + 1) * r) ** 2 / r
        return chi3, g * (rho + 1) + 2 * gb * r, g + gb / r, gb / (4 * rho ** 1.5)
    return rho ** 1.5, 2 * r, 1 / r, 1 / (4 * rho ** 1.5)


def params_for(model, rho: float) -> ScalingParams:
    m = as_spec(model)
    if not rho > 0:
        raise ParameterError("rho must be positive")
    if m.name == "sj" and not rho > m.p / (1 - m.p):
        raise ParameterError(f"SJ needs rho > p/(1-p) = {m.p / (1 - m.p):.6g}")
    chi3, alpha, beta, k = _defining(m, rho)
    chi = float(np.cbrt(chi3))
    tau = float(np.sqrt(chi / k))
    return ScalingParams(m.name, float(rho), chi, float(alpha), float(beta), tau,
                         m.p if m.name == "sj" else None,
                         m.gamma if m.name == "geometric" else None)


def spec_of(params: ScalingParams, delta: float = 0.25) -> ModelSpec:
    return ModelSpec(params.model, p=params.p or 0.3, gamma=params.gamma or 1.0, delta=delta)


def residuals(params: ScalingParams) -> np.ndarray:
    """Relative residuals of the defining system; all ~ machine precision."""
    m = spec_of(params)
    chi3, alpha, beta, k = _defining(m, params.rho)
    got = np.array([params.chi ** 3, params.alpha, params.beta, params.chi / params.tau ** 2])
    want = np.array([chi3, alpha, beta, k])
    return np.abs(got - want) / np.abs(want)


def increment_variance(model, beta: float) -> float:
    """Variance of a one-unit boundary increment with mean ``beta``."""
    m = as_spec(model)
    return {"hammersley": beta, "lines": beta, "sj": beta * (1 - beta),
            "exponential": beta ** 2, "geometric": beta * (1 + beta),
            "brownian": 1.0}[m.name]


def beta_n(params: ScalingParams, mu: float, N: float) -> float:
    if N < 1:
        raise ParameterError("N must be at least 1")
    return params.beta + 2 * mu * params.chi / params.tau * N ** (-1 / 3)


def space_scale(params: ScalingParams, N: float) -> float:
    return params.tau * N ** (2 / 3)


def height_scale(params: ScalingParams, N: float) -> float:
    return params.chi * N ** (1 / 3)


# ---------------------------------------------------------------- iota_N

def iota(f, beta: float, s: float, c: float, xs):
    """x -> (f(x s) - beta s x) / c for a callable ``f`` with f(0) = 0."""
    xs = np.asarray(xs, dtype=float)
    return (np.asarray(f(xs * s), dtype=float) - beta * s * xs) / c


def _profile_callable(f, interpolate: bool):
    """Real-argument evaluation of a boundary (linear interpolation on lattices)."""
    if f.points is not None:
        return f.f
    grid, vals = f.grid, f.values
    if interpolate:
        return lambda u: np.interp(u, grid, vals)
    return f.f


def iota_n(f, params: ScalingParams, N: float, xs, interpolate: bool = True) -> np.ndarray:
    """Rescaled boundary; ``interpolate=False`` gives the floor variant."""
    s, c = space_scale(params, N), height_scale(params, N)
    xs = np.asarray(xs, dtype=float)
    lo, hi = f.window
    if np.any(xs * s < lo) or np.any(xs * s > hi):
        raise ParameterError("boundary window too short for the requested x-grid")
    return iota(_profile_callable(f, interpolate), params.beta, s, c, xs)


def _offset(m: ModelSpec, u):
    """Floor to the model's admissible spatial lattice."""
    st = m.step
    u = np.asarray(u, dtype=float)
    return u if st == 0 else np.floor(u / st + 1e-9) * st


# ---------------------------------------------------------------- L_N profile

@dataclass(frozen=True)
class RescaledProfile:
    x: np.ndarray
    value: np.ndarray
    N: float
    model: str
    s: float = 0.0
    t: float = 1.0

    def to_csv(self) -> str:
        rows = ["x,value,N,model"]
        for x, v in zip(np.ravel(self.x), np.ravel(self.value)):
            rows.append(f"{x!r},{v!r},{self.N!r},{self.model}")
        return "\n".join(rows) + "\n"


def passage(model, env, x, s, y, t) -> float:
    m = as_spec(model)
    if m.name == "hammersley":
        return float(hammersley_lpp(env, (x, s, y, t)))
    if m.name == "lines":
        return float(lines_lpp(env, (x, s, y, t)))
    if m.name == "sj":
        return float(sj_lpp(env, (x, s, y, t)))
    if m.name == "brownian":
        return float(blpp(env, (x, s, y, t)))
    return float(lattice_lpp(env, (x, s, y, t)))


def rescaled_profile(model, env, params: ScalingParams, N: float, s: float, t: float,
                     xs, ys) -> RescaledProfile:
    """L_N(x, s; y, t) on the paired grids ``xs``, ``ys`` (broadcast together)."""
    m = as_spec(model)
    S, C = space_scale(params, N), height_scale(params, N)
    xs, ys = np.broadcast_arrays(np.asarray(xs, float), np.asarray(ys, float))
    lvl_s, lvl_t = s * N, t * N
    if m.name != "hammersley":
        lvl_s, lvl_t = np.floor(lvl_s + 1e-9), np.floor(lvl_t + 1e-9)
    out = np.empty(xs.shape)
    cache = {}
    for idx in np.ndindex(xs.shape):
        xm = float(_offset(m, s * params.rho * N + xs[idx] * S))
        ym = float(_offset(m, t * params.rho * N + ys[idx] * S))
        if m.name in ("exponential", "geometric"):
            key = (ym, lvl_s, lvl_t)
            if key not in cache:
                cache[key] = lattice_to_point(env, int(ym), int(lvl_t), int(lvl_s))
            d = cache[key][env.col(xm)]
        else:
            d = passage(m, env, xm, lvl_s, ym, lvl_t)
        out[idx] = (d - params.alpha * N * (t - s) - params.beta * S * (ys[idx] - xs[idx])) / C
    return RescaledProfile(xs, out, N, m.name, s, t)


# ---------------------------------------------------------------- Busemann marginals

def rescaled_busemann(model, rho: float, mu: float, N: float, xs, stream: RngStream,
                      replicas: int = 1) -> RescaledProfile:
    """Samples of H^N_mu(x) = iota_N f_{beta_N(mu)}(x); one row per replica."""
    m = as_spec(model)
    prm = params_for(m, rho)
    xs = np.atleast_1d(np.asarray(xs, float))
    reach = np.abs(xs).max() * space_scale(prm, N) + 2 * max(m.step, 1.0)
    a = mean_to_param(m, beta_n(prm, mu, N))
    rows = np.empty((replicas, xs.size))
    for r in range(replicas):
        f = sample_boundary(m, a, (-reach, reach), stream.child("scaling", r))
        rows[r] = iota_n(f, prm, N, xs)
    return RescaledProfile(np.broadcast_to(xs, rows.shape), rows, N, m.name)


def marginal_subtests(h: np.ndarray, mu: float, x: float, rel_tol: float = 0.10) -> list:
    """Mean of H(x) against 2 mu x (3 SE) and variance against 2x (relative tolerance)."""
    se = h.std(ddof=1) / np.sqrt(h.size)
    z = (h.mean() - 2 * mu * x) / se
    v = h.var(ddof=1)
    rel = abs(v / (2 * x) - 1)
    return [SubTest(f"mean_mu={mu:g}", float(h.mean()), float(2 * stats.norm.sf(abs(z))), bool(abs(z) <= 3)),
            SubTest(f"variance_mu={mu:g}", float(v), float(rel), bool(rel <= rel_tol))]


def marginal_test(model, rho: float, mus, N: float, x: float, replicas: int,
                  seed: int = 0, rel_tol: float = 0.10, keep: bool = False) -> TestReport:
    """Brownian marginal targets for H^N_mu(x); ``keep`` stores the samples in ``extra``."""
    subs, samples = [], {}
    for k, mu in enumerate(np.atleast_1d(mus)):
        prof = rescaled_busemann(model, rho, float(mu), N, [x], RngStream(seed, (6 << 32) | (1 << 24) | k),
                                 replicas)
        subs += marginal_subtests(prof.value[:, 0], float(mu), x, rel_tol)
        if keep:
            samples[float(mu)] = prof
    return TestReport("sh_marginal", {"model": as_spec(model).name, "rho": rho, "N": N, "x": x,
                                      "mus": list(map(float, np.atleast_1d(mus))),
                                      "replicas": replicas, "rel_tol": rel_tol}, subs, [seed],
                      {"samples": samples} if keep else {})


# ---------------------------------------------------------------- invariance

def evolved_increments(model, rho: float, mu: float, N: float, t: float, xs,
                       stream: RngStream, w_factor: float = 4.0):
    """One replica of the rescaled evolved increments and of an independent boundary.

    Returns (evolved, fresh, boundary_active).
    """
    m = as_spec(model)
    prm = params_for(m, rho)
    S, C = space_scale(prm, N), height_scale(prm, N)
    xs = np.asarray(xs, float)
    offs = _offset(m, xs * S)
    a = mean_to_param(m, beta_n(prm, mu, N))
    W = w_factor * prm.tau * N ** (2 / 3)
    base = float(_offset(m, t * rho * N))
    lo = -float(np.ceil(W / max(m.step, 1.0)) * max(m.step, 1.0)) if m.step else -W
    hi = base + max(offs.max(), 0.0) + max(m.step, 1.0)
    reach = np.abs(offs).max() + 2 * max(m.step, 1.0)
    fresh_f = sample_boundary(m, a, (-reach, reach), stream.child("scaling", 1))
    fresh = (np.asarray(fresh_f.f(offs), float) - prm.beta * offs) / C
    if t == 0:
        return fresh, fresh, False
    s = stream.child("scaling", 0)
    f = sample_boundary(m, a, (lo, hi), s)
    level = t * N if m.name == "hammersley" else np.floor(t * N + 1e-9)
    env = sample_environment(m, (lo, hi), level, s)
    ys = np.concatenate([[base], base + offs])
    hp = height(env, f, level, ys, exits=m.name != "hammersley")
    h = hp.h
    evolved = (h[1:] - h[0] - prm.beta * offs) / C
    active = bool(hp.boundary_active is not None and hp.boundary_active.any())
    return evolved, fresh, active


def invariance_test(model, rho: float, mu, N: float, t: float = 1.0, xs=(-1.0, 1.0),
                    replicas: int = 200, seeds=(0,), w_factor: float = 4.0,
                    alpha: float = 0.01) -> TestReport:
    """Two-sample KS between boundary and evolved increments at each x (median-p rule).

    A sequence of ``mu`` runs each coupled component marginally and merges the reports.
    """
    if np.ndim(mu) > 0:
        reps = [invariance_test(model, rho, float(u), N, t, xs, replicas, seeds, w_factor, alpha)
                for u in mu]
        subs = [SubTest(f"mu={u:g}:{s.name}", s.statistic, s.p_value, s.passed)
                for u, r in zip(mu, reps) for s in r.sub_tests]
        params = dict(reps[0].params, mu=[float(u) for u in mu])
        return TestReport("sh_invariance", params, subs, list(seeds),
                          {f"mu={u:g}": r.extra for u, r in zip(mu, reps)})
    m = as_spec(model)
    xs = np.asarray(xs, float)
    per = []
    n_active = 0
    for sd in seeds:
        ev = np.empty((replicas, xs.size))
        fr = np.empty((replicas, xs.size))
        for r in range(replicas):
            e, f, act = evolved_increments(m, rho, mu, N, t, xs,
                                           RngStream(int(sd), (6 << 32) | r), w_factor)
            ev[r], fr[r] = e, f
            n_active += act
        subs = []
        for j, x in enumerate(xs):
            ks = stats.ks_2samp(fr[:, j], ev[:, j])
            subs.append(SubTest(f"ks_x={x:g}", ks.statistic, ks.pvalue))
        per.append(subs)
    rep = aggregate("sh_invariance", {"model": m.name, "rho": rho, "mu": mu, "N": N, "t": t,
                                      "xs": xs.tolist(), "replicas": replicas,
                                      "w_factor": w_factor, "p": m.p, "gamma": m.gamma,
                                      "delta": m.delta}, per, list(seeds), alpha)
    total = replicas * len(seeds)
    rep.extra["boundary_active"] = n_active
    if n_active > 0.01 * total:
        rep.sub_tests.append(SubTest("truncation", n_active / total, 0.0, False))
        rep.extra["advice"] = "exit at the truncation point in >1% of replicas; increase w_factor"
    return rep
