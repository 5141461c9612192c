"""Closed-form stationarity statistics and their Monte Carlo certification.

For each of Hammersley, Poisson lines and SJ the stationary height with
parameter ``a`` has mean ``M(a)``; ``R(a, b)`` is the integral of ``M`` from
``b`` to ``a`` and ``exp(R(a, b))`` is the moment generating function of
``(a - b) h^{a,b}``.  ``zeta`` minimizes ``M`` and ``gamma = M(zeta)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .processes import ParameterError, sample_poisson_1d
from .rng import RngStream
from .scaling import beta_n, params_for
from .stationary import ModelSpec, as_spec, height, mean_to_param, sample_boundary, sample_environment
from .stats import SubTest, TestReport, wilson_ci


@dataclass(frozen=True)
class EjsStats:
    model: str
    a: float
    b: float
    M: float
    R: float
    zeta: float
    gamma: float
    size: dict = field(default_factory=dict)


# ---------------------------------------------------------------- closed forms

def _ham_check(t, y):
    if not (t > 0 and y > 0):
        raise ParameterError("Hammersley needs t > 0 and y > 0")


def ham_M(a, t, y):
    return np.exp(a) * y + np.exp(-a) * t


def ham_R(a, b, t, y):
    # differences of antiderivatives keep R(a, b) = -R(b, a) exact in floating point
    return (np.exp(a) * y - np.exp(b) * y) + (np.exp(-b) * t - np.exp(-a) * t)


def ham_stats(a: float, b: float, t: float, y: float) -> EjsStats:
    _ham_check(t, y)
    return EjsStats("hammersley", a, b, float(ham_M(a, t, y)), float(ham_R(a, b, t, y)),
                    0.5 * np.log(t / y), 2 * np.sqrt(y * t), {"t": t, "y": y})


def _lines_check(n, y, *params):
    if not (y > 0 and n >= 0):
        raise ParameterError("lines needs y > 0 and n >= 0")
    if any(not v > 0 for v in params):
        raise ParameterError("lines needs a, b > 0 (geometric level gains need e^a > 1)")


def lines_M(a, n, y):
    return np.exp(a) * y + (n + 1) / np.expm1(a)


def lines_R(a, b, n, y):
    g = lambda u: (n + 1) * np.log(-np.expm1(-u))
    return (np.exp(a) * y - np.exp(b) * y) + (g(a) - g(b))


def lines_stats(a: float, b: float, n: int, y: float) -> EjsStats:
    _lines_check(n, y, a, b)
    r = np.sqrt((n + 1) / y)
    return EjsStats("lines", a, b, float(lines_M(a, n, y)), float(lines_R(a, b, n, y)),
                    float(np.log1p(r)), float(y + 2 * np.sqrt((n + 1) * y)), {"n": n, "y": y})


def sj_floor(p: float) -> float:
    """Admissible parameters satisfy a > -log((1-p)/p)."""
    return float(np.log(p / (1 - p)))


def _sj_check(n, m, p, *params):
    if not 0 < p < 1:
        raise ParameterError("SJ needs 0 < p < 1")
    if not (m > 0 and n >= 0):
        raise ParameterError("SJ needs m > 0 and n >= 0")
    if any(not v > sj_floor(p) for v in params):
        raise ParameterError("SJ needs a, b > -log((1-p)/p)")


def sj_M(a, n, m, p):
    ea = np.exp(a)
    return m * ea / (ea + 1) + (n + 1) * p / ((1 - p) * ea - p)


def sj_R(a, b, n, m, p):
    g1 = lambda u: m * np.log1p(np.exp(u))
    g2 = lambda u: (n + 1) * (np.log((1 - p) * np.exp(u) - p) - u)
    return (g1(a) - g1(b)) + (g2(a) - g2(b))


def sj_zeta_gamma(n, m, p):
    if m / (n + 1) <= p / (1 - p):
        return np.inf, float(m)
    s = np.sqrt((n + 1) * p * (1 - p) / m)
    zeta = np.log((p + s) / (1 - p - s))
    return float(zeta), float(m * (p + s) + (n + 1) * p * (1 - p - s) / s)


def sj_stats(a: float, b: float, n: int, m: float, p: float) -> EjsStats:
    _sj_check(n, m, p, a, b)
    zeta, gamma = sj_zeta_gamma(n, m, p)
    return EjsStats("sj", a, b, float(sj_M(a, n, m, p)), float(sj_R(a, b, n, m, p)),
                    zeta, gamma, {"n": n, "m": m, "p": p})


def stats_for(model: str, a: float, b: float, size: dict) -> EjsStats:
    m = as_spec(model).name
    if m == "hammersley":
        return ham_stats(a, b, size["t"], size["y"])
    if m == "lines":
        return lines_stats(a, b, size["n"], size["y"])
    if m == "sj":
        return sj_stats(a, b, size["n"], size["m"], size["p"])
    raise ParameterError(f"no closed forms for model {model!r}")


def M_of(model: str, a, size: dict):
    m = as_spec(model).name
    if m == "hammersley":
        return ham_M(a, size["t"], size["y"])
    if m == "lines":
        return lines_M(a, size["n"], size["y"])
    return sj_M(a, size["n"], size["m"], size["p"])


def R_of(model: str, a, b, size: dict):
    m = as_spec(model).name
    if m == "hammersley":
        return ham_R(a, b, size["t"], size["y"])
    if m == "lines":
        return lines_R(a, b, size["n"], size["y"])
    return sj_R(a, b, size["n"], size["m"], size["p"])


def M_second(model: str, a, size: dict):
    """Second derivative of M in a."""
    m = as_spec(model).name
    ea = np.exp(a)
    if m == "hammersley":
        return ea * size["y"] + size["t"] / ea
    if m == "lines":
        n, y = size["n"], size["y"]
        return ea * y + (n + 1) * ea * (ea + 1) / (ea - 1) ** 3
    n, mm, p = size["n"], size["m"], size["p"]
    sig = ea / (1 + ea)
    k, c = 1 - p, (n + 1) * p
    return mm * sig * (1 - sig) * (1 - 2 * sig) + c * k * ea * (k * ea + p) / (k * ea - p) ** 3


def cubic_coefficient(model: str, size: dict) -> float:
    """Coefficient of (a-zeta)^3 - (b-zeta)^3 in the expansion of R, i.e. M''(zeta)/6."""
    z = stats_for(model, *(2 * [_any_admissible(model, size)]), size).zeta
    return float(M_second(model, z, size) / 6)


def cubic_coefficient_alt(model: str, size: dict) -> float:
    """Older closed-form coefficients (wrong for SJ, and for Hammersley off t = y); kept for comparison."""
    st = stats_for(model, *(2 * [_any_admissible(model, size)]), size)
    ez = np.exp(st.zeta)
    if st.model == "hammersley":
        return st.gamma * ez ** 2 / 6
    if st.model == "lines":
        return st.gamma * ez ** 2 / (3 * (ez - 1) + 6 * (ez - 1) ** 2)
    w = (size["n"] + 1) / size["m"]
    return st.gamma / (3 * w * (1 + ez) ** 4)


def _any_admissible(model, size):
    m = as_spec(model).name
    return {"hammersley": 0.0, "lines": 1.0}.get(m, sj_floor(size.get("p", 0.5)) + 1.0)


def remainder(model: str, a, b, size: dict, coef: float | None = None):
    """R - gamma (a-b) - coef ((a-zeta)^3 - (b-zeta)^3)."""
    st = stats_for(model, float(np.ravel(a)[0]), float(np.ravel(b)[0]), size)
    coef = cubic_coefficient(model, size) if coef is None else coef
    z = st.zeta
    return (R_of(model, a, b, size) - st.gamma * (np.asarray(a) - b)
            - coef * ((np.asarray(a) - z) ** 3 - (np.asarray(b) - z) ** 3))


# ---------------------------------------------------------------- MGF identity

def _mgf_sample(model, a, b, size, w_pad, stream):
    """One replica of h^{a,b} at the target point and whether its exit hit the left edge."""
    m = as_spec(model)
    if m.name == "hammersley":
        y, level = float(size["y"]), float(size["t"])
    elif m.name == "lines":
        y, level = float(size["y"]), int(size["n"])
    else:
        m = ModelSpec("sj", p=size["p"])
        y, level = float(size["m"]), int(size["n"])
    lo = -float(np.ceil(w_pad))
    f = sample_boundary(m, a, (lo, y), stream, b=b)
    env = sample_environment(m, (lo, y), level, stream)
    hp = height(env, f, level, np.array([y]), exits=True)
    return float(hp.h[0]), bool(hp.boundary_active[0])


def default_pad(model: str, a: float, size: dict) -> float:
    """Left truncation for the MGF runs: a few multiples of the target scale."""
    m = as_spec(model).name
    if m == "hammersley":
        return 10.0 + 3 * (size["t"] + size["y"])
    if m == "lines":
        return 10.0 + 3 * (size["n"] + 1 + size["y"])
    return 10.0 + 3 * (size["n"] + 1 + size["m"])


def mgf_verify(model: str, a: float, b: float, size: dict, replicas: int = 100_000,
               seed: int = 0, w_pad: float | None = None) -> TestReport:
    """Monte Carlo check of E exp((a-b) h^{a,b}) = exp(R(a, b)) in log space."""
    if replicas < 1000:
        raise ParameterError("mgf_verify needs at least 1000 replicas")
    st = stats_for(model, a, b, size)
    pad = default_pad(model, a, size) if w_pad is None else w_pad
    h = np.empty(replicas)
    flagged = 0
    root = RngStream(seed, (5 << 32))
    for r in range(replicas):
        h[r], act = _mgf_sample(model, a, b, size, pad, root.child("ejs_rains", r))
        flagged += act
    params = {"model": st.model, "a": a, "b": b, **size, "replicas": replicas, "w_pad": pad}
    if flagged > 0.01 * replicas:
        return TestReport("mgf", params, [SubTest("truncation", flagged / replicas, 0.0, False)],
                          [seed], {"advice": "more than 1% of exits at the truncation edge; widen w_pad"})
    lw = (a - b) * h
    log_e = float(logsumexp(lw) - np.log(replicas))
    w = np.exp(lw - lw.max())
    se = float(w.std(ddof=1) / (w.mean() * np.sqrt(replicas))) if a != b else 0.0
    ess = float(w.sum() ** 2 / (w ** 2).sum())
    dev = log_e - st.R
    ok = abs(dev) <= 3 * se if se > 0 else abs(dev) < 1e-12
    p = float(2 * stats.norm.sf(abs(dev) / se)) if se > 0 else 1.0
    return TestReport("mgf", params, [SubTest("log_mgf", log_e, p, bool(ok))], [seed],
                      {"R": st.R, "se": se, "ess": ess, "truncated": flagged,
                       "mean_h": float(h.mean()), "M_a": st.M})


# ---------------------------------------------------------------- change of measure

def poisson_weight(a, b, y, count):
    """Density of Poisson(e^a) relative to Poisson(e^b) on [0, y] given the count."""
    return np.exp(np.exp(b) * y - np.exp(a) * y + (a - b) * np.asarray(count))


def bernoulli_weight(w, u, m, successes):
    """Density of Ber(w)^m relative to Ber(u)^m given the number of successes."""
    lg = np.log(w / (1 - w)) - np.log(u / (1 - u))
    return ((1 - w) / (1 - u)) ** m * np.exp(lg * np.asarray(successes))


def reweight_check(kind: str, target: float, base: float, size: float, replicas: int = 20_000,
                   seed: int = 0) -> TestReport:
    """Sample under ``base``, reweight to ``target`` and compare the weighted statistic.

    ``kind='poisson'``: parameters are log-intensities, ``size`` the window length;
    the statistic is the count with target mean ``e^target * size``.
    ``kind='bernoulli'``: parameters are success probabilities, ``size`` the
    number of trials; the statistic is the success frequency.
    """
    g = RngStream(seed, (5 << 32) | 0xFFFF)
    if kind == "poisson":
        counts = np.array([sample_poisson_1d(np.exp(base), (0.0, size), g).points.size
                           for _ in range(replicas)], dtype=float)
        w = poisson_weight(target, base, size, counts)
        stat, want = counts, np.exp(target) * size
    elif kind == "bernoulli":
        if not (0 < target < 1 and 0 < base < 1):
            raise ParameterError("Bernoulli parameters must lie in (0, 1)")
        k = g.bernoulli(base, (replicas, int(size))).sum(axis=1).astype(float)
        w = bernoulli_weight(target, base, int(size), k)
        stat, want = k / size, target
    else:
        raise ParameterError("kind must be 'poisson' or 'bernoulli'")
    ess = float(w.sum() ** 2 / (w ** 2).sum())
    params = {"kind": kind, "target": target, "base": base, "size": size, "replicas": replicas}
    if ess < 100:
        return TestReport("reweight", params, [SubTest("ess", ess, 0.0, False)], [seed],
                          {"advice": "weights degenerate; move the parameters closer"})
    subs = []
    for name, vals, goal in (("weighted_stat", w * stat, want), ("weight_mean", w, 1.0)):
        est, se = vals.mean(), vals.std(ddof=1) / np.sqrt(replicas)
        if se == 0:
            subs.append(SubTest(name, float(est), 1.0, bool(abs(est - goal) < 1e-12)))
            continue
        z = (est - goal) / se
        subs.append(SubTest(name, float(est), float(2 * stats.norm.sf(abs(z))), bool(abs(z) <= 3)))
    return TestReport("reweight", params, subs, [seed], {"ess": ess, "target_value": want})


# ---------------------------------------------------------------- Taylor remainder

def in_expansion_box(model: str, a: float, b: float, size: dict, eps: float) -> bool:
    m = as_spec(model).name
    if m == "hammersley":
        r = np.sqrt(size["t"] / size["y"])
        return bool(eps < r < 1 / eps and all(eps < np.exp(v) < 1 / eps for v in (a, b)))
    if m == "lines":
        r = (size["n"] + 1) / size["y"]
        return bool(eps < r < 1 / eps and all(eps < np.expm1(v) < 1 / eps for v in (a, b)))
    p = size["p"]
    r = (size["n"] + 1) / size["m"]
    sig = [1 / (1 + np.exp(-v)) for v in (a, b)]
    return bool(p + eps < r < 1 / eps and all(p + eps < s < 1 - eps for s in sig))


DIRECTIONS = ((1, 0), (0, 1), (1, 1), (1, -1), (-1, 0), (1, 0.5), (-0.5, 1), (-1, -0.3))


def taylor_bound_check(model: str, size: dict, steps=(0.05, 0.025, 0.0125), eps: float = 0.05,
                       directions=DIRECTIONS, growth: float = 1.25, coef: float | None = None) -> TestReport:
    """Fit C_h = max remainder / (scale ((a-zeta)^4 + (b-zeta)^4)) and test stability in h.

    Stable means each refinement multiplies C_h by at most ``growth``; a wrong
    cubic coefficient makes C_h double per halving.
    """
    m = as_spec(model).name
    st = stats_for(model, *(2 * [_any_admissible(model, size)]), size)
    z = st.zeta
    if not np.isfinite(z):
        raise ParameterError("zeta is infinite for these sizes (degenerate branch)")
    scale = size["t"] + size["y"] if m == "hammersley" else (
        size["n"] + size["y"] if m == "lines" else size["n"] + size["m"])
    c = cubic_coefficient(model, size) if coef is None else coef
    ch = []
    for h in steps:
        worst = 0.0
        for u, v in directions:
            a, b = z + h * u, z + h * v
            if not in_expansion_box(model, a, b, size, eps):
                raise ParameterError(f"({a:.4g}, {b:.4g}) lies outside the expansion box for eps={eps}")
            q = scale * ((a - z) ** 4 + (b - z) ** 4)
            worst = max(worst, abs(float(remainder(model, a, b, size, c))) / q)
        ch.append(worst)
    ratios = [ch[k + 1] / ch[k] if ch[k] > 0 else 0.0 for k in range(len(ch) - 1)]
    ok = all(np.isfinite(ch)) and all(r <= growth for r in ratios)
    return TestReport("taylor", {"model": m, **size, "steps": list(steps), "coef": c},
                      [SubTest("C_stable", float(max(ch)), float(max(ratios, default=0.0)), bool(ok))],
                      [], {"C_h": ch, "ratios": ratios, "zeta": z, "gamma": st.gamma})


# ---------------------------------------------------------------- exit tails

@dataclass
class TailRow:
    model: str
    N: int
    M: float
    exceed: int
    replicas: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    fitted: bool


@dataclass
class TailTable:
    rows: list
    slopes: dict
    truncated: dict
    params: dict

    @property
    def monotone(self) -> bool:
        for N in {r.N for r in self.rows}:
            ps = [r.p_hat for r in sorted((r for r in self.rows if r.N == N), key=lambda r: r.M)]
            if any(ps[k + 1] > ps[k] for k in range(len(ps) - 1)):
                return False
        return True

    def report(self) -> TestReport:
        subs = [SubTest("monotone_in_M", 0.0, 1.0, self.monotone)]
        for N, s in self.slopes.items():
            subs.append(SubTest(f"slope_N={N}", s, 1.0, bool(np.isfinite(s) and s < 0)))
        return TestReport("exit_tails", self.params, subs, [self.params.get("seed", 0)],
                          {"truncated": self.truncated})

    def to_csv(self) -> str:
        lines = ["model,N,M,p_hat,ci_lo,ci_hi"]
        for r in self.rows:
            lines.append(f"{r.model},{r.N},{r.M!r},{r.p_hat!r},{r.ci_lo!r},{r.ci_hi!r}")
        return "\n".join(lines) + "\n"


def exit_samples(model, rho: float, mu: float, t: float, N: int, replicas: int, seed: int = 0,
                 y: float = 0.0, w_factor: float = 4.0):
    """Exit points Z(tN, t rho N + y tau N^{2/3}) over replicas; also the truncation count."""
    m = as_spec(model)
    prm = params_for(m, rho)
    a = mean_to_param(m, beta_n(prm, mu, N))
    step = max(m.step, 1.0)
    target = t * rho * N + y * prm.tau * N ** (2 / 3)
    target = target if m.step == 0 else float(np.floor(target / m.step) * m.step)
    lo = -float(np.ceil(w_factor * prm.tau * N ** (2 / 3) / step) * step)
    level = t * N if m.name == "hammersley" else np.floor(t * N + 1e-9)
    root = RngStream(seed, (5 << 32) | (1 << 20) | int(N))
    Z = np.empty(replicas)
    trunc = 0
    for r in range(replicas):
        s = root.child("ejs_rains", r)
        f = sample_boundary(m, a, (lo, target), s)
        env = sample_environment(m, (lo, target), level, s)
        hp = height(env, f, level, np.array([target]), exits=True)
        Z[r] = hp.Z[0]
        trunc += bool(hp.boundary_active[0])
    return Z, trunc


def exit_tail_estimate(model, rho: float = 1.0, mu: float = 0.0, t: float = 1.0, Ns=(2000,),
                       Ms=(0.5, 1.0, 2.0, 3.0), replicas: int = 400, seed: int = 0,
                       y: float = 0.0, w_factor: float = 4.0) -> TailTable:
    m = as_spec(model)
    rows, slopes, truncated = [], {}, {}
    for N in Ns:
        Z, tr = exit_samples(m, rho, mu, t, int(N), replicas, seed, y, w_factor)
        truncated[int(N)] = tr
        scale = N ** (2 / 3)
        fit_x, fit_y = [], []
        for M in Ms:
            k = int(np.sum(np.abs(Z) > M * scale))
            lo, hi = wilson_ci(k, replicas)
            rows.append(TailRow(m.name, int(N), float(M), k, replicas, k / replicas, lo, hi, k > 0))
            if k > 0:
                fit_x.append(M ** 3)
                fit_y.append(np.log(k / replicas))
        slopes[int(N)] = float(np.polyfit(fit_x, fit_y, 1)[0]) if len(fit_x) >= 2 else float("nan")
    return TailTable(rows, slopes, truncated,
                     {"model": m.name, "rho": rho, "mu": mu, "t": t, "y": y, "Ns": list(map(int, Ns)),
                      "Ms": list(map(float, Ms)), "replicas": replicas, "seed": seed,
                      "w_factor": w_factor})
