"""Small statistical helpers shared by the verifiers."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats

ALPHA = 0.01


@dataclass
class SubTest:
    name: str
    statistic: float
    p_value: float
    passed: bool = field(default=False)

    def as_dict(self) -> dict:
        return {"name": self.name, "statistic": _clean(self.statistic),
                "p_value": _clean(self.p_value), "pass": bool(self.passed)}


@dataclass
class TestReport:
    __test__ = False  # keep pytest from collecting it

    test: str
    params: dict
    sub_tests: list[SubTest]
    seeds: list[int]
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.sub_tests)

    def as_dict(self) -> dict:
        d = {"test": self.test, "params": self.params,
             "sub_tests": [s.as_dict() for s in self.sub_tests],
             "seeds": list(self.seeds), "pass": self.passed}
        if self.extra:
            d["extra"] = self.extra
        return d

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, default=_clean)


def _clean(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def geom_pmf(k, v):
    """P(X = k) for X ~ Geom(v) on {0, 1, ...} with success probability v."""
    k = np.asarray(k)
    return v * (1.0 - v) ** k


def chisq_discrete(samples, pmf, min_expected: float = 5.0):
    """Chi-square goodness of fit for integer samples on {0, 1, ...}.

    Bins run upward from 0 until the expected count drops below
    ``min_expected``; everything above is pooled into a tail bin.
    """
    x = np.asarray(samples, dtype=np.int64)
    n = x.size
    probs = []
    k = 0
    tail = 1.0
    while True:
        pk = float(pmf(k))
        if n * pk < min_expected or n * (tail - pk) < min_expected:
            break
        probs.append(pk)
        tail -= pk
        k += 1
    K = len(probs)
    obs = np.bincount(np.minimum(x, K), minlength=K + 1)[: K + 1].astype(float)
    exp = n * np.array(probs + [max(tail, 0.0)])
    if K == 0:
        return 0.0, 1.0
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return stat, float(stats.chi2.sf(stat, K))


def dispersion_test(counts):
    """Index-of-dispersion test for Poisson counts (two-sided)."""
    x = np.asarray(counts, dtype=float)
    n = x.size
    m = x.mean()
    if m == 0:
        return 0.0, 1.0
    stat = float(np.sum((x - m) ** 2) / m)
    lo = stats.chi2.cdf(stat, n - 1)
    return stat, float(min(1.0, 2 * min(lo, 1 - lo)))


def corr_test(x, y):
    """Pearson correlation with its two-sided null p-value."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.std() == 0 or y.std() == 0:
        return 0.0, 1.0
    r = stats.pearsonr(x, y)
    return float(r.statistic), float(r.pvalue)


def mean_z_test(x, target):
    """Two-sided z-test of the sample mean against ``target``."""
    x = np.asarray(x, dtype=float)
    se = x.std(ddof=1) / np.sqrt(x.size)
    if se == 0:
        return 0.0, 1.0 if x.mean() == target else 0.0
    z = (x.mean() - target) / se
    return float(z), float(2 * stats.norm.sf(abs(z)))


def wilson_ci(k: int, n: int, level: float = 0.95):
    if n == 0:
        return 0.0, 1.0
    ci = stats.binomtest(int(k), int(n)).proportion_ci(level, method="wilson")
    return float(ci.low), float(ci.high)


def median_pass(pvals, alpha: float = ALPHA) -> bool:
    return float(np.median(pvals)) > alpha


def aggregate(name: str, params: dict, per_seed: list[list[SubTest]], seeds: list[int],
              alpha: float = ALPHA) -> TestReport:
    """Combine per-seed sub-tests by the median p-value rule."""
    out = []
    for j, first in enumerate(per_seed[0]):
        ps = [run[j].p_value for run in per_seed]
        st = [run[j].statistic for run in per_seed]
        med = float(np.median(ps))
        out.append(SubTest(first.name, float(np.median(st)), med, med > alpha))
    return TestReport(name, params, out, list(seeds),
                      {"per_seed_p": {s.name: [run[j].p_value for run in per_seed]
                                      for j, s in enumerate(per_seed[0])}})
