"""Acceptance criteria at full size.

Every test prints one ``PASS``/``FAIL`` line (visible even under output
capture) and then asserts.  Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import math
import time

import numpy as np
import pytest

from lppsh import ejs_rains as E
from lppsh import scaling as S
from lppsh import suites
from lppsh.queues import burke_bernoulli_test, burke_poisson_test
from lppsh.stationary import ModelSpec

pytestmark = pytest.mark.acceptance

SIX = ["hammersley", "lines", "sj", "exponential", "geometric", "brownian"]


@pytest.fixture
def verdict(capsys):
    def emit(k, name, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {k:>2}: {name}  {detail}", flush=True)
        assert ok, detail
    return emit


def _failures(rep):
    return [s.name for s in rep.sub_tests if not s.passed]


MGF_POINTS = {
    "hammersley": (math.log(1.1), math.log(0.9), {"t": 5.0, "y": 5.0}),
    "lines": (math.log(2.0), math.log(1.5), {"n": 2, "y": 4.0}),
    "sj": (math.log(0.65 / 0.35), math.log(0.55 / 0.45), {"n": 2, "m": 6.0, "p": 0.3}),
}


@pytest.mark.parametrize("model", list(MGF_POINTS))
def test_c01_mgf_identity(verdict, model):
    a, b, size = MGF_POINTS[model]
    t0 = time.perf_counter()
    rep = E.mgf_verify(model, a, b, size, replicas=100_000, seed=0)
    dt = time.perf_counter() - t0
    est = rep.sub_tests[0].statistic
    R, se = rep.extra["R"], rep.extra["se"]
    ok = rep.passed and dt <= 120
    verdict(1, f"MGF identity ({model})", ok,
            f"log-estimate={est:.4f} R={R:.4f} se={se:.4f} |diff|/se={abs(est - R) / se:.2f} time={dt:.0f}s")


def test_c02_burke_poisson(verdict):
    t0 = time.perf_counter()
    rep = burke_poisson_test(1.0, 2.0, replicas=10_000, seeds=list(range(20)))
    dt = time.perf_counter() - t0
    verdict(2, "Burke Poisson queue (lambda=1, mu=2)", rep.passed and dt <= 60,
            f"median p={[round(s.p_value, 3) for s in rep.sub_tests]} failing={_failures(rep)} time={dt:.0f}s")


def test_c02_burke_bernoulli(verdict):
    t0 = time.perf_counter()
    rep = burke_bernoulli_test(0.3, 0.6, replicas=10_000, seeds=list(range(20)))
    dt = time.perf_counter() - t0
    verdict(2, "Burke Bernoulli queue (p=0.3, u=0.6)", rep.passed and dt <= 60,
            f"median p={[round(s.p_value, 3) for s in rep.sub_tests]} failing={_failures(rep)} time={dt:.0f}s")


def test_c03_pitman_and_fluid(verdict):
    t0 = time.perf_counter()
    pit = suites.pitman_suite(1000)
    flu = suites.fluid_suite(1000)
    dt = time.perf_counter() - t0
    verdict(3, "Pitman and fluid identities", pit.passed and flu.passed and dt <= 60,
            f"pitman={pit.sub_tests[0].statistic:.0f} defects fluid={flu.sub_tests[0].statistic:.0f} defects "
            f"time={dt:.1f}s")


def test_c04_oracle_suite(verdict):
    rep = suites.oracle_suite(1000)
    verdict(4, "passage values vs brute force", rep.passed,
            " ".join(f"{s.name}={s.statistic:.0f}" for s in rep.sub_tests))


def test_c05_evolution(verdict):
    rep = suites.evolution_suite(1000)
    verdict(5, "iterated evolution vs direct height", rep.passed,
            " ".join(f"{s.name}={s.statistic:.0f}" for s in rep.sub_tests))


def test_c06_invariance(verdict):
    t0 = time.perf_counter()
    rows, ok = [], True
    for model in SIX:
        for N in (200, 500):
            rep = S.invariance_test(model, 1.0, 0.0, N, t=1.0, xs=(-1.0, 1.0), replicas=200, seeds=(0, 1, 2))
            ok &= rep.passed
            rows.append(f"{model}/N={N}:" + ",".join(f"{s.p_value:.2f}" for s in rep.sub_tests))
    dt = time.perf_counter() - t0
    verdict(6, "finite-N joint invariance, six models", ok and dt <= 300, f"{' '.join(rows)} time={dt:.0f}s")


def test_c07_brownian_marginal(verdict):
    t0 = time.perf_counter()
    rep = S.marginal_test("exponential", 1.0, [0.0, 0.5], 10_000, 1.0, replicas=20_000, seed=0, rel_tol=0.10)
    dt = time.perf_counter() - t0
    verdict(7, "drift 2 mu and variance 2 at N=10^4", rep.passed and dt <= 120,
            " ".join(f"{s.name}={s.statistic:.3f}" for s in rep.sub_tests) + f" time={dt:.0f}s")


def test_c08_exit_tails(verdict):
    t0 = time.perf_counter()
    rows, ok = [], True
    for model in ("hammersley", "lines", "sj", "exponential"):
        tb = E.exit_tail_estimate(model, 1.0, 0.0, 1.0, Ns=(2000,), Ms=(0.5, 1.0, 2.0, 3.0), replicas=250, seed=0)
        slope = tb.slopes[2000]
        ok &= tb.monotone and slope < 0 and tb.truncated[2000] == 0
        rows.append(f"{model}: p=" + ",".join(f"{r.p_hat:.3f}" for r in tb.rows) + f" slope={slope:.2f}")
    dt = time.perf_counter() - t0
    verdict(8, "exit-point tails at N=2000", ok and dt <= 600, f"{' | '.join(rows)} time={dt:.0f}s")


def test_c09_coupling(verdict):
    rep = suites.coupling_suite(1000)
    verdict(9, "coupled exit monotonicity", rep.passed,
            " ".join(f"{s.name}={s.statistic:.0f}" for s in rep.sub_tests))


def test_c10_closed_forms(verdict):
    rng = np.random.default_rng(0)
    cases = [("hammersley", {"t": 5.0, "y": 3.0}, 0.0), ("lines", {"n": 2, "y": 4.0}, 0.0),
             ("sj", {"n": 2, "m": 6.0, "p": 0.3}, E.sj_floor(0.3))]
    worst_anti = worst_diag = worst_deriv = 0.0
    gamma_ok = True
    for model, size, floor in cases:
        lo = max(floor, 0.0) + 0.05
        for a, b in rng.uniform(lo, lo + 2.0, (200, 2)):
            worst_anti = max(worst_anti, abs(E.R_of(model, a, b, size) + E.R_of(model, b, a, size)))
            worst_diag = max(worst_diag, abs(E.R_of(model, a, a, size)))
            h = 1e-5
            d = (E.R_of(model, a + h, b, size) - E.R_of(model, a - h, b, size)) / (2 * h)
            worst_deriv = max(worst_deriv, abs(d - E.M_of(model, a, size)))
        st = E.stats_for(model, lo + 0.5, lo + 0.2, size)
        grid = np.linspace(lo, lo + 4.0, 4001)
        gamma_ok &= bool(np.isclose(E.M_of(model, st.zeta, size), st.gamma, rtol=1e-12))
        gamma_ok &= bool(np.all(E.M_of(model, grid, size) >= st.gamma * (1 - 1e-12)))
    worst_res = 0.0
    for spec in (ModelSpec("hammersley"), ModelSpec("lines"), ModelSpec("sj", p=0.3), ModelSpec("exponential"),
                 ModelSpec("geometric", gamma=1.0), ModelSpec("brownian")):
        for rho in (0.5, 1.0, 2.0, 4.0):
            worst_res = max(worst_res, float(np.max(S.residuals(S.params_for(spec, rho)))))
    ok = worst_anti == 0 and worst_diag == 0 and worst_deriv < 1e-6 and gamma_ok and worst_res < 1e-12
    verdict(10, "closed-form consistency", ok,
            f"antisym={worst_anti:.1e} R(a,a)={worst_diag:.1e} dR/da-M={worst_deriv:.1e} "
            f"M(zeta)=gamma min={gamma_ok} residual={worst_res:.1e}")
