"""Exact-identity verification suites returning :class:`TestReport` objects.

Each suite draws many small random instances and counts disagreements with an
independent computation; a single disagreement fails the suite.
"""
from __future__ import annotations

import numpy as np

from . import oracles as O
from .lpp_core import (LatticeEnvironment, LineField, blpp, hammersley_lpp, lattice_lpp, lines_lpp,
                       sample_brownian, sample_sj, sj_lpp)
from .processes import (PlanarPointSet, PointSet, bernoulli_field, coupled_family, sample_poisson_1d,
                        sample_poisson_2d)
from .queues import pitman_check, pitman_jumps
from .rng import RngStream
from .stationary import (ModelSpec, boundary_from_family, boundary_from_field, eta_identity_check,
                         exit_point, fluid_evolve, height, iterate_height, sample_boundary,
                         sample_environment)
from .stats import SubTest, TestReport


def _count(name, n, bad):
    return SubTest(name, float(bad), 1.0 if bad == 0 else 0.0, bad == 0)


def oracle_suite(samples: int = 1000, seed: int = 0) -> TestReport:
    """Fast passage times against brute-force enumeration for every model."""
    root = RngStream(seed, 7 << 32)
    bad = dict.fromkeys(["lattice", "sj", "hammersley", "lines", "brownian"], 0)
    for k in range(samples):
        s = root.child("harness", k)
        nx, ny = (int(v) for v in s.gen.integers(1, 4, 2))
        env = LatticeEnvironment(s.gen.integers(0, 3, (nx, ny)).astype(float), law="geom")
        bad["lattice"] += lattice_lpp(env, (0, 0, nx - 1, ny - 1)) != O.brute_lattice(env, 0, 0, nx - 1, ny - 1)

        nx, ny = (int(v) for v in s.gen.integers(1, 5, 2))
        env = sample_sj(float(s.uniform(0.1, 0.9)), (0, nx - 1), ny, s)
        bad["sj"] += sj_lpp(env, (0, 0, nx - 1, ny - 1)) != O.brute_sj(env, 0, 0, nx - 1, ny - 1)

        n = int(s.gen.integers(0, 11))
        X = PlanarPointSet(np.sort(s.random(n)), s.random(n), (0, 1, 0, 1))
        q = (0.0, 0.0, 1.0, 1.0)
        bad["hammersley"] += hammersley_lpp(X, q) != O.brute_hammersley(X, *q)

        L = int(s.gen.integers(1, 4))
        tot = int(s.gen.integers(0, 7))
        owner = s.gen.integers(0, L, tot)
        xs = s.uniform(0, 1, tot)
        lf = LineField(levels=tuple(PointSet(np.sort(xs[owner == i]), (0, 1)) for i in range(L)))
        a, b = np.sort(s.uniform(0, 1, 2))
        bad["lines"] += lines_lpp(lf, (a, 0, b, L - 1)) != O.brute_lines(lf, a, 0, b, L - 1)

        bm = sample_brownian((0, 1.0), 2, 0.5, s)
        bad["brownian"] += not np.isclose(blpp(bm, (0, 0, 1.0, 1)), O.brute_blpp(bm, 0, 0, 1.0, 1))
    return TestReport("oracle_suite", {"samples": samples},
                      [_count(f"{m}_mismatches", samples, int(v)) for m, v in bad.items()], [seed])


def evolution_suite(samples: int = 1000, seed: int = 0) -> TestReport:
    """Level-by-level evolution equals the direct variational height (lines, SJ)."""
    root = RngStream(seed, (7 << 32) | 1)
    sj = ModelSpec("sj", p=0.3)
    bad_l = bad_s = 0
    for k in range(samples):
        s = root.child("harness", k)
        env = sample_environment("lines", (-15, 5), 3, s)
        f = sample_boundary("lines", 0.5, (-15, 5), s)
        ys = s.uniform(-5, 5, 4)
        bad_l += not np.array_equal(iterate_height(env, f, 3, ys), height(env, f, 3, ys).h)
        env = sample_environment(sj, (-20, 6), 4, s)
        f = sample_boundary(sj, np.log(0.6 / 0.4), (-20, 6), s)
        ys = np.arange(-3, 7)
        bad_s += not np.array_equal(iterate_height(env, f, 4, ys), height(env, f, 4, ys).h)
    return TestReport("evolution_suite", {"samples": samples},
                      [_count("lines_mismatches", samples, bad_l), _count("sj_mismatches", samples, bad_s)],
                      [seed])


def coupling_suite(samples: int = 1000, seed: int = 0) -> TestReport:
    """Z at smaller parameters never exceeds Z at larger ones under the coupling."""
    root = RngStream(seed, (7 << 32) | 2)
    sj = ModelSpec("sj", p=0.3)
    bad = {"hammersley": 0, "lines": 0, "sj": 0}
    for k in range(samples):
        s = root.child("harness", k)
        a, b = np.sort(s.uniform(0.2, 0.6, 2))[::-1]
        da, db = s.uniform(0.0, 0.15, 2)
        fam = coupled_family(0.6, (-25, 10), s)
        X = sample_poisson_2d(1.0, (-25, 10, 0, 6), s)
        y = float(s.uniform(-2, 8))
        hi = exit_point(X, boundary_from_family(fam, "hammersley", a, b), 6.0, [y])[0]
        lo = exit_point(X, boundary_from_family(fam, "hammersley", a - da - 0.3, b - db - 0.3), 6.0, [y])[0]
        bad["hammersley"] += not lo <= hi
        env = sample_environment("lines", (-25, 10), 3, s)
        hi = exit_point(env, boundary_from_family(fam, "lines", a, b), 3, [y])[0]
        lo = exit_point(env, boundary_from_family(fam, "lines", a - da, b - db), 3, [y])[0]
        bad["lines"] += not lo <= hi
        fld = bernoulli_field(-30, 8, s)
        env = sample_environment(sj, (-30, 8), 3, s)
        yy = [float(s.gen.integers(-3, 8))]
        hi = exit_point(env, boundary_from_field(fld, sj, 0.4 + a, 0.4 + b), 3, yy)[0]
        lo = exit_point(env, boundary_from_field(fld, sj, 0.4 + a - da, 0.4 + b - db), 3, yy)[0]
        bad["sj"] += not lo <= hi
    return TestReport("coupling_suite", {"samples": samples},
                      [_count(f"{m}_violations", samples, v) for m, v in bad.items()], [seed])


def pitman_suite(conclusive: int = 1000, seed: int = 0, lam: float = 1.0, mu: float = 2.0,
                 window=(-20.0, 20.0), max_samples: int = 100_000) -> TestReport:
    """Pitman's 2M - X identity on sampled queue paths, counted over conclusive samples."""
    root = RngStream(seed, (7 << 32) | 3)
    done = worst = k = 0
    while done < conclusive and k < max_samples:
        s = root.child("harness", k)
        k += 1
        c = pitman_check(pitman_jumps(sample_poisson_1d(lam, window, s), sample_poisson_1d(mu, window, s)))
        if not c.inconclusive:
            done += 1
            worst = max(worst, c.max_defect)
    subs = [SubTest("max_defect", float(worst), 1.0 if worst == 0 else 0.0, worst == 0),
            SubTest("conclusive_samples", float(done), 1.0, done >= conclusive)]
    return TestReport("pitman", {"lambda": lam, "mu": mu, "window": list(window), "target": conclusive},
                      subs, [seed], {"drawn": k})


def fluid_suite(conclusive: int = 1000, seed: int = 0, t: float = 5.0, window=(-15.0, 12.0),
                max_samples: int = 100_000) -> TestReport:
    """h = nu(y) + eta_y(t) for the Hammersley fluid, over conclusive (sample, y) pairs."""
    root = RngStream(seed, (7 << 32) | 4)
    done = defects = k = disorder = 0
    while done < conclusive and k < max_samples:
        s = root.child("harness", k)
        k += 1
        X = sample_poisson_2d(1.0, (*window, 0.0, t), s)
        f = sample_boundary("hammersley", 0.0, window, s)
        st = fluid_evolve(f.points, X, t)
        disorder += not st.order_preserved()
        y = float(s.uniform(window[0] + 0.4 * (window[1] - window[0]), window[1] - 5))
        c = eta_identity_check(st, X, y)
        if c.conclusive:
            done += 1
            defects += not c.ok
    subs = [SubTest("defects", float(defects), 1.0 if defects == 0 else 0.0, defects == 0),
            SubTest("order_violations", float(disorder), 1.0 if disorder == 0 else 0.0, disorder == 0),
            SubTest("conclusive_samples", float(done), 1.0, done >= conclusive)]
    return TestReport("fluid", {"t": t, "window": list(window), "target": conclusive}, subs, [seed],
                      {"drawn": k})
