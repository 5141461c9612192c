import numpy as np
import pytest
from scipy import stats

from lppsh import oracles as O
from lppsh.lpp_core import blpp, hammersley_lpp, lattice_lpp, lines_lpp, sj_lpp
from lppsh.processes import (ParameterError, PlanarPointSet, PointSet, bernoulli_field,
                             coupled_family, sample_poisson_2d)
from lppsh.rng import RngStream
from lppsh.stationary import (ModelSpec, boundary_from_family, boundary_from_field,
                              eta_identity_check, evolve_lines, evolve_sj, exit_point,
                              fluid_evolve, height, iterate_height, sample_boundary,
                              sample_environment)
from lppsh.stats import chisq_discrete, geom_pmf

PARAM = {"hammersley": 0.0, "lines": np.log(1.5), "sj": np.log(0.6 / 0.4),
         "exponential": 2.0, "geometric": 2.0, "brownian": 1.0}


def passage(model, env, c, y, n):
    if model == "hammersley":
        return hammersley_lpp(env, (c, 0, y, n))
    if model == "lines":
        return O.brute_lines(env, c, 0, y, n) if sum(len(l) for l in env.levels) <= 8 \
            else lines_lpp(env, (c, 0, y, n))
    if model == "sj":
        return O.brute_sj(env, c, 0, y, n)
    if model == "brownian":
        return O.brute_blpp(env, c, 0, y, n)
    return O.brute_lattice(env, c, 0, y, n)


@pytest.mark.parametrize("model", list(PARAM))
def test_height_matches_brute_force(model):
    n = 1 if model in ("sj", "exponential", "geometric") else 2
    if model == "brownian":
        n, window = 1, (-1.0, 1.0)
    else:
        window = (-3.0, 3.0)
    spec = ModelSpec(model, delta=0.5)
    for k in range(150):
        s = RngStream(41, k)
        env = sample_environment(spec, window, n, s)
        f = sample_boundary(spec, PARAM[model], window, s)
        ys = np.sort(s.uniform(window[0], window[1], 3))
        if model not in ("hammersley", "lines"):
            ys = np.floor(ys / spec.step) * spec.step
        hp = height(env, f, n, ys)
        for j, y in enumerate(ys):
            cands = f.candidates[f.candidates <= y + 1e-12]
            vals = f.f(cands)
            ref, arg = O.brute_height(cands, vals, lambda c: passage(model, env, c, y, n))
            assert np.isclose(hp.h[j], ref), (model, k, j)
            assert np.isclose(hp.Z[j], arg), (model, k, j)
        assert np.all(np.diff(hp.Z) >= 0)


def test_empty_environment_height_is_f():
    f = sample_boundary("hammersley", 0.0, (-5, 5), RngStream(42))
    X = PlanarPointSet([], [], (-5, 5, 0, 1))
    ys = np.linspace(-4, 5, 7)
    hp = height(X, f, 1.0, ys)
    assert np.array_equal(hp.h, f.f(ys))
    pts = f.points.points
    for y, z in zip(ys, hp.Z):
        assert z == (pts[pts <= y].max() if np.any(pts <= y) else -5)


def test_exit_monotone_in_y():
    for k in range(100):
        s = RngStream(43, k)
        X = sample_poisson_2d(1.0, (-20, 10, 0, 8), s)
        f = sample_boundary("hammersley", 0.0, (-20, 10), s)
        Z = exit_point(X, f, 8.0, np.linspace(-5, 10, 12))
        assert np.all(np.diff(Z) >= 0)


def test_boundary_active_flag():
    s = RngStream(44)
    env = sample_environment("exponential", (-3, 30), 40, s)
    f = sample_boundary("exponential", 1.5, (-3, 30), s)
    hp = height(env, f, 40, [0.0])
    assert hp.any_boundary_active


def test_inadmissible_parameters():
    s = RngStream(45)
    with pytest.raises(ParameterError, match="a > 0"):
        sample_boundary("lines", -0.1, (-1, 1), s)
    with pytest.raises(ParameterError, match="p ="):
        sample_boundary(ModelSpec("sj", p=0.5), 0.0, (-1, 1), s)
    with pytest.raises(ParameterError, match="beta > 1"):
        sample_boundary("exponential", 1.0, (-1, 1), s)
    with pytest.raises(ParameterError, match="gamma"):
        sample_boundary("geometric", 0.5, (-1, 1), s)


def test_boundary_laws():
    s = RngStream(46)
    f = sample_boundary("hammersley", 0.0, (0, 10), s)
    assert f.f(0.0) == 0
    counts = [len(sample_boundary("hammersley", 0.0, (0, 10), RngStream(46, k)).points)
              for k in range(2000)]
    assert abs(np.mean(counts) - 10) < 3 * np.sqrt(10 / 2000)
    sj = sample_boundary("sj", 0.0, (-5000, 5000), s)
    assert abs(sj.increments[1:].mean() - 0.5) < 3 * 0.5 / 100
    g = sample_boundary("geometric", 2.0, (-5000, 5000), s).increments[1:]
    assert chisq_discrete(g.astype(int), lambda k: geom_pmf(k, 1 / 3))[1] > 0.01
    e = sample_boundary("exponential", 2.0, (-3000, 3000), s).increments[1:]
    assert stats.kstest(e, "expon", args=(0, 2.0)).pvalue > 0.01
    b = sample_boundary(ModelSpec("brownian", delta=0.5), 1.0, (-2000, 2000), s).increments[1:]
    assert stats.kstest(b, "norm", args=(0.5, np.sqrt(0.5))).pvalue > 0.01


def test_lines_level0_geometric_gain():
    a = np.log(2.0)
    gains = []
    for k in range(3000):
        s = RngStream(47, k)
        env = sample_environment("lines", (-30, 2), 0, s)
        f = sample_boundary("lines", a, (-30, 2), s)
        gains.append(int(height(env, f, 0, [1.0]).h[0] - f.f(1.0)))
    assert chisq_discrete(gains, lambda k: geom_pmf(k, 1 - np.exp(-a)))[1] > 0.01


def test_evolve_lines_trivial_and_consistent():
    s = RngStream(48)
    f = sample_boundary("lines", 0.5, (-10, 10), s)
    g, res = evolve_lines(f, PointSet([], (-10, 10)))
    assert g.points == f.points and np.all(res.q == 0)
    for k in range(200):
        s = RngStream(48, k)
        env = sample_environment("lines", (-15, 5), 3, s)
        f = sample_boundary("lines", 0.5, (-15, 5), s)
        ys = s.uniform(-5, 5, 4)
        assert np.array_equal(iterate_height(env, f, 3, ys), height(env, f, 3, ys).h)


def test_evolve_lines_preserves_poisson():
    counts = []
    for k in range(2000):
        s = RngStream(49, k)
        env = sample_environment("lines", (-40, 5), 0, s)
        f = sample_boundary("lines", np.log(2), (-40, 5), s)
        g, _ = evolve_lines(f, env.levels[0])
        counts.append(g.points.count(0.0, 2.0))
    counts = np.array(counts)
    assert abs(counts.mean() - 4) < 3 * np.sqrt(4 / 2000)
    assert 0.9 < counts.var() / counts.mean() < 1.1


def test_evolve_sj():
    spec = ModelSpec("sj", p=0.3)
    s = RngStream(50)
    f = sample_boundary(spec, np.log(0.6 / 0.4), (-10, 10), s)
    g, J = evolve_sj(f, np.zeros(21))
    assert np.array_equal(g.increments, f.increments) and np.all(J == 0)
    Js = []
    for k in range(4000):
        s = RngStream(50, k)
        env = sample_environment(spec, (-60, 2), 0, s)
        f = sample_boundary(spec, np.log(0.6 / 0.4), (-60, 2), s)
        _, J = evolve_sj(f, env.edges[:, 0])
        Js.append(J[60])
    assert chisq_discrete(Js, lambda k: geom_pmf(k, 5 / 7))[1] > 0.01


def test_iterate_vs_direct_sj():
    spec = ModelSpec("sj", p=0.3)
    for k in range(200):
        s = RngStream(51, k)
        env = sample_environment(spec, (-20, 6), 4, s)
        f = sample_boundary(spec, np.log(0.6 / 0.4), (-20, 6), s)
        ys = np.arange(-3, 7)
        assert np.array_equal(iterate_height(env, f, 4, ys), height(env, f, 4, ys).h)


def test_fluid_basics():
    nu = PointSet([1.0], (0, 2))
    st = fluid_evolve(nu, PlanarPointSet([0.5], [0.3], (0, 2, 0, 1)), 1.0)
    assert st.positions.points.tolist() == [0.5]
    st = fluid_evolve(nu, PlanarPointSet([], [], (0, 2, 0, 1)), 1.0)
    assert st.positions == nu
    st = fluid_evolve(nu, PlanarPointSet([1.5], [0.3], (0, 2, 0, 1)), 1.0)
    assert st.underflow


def test_fluid_order_and_eta_identity():
    n_conc = 0
    for k in range(300):
        s = RngStream(52, k)
        X = sample_poisson_2d(1.0, (-15, 12, 0, 5), s)
        f = sample_boundary("hammersley", 0.0, (-15, 12), s)
        st = fluid_evolve(f.points, X, 5.0)
        assert st.order_preserved()
        for y in s.uniform(-3, 5, 3):
            c = eta_identity_check(st, X, y)
            if c.conclusive:
                n_conc += 1
                assert c.ok, (k, y, c)
    assert n_conc > 500


def test_coupled_exit_monotone():
    for k in range(300):
        s = RngStream(53, k)
        fam = coupled_family(0.6, (-25, 10), s)
        X = sample_poisson_2d(1.0, (-25, 10, 0, 6), s)
        a, b = 0.3, 0.1
        hi = exit_point(X, boundary_from_family(fam, "hammersley", a, b), 6.0, [3.0])
        lo_ = exit_point(X, boundary_from_family(fam, "hammersley", a - 0.4, b - 0.3), 6.0, [3.0])
        assert lo_[0] <= hi[0]
        fld = bernoulli_field(-30, 8, s)
        spec = ModelSpec("sj", p=0.3)
        env = sample_environment(spec, (-30, 8), 3, s)
        z1 = exit_point(env, boundary_from_field(fld, spec, 0.6, 0.4), 3, [5])
        z0 = exit_point(env, boundary_from_field(fld, spec, 0.2, 0.0), 3, [5])
        assert z0[0] <= z1[0]


def test_height_profile_csv():
    s = RngStream(54)
    env = sample_environment("exponential", (-20, 5), 3, s)
    f = sample_boundary("exponential", 2.0, (-20, 5), s)
    lines = height(env, f, 3, [0, 1, 2]).to_csv().splitlines()
    assert lines[0] == "y,h,Z,boundary_active" and len(lines) == 4
