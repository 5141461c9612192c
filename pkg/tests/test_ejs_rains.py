import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from lppsh import ejs_rains as E
from lppsh.processes import CoupledPointFamily, ParameterError, PlanarPointSet, PointSet
from lppsh.stationary import boundary_from_family, exit_point

SIZES = {
    "hammersley": dict(t=3.0, y=2.0),
    "lines": dict(n=2, y=3.0),
    "sj": dict(n=2, m=6, p=0.3),
}
PARAM_RANGE = {"hammersley": (-1.5, 1.5), "lines": (0.2, 2.0), "sj": (-0.5, 2.5)}


def params(model):
    lo, hi = PARAM_RANGE[model]
    return st.floats(lo, hi, allow_nan=False)


# ---- worked values

def test_hammersley_values():
    s = E.ham_stats(0.0, 0.0, 1.0, 1.0)
    assert (s.zeta, s.gamma, s.M, s.R) == (0.0, 2.0, 2.0, 0.0)
    s = E.ham_stats(0.0, 0.0, 4.0, 1.0)
    assert s.zeta == pytest.approx(np.log(2)) and s.gamma == pytest.approx(4.0)
    r = E.ham_stats(np.log(1.1), np.log(0.9), 5.0, 5.0).R
    assert r == pytest.approx(1.0 + (1 / 0.9 - 1 / 1.1) * 5, rel=1e-14)
    assert r == pytest.approx(2.0101, abs=1e-4)


def test_lines_values():
    s = E.lines_stats(np.log(2), np.log(2), 0, 1.0)
    assert s.zeta == pytest.approx(np.log(2)) and s.gamma == pytest.approx(3.0)
    assert s.M == pytest.approx(3.0)


def test_sj_values():
    s = E.sj_stats(np.log(3), np.log(3), 0, 4, 0.5)
    assert s.zeta == pytest.approx(np.log(3)) and s.gamma == pytest.approx(3.5)
    assert s.M == pytest.approx(3.5)
    assert E.sj_stats(1.0, 1.0, 3, 1, 0.5).gamma == 1.0
    assert E.sj_stats(1.0, 1.0, 3, 1, 0.5).zeta == np.inf


def test_admissibility_guards():
    with pytest.raises(ParameterError, match="t > 0"):
        E.ham_stats(0, 0, 0.0, 1.0)
    with pytest.raises(ParameterError, match="a, b > 0"):
        E.lines_stats(0.5, 0.0, 1, 1.0)
    with pytest.raises(ParameterError, match="-log"):
        E.sj_stats(1.0, np.log(0.3 / 0.7), 1, 4, 0.3)


# ---- identities of the closed forms

@pytest.mark.parametrize("model", list(SIZES))
@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_R_antisymmetric(model, data):
    a, b = data.draw(params(model)), data.draw(params(model))
    sz = SIZES[model]
    assert E.R_of(model, a, a, sz) == 0.0
    assert E.R_of(model, a, b, sz) == -E.R_of(model, b, a, sz)


@pytest.mark.parametrize("model", list(SIZES))
@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_dR_da_is_M(model, data):
    a, b = data.draw(params(model)), data.draw(params(model))
    sz = SIZES[model]
    h = 1e-5
    fd = (E.R_of(model, a + h, b, sz) - E.R_of(model, a - h, b, sz)) / (2 * h)
    assert fd == pytest.approx(E.M_of(model, a, sz), abs=1e-6)


def test_lines_derivative_point():
    sz = dict(n=2, y=3.0)
    a, b, h = np.log(2), 0.5, 1e-5
    fd = (E.lines_R(a + h, b, 2, 3.0) - E.lines_R(a - h, b, 2, 3.0)) / (2 * h)
    assert fd == pytest.approx(E.M_of("lines", a, sz), abs=1e-6)


@pytest.mark.parametrize("model", list(SIZES))
def test_R_is_integral_of_M(model):
    sz = SIZES[model]
    lo, hi = PARAM_RANGE[model]
    for a, b in [(lo, hi), (hi, 0.5 * (lo + hi)), (0.3 * lo + 0.7 * hi, lo)]:
        val, _ = integrate.quad(lambda u: E.M_of(model, u, sz), b, a, epsabs=1e-12)
        assert E.R_of(model, a, b, sz) == pytest.approx(val, rel=1e-9, abs=1e-10)


@pytest.mark.parametrize("model,sz", [("hammersley", dict(t=3.0, y=2.0)),
                                      ("hammersley", dict(t=0.2, y=7.0)),
                                      ("lines", dict(n=2, y=3.0)), ("lines", dict(n=9, y=0.5)),
                                      ("sj", dict(n=2, m=6, p=0.3)), ("sj", dict(n=5, m=40, p=0.6))])
def test_zeta_gamma_minimize_M(model, sz):
    lo = {"hammersley": -10.0, "lines": 1e-3, "sj": E.sj_floor(sz.get("p", 0.5)) + 1e-4}[model]
    res = optimize.minimize_scalar(lambda u: E.M_of(model, u, sz), bounds=(lo, 10.0),
                                   method="bounded", options={"xatol": 1e-10})
    st_ = E.stats_for(model, res.x, res.x, sz)
    assert st_.zeta == pytest.approx(res.x, abs=1e-5)
    assert st_.gamma == pytest.approx(res.fun, rel=1e-10)
    grid = np.linspace(lo + 1e-3, 6.0, 400)
    assert np.all(E.M_of(model, grid, sz) >= st_.gamma - 1e-12)
    assert E.M_of(model, st_.zeta, sz) == pytest.approx(st_.gamma, rel=1e-12)


def test_sj_degenerate_branch_infimum():
    sz = dict(n=3, m=1, p=0.5)
    grid = np.linspace(0.1, 40, 2000)
    M = E.M_of("sj", grid, sz)
    assert np.all(np.diff(M) <= 1e-15) and M[0] > M[100] > M[500] and M[-1] == pytest.approx(1.0, abs=1e-6)


# ---- cubic coefficient

@pytest.mark.parametrize("model,sz", [("hammersley", dict(t=3.0, y=2.0)), ("lines", dict(n=2, y=3.0)),
                                      ("sj", dict(n=2, m=6, p=0.3)), ("sj", dict(n=4, m=9, p=0.2))])
def test_cubic_coefficient_is_second_derivative(model, sz):
    z = E.stats_for(model, *(2 * [E._any_admissible(model, sz)]), sz).zeta
    h = 1e-4
    d2 = (E.M_of(model, z + h, sz) - 2 * E.M_of(model, z, sz) + E.M_of(model, z - h, sz)) / h ** 2
    assert E.cubic_coefficient(model, sz) == pytest.approx(d2 / 6, rel=1e-5)


def test_alternative_coefficients_compared():
    # agree for lines and for Hammersley on the diagonal; disagree otherwise
    for model, sz in [("lines", dict(n=2, y=3.0)), ("hammersley", dict(t=5.0, y=5.0))]:
        assert E.cubic_coefficient_alt(model, sz) == pytest.approx(E.cubic_coefficient(model, sz))
    for model, sz in [("hammersley", dict(t=4.0, y=1.0)), ("sj", dict(n=2, m=6, p=0.3))]:
        assert E.cubic_coefficient_alt(model, sz) != pytest.approx(E.cubic_coefficient(model, sz), rel=0.05)


@pytest.mark.parametrize("model,sz", [("hammersley", dict(t=100.0, y=100.0)),
                                      ("hammersley", dict(t=40.0, y=10.0)),
                                      ("lines", dict(n=2, y=4.0)), ("sj", dict(n=2, m=6, p=0.3))])
def test_taylor_remainder_stable(model, sz):
    rep = E.taylor_bound_check(model, sz)
    assert rep.passed, rep.extra


def test_taylor_single_direction():
    sz = dict(t=100.0, y=100.0)
    rep = E.taylor_bound_check("hammersley", sz, directions=((1, 0),))
    assert rep.passed
    assert E.remainder("hammersley", 0.0, 0.0, sz) == 0.0


def test_taylor_detects_wrong_coefficient():
    sz = dict(n=2, m=6, p=0.3)
    rep = E.taylor_bound_check("sj", sz, coef=E.cubic_coefficient_alt("sj", sz))
    assert not rep.passed


def test_cubic_term_odd():
    sz = SIZES["lines"]
    z = E.lines_stats(1, 1, **sz).zeta
    c = E.cubic_coefficient("lines", sz)
    for a, b in [(z + 0.1, z - 0.03), (z - 0.2, z + 0.05)]:
        assert c * ((a - z) ** 3 - (b - z) ** 3) == -c * ((b - z) ** 3 - (a - z) ** 3)


def test_taylor_refuses_outside_box():
    with pytest.raises(ParameterError, match="expansion box"):
        E.taylor_bound_check("hammersley", dict(t=1000.0, y=1.0), eps=0.1)


# ---- Monte Carlo identities

def test_mgf_equal_parameters_exact():
    rep = E.mgf_verify("hammersley", 0.2, 0.2, dict(t=2.0, y=2.0), replicas=1000)
    assert rep.passed and rep.sub_tests[0].statistic == 0.0


@pytest.mark.parametrize("model,a,b,sz", [
    ("hammersley", np.log(1.2), np.log(0.9), dict(t=3.0, y=3.0)),
    ("lines", np.log(2.5), np.log(2.0), dict(n=1, y=2.0)),
    ("sj", 0.8, 0.3, dict(n=1, m=4, p=0.3)),
])
def test_mgf_small(model, a, b, sz):
    rep = E.mgf_verify(model, a, b, sz, replicas=8000, seed=3)
    assert rep.passed, (rep.sub_tests, rep.extra)
    assert rep.extra["ess"] > 1000


def test_mgf_truncation_abort():
    rep = E.mgf_verify("hammersley", 0.5, 0.0, dict(t=6.0, y=1.0), replicas=1000, w_pad=0.5)
    assert not rep.passed and "widen" in rep.extra["advice"]


def test_mgf_replica_floor():
    with pytest.raises(ParameterError):
        E.mgf_verify("hammersley", 0.1, 0.0, dict(t=1.0, y=1.0), replicas=10)


def test_reweight_identity_weights():
    assert np.all(E.poisson_weight(0.3, 0.3, 4.0, np.arange(10)) == 1.0)
    assert np.all(E.bernoulli_weight(0.4, 0.4, 7, np.arange(8)) == 1.0)


def test_weights_are_likelihood_ratios():
    from scipy import stats
    k = np.arange(30)
    lr = stats.poisson.pmf(k, 2 * 4) / stats.poisson.pmf(k, 1 * 4)
    assert np.allclose(E.poisson_weight(np.log(2), 0.0, 4.0, k), lr)
    k = np.arange(21)
    lr = stats.binom.pmf(k, 20, 0.7) / stats.binom.pmf(k, 20, 0.5)
    assert np.allclose(E.bernoulli_weight(0.7, 0.5, 20, k), lr)


def test_reweight_poisson():
    rep = E.reweight_check("poisson", np.log(2), 0.0, 4.0, replicas=20000)
    assert rep.passed and rep.extra["target_value"] == pytest.approx(8.0)


def test_reweight_bernoulli():
    rep = E.reweight_check("bernoulli", 0.7, 0.5, 20, replicas=20000)
    assert rep.passed and rep.sub_tests[0].statistic == pytest.approx(0.7, abs=0.02)


def test_reweight_degenerate():
    rep = E.reweight_check("poisson", np.log(40.0), 0.0, 10.0, replicas=2000)
    assert not rep.passed and rep.sub_tests[0].name == "ess"


# ---- exit tails

def test_exit_tail_table_small():
    tb = E.exit_tail_estimate("hammersley", Ns=(60,), Ms=(0.0, 0.5, 1.0, 2.0), replicas=80, seed=2)
    p0 = [r.p_hat for r in tb.rows if r.M == 0.0]
    assert p0 == [1.0]
    assert tb.monotone
    assert tb.to_csv().splitlines()[0] == "model,N,M,p_hat,ci_lo,ci_hi"
    assert all(r.ci_lo <= r.p_hat <= r.ci_hi for r in tb.rows)


def test_exit_tail_rejects_sj_at_critical_density():
    with pytest.raises(ParameterError, match="rho > p/\\(1-p\\)"):
        E.exit_tail_estimate("sj", rho=0.3 / 0.7, Ns=(50,), replicas=5)


# ---- coupled exit monotonicity

def test_literal_direction_is_violated():
    """Smaller parameters never move the exit right; the reverse ordering fails.

    One boundary point at -1 survives thinning at a = 0 but not at a' = log 1/4,
    with an empty environment.  The exit is -1 at (a, b) and the truncation
    point at (a', b').
    """
    fam = CoupledPointFamily(PointSet(np.array([-1.0]), (-5.0, 1.0)), np.array([0.5]), 0.0)
    X = PlanarPointSet(np.empty(0), np.empty(0), (-5.0, 1.0, 0.0, 1.0))
    a, b = 0.0, 0.0
    a2, b2 = np.log(0.25), np.log(0.25)
    z = exit_point(X, boundary_from_family(fam, "hammersley", a, b), 1.0, [0.5])[0]
    z2 = exit_point(X, boundary_from_family(fam, "hammersley", a2, b2), 1.0, [0.5])[0]
    assert (z, z2) == (-1.0, -5.0)
    assert z2 <= z          # implemented ordering
    assert not z <= z2      # literal ordering with (a', b') <= (a, b)
