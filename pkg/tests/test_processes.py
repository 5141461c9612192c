import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lppsh.processes import (CoupledBernoulliField, ParameterError, DomainError, PointSet,
                             bernoulli_field, coupled_family, couple_bernoulli,
                             couple_intensities, nu_eval, sample_poisson_1d,
                             sample_poisson_2d)
from lppsh.rng import RngStream, stream_id


def test_zero_length_window_is_empty(stream):
    assert len(sample_poisson_1d(1.0, (0.0, 0.0), stream)) == 0


def test_bad_parameters(stream):
    with pytest.raises(ParameterError):
        sample_poisson_1d(0.0, (0, 1), stream)
    with pytest.raises(ParameterError):
        sample_poisson_1d(1.0, (1, 0), stream)


def test_poisson_1d_mean_and_dispersion():
    counts = np.array([len(sample_poisson_1d(2.0, (0, 50), RngStream(3, k))) for k in range(10_000)])
    assert abs(counts.mean() - 100) < 3 * np.sqrt(100 / counts.size)
    assert 0.95 <= counts.var() / counts.mean() <= 1.05


def test_poisson_1d_unit_mean():
    counts = [len(sample_poisson_1d(1.0, (0, 10), RngStream(4, k))) for k in range(4000)]
    assert abs(np.mean(counts) - 10) < 3 * np.sqrt(10 / 4000)


def test_poisson_2d_counts_and_distinct():
    c1 = [len(sample_poisson_2d(1.0, (0, 1, 0, 1), RngStream(5, k))) for k in range(4000)]
    c16 = [len(sample_poisson_2d(1.0, (0, 4, 0, 4), RngStream(6, k))) for k in range(2000)]
    assert abs(np.mean(c1) - 1) < 3 * np.sqrt(1 / 4000)
    assert abs(np.mean(c16) - 16) < 3 * np.sqrt(16 / 2000)
    X = sample_poisson_2d(1.0, (0, 10, 0, 10), RngStream(7))
    assert np.unique(X.x).size == len(X) and np.unique(X.t).size == len(X)
    assert np.all(np.diff(X.x) > 0)


def test_uniform_locations_ks():
    from scipy import stats
    pts = np.concatenate([sample_poisson_1d(1.0, (-3, 5), RngStream(8, k)).points for k in range(500)])
    assert stats.kstest((pts + 3) / 8, "uniform").pvalue > 1e-3


def test_coupling_extremes(stream):
    fam = coupled_family(1.0, (-10, 10), stream)
    assert couple_intensities(fam, 1.0, 1.0) == fam.base
    assert len(couple_intensities(fam, 1.0 - 60, 1.0 - 60)) == 0
    with pytest.raises(ParameterError):
        couple_intensities(fam, 1.5, 0.0)


def test_coupling_monotone_subset():
    for k in range(1000):
        s = RngStream(9, k)
        fam = coupled_family(0.5, (-5, 5), s)
        a, b = s.uniform(-2, 0.5, 2)
        a2, b2 = a - s.uniform(0, 1), b - s.uniform(0, 1)
        big = set(couple_intensities(fam, a, b).points.tolist())
        small = set(couple_intensities(fam, a2, b2).points.tolist())
        assert small <= big


def test_thinned_sides_poisson_and_independent():
    neg, pos = [], []
    for k in range(4000):
        fam = coupled_family(1.0, (-4, 4), RngStream(10, k))
        p = couple_intensities(fam, np.log(2), 0.0).points
        neg.append((p < 0).sum())
        pos.append((p >= 0).sum())
    neg, pos = np.array(neg), np.array(pos)
    assert abs(neg.mean() - 8) < 3 * np.sqrt(8 / 4000)
    assert abs(pos.mean() - 4) < 3 * np.sqrt(4 / 4000)
    assert 0.9 < neg.var() / neg.mean() < 1.1 and 0.9 < pos.var() / pos.mean() < 1.1
    assert abs(np.corrcoef(neg, pos)[0, 1]) < 3 / np.sqrt(4000)


def test_couple_bernoulli():
    f = bernoulli_field(-500, 499, RngStream(11))
    assert couple_bernoulli(f, -60).sum() == 0
    half = couple_bernoulli(f, 0.0)
    assert abs(half.mean() - 0.5) < 3 * 0.5 / np.sqrt(1000)
    assert np.all(couple_bernoulli(f, -0.3) <= couple_bernoulli(f, 0.2))
    two = couple_bernoulli(f, -60, 60)
    assert np.all(two[f.sites >= 1] == 1) and np.all(two[f.sites <= 0] == 0)


def test_nu_eval_examples():
    p = PointSet([-1.5, 0.5, 2.0], (-3, 3))
    assert nu_eval(p, 0) == 0
    assert nu_eval(p, 1) == 1
    assert nu_eval(p, -2) == -1
    assert nu_eval(p, -1.6) == -1 and nu_eval(p, -1.5) == 0
    with pytest.raises(DomainError):
        nu_eval(p, 4)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), max_size=30, unique=True),
       st.floats(-10, 10), st.floats(-10, 10))
def test_nu_increment_identity(pts, x, y):
    p = PointSet(sorted(pts), (-10, 10))
    x, y = min(x, y), max(x, y)
    assert nu_eval(p, y) - nu_eval(p, x) == p.count(x, y)
    assert nu_eval(p, y) >= nu_eval(p, x)


def test_pointset_invariants():
    with pytest.raises(ParameterError):
        PointSet([1.0, 1.0], (0, 2))
    with pytest.raises(ParameterError):
        PointSet([3.0], (0, 2))


def test_serialization_roundtrip(stream):
    p = sample_poisson_1d(1.0, (-2, 7), stream)
    assert PointSet.from_json(p.to_json()) == p
    assert PointSet.from_csv(p.to_csv(), p.window) == p
    assert json.loads(p.to_json())["window"] == [-2.0, 7.0]
    assert p.to_csv().splitlines()[0] == "x"


def test_reproducible_and_distinct_streams():
    a = sample_poisson_1d(1.0, (0, 20), RngStream(1, 5))
    b = sample_poisson_1d(1.0, (0, 20), RngStream(1, 5))
    c = sample_poisson_1d(1.0, (0, 20), RngStream(1, 6))
    assert a == b and a != c
    assert stream_id("queues", 3) != stream_id("stationary", 3)
