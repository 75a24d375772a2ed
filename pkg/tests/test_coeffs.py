import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from szfluct.coeffs import (
    CoefficientDistribution,
    excess_kurtosis,
    moment,
    parse_distribution,
    rng_stream,
    sample,
)

GAUSS = CoefficientDistribution.gaussian()
RADE = CoefficientDistribution.rademacher()
UNIF = CoefficientDistribution.uniform()
# support {0, +-sqrt(2)} with P(0) = 1/2: variance 1, m4 = 2
THREE_POINT = CoefficientDistribution.discrete([(0.0, 0.5), (math.sqrt(2.0), 0.5)])
ALL = [GAUSS, RADE, UNIF, THREE_POINT]


def raw_moment(dist, k):
    """Even moments of any order, independent of coeffs.moment."""
    if dist.kind == "gaussian":
        return float(math.prod(range(k - 1, 0, -2))) if k else 1.0
    if dist.kind == "rademacher":
        return 1.0
    if dist.kind == "uniform_pm_sqrt3":
        c = math.sqrt(3.0)
        return c**k / (k + 1)
    return math.fsum(p * v**k for v, p in zip(dist.points, dist.probs))


def test_exact_moments():
    assert moment(GAUSS, 4) == 3
    assert moment(GAUSS, 6) == 15
    assert moment(RADE, 4) == 1 and moment(RADE, 6) == 1
    assert moment(UNIF, 4) == pytest.approx(9 / 5, rel=1e-15)
    assert moment(UNIF, 6) == pytest.approx(27 / 7, rel=1e-15)
    assert moment(THREE_POINT, 4) == pytest.approx(2.0, rel=1e-15)


def test_excess_kurtosis():
    assert excess_kurtosis(GAUSS) == 0
    assert excess_kurtosis(RADE) == -2
    assert excess_kurtosis(UNIF) == pytest.approx(-6 / 5, abs=1e-15)


def test_unsupported_order():
    with pytest.raises(ValueError):
        moment(GAUSS, 3)


@pytest.mark.parametrize("dist", ALL, ids=lambda d: d.label)
def test_moment_ordering(dist):
    assert moment(dist, 2) == pytest.approx(1.0, abs=1e-12)
    assert 1.0 <= dist.m4 <= dist.m6
    assert math.isfinite(dist.m6)


def test_rademacher_support():
    assert set(sample(RADE, 4, 99).tolist()) <= {-1.0, 1.0}


@pytest.mark.parametrize("dist", ALL, ids=lambda d: d.label)
def test_empirical_moments_within_five_se(dist):
    N = 1_000_000
    x = sample(dist, N, 2024)
    for k in (2, 4, 6):
        se = math.sqrt((raw_moment(dist, 2 * k) - raw_moment(dist, k) ** 2) / N)
        assert abs(np.mean(x**k) - moment(dist, k)) <= 5 * se + 1e-15
    for k in (1, 3, 5):
        se = math.sqrt(raw_moment(dist, 2 * k) / N)
        assert abs(np.mean(x**k)) <= 5 * se


def test_gaussian_second_moment_lln():
    x = sample(GAUSS, 1_000_000, 5)
    assert abs(np.mean(x * x) - 1.0) < 5e-3


def test_uniform_fourth_moment():
    x = sample(UNIF, 1_000_000, 6)
    assert np.mean(x**4) == pytest.approx(9 / 5, rel=0.01)


@given(st.integers(0, 2**64 - 1), st.integers(1, 50))
@settings(max_examples=30, deadline=None)
def test_sampling_is_deterministic(seed, count):
    for dist in ALL:
        assert np.array_equal(sample(dist, count, seed), sample(dist, count, seed))


def test_streams_differ_by_path():
    a = rng_stream(1, 0).standard_normal(8)
    b = rng_stream(1, 1).standard_normal(8)
    c = rng_stream(2, 0).standard_normal(8)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)


def test_count_must_be_positive():
    with pytest.raises(ValueError):
        sample(GAUSS, 0, 1)


def test_discrete_rejects_wrong_variance():
    with pytest.raises(ValueError):
        CoefficientDistribution.discrete([(2.0, 1.0)])


def test_discrete_normalises_probabilities():
    d = CoefficientDistribution.discrete([(1.0, 3.0)])
    assert d.points == (-1.0, 1.0)
    assert d.probs == (0.5, 0.5)


def test_discrete_rejects_asymmetric_support():
    with pytest.raises(ValueError):
        CoefficientDistribution("discrete_symmetric", (-1.0, 1.0), (0.3, 0.7))


def test_parse_distribution():
    assert parse_distribution("gaussian") == GAUSS
    assert parse_distribution("rademacher") == RADE
    assert parse_distribution("uniform") == UNIF
    d = parse_distribution("discrete:0:0.5,1.4142135623730951:0.5")
    assert d.m4 == pytest.approx(2.0)
    with pytest.raises(ValueError):
        parse_distribution("cauchy")
    with pytest.raises(ValueError):
        parse_distribution("discrete:1")


@pytest.mark.parametrize("dist", ALL, ids=lambda d: d.label)
def test_label_round_trip(dist):
    assert parse_distribution(dist.label) == dist
