import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterba.laws import (CustomPmf, Delta, Geometric, LawError, PowerLaw,
                            TwoPoint, parse_law)

ALL_LAWS = [Delta(1), Delta(3), Geometric(0.5), Geometric(0.2), TwoPoint(5),
            CustomPmf((0.3, 0.4, 0.3)), PowerLaw(2.5, 50)]

T_GRID = [0.0, 0.25, 0.5, 0.75, 1.0]


def test_pgf_values():
    assert Delta(1).pgf(0.5) == 0.5
    # geometric series sum: beta t / (1 - (1-beta) t)
    assert Geometric(0.5).pgf(0.5) == pytest.approx(1.0 / 3.0)
    for law in ALL_LAWS:
        assert law.pgf(1.0) == pytest.approx(1.0, abs=1e-12)


def test_pgf_domain():
    for bad in (-0.1, 1.5):
        with pytest.raises(ValueError):
            Delta(1).pgf(bad)
        with pytest.raises(ValueError):
            Geometric(0.5).pgf_d1(bad)


def test_derivatives_at_one():
    assert Delta(1).pgf_d1(0.3) == 1.0
    assert Delta(1).pgf_d2(0.9) == 0.0
    assert Geometric(0.5).pgf_d1(1.0) == pytest.approx(2.0)
    assert TwoPoint(5).pgf_d1(1.0) == pytest.approx(1.0)
    assert TwoPoint(5).pgf_d2(1.0) == pytest.approx(4.0)


def test_derivatives_match_finite_differences():
    h = 1e-6
    for law in ALL_LAWS:
        for t in T_GRID:
            lo, hi = max(0.0, t - h), min(1.0, t + h)
            fd1 = (law.pgf(hi) - law.pgf(lo)) / (hi - lo)
            assert law.pgf_d1(t) == pytest.approx(fd1, rel=1e-5, abs=1e-7)
            fd2 = (law.pgf_d1(hi) - law.pgf_d1(lo)) / (hi - lo)
            assert law.pgf_d2(t) == pytest.approx(fd2, rel=1e-5, abs=1e-5)


def test_moments():
    assert Delta(1).moments() == (1.0, 0.0)
    mean, var = Geometric(0.5).moments()
    assert (mean, var) == (pytest.approx(2.0), pytest.approx(2.0))
    mean, var = TwoPoint(5).moments()
    assert (mean, var) == (pytest.approx(1.0), pytest.approx(4.0))


def test_pgf_monotone_convex():
    grid = np.linspace(0, 1, 21)
    for law in ALL_LAWS:
        vals = np.array([law.pgf(float(t)) for t in grid])
        assert np.all(np.diff(vals) >= -1e-12)
        assert np.all(np.diff(vals, 2) >= -1e-10)


def test_sampling_clt():
    rng = np.random.default_rng(1234)
    n = 10 ** 6

    draws = Geometric(0.5).sample(rng, n)
    # mean 2, var 2: 3 sigma band
    assert abs(draws.mean() - 2.0) < 3 * math.sqrt(2.0 / n)

    draws = CustomPmf((0.5, 0.5)).sample(rng, n)
    frac0 = np.mean(draws == 0)
    assert abs(frac0 - 0.5) < 3 * 0.5 / math.sqrt(n)

    assert np.all(Delta(3).sample(rng, 100) == 3)


def test_moments_match_samples():
    rng = np.random.default_rng(99)
    n = 10 ** 6
    for law in (TwoPoint(5), PowerLaw(2.5, 50), CustomPmf((0.3, 0.4, 0.3))):
        mean, var = law.moments()
        draws = law.sample(rng, n)
        se_mean = math.sqrt(var / n)
        assert abs(draws.mean() - mean) < 4 * se_mean


def test_two_point_pmf():
    law = TwoPoint(5)
    assert law.pmf(0) == pytest.approx(0.8)
    assert law.pmf(5) == pytest.approx(0.2)
    assert law.pmf(3) == 0.0


def test_custom_pmf_normalization():
    law = CustomPmf((0.25, 0.25, 0.5 + 1e-10))
    assert law.pgf(1.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(LawError):
        CustomPmf((0.5, 0.1))
    with pytest.raises(LawError):
        CustomPmf((0.5, -0.5, 1.0))


def test_power_law():
    law = PowerLaw(2.5, 10)
    w = np.array([law.pmf(k) for k in range(11)])
    assert w[0] == 0.0
    assert w.sum() == pytest.approx(1.0)
    assert w[1] / w[2] == pytest.approx(2 ** 2.5)
    with pytest.raises(LawError):
        PowerLaw(1.0, 10)


def test_parse_law_grammar():
    assert parse_law("delta:3") == Delta(3)
    assert parse_law("geom:0.5") == Geometric(0.5)
    assert parse_law("twopoint:5") == TwoPoint(5)
    assert parse_law("pmf:0.3,0.4,0.3") == CustomPmf((0.3, 0.4, 0.3))
    assert parse_law("powerlaw:2.5,100") == PowerLaw(2.5, 100)
    for bad in ("delta", "geom:1.5", "nope:1", "pmf:0.2"):
        with pytest.raises(LawError):
            parse_law(bad)


def test_spec_round_trip():
    for law in ALL_LAWS:
        assert parse_law(law.spec) == law


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.001, 1.0), min_size=1, max_size=8))
def test_custom_pmf_properties(raw):
    total = sum(raw)
    law = CustomPmf(tuple(w / total for w in raw))
    assert law.pgf(1.0) == pytest.approx(1.0, abs=1e-9)
    assert 0.0 <= law.pgf(0.5) <= 1.0
    mean, var = law.moments()
    assert mean >= 0.0 and var >= -1e-12
