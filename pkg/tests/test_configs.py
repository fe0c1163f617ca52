import numpy as np
import pytest

from clusterba.configs import (LEFT, RIGHT, RIGHT_HALF_LINE, STILL, TWO_SIDED,
                               ConfigError, Configuration, ExperimentParams,
                               ExponentialSpacing, UniformSpacing, from_text,
                               parse_spacing, sample_config, sub_config,
                               to_text)
from clusterba.laws import Delta, Geometric


def params(**kw):
    base = dict(p=0.3, law=Delta(1), n=50, seed=123)
    base.update(kw)
    return ExperimentParams(**base)


def test_parse_spacing():
    assert parse_spacing("exp") == ExponentialSpacing(1.0)
    assert parse_spacing("exp:2.5") == ExponentialSpacing(2.5)
    assert parse_spacing("uniform") == UniformSpacing(0.0, 1.0)
    assert parse_spacing("uniform:0.5,2") == UniformSpacing(0.5, 2.0)
    with pytest.raises(ConfigError):
        parse_spacing("normal:1")
    with pytest.raises(ConfigError):
        parse_spacing("uniform:3,1")


def test_determinism():
    p = params(n=500)
    a = sample_config(p, 7)
    b = sample_config(p, 7)
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.velocities, b.velocities)
    assert np.array_equal(a.sizes, b.sizes)
    c = sample_config(p, 8)
    assert not np.array_equal(a.positions, c.positions)


def test_species_frequencies():
    n = 10 ** 6
    cfg = sample_config(params(p=0.0, n=n), 0)
    frac_left = np.mean(cfg.velocities == LEFT)
    assert abs(frac_left - 0.5) < 3 * 0.5 / np.sqrt(n)

    cfg = sample_config(params(p=0.25, n=n), 1)
    frac_cluster = np.mean(cfg.velocities == STILL)
    assert abs(frac_cluster - 0.25) < 3 * np.sqrt(0.25 * 0.75 / n)

    cfg = sample_config(params(p=1.0, n=1000), 2)
    assert np.all(cfg.velocities == STILL)


def test_positions_increasing_and_sided():
    cfg = sample_config(params(n=2000), 3)
    assert np.all(np.diff(cfg.positions) > 0)
    assert cfg.positions[0] > cfg.origin

    two = sample_config(params(n=2000, side=TWO_SIDED), 3)
    assert np.all(np.diff(two.positions) > 0)
    assert two.positions[0] < 0 < two.positions[-1]


def test_cluster_sizes_follow_law():
    cfg = sample_config(params(p=0.5, law=Geometric(0.5), n=10 ** 5), 4)
    sizes = cfg.sizes[cfg.velocities == STILL]
    assert sizes.min() >= 1
    assert abs(sizes.mean() - 2.0) < 0.1


def test_sub_config():
    cfg = sample_config(params(n=30), 5)
    assert sub_config(cfg, 1, 30).positions.shape == (30,)
    one = sub_config(cfg, 2, 2)
    assert one.n == 1
    assert one.positions[0] == cfg.positions[1]
    # nested prefixes share the realization
    a, b = sub_config(cfg, 1, 10), sub_config(cfg, 1, 20)
    assert np.array_equal(a.positions, b.positions[:10])
    with pytest.raises(IndexError):
        sub_config(cfg, 0, 5)
    with pytest.raises(IndexError):
        sub_config(cfg, 5, 31)


def test_text_round_trip():
    cfg = sample_config(params(p=0.4, law=Geometric(0.5), n=40), 6)
    back = from_text(to_text(cfg))
    assert back.side == cfg.side
    assert np.array_equal(back.positions, cfg.positions)
    assert np.array_equal(back.velocities, cfg.velocities)
    assert np.array_equal(back.sizes, cfg.sizes)


def test_from_text_errors():
    with pytest.raises(ConfigError):
        from_text("1.0 upward\n")
    with pytest.raises(ConfigError):
        from_text("1.0 cluster\n")  # missing multiplicity
    with pytest.raises(ConfigError):
        from_text("2.0 left\n1.0 right\n")  # order


def test_configuration_validation():
    with pytest.raises(ConfigError):
        Configuration(np.array([1.0, 1.0]), np.array([1, -1]),
                      np.array([0, 0]))
    with pytest.raises(ConfigError):
        Configuration(np.array([-1.0]), np.array([1]), np.array([0]),
                      side=RIGHT_HALF_LINE)
    # fine on the two-sided line
    Configuration(np.array([-1.0]), np.array([1]), np.array([0]),
                  side=TWO_SIDED)


def test_params_validation():
    with pytest.raises(ConfigError):
        params(p=1.5)
    with pytest.raises(ConfigError):
        params(n=0)
    with pytest.raises(ConfigError):
        params(side="middle")


def test_species_labels():
    cfg = from_text("1.0 left\n2.0 right\n3.0 cluster 4\n")
    assert cfg.species(1) == "left"
    assert cfg.species(2) == "right"
    assert cfg.species(3) == "cluster(4)"
