import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dissimbatch import dataset as D
from dissimbatch import rng
from dissimbatch import theory as T


def cfg(**kw):
    base = dict(n=100, d=2, r_n=0.1, p0=0.1, categorical=D.CategoricalSpec("uniform", 4), seed=7)
    base.update(kw)
    return D.GeneratorConfig(**base)


def test_p0_one_means_all_uncorrupted_under_uncorrupted_convention():
    ds = D.generate(cfg(n=5, p0=1.0, p0_means="prob_uncorrupted"))
    assert not ds.corrupted.any()


def test_p0_zero_means_all_corrupted_under_uncorrupted_convention():
    ds = D.generate(cfg(n=5, p0=0.0, p0_means="prob_uncorrupted"))
    assert ds.corrupted.all()
    assert np.isnan(ds.x).all()


def test_default_convention_treats_p0_as_corruption_probability():
    assert not D.generate(cfg(p0=0.0)).corrupted.any()
    assert D.generate(cfg(p0=1.0)).corrupted.all()


def test_generate_is_deterministic():
    assert D.generate(cfg()) == D.generate(cfg())
    assert D.generate(cfg()) != D.generate(cfg(seed=8))


def test_prefix_stable_under_n_extension():
    small = D.generate(cfg(n=50))
    big = D.generate(cfg(n=200))
    assert big.subset(np.arange(50)) == small


def test_category_frequencies_within_chernoff_band():
    n = 10**4
    ds = D.generate(cfg(n=n))
    freq = np.bincount(ds.y, minlength=4) / n
    # 3 sigma of a binomial proportion
    sigma = np.sqrt(0.25 * 0.75 / n)
    assert np.all(np.abs(freq - 0.25) <= 3 * sigma)
    # the Chernoff tail at that deviation is small
    gamma = 3 * sigma / 0.25
    assert T.chernoff_tail(n * 0.25, min(gamma, 0.5)) < 1


def test_summary_uniform_ten_categories():
    s = D.summary(D.generate(cfg(n=10**5, categorical=D.CategoricalSpec("uniform", 10), p0=0.0)))
    assert 0.09 <= s.p_low <= s.p_up <= 0.11
    assert sum(s.histogram) == 10**5


def test_summary_single_category():
    s = D.summary(D.generate(cfg(categorical=D.CategoricalSpec("uniform", 1))))
    assert s.p_up == 1.0 and s.p_low == 1.0


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        D.Dataset(np.zeros((0, 2)), [], [])


def test_uniform_points_lie_in_unit_cube():
    ds = D.generate(cfg(n=2000, d=3, p0=0.0))
    assert ds.x.min() >= 0 and ds.x.max() < 1


def test_two_level_density_favours_hot_square():
    dens = D.DensitySpec("two-level", corner=0.0, side=0.5, hot_mass=0.8)
    ds = D.generate(cfg(n=5000, p0=0.0, density=dens))
    inside = np.all(ds.x < 0.5, axis=1).mean()
    assert abs(inside - 0.8) < 0.03


def test_power_law_probabilities_sum_to_one():
    p = D.CategoricalSpec("power-law", 20, exponent=1.5).probs()
    assert p.sum() == pytest.approx(1.0)
    assert np.all(np.diff(p) <= 0)


def test_invalid_config_rejected():
    with pytest.raises(ValueError):
        D.generate(cfg(p0=1.5))
    with pytest.raises(ValueError):
        D.generate(cfg(p0_means="maybe"))


def test_csv_round_trip(tmp_path):
    ds = D.generate(cfg())
    D.save_csv(ds, tmp_path / "d.csv")
    back = D.load_csv(tmp_path / "d.csv", cat_size=4)
    assert back == ds
    assert np.array_equal(back.x[~ds.corrupted], ds.x[~ds.corrupted])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-1e300, 1e300, allow_nan=False), min_size=2, max_size=2))
def test_csv_round_trip_exact_floats(tmp_path_factory, xs):
    ds = D.Dataset([xs], [0], [False])
    path = tmp_path_factory.mktemp("f") / "d.csv"
    D.save_csv(ds, path)
    assert D.load_csv(path) == ds


def test_corrupted_row_has_empty_cells(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("idx,corrupted,y,x0,x1\n0,1,0,,\n1,0,0,0.5,0.25\n")
    ds = D.load_csv(path)
    assert ds.corrupted.tolist() == [True, False]
    assert ds.x[1].tolist() == [0.5, 0.25]


def test_short_row_names_its_row(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("idx,corrupted,y,x0,x1\n0,0,0,0.1,0.2\n1,0,0,0.3\n")
    with pytest.raises(D.DimensionMismatchError) as err:
        D.load_csv(path)
    assert err.value.row == 3


def test_malformed_and_out_of_range_rows(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("idx,corrupted,y,x0\n0,0,zz,0.1\n")
    with pytest.raises(D.MalformedRowError):
        D.load_csv(path)
    path.write_text("idx,corrupted,y,x0\n0,0,5,0.1\n")
    with pytest.raises(D.CategoryRangeError):
        D.load_csv(path, cat_size=3)


def test_config_round_trip(tmp_path):
    c = cfg(density=D.DensitySpec("two-level", corner=0.1, side=0.3, hot_mass=0.5),
            categorical=D.CategoricalSpec("two-level", 5, p_top=0.4))
    D.save_config(c, tmp_path / "c.ini")
    back = D.load_config(tmp_path / "c.ini")
    assert D.generate(back) == D.generate(c)
    assert D.with_seed(c, 99).seed == 99
    assert dataclasses.replace(back, seed=c.seed).n == c.n


def test_rng_counter_based_and_uniform_range():
    a = rng.uniform(1, 2, np.arange(1000, dtype=np.uint64))
    b = rng.uniform(1, 2, np.arange(500, 1000, dtype=np.uint64))
    assert np.array_equal(a[500:], b)
    assert a.min() >= 0 and a.max() < 1
    assert rng.derive_seed(1, 2, 3) == rng.derive_seed(1, 2, 3) != rng.derive_seed(1, 2, 4)
