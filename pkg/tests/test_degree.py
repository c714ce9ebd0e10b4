import numpy as np
import pytest
from hypothesis import given, strategies as st

from rateless_recon.degree import (
    DegreeDistribution,
    distribution_by_name,
    sample_degree,
    table1_distribution,
)


def test_table_coefficients():
    o4 = table1_distribution(4)
    assert dict(o4.entries)[2] == 0.4639
    assert dict(o4.entries)[1] == 0.0066
    o1 = table1_distribution(1)
    assert o1.max_degree == 320
    assert dict(o1.entries)[320] == 0.0269
    o2 = table1_distribution(2)
    assert o2.max_degree == 300
    o3 = table1_distribution(3)
    assert o3.max_degree == 80


@pytest.mark.parametrize("which", [1, 2, 3, 4])
def test_table_probabilities_sum_to_one(which):
    d = table1_distribution(which)
    assert abs(d.probabilities.sum() - 1.0) < 1e-9


def test_table_selector_range():
    with pytest.raises(ValueError):
        table1_distribution(5)
    with pytest.raises(ValueError):
        table1_distribution(0)


def test_sample_degree_cdf_cells():
    o4 = table1_distribution(4)
    assert sample_degree(o4, 0.0) == 1
    assert sample_degree(o4, 0.30) == 2       # cdf reaches 0.4705 at degree 2
    assert sample_degree(o4, 0.99) == 55      # cdf is 0.9777 at 40, 1.0 at 55
    assert sample_degree(o4, 0.97) == 40


@given(st.floats(0, 1, exclude_max=True))
def test_sample_degree_in_support(u):
    o1 = table1_distribution(1)
    assert sample_degree(o1, u) in set(int(d) for d in o1.degrees)


def test_sample_degree_rejects_out_of_range():
    with pytest.raises(ValueError):
        sample_degree(table1_distribution(4), 1.0)


def test_sample_array_matches_scalar():
    o3 = table1_distribution(3)
    us = np.linspace(0, 0.999999, 137)
    batch = o3.sample_array(us)
    singles = [sample_degree(o3, float(u)) for u in us]
    assert np.array_equal(batch, singles)


def test_empirical_frequencies_match():
    o4 = table1_distribution(4)
    rng = np.random.default_rng(17)
    draws = o4.sample_array(rng.random(200000))
    freq2 = np.mean(draws == 2)
    assert freq2 == pytest.approx(0.4639, abs=0.005)


def test_validation_rules():
    with pytest.raises(ValueError):
        DegreeDistribution(entries=((0, 1.0),))
    with pytest.raises(ValueError):
        DegreeDistribution(entries=((2, 0.5), (2, 0.5)))
    with pytest.raises(ValueError):
        DegreeDistribution(entries=((1, 0.4), (2, 0.4)))
    with pytest.raises(ValueError):
        DegreeDistribution(entries=((2, 0.5), (1, 0.5)))


def test_text_round_trip():
    o2 = table1_distribution(2)
    again = DegreeDistribution.from_text(o2.to_text(), name=o2.name)
    assert again.entries == o2.entries
    assert again.name == "omega2"


def test_distribution_by_name():
    assert distribution_by_name("omega1") is table1_distribution(1)
    with pytest.raises(ValueError):
        distribution_by_name("omega9")
