import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maskperc.degree import (DegreeDistribution, excess_pgf, generating_functions, load_pmf,
                             mean_excess_degree, moments, offspring_pgf, pgf, sample_degrees)
from oracles import poisson_table


def test_poisson_table_matches_scipy():
    d = DegreeDistribution.poisson(5.0)
    k, p = d.table()
    kk, pp = poisson_table(5.0, d.kmax)
    assert np.allclose(p, pp, rtol=1e-12, atol=1e-300)
    assert abs(p.sum() - 1) < 1e-12


@pytest.mark.parametrize("lam", [0.0, 0.5, 3.0, 10.0])
@pytest.mark.parametrize("z", [0.0, 0.3, 0.9, 1.0])
def test_poisson_closed_forms_match_series(lam, z):
    d = DegreeDistribution.poisson(lam)
    k, p = d.table()
    assert pgf(d, z) == pytest.approx(float(np.dot(p, z ** k)), abs=1e-13)
    if lam > 0:
        # full-degree size-biased form is z times the offspring form
        assert excess_pgf(d, z) == pytest.approx(z * offspring_pgf(d, z), abs=1e-13)


def test_empirical_generating_functions():
    d = DegreeDistribution.empirical({1: 0.2, 2: 0.3, 4: 0.5})
    gf = generating_functions(d)
    z = 0.4
    assert gf.g(z) == pytest.approx(0.2 * z + 0.3 * z ** 2 + 0.5 * z ** 4)
    mean = 0.2 + 0.6 + 2.0
    assert gf.G1(z) == pytest.approx((0.2 + 0.6 * z + 2.0 * z ** 3) / mean)
    assert gf.dG1(z) == pytest.approx((0.6 + 6.0 * z ** 2) / mean)
    assert gf.dg(z) == pytest.approx(0.2 + 0.6 * z + 2.0 * z ** 3)
    assert excess_pgf(d, 1.0) == pytest.approx(1.0)


def test_moments_and_excess_degree():
    d = DegreeDistribution.empirical({2: 0.5, 4: 0.5})
    assert moments(d) == pytest.approx((3.0, 10.0))
    assert mean_excess_degree(d) == pytest.approx(7 / 3)
    assert mean_excess_degree(DegreeDistribution.poisson(4.2)) == 4.2
    assert mean_excess_degree(DegreeDistribution.empirical({0: 1.0})) == 0.0


def test_powerlaw_normalized():
    d = DegreeDistribution.powerlaw(2.5, 1, 50)
    k, p = d.table()
    assert p.sum() == pytest.approx(1.0)
    assert p[0] / p[1] == pytest.approx(2 ** 2.5)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        DegreeDistribution.poisson(-1)
    with pytest.raises(ValueError):
        DegreeDistribution.powerlaw(2.5, 0, 10)
    with pytest.raises(ValueError, match="sums to"):
        DegreeDistribution.empirical({1: 0.5, 2: 0.4})
    assert DegreeDistribution.empirical({1: 1, 2: 3}, normalize=True).probs[1] == 0.75
    with pytest.raises(ValueError):
        pgf(DegreeDistribution.poisson(2), 1.5)
    with pytest.raises(ValueError):
        excess_pgf(DegreeDistribution.poisson(0), 0.5)


def test_load_pmf(tmp_path):
    f = tmp_path / "pmf.csv"
    f.write_text("# degrees\ndegree,probability\n1,0.25\n3,0.75\n")
    d = load_pmf(f)
    assert d.mean == pytest.approx(2.5)
    f.write_text("1,0.25\n1,0.75\n")
    with pytest.raises(ValueError, match="duplicate"):
        load_pmf(f)
    f.write_text("k,p\n1,0.5\nbad line\n")
    with pytest.raises(ValueError, match="expected"):
        load_pmf(f)


def test_sample_degrees_even_sum_and_mean():
    d = DegreeDistribution.poisson(4.0)
    deg = sample_degrees(d, 200_001, rng_seed=3)
    assert deg.sum() % 2 == 0
    assert deg.mean() == pytest.approx(4.0, abs=0.03)
    assert np.array_equal(deg, sample_degrees(d, 200_001, rng_seed=3))


def test_odd_only_support_with_odd_n_rejected():
    d = DegreeDistribution.empirical({1: 0.5, 3: 0.5})
    with pytest.raises(ValueError, match="odd"):
        sample_degrees(d, 5, rng_seed=0)
    assert sample_degrees(d, 6, rng_seed=0).sum() % 2 == 0


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.integers(0, 15), st.floats(0.01, 1.0), min_size=1, max_size=6),
       st.floats(0.0, 1.0))
def test_pgf_properties(weights, z):
    d = DegreeDistribution.empirical(weights, normalize=True)
    assert pgf(d, 1.0) == pytest.approx(1.0)
    assert 0.0 <= pgf(d, z) <= 1.0 + 1e-12
    if d.mean > 0:
        gf = generating_functions(d)
        assert gf.G1(1.0) == pytest.approx(1.0)
        assert gf.G1(z) <= 1.0 + 1e-12
        # numerical derivative agrees with the analytic one
        h = 1e-6
        zz = min(max(z, h), 1 - h)
        assert gf.dG1(zz) == pytest.approx((gf.G1(zz + h) - gf.G1(zz - h)) / (2 * h), rel=1e-4, abs=1e-6)
