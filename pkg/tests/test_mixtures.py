"""Modular arithmetic, bin masses, and symmetric Gaussian mixtures."""

import numpy as np
import pytest
import scipy.stats

from gkpec.mixtures import (GaussianMixture1D, ROOT_2PI, average_std,
                            bin_index, bin_range, gkp_bin_coeff,
                            interval_mass, merge_close_terms, modular_reduce,
                            prune, shifted_bin_coeff)


def test_modular_reduce_range_and_periodicity():
    z = np.linspace(-8, 8, 401)
    r = modular_reduce(z)
    assert np.all(r >= -ROOT_2PI / 2)
    assert np.all(r < ROOT_2PI / 2)
    assert np.allclose(modular_reduce(z + 3 * ROOT_2PI), r, atol=1e-12)


def test_bin_index_inverts_reduction():
    z = np.array([-3.9, -0.2, 0.0, 1.9, 7.3])
    assert np.allclose(bin_index(z) * ROOT_2PI + modular_reduce(z), z)


def test_gkp_bin_coeffs_sum_to_one():
    for sigma in (0.05, 0.2, 0.6):
        ns = np.arange(-60, 61)
        total = sum(gkp_bin_coeff(n, sigma) for n in ns)
        assert abs(total - 1.0) < 1e-12


def test_shifted_bin_coeff_tracks_shift():
    # shifting by a full lattice period relabels the bins
    a = shifted_bin_coeff(0, 0.3, shift=0.4)
    b = shifted_bin_coeff(-1, 0.3, shift=0.4 + ROOT_2PI)
    assert abs(a - b) < 1e-14


def test_interval_mass_matches_norm_sf():
    # far tails stay positive and accurate where naive CDF differences die
    lo, hi = 10.0, 12.0
    naive = scipy.stats.norm.cdf(hi) - scipy.stats.norm.cdf(lo)
    assert naive == 0.0
    got = interval_mass(lo, hi, 0.0, 1.0)
    want = scipy.stats.norm.sf(lo) - scipy.stats.norm.sf(hi)
    assert got > 0
    assert abs(got - want) < 1e-12 * want
    mid = interval_mass(-1.0, 2.0, 0.5, 1.5)
    ref = scipy.stats.norm.cdf(2.0, 0.5, 1.5) - scipy.stats.norm.cdf(-1.0, 0.5, 1.5)
    assert abs(mid - ref) < 1e-14


def test_bin_range_covers_shifts():
    ls = bin_range(np.array([-5.0, 5.0]), 0.5)
    assert ls[0] * ROOT_2PI < -5.0 - 2.5
    assert ls[-1] * ROOT_2PI > 5.0 + 2.5


def _three_peak():
    return GaussianMixture1D(0.2, [0.5, 0.25, 0.25], [0.0, -1.3, 1.3])


def test_moments_against_numerical_integration():
    mix = _three_peak()
    x = np.linspace(-6, 6, 200001)
    pdf = mix.pdf(x)
    assert abs(np.trapezoid(pdf, x) - 1.0) < 1e-9
    var = np.trapezoid(pdf * x ** 2, x)
    m4 = np.trapezoid(pdf * x ** 4, x)
    assert abs(mix.variance() - var) < 1e-9
    assert abs(mix.fourth_moment() - m4) < 1e-8


def test_cdf_matches_pdf_integral():
    mix = _three_peak()
    x = np.linspace(-6, 2.1, 400001)
    want = np.trapezoid(mix.pdf(x), x)
    assert abs(mix.cdf(2.1) - want) < 1e-9


def test_sampling_follows_the_density():
    mix = _three_peak()
    rng = np.random.default_rng(42)
    s = mix.sample(200000, rng)
    u = mix.cdf(s)
    # probability integral transform: uniform mean 1/2, variance 1/12
    se = np.sqrt(1.0 / 12 / len(s))
    assert abs(u.mean() - 0.5) < 4 * se
    assert abs(s.var() - mix.variance()) < 5 * np.sqrt(
        (mix.fourth_moment() - mix.variance() ** 2) / len(s))


def test_asymmetric_mean_raises():
    bad = GaussianMixture1D(0.1, [0.6, 0.4], [0.5, -0.5])
    with pytest.raises(ValueError):
        bad.variance()


def test_prune_conserves_tracked_mass():
    rng = np.random.default_rng(0)
    t = np.concatenate([rng.uniform(0.1, 4.0, 200)])
    t = np.concatenate([t, -t])
    b = np.exp(-t ** 2)
    mix = GaussianMixture1D(0.05, b, t)
    out = prune(mix, eps=1e-6)
    assert len(out) <= len(mix)
    assert out.truncation_mass > 0
    # total_mass counts the truncation ledger, so nothing is lost
    assert abs(out.total_mass() - mix.total_mass()) < 1e-12
    # variance barely moves at this eps
    assert abs(out.variance() - mix.variance()) < 1e-4 * mix.variance()


def test_prune_hard_cap():
    mix = GaussianMixture1D(0.1, np.ones(501), np.linspace(-2, 2, 501))
    out = prune(mix, eps=0.0, max_terms=100)
    assert len(out) <= 100


def test_merge_close_terms_combines_duplicates():
    mix = GaussianMixture1D(0.1, [0.3, 0.3, 0.4], [1.0, 1.0 + 1e-14, -1.0])
    out = merge_close_terms(mix)
    assert len(out) == 2
    assert abs(out.total_mass() - mix.total_mass()) < 1e-12


def test_average_std_combines_quadratures():
    q = GaussianMixture1D.single(0.1)
    p = GaussianMixture1D.single(0.3)
    want = np.sqrt(0.5 * (0.01 + 0.09))
    assert abs(average_std(q, p) - want) < 1e-15
