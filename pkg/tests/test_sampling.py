"""Kernel density slice sampling tests against dense-grid oracles."""
import numpy as np
import pytest
from scipy.optimize import brentq

from ctstd import (
    LungMaskSet,
    ValidationError,
    fit_kde,
    invert_cdf,
    select_kds,
    select_random,
    select_uniform,
)
from ctstd.sampling import lung_area_profile, midpoint_percentiles, scott_bandwidth

from oracles import gaussian_pdf_sum, two_pass_std


def _integration_grid(profile, points_per_bandwidth=8, floor=1024):
    h = profile.bandwidth_h
    lo = float(profile.areas.min()) - 10.0 * h
    hi = float(profile.areas.max()) + 10.0 * h
    n = max(floor, int(np.ceil(points_per_bandwidth * (hi - lo) / h)) + 1)
    return np.linspace(lo, hi, n)


def test_area_profile_counts_phantom_masks():
    rng = np.random.default_rng(0)
    masks = rng.random((5, 24, 24)) > 0.7
    areas = lung_area_profile(LungMaskSet(masks, 1))
    for s in range(5):
        count = sum(
            1 for i in range(24) for j in range(24) if masks[s, i, j]
        )
        assert areas[s] == count


def test_kde_single_area():
    d = fit_kde([42.0])
    assert d.cdf(42.0) == pytest.approx(0.5, abs=1e-12)
    xs = np.linspace(30, 54, 101)
    peak = xs[int(np.argmax(d.pdf(xs)))]
    assert peak == pytest.approx(42.0, abs=0.2)


def test_kde_two_point_symmetry():
    d = fit_kde([0.0, 100.0])
    assert float(d.cdf(50.0)) == pytest.approx(0.5, abs=1e-12)


def test_scott_bandwidth_formula():
    rng = np.random.default_rng(1)
    areas = rng.uniform(0, 1000, 100)
    expected = 1.06 * two_pass_std(areas, ddof=1) * 100 ** (-1 / 5)
    assert scott_bandwidth(areas) == pytest.approx(expected, rel=1e-12)


def test_scott_bandwidth_degenerate_floor():
    assert scott_bandwidth(np.array([5.0])) == 1.0
    assert scott_bandwidth(np.full(10, 3.0)) == 1.0
    assert scott_bandwidth(np.full(10, 5e7)) == pytest.approx(50.0)


def test_cdf_matches_cumulative_trapezoid():
    rng = np.random.default_rng(2)
    areas = rng.uniform(0, 1000, 200)
    d = fit_kde(areas)
    h = d.bandwidth_h
    xs = np.linspace(float(areas.min()) - 10 * h, float(areas.max()) + 10 * h, 10_000)
    pdf = d.pdf(xs)
    cum = np.concatenate(([0.0], np.cumsum((pdf[1:] + pdf[:-1]) * 0.5 * np.diff(xs))))
    assert np.max(np.abs(d.cdf(xs) - cum)) <= 1e-6


def test_pdf_matches_direct_sum():
    rng = np.random.default_rng(3)
    areas = rng.uniform(0, 500, 37)
    d = fit_kde(areas)
    for x in (0.0, 123.4, 499.0, 700.0):
        assert float(d.pdf(x)) == pytest.approx(
            gaussian_pdf_sum(x, areas.tolist(), d.bandwidth_h), rel=1e-12
        )


def test_pdf_integrates_to_one():
    rng = np.random.default_rng(4)
    for _ in range(10):
        areas = rng.uniform(0, 1000, int(rng.integers(1, 300)))
        d = fit_kde(areas)
        xs = _integration_grid(d)
        integral = float(np.trapezoid(d.pdf(xs), xs))
        assert abs(integral - 1.0) <= 1e-6


def test_cdf_monotone():
    rng = np.random.default_rng(5)
    for _ in range(5):
        areas = rng.uniform(0, 800, int(rng.integers(2, 120)))
        d = fit_kde(areas)
        xs = _integration_grid(d, floor=4096)
        assert (np.diff(d.cdf(xs)) >= 0).all()


def test_cdf_saturates_at_bracket_ends():
    rng = np.random.default_rng(12)
    areas = rng.uniform(0, 800, 50)
    d = fit_kde(areas)
    h = d.bandwidth_h
    assert float(d.cdf(float(areas.min()) - 10 * h)) <= 1e-9
    assert float(d.cdf(float(areas.max()) + 10 * h)) >= 1 - 1e-9


def test_invert_cdf_trivial_symmetry():
    assert invert_cdf(fit_kde([7.0]), 0.5) == pytest.approx(7.0, abs=1e-6)
    assert invert_cdf(fit_kde([0.0, 100.0]), 0.5) == pytest.approx(50.0, abs=1e-6)


def test_invert_cdf_hits_probability_tolerance():
    rng = np.random.default_rng(6)
    areas = rng.uniform(0, 300, 50)
    d = fit_kde(areas)
    for p in np.arange(0.05, 0.96, 0.1):
        q = invert_cdf(d, float(p))
        assert abs(float(d.cdf(q)) - p) <= 1e-9


def test_invert_cdf_matches_grid_search():
    rng = np.random.default_rng(7)
    areas = rng.uniform(0, 300, 50)
    d = fit_kde(areas)
    h = d.bandwidth_h
    lo = float(areas.min()) - 10 * h
    hi = float(areas.max()) + 10 * h
    xs = np.linspace(lo, hi, 1_000_000)
    fs = d.cdf(xs)  # one dense evaluation shared by every percentile lookup
    for p in np.arange(0.05, 0.96, 0.1):
        q = invert_cdf(d, float(p))
        q_grid = float(xs[int(np.argmin(np.abs(fs - p)))])
        assert abs(q - q_grid) <= 1e-3


def test_invert_cdf_domain_errors():
    d = fit_kde([1.0, 2.0])
    for p in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValidationError):
            invert_cdf(d, p)


def test_quantile_ordering():
    rng = np.random.default_rng(8)
    areas = rng.uniform(0, 1000, 80)
    d = fit_kde(areas)
    qs = [invert_cdf(d, p) for p in np.linspace(0.05, 0.95, 12)]
    assert all(a <= b for a, b in zip(qs, qs[1:]))


def test_midpoint_percentiles():
    assert midpoint_percentiles(8) == tuple((2 * i - 1) / 16 for i in range(1, 9))
    printed = tuple(round(p, 2) for p in midpoint_percentiles(10))
    assert printed == (0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95)


def test_select_kds_exhausts_small_scans():
    d = fit_kde(np.arange(8.0))
    assert select_kds(d, 8).indices == tuple(range(8))
    d3 = fit_kde(np.array([5.0, 9.0, 2.0]))
    assert select_kds(d3, 8).indices == (0, 1, 2)


def test_select_kds_matches_greedy_oracle():
    areas = np.arange(1.0, 101.0)
    d = fit_kde(areas)
    sel = select_kds(d, 8)
    # independent quantiles via Brent root finding, then the same greedy replay
    lo = float(areas.min()) - 10 * d.bandwidth_h
    hi = float(areas.max()) + 10 * d.bandwidth_h
    taken = set()
    chosen = []
    for p in midpoint_percentiles(8):
        q = brentq(lambda x: float(d.cdf(x)) - p, lo, hi, xtol=1e-10)
        best = min(
            (i for i in range(100) if i not in taken),
            key=lambda i: (abs(areas[i] - q), i),
        )
        taken.add(best)
        chosen.append(best)
    assert sel.indices == tuple(sorted(chosen))
    # selected areas bracket the smoothed quantiles
    qs = [brentq(lambda x: float(d.cdf(x)) - p, lo, hi, xtol=1e-10)
          for p in midpoint_percentiles(8)]
    picked = sorted(areas[list(sel.indices)])
    for q, a in zip(qs, picked):
        assert abs(a - q) <= 1.0 + 1e-9  # nearest integer-valued area


def test_select_kds_constant_areas_tie_break():
    d = fit_kde(np.full(20, 7.0))
    sel = select_kds(d, 8)
    assert sel.indices == tuple(range(8))


def test_select_kds_custom_percentiles():
    d = fit_kde(np.arange(1.0, 101.0))
    printed = midpoint_percentiles(10)
    sel = select_kds(d, percentiles=printed)
    assert len(sel.indices) == 10
    assert sel.percentiles == printed


def test_select_uniform_frozen_values():
    assert select_uniform(8, 8).indices == tuple(range(8))
    assert select_uniform(100, 8).indices == (6, 18, 31, 43, 56, 68, 81, 93)
    assert select_uniform(4, 8).indices == (0, 1, 2, 3)


def test_select_random_contracts():
    assert select_random(8, 8, seed=99).indices == tuple(range(8))
    a = select_random(1000, 8, seed=5)
    b = select_random(1000, 8, seed=5)
    assert a.indices == b.indices
    assert len(set(a.indices)) == 8
    assert select_random(1000, 8, seed=6).indices != a.indices


def test_all_strategies_strictly_increasing_contracted_length():
    rng = np.random.default_rng(9)
    for _ in range(25):
        s = int(rng.integers(1, 60))
        n = int(rng.integers(1, 20))
        areas = rng.uniform(0, 100, s)
        for sel in (
            select_kds(fit_kde(areas), n),
            select_uniform(s, n),
            select_random(s, n, seed=int(rng.integers(0, 1 << 32))),
        ):
            idx = sel.indices
            assert len(idx) == min(n, s)
            assert all(b > a for a, b in zip(idx, idx[1:]))
            assert all(0 <= i < s for i in idx)


def test_kds_shift_equivariance():
    rng = np.random.default_rng(10)
    areas = rng.uniform(10, 500, 60)
    shift = 1024.0
    d0 = fit_kde(areas)
    d1 = fit_kde(areas + shift)
    assert d1.bandwidth_h == pytest.approx(d0.bandwidth_h, rel=1e-12)
    for p in (0.11, 0.5, 0.93):
        q0 = invert_cdf(d0, p)
        q1 = invert_cdf(d1, p)
        assert q1 - shift == pytest.approx(q0, abs=1e-5 * (1 + abs(q0)))
    assert select_kds(d1, 8).indices == select_kds(d0, 8).indices


def test_kds_scale_invariance_of_selection():
    rng = np.random.default_rng(11)
    areas = rng.uniform(10, 500, 60)
    base = select_kds(fit_kde(areas), 8).indices
    for lam in (0.5, 3.75, 1000.0):
        assert select_kds(fit_kde(areas * lam), 8).indices == base


def test_fit_kde_empty_errors():
    with pytest.raises(ValidationError):
        fit_kde([])
