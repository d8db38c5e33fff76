"""
test_kde.py — Certainty-score density curves.
"""

import numpy as np
import pytest
from scipy.stats import gaussian_kde

from fairness_eval.kde import GRID_POINTS, GRID_RANGE, gaussian_kde_density, kde_curve, silverman_bandwidth
from shared_utils.errors import DegenerateBandwidth, InputError, NonPositiveBandwidth


class TestBandwidth:

    def test_silverman_formula(self, rng):
        s = rng.uniform(size=50)
        assert silverman_bandwidth(s) == pytest.approx(1.06 * np.std(s, ddof=1) * 50 ** -0.2)

    def test_silverman_undefined(self):
        assert silverman_bandwidth(np.array([0.3])) is None
        assert silverman_bandwidth(np.full(5, 0.3)) is None


class TestDensity:

    def test_matches_scipy(self, rng):
        s = rng.beta(2.0, 5.0, size=80)
        h = 0.07
        x = np.linspace(-0.1, 1.1, 31)
        reference = gaussian_kde(s, bw_method=h / np.std(s, ddof=1))(x)
        np.testing.assert_allclose(gaussian_kde_density(x, s, h), reference, rtol=1e-10)

    def test_grid_shape(self, rng):
        curve = kde_curve(rng.uniform(size=40))
        assert curve.x.shape == (GRID_POINTS,)
        assert (curve.x[0], curve.x[-1]) == pytest.approx(GRID_RANGE)
        assert np.all(curve.density >= 0.0)


class TestIntegral:

    @pytest.mark.parametrize("n", [30, 100, 500])
    def test_integrates_to_one(self, rng, n):
        for s in (rng.uniform(size=n), rng.beta(0.5, 0.5, size=n), rng.beta(8.0, 1.0, size=n)):
            assert 0.997 <= kde_curve(s).integral() <= 1.003

    def test_mass_is_renormalised(self):
        curve = kde_curve(np.r_[np.zeros(20), np.ones(20)], bandwidth=0.2)
        assert curve.grid_mass < 0.8
        assert curve.integral() == pytest.approx(1.0, abs=3e-3)

    @pytest.mark.parametrize("value", [0.0, 0.5, 1.0])
    def test_constant_scores_fall_back(self, value):
        with pytest.warns(DegenerateBandwidth):
            curve = kde_curve(np.full(30, value))
        assert curve.degenerate
        assert curve.bandwidth == 0.01
        assert 0.997 <= curve.integral() <= 1.003

    def test_fixed_bandwidth(self, rng):
        curve = kde_curve(rng.uniform(size=30), bandwidth=0.05)
        assert curve.bandwidth == 0.05
        assert not curve.degenerate


class TestErrors:

    def test_empty(self):
        with pytest.raises(InputError):
            kde_curve([])

    def test_bad_bandwidth(self):
        with pytest.raises(NonPositiveBandwidth):
            kde_curve([0.1, 0.2], bandwidth=0.0)
        with pytest.raises(InputError):
            kde_curve([0.1, 0.2], bandwidth="scott")
