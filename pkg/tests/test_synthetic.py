import math

import numpy as np
import pytest

from lexisbayes.surfaces import empirical_surface
from lexisbayes.synthetic import SyntheticSpec, generate_synthetic


def test_null_surface_mean_ratio():
    spec = SyntheticSpec(n_years=80, n_ages=80, smooth_amplitude=0.0, band_amplitude=0.0, exposure=1000.0)
    ds = generate_synthetic(spec)
    assert np.all(ds.x == 0) and np.all(ds.z == 0)
    ratio = ds.data.deaths / (ds.data.exposures * spec.mu0)
    # sd of the mean is 1 / sqrt(N * mu0 * n) ~ 0.004
    assert ratio.mean() == pytest.approx(1.0, abs=0.015)


def test_band_mean_ratio():
    spec = SyntheticSpec(smooth_amplitude=0.0, band_amplitude=0.5, exposure=1e6)
    ds = generate_synthetic(spec)
    band = spec.band_mask()
    ratio = ds.data.deaths[band] / (ds.data.exposures[band] * spec.mu0)
    assert ratio.mean() == pytest.approx(math.exp(0.5), rel=2e-3)
    assert np.all(ds.z[~band] == 0)


def test_band_geometry():
    spec = SyntheticSpec()
    band = spec.band_mask()
    assert band[0, 30] and band[0, 45] and not band[0, 29] and not band[0, 46]
    # drift of 0.1 years of age per year: after 50 years the band starts at age 35
    assert band[50, 35] and not band[50, 34]


def test_deterministic():
    a = generate_synthetic(SyntheticSpec(seed=4))
    b = generate_synthetic(SyntheticSpec(seed=4))
    c = generate_synthetic(SyntheticSpec(seed=5))
    assert np.array_equal(a.data.deaths, b.data.deaths)
    assert not np.array_equal(a.data.deaths, c.data.deaths)


def test_rate_converges_at_large_exposure():
    spec = SyntheticSpec(n_years=5, n_ages=5, exposure=1e8, band_ages=(1, 2), band_slope=0.3, seed=2)
    ds = generate_synthetic(spec)
    truth = spec.mu0 * np.exp(ds.x + ds.z)
    assert np.max(np.abs(np.exp(empirical_surface(ds.data)) / truth - 1)) < 0.01


def test_spike_column():
    spec = SyntheticSpec(n_years=10, n_ages=8, band_ages=(2, 3), spike_year=1905, spike_amplitude=0.3)
    z = spec.shock_field()
    assert np.all(z[5] >= 0.3)
    assert z[4].max() <= 0.5


@pytest.mark.parametrize("kwargs", [dict(exposure=0.0), dict(band_ages=(50, 70)), dict(mu0=-1.0),
                                    dict(spike_year=1800)])
def test_invalid_spec(kwargs):
    with pytest.raises(ValueError):
        SyntheticSpec(**kwargs)
