"""Loss and Gaussian measurement statistics under the fixed quadrature convention."""

import numpy as np
import pytest

from y00lab.channel import (
    ChannelModel,
    MeasurementOutcome,
    measure_heterodyne,
    measure_homodyne,
    propagate_loss,
)


def test_channel_invariants():
    with pytest.raises(ValueError, match="transmittance"):
        ChannelModel(0.0)
    with pytest.raises(ValueError, match="transmittance"):
        ChannelModel(1.2)
    with pytest.raises(ValueError, match="excess_noise"):
        ChannelModel(1.0, -0.1)


def test_loss_identity_and_sqrt_scaling():
    ch = ChannelModel(1.0)
    assert propagate_loss(2 + 1j, ch) == 2 + 1j
    assert propagate_loss(2 + 0j, ChannelModel(0.25)) == pytest.approx(1 + 0j)


def test_loss_scales_photon_number_exactly():
    rng = np.random.default_rng(0)
    amps = rng.normal(size=50) + 1j * rng.normal(size=50)
    for eta in (0.1, 0.5, 0.9):
        out = propagate_loss(amps, ChannelModel(eta))
        assert np.allclose(np.abs(out) ** 2, eta * np.abs(amps) ** 2, rtol=1e-12)


def test_homodyne_vacuum_moments():
    rng = np.random.default_rng(42)
    ch = ChannelModel()
    vals = measure_homodyne(np.zeros(100_000, dtype=complex), 0.0, ch, rng).values
    n = len(vals)
    assert abs(vals.mean()) < 5 * np.sqrt(0.25 / n)
    assert abs(vals.var() - 0.25) < 0.05 * 0.25


def test_homodyne_mean_aligned_and_orthogonal():
    ch = ChannelModel(noiseless=True)
    rng = np.random.default_rng(0)
    assert measure_homodyne(3 + 0j, 0.0, ch, rng).values == pytest.approx(3.0)
    assert measure_homodyne(3 + 0j, np.pi / 2, ch, rng).values == pytest.approx(0.0, abs=1e-12)


def test_heterodyne_vacuum_variance_and_mean():
    rng = np.random.default_rng(7)
    ch = ChannelModel()
    vals = measure_heterodyne(np.zeros(100_000, dtype=complex), ch, rng).values
    assert abs(vals.real.var() - 0.5) < 0.05 * 0.5
    assert abs(vals.imag.var() - 0.5) < 0.05 * 0.5
    n = 100_000
    vals2 = measure_heterodyne(np.full(n, 5 + 5j), ch, rng).values
    sd = np.sqrt(0.5 / n)
    assert abs(vals2.real.mean() - 5) < 5 * sd
    assert abs(vals2.imag.mean() - 5) < 5 * sd


def test_heterodyne_mean_after_loss():
    ch = ChannelModel(0.25, noiseless=True)
    out = measure_heterodyne(2 + 0j, ch, np.random.default_rng(0)).values
    assert out == pytest.approx(1 + 0j)


def test_variance_ordering_heterodyne_above_homodyne():
    rng = np.random.default_rng(3)
    ch = ChannelModel()
    hom = measure_homodyne(np.zeros(50_000, dtype=complex), 0.0, ch, rng).values
    het = measure_heterodyne(np.zeros(50_000, dtype=complex), ch, rng).values
    assert het.real.var() > hom.var()


def test_excess_noise_adds_half_per_quadrature():
    rng = np.random.default_rng(5)
    xi = 0.8
    ch = ChannelModel(1.0, xi)
    hom = measure_homodyne(np.zeros(200_000, dtype=complex), 0.0, ch, rng).values
    assert abs(hom.var() - (0.25 + xi / 2)) < 0.05 * (0.25 + xi / 2)


def test_measurement_mean_linear_in_amplitude():
    # Regression of sample means over a grid of amplitudes: slope sqrt(eta), no offset.
    rng = np.random.default_rng(9)
    ch = ChannelModel(0.64)
    grid = np.arange(1.0, 6.0)
    means = [measure_homodyne(np.full(40_000, a + 0j), 0.0, ch, rng).values.mean()
             for a in grid]
    slope, intercept = np.polyfit(grid, means, 1)
    assert slope == pytest.approx(0.8, abs=0.01)
    assert intercept == pytest.approx(0.0, abs=0.03)


def test_fixed_seed_reproducible():
    ch = ChannelModel()
    a = np.full(100, 1 + 2j)
    v1 = measure_heterodyne(a, ch, np.random.default_rng(123)).values
    v2 = measure_heterodyne(a, ch, np.random.default_rng(123)).values
    assert np.array_equal(v1, v2)
    h1 = measure_homodyne(a, 0.3, ch, np.random.default_rng(5)).values
    h2 = measure_homodyne(a, 0.3, ch, np.random.default_rng(5)).values
    assert np.array_equal(h1, h2)


def test_outcome_kind_validation():
    with pytest.raises(ValueError, match="kind"):
        MeasurementOutcome("photon-count", np.zeros(3))
    with pytest.raises(ValueError, match="finite"):
        MeasurementOutcome("homodyne", np.array([np.nan]))
