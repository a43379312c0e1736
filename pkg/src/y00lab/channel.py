"""Gaussian model of propagation loss and quantum-limited coherent-state measurement.

Quadrature convention, fixed here and assumed by every downstream error-rate
formula: homodyne vacuum variance 1/4, heterodyne 1/2 per quadrature (the extra
vacuum unit from splitting both quadratures).  Excess noise xi adds xi/2 per
quadrature.  Coherent states stay coherent under pure loss, so no state-vector
machinery is needed: measurement statistics are exactly Gaussian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HOMODYNE_VACUUM_VAR = 0.25
HETERODYNE_QUAD_VAR = 0.5

HOMODYNE = "homodyne"
HETERODYNE = "heterodyne"


@dataclass(frozen=True)
class ChannelModel:
    transmittance: float = 1.0
    excess_noise: float = 0.0
    # Test hook: force measurement variance to zero (classical limit).
    noiseless: bool = False

    def __post_init__(self):
        if not (0.0 < self.transmittance <= 1.0):
            raise ValueError(
                f"transmittance must satisfy 0 < eta <= 1, got {self.transmittance}"
            )
        if self.excess_noise < 0:
            raise ValueError(f"excess_noise must be >= 0, got {self.excess_noise}")

    def homodyne_std(self) -> float:
        if self.noiseless:
            return 0.0
        return float(np.sqrt(HOMODYNE_VACUUM_VAR + self.excess_noise / 2.0))

    def heterodyne_std(self) -> float:
        """Per-quadrature standard deviation of a heterodyne outcome."""
        if self.noiseless:
            return 0.0
        return float(np.sqrt(HETERODYNE_QUAD_VAR + self.excess_noise / 2.0))


@dataclass(frozen=True)
class MeasurementOutcome:
    kind: str  # HOMODYNE (real values) or HETERODYNE (complex values)
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in (HOMODYNE, HETERODYNE):
            raise ValueError(f"unknown measurement kind {self.kind!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("measurement values must be finite")


def propagate_loss(a, ch: ChannelModel):
    """Pure loss: amplitude scales by sqrt(eta), photon number by eta."""
    out = np.sqrt(ch.transmittance) * np.asarray(a, dtype=complex)
    return complex(out) if out.ndim == 0 else out


def measure_homodyne(a, phase, ch: ChannelModel, rng: np.random.Generator) -> MeasurementOutcome:
    """Single-quadrature measurement at local-oscillator phase(s) `phase`.

    Outcome ~ Normal(Re(a_lost * e^{-i phase}), 1/4 + xi/2), elementwise over
    arrays of amplitudes/phases.
    """
    a = propagate_loss(a, ch)
    mean = (np.asarray(a) * np.exp(-1j * np.asarray(phase, dtype=float))).real
    sd = ch.homodyne_std()
    vals = mean if sd == 0.0 else mean + rng.normal(0.0, sd, size=np.shape(mean))
    return MeasurementOutcome(HOMODYNE, np.asarray(vals, dtype=float))


def measure_heterodyne(a, ch: ChannelModel, rng: np.random.Generator) -> MeasurementOutcome:
    """Dual-quadrature measurement: complex outcome ~ a_lost + circular Gaussian
    noise with variance 1/2 + xi/2 per quadrature."""
    a = propagate_loss(a, ch)
    mean = np.asarray(a, dtype=complex)
    sd = ch.heterodyne_std()
    if sd == 0.0:
        vals = mean.copy()
    else:
        noise = rng.normal(0.0, sd, size=mean.shape + (2,))
        vals = mean + noise[..., 0] + 1j * noise[..., 1]
    return MeasurementOutcome(HETERODYNE, vals)
