"""Decoders for the two parties.

Bob knows the per-slot basis index and makes a binary decision; with the
parity-alternating index map his PSK decision is a sign test on a homodyne
outcome taken at phase pi*j/M.  Eve does not know the basis and quantizes her
heterodyne outcome to the nearest of all 2M constellation points (maximum
likelihood under symmetric Gaussian noise).  Index distances are circular for
PSK and linear for ISK.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import HETERODYNE, HOMODYNE, MeasurementOutcome
from .modulation import Constellation, map_index

# Below this constellation size the quantizer compares distances to every point,
# which resolves exact ties toward the smaller index; above it an angle/level
# quantizer (identical decision regions, O(1) per outcome) takes over.
_BRUTE_FORCE_POINTS = 64


@dataclass(frozen=True)
class EveObservation:
    """Raw heterodyne record plus its hard-decision index sequence."""

    outcomes: np.ndarray
    hard_indices: np.ndarray

    def __post_init__(self):
        if len(self.outcomes) != len(self.hard_indices):
            raise ValueError("outcomes and hard_indices must have equal length")


def _require_kind(y: MeasurementOutcome, kind: str) -> np.ndarray:
    if y.kind != kind:
        raise ValueError(f"expected a {kind} outcome, got {y.kind}")
    return np.asarray(y.values)


def bob_decode(y: MeasurementOutcome, j, c: Constellation, eta: float = 1.0):
    """Decode one bit per slot from Bob's homodyne record, given basis index j.

    PSK assumes the measurement phase was pi*j/M: the projected mean keeps the
    sign of the bit for every |r| <= dsr_spread < M/2, so the decision is
    (y < 0) XOR (j mod 2).  ISK compares against the candidate levels of each
    bit (scaled by sqrt(eta)), nearer set wins, ties to bit 0.
    """
    scalar = np.ndim(y.values) == 0 and np.ndim(j) == 0
    vals = np.atleast_1d(_require_kind(y, HOMODYNE))
    j = np.atleast_1d(np.asarray(j, dtype=np.int64))
    vals, j = np.broadcast_arrays(vals, j)
    if c.scheme == "psk":
        bits = (vals < 0).astype(np.int64) ^ (j & 1)
    else:
        offs = np.arange(-c.dsr_spread, c.dsr_spread + 1)
        cand = map_index(
            np.array([0, 1])[:, None, None], j[None, :, None], offs[None, None, :], c.m_bases
        )
        levels = np.sqrt(eta) * c.points()[cand].real  # (2, n, 2s+1)
        dist = np.min(np.abs(vals[None, :, None] - levels), axis=2)
        bits = (dist[1] < dist[0]).astype(np.int64)
    return int(bits[0]) if scalar else bits


def eve_nearest_index(y: MeasurementOutcome, c: Constellation, eta: float = 1.0):
    """Quantize heterodyne outcome(s) to the nearest constellation point.

    Euclidean argmin over all 2M points; ties break toward the smaller index.
    """
    vals = np.atleast_1d(_require_kind(y, HETERODYNE)).astype(complex)
    scalar = np.ndim(y.values) == 0
    pts = np.sqrt(eta) * c.points()
    if c.n_points <= _BRUTE_FORCE_POINTS:
        d2 = np.abs(vals[:, None] - pts[None, :]) ** 2
        idx = np.argmin(d2, axis=1).astype(np.int64)
    elif c.scheme == "psk":
        step = np.pi / c.m_bases
        idx = np.ceil(np.angle(vals) / step - 0.5).astype(np.int64) % c.n_points
    else:
        spacing = np.sqrt(eta) * c.amplitude / (c.n_points - 1)
        idx = np.ceil(vals.real / spacing - 0.5).astype(np.int64)
        idx = np.clip(idx, 0, c.n_points - 1)
    return int(idx[0]) if scalar else idx


def observe(y: MeasurementOutcome, c: Constellation, eta: float = 1.0) -> EveObservation:
    """Bundle Eve's raw record with its hard-decision quantization."""
    idx = np.atleast_1d(eve_nearest_index(y, c, eta))
    return EveObservation(np.atleast_1d(y.values), idx)


def _index_distance(a: np.ndarray, b: np.ndarray, c: Constellation) -> np.ndarray:
    d = np.abs(a - b)
    if c.scheme == "psk":
        return np.minimum(d, c.n_points - d)
    return d


def bit_given_key(i_hat, j, c: Constellation):
    """Best bit estimate from a hard index once the basis index is known.

    Returns the bit whose candidate set {map_index(b, j, r): |r| <= s} contains
    the nearest member to i_hat (circular for PSK, linear for ISK); ties to 0.
    """
    scalar = np.ndim(i_hat) == 0 and np.ndim(j) == 0
    i_arr = np.atleast_1d(np.asarray(i_hat, dtype=np.int64))
    j_arr = np.atleast_1d(np.asarray(j, dtype=np.int64))
    if np.any((i_arr < 0) | (i_arr >= c.n_points)):
        raise ValueError(f"signal index out of range: need 0 <= i < 2M={c.n_points}")
    i_arr, j_arr = np.broadcast_arrays(i_arr, j_arr)
    offs = np.arange(-c.dsr_spread, c.dsr_spread + 1)
    cand = map_index(
        np.array([0, 1])[:, None, None], j_arr[None, :, None], offs[None, None, :], c.m_bases
    )
    dist = np.min(_index_distance(i_arr[None, :, None], cand, c), axis=2)  # (2, n)
    bits = (dist[1] < dist[0]).astype(np.int64)
    return int(bits[0]) if scalar else bits


def eve_keyless_bit(i_hat, c: Constellation):
    """Eve's bit guess without the key: invert the index map assuming r = 0 and
    basis j = i mod M, so x-hat = (i div M) XOR (i mod 2).

    The parity-alternating map makes this guess flip between adjacent points,
    which is what drives a keyless eavesdropper to chance accuracy once quantum
    noise spans more than a point or two.
    """
    i_hat = np.asarray(i_hat, dtype=np.int64)
    bits = (i_hat // c.m_bases) ^ (i_hat & 1)
    return int(bits) if bits.ndim == 0 else bits
