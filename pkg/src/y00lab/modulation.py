"""Constellation mapping: plaintext bit + running key + random offset -> signal index
and coherent-state amplitude.

A constellation has m_bases two-point communication bases and 2*m_bases signal
points in total.  The index map puts the two points of basis j half a ring apart
(PSK) or half a ladder apart (ISK), with a parity term that alternates the bit
assignment of adjacent bases so neighboring points carry opposite bits; the
deliberate-randomization offset r shifts the index by at most dsr_spread slots,
which keeps the decoder's two bit regions disjoint because dsr_spread < M/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .keystream import expand_key

SCHEMES = ("psk", "isk")


@dataclass(frozen=True)
class Constellation:
    scheme: str
    m_bases: int
    amplitude: float
    dsr_spread: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", str(self.scheme).lower())
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        m = self.m_bases
        if m < 2 or (m & (m - 1)) != 0:
            raise ValueError(f"m_bases must be a power of two >= 2, got {m}")
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        s = self.dsr_spread
        if s < 0 or 2 * s >= m:
            raise ValueError(
                f"dsr_spread must satisfy 0 <= dsr_spread < M/2 (M={m}), got {s}"
            )

    @property
    def n_points(self) -> int:
        return 2 * self.m_bases

    def points(self) -> np.ndarray:
        """All 2M coherent amplitudes, indexed by signal index."""
        idx = np.arange(self.n_points)
        if self.scheme == "psk":
            return self.amplitude * np.exp(1j * np.pi * idx / self.m_bases)
        return self.amplitude * idx / (self.n_points - 1) + 0j


@dataclass(frozen=True)
class QuantumCiphertext:
    """Transmitter-side record of one encrypted stream.

    The index sequence is bookkeeping for the legitimate parties and for
    experiment scoring; it is never handed to an eavesdropper model.
    """

    amplitudes: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        if len(self.amplitudes) != len(self.indices):
            raise ValueError("amplitudes and indices must have equal length")

    def __len__(self) -> int:
        return len(self.indices)


def map_index(x, j, r, m_bases: int):
    """Signal index i = (j + M*(x XOR (j mod 2)) + r) mod 2M.

    Accepts scalars or equal-length arrays; validates 0 <= j < M and |r| < M/2.
    """
    m = m_bases
    x = np.asarray(x, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    r = np.asarray(r, dtype=np.int64)
    if np.any((j < 0) | (j >= m)):
        raise ValueError(f"basis index out of range: need 0 <= j < M={m}")
    if np.any(2 * np.abs(r) >= m):
        raise ValueError(f"dsr offset out of range: need |r| < M/2 with M={m}")
    if np.any((x != 0) & (x != 1)):
        raise ValueError("plaintext values must be bits")
    i = (j + m * (x ^ (j & 1)) + r) % (2 * m)
    return int(i) if i.ndim == 0 else i


def amplitude_of(i, c: Constellation):
    """Coherent amplitude of signal index i (scalar or array), in sqrt-photon units."""
    i = np.asarray(i, dtype=np.int64)
    if np.any((i < 0) | (i >= c.n_points)):
        raise ValueError(f"signal index out of range: need 0 <= i < 2M={c.n_points}")
    a = c.points()[i]
    return complex(a) if a.ndim == 0 else a


def draw_dsr(rng: np.random.Generator, c: Constellation, size: int | None = None):
    """Uniform random offset in [-s, +s]; fresh per slot, never recorded."""
    s = c.dsr_spread
    out = rng.integers(-s, s + 1, size=size)
    return int(out) if size is None else out


def encrypt_stream(x, key, c: Constellation, rng: np.random.Generator) -> QuantumCiphertext:
    """Encrypt a bit sequence: slot t uses running-key symbol j_t, fresh offset r_t,
    index map_index(x_t, j_t, r_t) and its coherent amplitude."""
    x = np.asarray(x, dtype=np.int64)
    n = len(x)
    j = expand_key(key, n, c.m_bases)
    r = draw_dsr(rng, c, size=n)
    if n == 0:
        return QuantumCiphertext(np.empty(0, dtype=complex), np.empty(0, dtype=np.int64))
    i = map_index(x, j, r, c.m_bases)
    return QuantumCiphertext(amplitude_of(i, c), i)
