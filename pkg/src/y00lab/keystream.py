"""Running-key generation: expand a shared secret key into per-slot basis indices.

The reference generator is a 64-bit Fibonacci LFSR with taps {64, 63, 61, 60}
(a maximal-length register), clocked one bit per output bit.  Bases and signal
indices are 0-based throughout.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def key_bits(spec: str | bytes | list | np.ndarray) -> np.ndarray:
    """Normalize a key given as a '0101...' string or a 0/1 sequence to uint8 bits."""
    if isinstance(spec, (str, bytes)):
        s = spec.decode() if isinstance(spec, bytes) else spec
        s = s.strip()
        if not s or any(c not in "01" for c in s):
            raise ValueError(f"key must be a non-empty string of 0/1 characters, got {spec!r}")
        return np.array([int(c) for c in s], dtype=np.uint8)
    bits = np.asarray(spec, dtype=np.uint8)
    if bits.ndim != 1 or bits.size == 0 or np.any(bits > 1):
        raise ValueError("key must be a non-empty 1-D sequence of bits")
    return bits


def random_key(n_bits: int, rng: np.random.Generator) -> np.ndarray:
    if n_bits < 1:
        raise ValueError("key length must be >= 1 bit")
    return rng.integers(0, 2, size=n_bits, dtype=np.uint8)


def _seed_states(keys: np.ndarray) -> np.ndarray:
    """Zero-pad/truncate key bit rows to 64-bit LFSR states (bit i -> state bit i).

    The all-zero state is the register's fixed point; it is replaced by state 1.
    """
    keys = np.atleast_2d(np.asarray(keys, dtype=np.uint8))
    states = np.zeros((keys.shape[0], 64), dtype=np.uint8)
    take = min(keys.shape[1], 64)
    states[:, :take] = keys[:, :take]
    dead = ~states.any(axis=1)
    states[dead, 0] = 1
    return states


def _lfsr_output_bits(states: np.ndarray, n_bits: int) -> np.ndarray:
    """Output stream of the taps-{64,63,61,60} Fibonacci LFSR, one row per state.

    The register shifts right and emits its low bit, so the first 64 outputs are
    the state bits themselves; thereafter o[t+64g] = o[t]^o[t+g]^o[t+3g]^o[t+4g]
    for any power-of-two gap g (Frobenius squaring of the base recurrence), which
    lets the stream be filled in geometrically growing blocks.
    """
    n_rows = states.shape[0]
    out = np.empty((n_rows, max(n_bits, 64)), dtype=np.uint8)
    out[:, :64] = states
    produced = 64
    while produced < n_bits:
        g = 1
        while 64 * (g * 2) <= produced:
            g *= 2
        n0 = produced
        b = min(60 * g, n_bits - produced)
        out[:, n0:n0 + b] = (
            out[:, n0 - 64 * g:n0 - 64 * g + b]
            ^ out[:, n0 - 63 * g:n0 - 63 * g + b]
            ^ out[:, n0 - 61 * g:n0 - 61 * g + b]
            ^ out[:, n0 - 60 * g:n0 - 60 * g + b]
        )
        produced += b
    return out[:, :n_bits]


def _bits_to_symbols(bits: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Pack consecutive bit groups into unsigned integers, first bit = MSB."""
    n_rows, n_bits = bits.shape
    n_sym = n_bits // bits_per_symbol
    weights = (1 << np.arange(bits_per_symbol - 1, -1, -1)).astype(np.int64)
    return bits[:, :n_sym * bits_per_symbol].reshape(n_rows, n_sym, bits_per_symbol) @ weights


def expand_key(key: str | np.ndarray, m_slots: int, m_bases: int) -> np.ndarray:
    """Expand a secret key into m_slots basis indices, each in {0, ..., m_bases-1}.

    Each symbol is the next log2(m_bases) generator bits read as an unsigned
    integer (MSB first).  Pure function: same inputs give the identical stream.
    """
    bits = key_bits(key)
    if m_bases < 2 or (m_bases & (m_bases - 1)) != 0:
        raise ValueError(f"m_bases must be a power of two >= 2, got {m_bases}")
    if m_slots < 0:
        raise ValueError(f"m_slots must be >= 0, got {m_slots}")
    k = int(m_bases).bit_length() - 1
    if m_slots == 0:
        return np.empty(0, dtype=np.int64)
    states = _seed_states(bits[np.newaxis, :])
    stream = _lfsr_output_bits(states, m_slots * k)
    return _bits_to_symbols(stream, k)[0]


def expand_key_batch(keys: np.ndarray, m_slots: int, m_bases: int) -> np.ndarray:
    """expand_key vectorized over rows of a (n_keys, key_bits) array."""
    if m_bases < 2 or (m_bases & (m_bases - 1)) != 0:
        raise ValueError(f"m_bases must be a power of two >= 2, got {m_bases}")
    k = int(m_bases).bit_length() - 1
    keys = np.atleast_2d(np.asarray(keys, dtype=np.uint8))
    if m_slots == 0:
        return np.empty((keys.shape[0], 0), dtype=np.int64)
    stream = _lfsr_output_bits(_seed_states(keys), m_slots * k)
    return _bits_to_symbols(stream, k)


def _splitmix64(state: int) -> int:
    z = state & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Counter-based 64-bit mix so per-trial RNG streams are independent of
    how trials are partitioned across workers.  splitmix64 output stream."""
    state = (int(master_seed) + (int(trial_index) + 1) * _GOLDEN) & _MASK64
    return _splitmix64(state)
