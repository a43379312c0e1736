"""Internal plumbing: deterministic chunked slot simulation.

Trials are partitioned into fixed-size chunks; chunk c draws all of its
randomness from a generator seeded with derive_trial_seed(master_seed, c) in a
fixed order, and chunk tallies merge by summation in chunk index order.  The
result is therefore bit-identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import ConfigError, ExperimentConfig
from .keystream import derive_trial_seed, expand_key, key_bits, random_key
from .modulation import amplitude_of, draw_dsr, map_index

CHUNK_SLOTS = 1 << 16  # divisible by every block length the attacks use

# Reserved derive_trial_seed counters, far above any chunk index.
KEY_TAG = 1 << 62


def binomial_ci95(p_hat: float, n: int) -> float:
    """Normal-approximation 95% half-width for a binomial proportion."""
    if n <= 0:
        return 0.0
    return float(1.96 * np.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n))


def resolve_key_bits(cfg: ExperimentConfig, seed: int) -> np.ndarray:
    """The secret key: explicit bits from the config, else key_len random bits
    derived deterministically from the master seed."""
    if cfg.key:
        return key_bits(cfg.key)
    rng = np.random.default_rng(derive_trial_seed(seed, KEY_TAG))
    return random_key(cfg.key_len, rng)


def resolve_plaintext(cfg: ExperimentConfig, n_slots: int) -> np.ndarray | None:
    """File-sourced plaintext bits, or None when each chunk draws random bits."""
    if cfg.plaintext == "random":
        return None
    try:
        with open(cfg.plaintext, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read plaintext file {cfg.plaintext!r}: {exc}") from exc
    chars = [ch for ch in text if not ch.isspace()]
    if any(ch not in "01" for ch in chars):
        raise ConfigError(f"plaintext file {cfg.plaintext!r} must contain only 0/1 characters")
    if len(chars) < n_slots:
        raise ConfigError(
            f"plaintext file has {len(chars)} bits but the experiment needs {n_slots}"
        )
    return np.array([int(ch) for ch in chars[:n_slots]], dtype=np.int64)


def run_chunks(cfg: ExperimentConfig, n_slots: int, seed: int, workers: int,
               per_chunk) -> dict[str, float]:
    """Run `per_chunk` over every chunk and sum its tally dicts in chunk order.

    per_chunk(rng, x, j, r, i, amp, c, ch) -> dict of float tallies.  The slot
    arrays handed to it are the common transmitter-side record; measurement
    draws happen inside per_chunk, on the chunk's own generator.
    """
    if n_slots <= 0:
        raise ValueError(f"trial count must be > 0, got {n_slots}")
    c = cfg.constellation()
    ch = cfg.channel()
    runkey = expand_key(resolve_key_bits(cfg, seed), n_slots, cfg.m_bases)
    plaintext = resolve_plaintext(cfg, n_slots)

    starts = list(range(0, n_slots, CHUNK_SLOTS))

    def work(task):
        idx, start = task
        stop = min(start + CHUNK_SLOTS, n_slots)
        n = stop - start
        rng = np.random.default_rng(derive_trial_seed(seed, idx))
        # Fixed draw order: plaintext bits, then dsr offsets, then whatever
        # measurements per_chunk makes.
        if plaintext is None:
            x = rng.integers(0, 2, size=n)
        else:
            x = plaintext[start:stop]
        r = draw_dsr(rng, c, size=n)
        j = runkey[start:stop]
        i = map_index(x, j, r, cfg.m_bases)
        amp = amplitude_of(i, c)
        return per_chunk(rng, x=x, j=j, r=r, i=i, amp=amp, c=c, ch=ch)

    tasks = list(enumerate(starts))
    if workers <= 1 or len(tasks) == 1:
        results = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, tasks))

    merged: dict[str, float] = {}
    for res in results:
        for k, v in res.items():
            merged[k] = merged.get(k, 0.0) + v
    return merged


def bob_phases(j: np.ndarray, c) -> np.ndarray:
    """Bob's local-oscillator phase per slot: pi*j/M for PSK, 0 for ISK."""
    if c.scheme == "psk":
        return np.pi * np.asarray(j, dtype=float) / c.m_bases
    return np.zeros(len(np.atleast_1d(j)))
