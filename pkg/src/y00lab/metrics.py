"""Detection-theory quantities and the estimators that turn simulations into
security numbers.

Closed forms: coherent-state overlap exp(-|a|^2/2 - |b|^2/2 + conj(a)b), the
binary minimum-error (Helstrom) probability, and the spectrum of the Gram
matrix G_ij = sqrt(p_i p_j) <a_i|a_j>, which for a pure-state ensemble equals
the spectrum of the average density operator, so its Shannon entropy is the
Holevo quantity chi.

Monte-Carlo estimators: end-to-end bit-error experiment (both receivers) and
the exact-posterior equivocation estimator, both chunk-seeded so results are
independent of worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .channel import ChannelModel, measure_heterodyne, measure_homodyne, propagate_loss
from .config import ExperimentConfig
from .modulation import Constellation, map_index
from .receivers import bit_given_key, bob_decode, eve_keyless_bit, eve_nearest_index
from .simulate import binomial_ci95, bob_phases, run_chunks

_EIG_CLIP = 1e-12


def q_function(x):
    """Gaussian tail probability Q(x) = P(N(0,1) > x)."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def coherent_overlap(a, b):
    """<a|b> for coherent states: exp(-|a|^2/2 - |b|^2/2 + conj(a)*b).

    |<a|b>|^2 = exp(-|a-b|^2), the non-orthogonality of the pair.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    out = np.exp(-0.5 * np.abs(a) ** 2 - 0.5 * np.abs(b) ** 2 + np.conj(a) * b)
    return complex(out) if out.ndim == 0 else out


def helstrom_binary(a0, a1, p0: float) -> float:
    """Minimum error probability for discriminating |a0> (prior p0) from |a1>."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"p0 must be a probability, got {p0}")
    overlap_sq = abs(coherent_overlap(a0, a1)) ** 2
    discr = max(1.0 - 4.0 * p0 * (1.0 - p0) * overlap_sq, 0.0)
    return 0.5 * (1.0 - np.sqrt(discr))


@dataclass(frozen=True)
class StateEnsemble:
    amplitudes: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        probs = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "probs", probs)
        if amps.shape != probs.shape or amps.ndim != 1 or amps.size == 0:
            raise ValueError("amplitudes and probs must be equal-length 1-D sequences")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probs must be nonnegative and finite")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probs must sum to 1 within 1e-12, got {probs.sum()!r}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")


def ring_ensemble(c: Constellation) -> StateEnsemble:
    """The uniform ensemble over all 2M constellation points."""
    n = c.n_points
    return StateEnsemble(c.points(), np.full(n, 1.0 / n))


def gram_matrix(e: StateEnsemble) -> np.ndarray:
    w = np.sqrt(e.probs)
    return w[:, None] * coherent_overlap(e.amplitudes[:, None], e.amplitudes[None, :]) * w[None, :]


def gram_eigenvalues(e: StateEnsemble) -> np.ndarray:
    """Spectrum of the ensemble Gram matrix, descending, clipped at zero.

    Gram matrices of near-identical states are numerically rank deficient, so
    eigenvalues below 1e-12 are clipped to 0; a significantly negative
    eigenvalue or a NaN is surfaced as an error rather than propagated.
    """
    g = gram_matrix(e)
    if not np.all(np.isfinite(g)):
        raise ValueError("Gram matrix has non-finite entries")
    try:
        vals = np.linalg.eigvalsh(g)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"eigen-solve failed: {exc}") from exc
    if np.any(np.isnan(vals)):
        raise ValueError("eigen-solve produced NaN")
    if vals.min() < -1e-8:
        raise ValueError(f"Gram matrix is not positive semidefinite (min eig {vals.min()})")
    vals = np.where(vals < _EIG_CLIP, 0.0, vals)
    return np.sort(vals)[::-1]


def holevo_chi(e: StateEnsemble) -> float:
    """Holevo quantity of a pure-state ensemble, in bits: the Shannon entropy of
    the Gram spectrum (0 log 0 := 0)."""
    lam = gram_eigenvalues(e)
    lam = lam[lam > 0]
    return float(-(lam * np.log2(lam)).sum()) + 0.0


def uniform_ring_chi(c: Constellation) -> float:
    """holevo_chi of the uniform PSK ring via its circulant structure.

    The Gram matrix of a uniform ring is circulant, so its spectrum is the DFT
    of its first row; this handles desk-default sizes (2M = 4096) in
    milliseconds where a dense eigen-solve would not.
    """
    if c.scheme != "psk":
        raise ValueError("the circulant fast path applies to PSK rings only")
    pts = c.points()
    row = coherent_overlap(pts[0], pts) / c.n_points
    lam = np.fft.fft(row).real
    lam = np.where(lam < _EIG_CLIP, 0.0, lam)
    lam = lam[lam > 0]
    return float(-(lam * np.log2(lam)).sum()) + 0.0


def masking_number(c: Constellation, sigma: float) -> float:
    """Gamma = 2*sigma / nearest-neighbor distance: how many constellation
    points sit inside one noise standard deviation of a transmitted point."""
    if c.amplitude <= 0:
        raise ValueError("amplitude must be > 0 for the masking number")
    if c.scheme == "psk":
        d_nn = 2.0 * c.amplitude * np.sin(np.pi / (2 * c.m_bases))
    else:
        d_nn = c.amplitude / (c.n_points - 1)
    return float(2.0 * sigma / d_nn)


def bob_theory_ber(c: Constellation, ch: ChannelModel) -> float:
    """Closed-form bit error rate of the keyed receiver, worst case over the
    randomization offset (projected mean amplitude*cos(pi*s/M) for PSK)."""
    if ch.noiseless:
        return 0.0
    sd = ch.homodyne_std()
    scale = np.sqrt(ch.transmittance)
    if c.scheme == "psk":
        margin = scale * c.amplitude * np.cos(np.pi * c.dsr_spread / c.m_bases)
    else:
        offs = np.arange(-c.dsr_spread, c.dsr_spread + 1)
        j = np.arange(c.m_bases)
        cand = map_index(np.array([0, 1])[:, None, None], j[None, :, None],
                         offs[None, None, :], c.m_bases)
        levels = c.points()[cand].real  # (2, M, 2s+1)
        gaps = np.abs(levels[0][:, :, None] - levels[1][:, None, :]).min(axis=(1, 2))
        margin = scale * gaps.min() / 2.0
    return float(q_function(margin / sd))


# ---------------------------------------------------------------------------
# Monte-Carlo bit-error experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BerReport:
    bob_ber: float
    bob_ber_ci95: float
    eve_index_accuracy: float
    eve_index_accuracy_ci95: float
    eve_bit_ber_given_key: float
    eve_bit_ber_given_key_ci95: float
    eve_keyless_bit_accuracy: float
    eve_keyless_bit_accuracy_ci95: float
    trials: int
    seed: int
    config: ExperimentConfig

    def __post_init__(self):
        for name in ("bob_ber", "eve_index_accuracy", "eve_bit_ber_given_key",
                     "eve_keyless_bit_accuracy"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def _ber_chunk(rng, *, x, j, r, i, amp, c, ch):
    del r
    y = measure_homodyne(amp, bob_phases(j, c), ch, rng)
    bob_bits = bob_decode(y, j, c, eta=ch.transmittance)
    z = measure_heterodyne(amp, ch, rng)
    i_hat = eve_nearest_index(z, c, eta=ch.transmittance)
    eve_bits = bit_given_key(i_hat, j, c)
    keyless = eve_keyless_bit(i_hat, c)
    return {
        "n": len(x),
        "bob_err": int(np.sum(bob_bits != x)),
        "eve_hit": int(np.sum(i_hat == i)),
        "eve_bit_err": int(np.sum(eve_bits != x)),
        "eve_keyless_ok": int(np.sum(keyless == x)),
    }


def run_ber_experiment(cfg: ExperimentConfig, seed: int | None = None,
                       workers: int | None = None) -> BerReport:
    """End-to-end slots (encrypt -> channel -> both receivers), tallying Bob's
    bit errors, Eve's exact-index hits, her bit errors once the key is revealed
    post-measurement, and her keyless bit-guess accuracy."""
    seed = cfg.seed if seed is None else seed
    workers = cfg.workers if workers is None else workers
    t = run_chunks(cfg, cfg.trials, seed, workers, _ber_chunk)
    n = int(t["n"])
    est = {
        "bob_ber": t["bob_err"] / n,
        "eve_index_accuracy": t["eve_hit"] / n,
        "eve_bit_ber_given_key": t["eve_bit_err"] / n,
        "eve_keyless_bit_accuracy": t["eve_keyless_ok"] / n,
    }
    kwargs = {}
    for k, v in est.items():
        kwargs[k] = v
        kwargs[k + "_ci95"] = binomial_ci95(v, n)
    return BerReport(trials=n, seed=seed, config=cfg, **kwargs)


# ---------------------------------------------------------------------------
# Equivocation (exact slot-wise posterior)
# ---------------------------------------------------------------------------

_EQUIVOCATION_NOTE = (
    "Per-slot equivocation conditioned on the true key; revealing the key "
    "outright only helps the eavesdropper, so this lower-bounds the residual "
    "uncertainty of a key-exhausting attacker on sequences longer than the key. "
    "Multiply bits/slot by n for the sequence total."
)


@dataclass(frozen=True)
class EquivocationReport:
    h_x_given_eve_and_key: float  # bits per slot
    h_x_given_bob_and_key: float  # bits per slot
    h_eve_ci95: float
    h_bob_ci95: float
    n_slots: int
    key_len: int
    seed: int
    config: ExperimentConfig
    note: str = _EQUIVOCATION_NOTE

    def __post_init__(self):
        for name in ("h_x_given_eve_and_key", "h_x_given_bob_and_key"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0 + 1e-12:
                raise ValueError(f"{name} must lie in [0, 1] bits per slot, got {v}")

    @property
    def h_eve_total_bits(self) -> float:
        return self.h_x_given_eve_and_key * self.n_slots


def _candidate_table(c: Constellation) -> np.ndarray:
    """Indices map_index(b, j, r) for every basis: shape (M, 2, 2s+1)."""
    offs = np.arange(-c.dsr_spread, c.dsr_spread + 1)
    j = np.arange(c.m_bases)
    return map_index(np.array([0, 1])[None, :, None], j[:, None, None],
                     offs[None, None, :], c.m_bases)


def _posteriors(obs: np.ndarray, mu: np.ndarray, var: float, noiseless: bool) -> np.ndarray:
    """P(bit | observation) from per-candidate means mu (n, 2, 2s+1), flat prior
    on the randomization offset.  Rows sum to 1 exactly by construction."""
    diff2 = np.abs(obs[:, None, None] - mu) ** 2
    if noiseless:
        weights = (diff2 == 0.0).sum(axis=2).astype(float)
        total = weights.sum(axis=1, keepdims=True)
        if np.any(total == 0):
            raise ValueError("noiseless outcome matches no candidate; inconsistent inputs")
        return weights / total
    ll = -diff2 / (2.0 * var)
    ll -= ll.max(axis=(1, 2), keepdims=True)
    weights = np.exp(ll).sum(axis=2)
    return weights / weights.sum(axis=1, keepdims=True)


def eve_bit_posteriors(z: np.ndarray, j: np.ndarray, c: Constellation,
                       ch: ChannelModel) -> np.ndarray:
    """Exact P(x | heterodyne outcome, basis) marginalized over the offset."""
    cand = _candidate_table(c)[np.asarray(j, dtype=np.int64)]
    mu = propagate_loss(c.points(), ch)[cand]
    return _posteriors(np.asarray(z, dtype=complex), mu, ch.heterodyne_std() ** 2,
                       ch.noiseless)


def bob_bit_posteriors(y: np.ndarray, j: np.ndarray, c: Constellation,
                       ch: ChannelModel) -> np.ndarray:
    """Exact P(x | homodyne outcome at phase pi*j/M, basis), offset marginalized."""
    j = np.asarray(j, dtype=np.int64)
    cand = _candidate_table(c)[j]
    phase = np.exp(-1j * bob_phases(j, c))
    mu = (propagate_loss(c.points(), ch)[cand] * phase[:, None, None]).real
    return _posteriors(np.asarray(y, dtype=float), mu, ch.homodyne_std() ** 2,
                       ch.noiseless)


def _entropy_bits(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p), 0.0)
    return -terms.sum(axis=1)


def _equivocation_chunk(rng, *, x, j, r, i, amp, c, ch):
    del x, r, i
    y = measure_homodyne(amp, bob_phases(j, c), ch, rng)
    z = measure_heterodyne(amp, ch, rng)
    h_eve = _entropy_bits(eve_bit_posteriors(z.values, j, c, ch))
    h_bob = _entropy_bits(bob_bit_posteriors(y.values, j, c, ch))
    return {
        "n": len(j),
        "h_eve": float(h_eve.sum()),
        "h_eve_sq": float((h_eve ** 2).sum()),
        "h_bob": float(h_bob.sum()),
        "h_bob_sq": float((h_bob ** 2).sum()),
    }


def estimate_equivocation(cfg: ExperimentConfig, trials: int | None = None,
                          seed: int | None = None,
                          workers: int | None = None) -> EquivocationReport:
    """Slot-wise conditional entropy of the plaintext bit given each party's
    outcome and the basis index, averaged over simulated slots.

    Requires M <= 16 so the exact posterior stays enumerable.
    """
    if cfg.m_bases > 16:
        raise ValueError(
            f"equivocation estimation requires M <= 16 (exact posterior), got M={cfg.m_bases}"
        )
    seed = cfg.seed if seed is None else seed
    workers = cfg.workers if workers is None else workers
    n_slots = cfg.trials if trials is None else trials
    t = run_chunks(cfg, n_slots, seed, workers, _equivocation_chunk)
    n = int(t["n"])

    def mean_ci(total, total_sq):
        mean = total / n
        var = max(total_sq / n - mean ** 2, 0.0)
        return mean, float(1.96 * np.sqrt(var / n))

    h_eve, ci_eve = mean_ci(t["h_eve"], t["h_eve_sq"])
    h_bob, ci_bob = mean_ci(t["h_bob"], t["h_bob_sq"])
    return EquivocationReport(
        h_x_given_eve_and_key=h_eve,
        h_x_given_bob_and_key=h_bob,
        h_eve_ci95=ci_eve,
        h_bob_ci95=ci_bob,
        n_slots=n,
        key_len=cfg.key_length_bits(),
        seed=seed,
        config=cfg,
    )
