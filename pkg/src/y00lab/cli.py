"""Experiment orchestration and machine-readable output.

Subcommands: keystream | encrypt | ber | metrics | equivocation | attack |
otp-demo.  Every run is reproducible from (config, seed) and its result is a
flat sequence of metric rows with a fixed column order; rows go to stdout
unless --output names a destination.  Exit status is 0 on success and nonzero
with a one-line reason otherwise.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import attacks, metrics
from .config import ATTACKS, ConfigError, ExperimentConfig, load_config
from .keystream import derive_trial_seed, expand_key
from .modulation import encrypt_stream
from .simulate import resolve_key_bits, resolve_plaintext

CSV_COLUMNS = ("experiment", "scheme", "M", "amplitude", "dsr_spread", "eta", "xi",
               "trials", "seed", "metric", "estimate", "ci95")


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    scheme: str
    m_bases: int
    amplitude: float
    dsr_spread: int
    eta: float
    xi: float
    trials: int
    seed: int
    metric: str
    estimate: float
    ci95: float

    def as_tuple(self) -> tuple:
        return (self.experiment, self.scheme, self.m_bases, self.amplitude,
                self.dsr_spread, self.eta, self.xi, self.trials, self.seed,
                self.metric, self.estimate, self.ci95)


def _rows(cfg: ExperimentConfig, trials: int, pairs) -> list[ResultRow]:
    experiment = cfg.kind if cfg.kind != "attack" else f"attack:{cfg.attack}"
    return [
        ResultRow(experiment, cfg.scheme, cfg.m_bases, cfg.amplitude, cfg.dsr_spread,
                  cfg.eta, cfg.xi, trials, cfg.seed, name, float(est), float(ci))
        for name, est, ci in pairs
    ]


def _run_keystream(cfg: ExperimentConfig) -> list[ResultRow]:
    n = cfg.trials
    symbols = expand_key(resolve_key_bits(cfg, cfg.seed), n, cfg.m_bases)
    counts = np.bincount(symbols, minlength=cfg.m_bases)
    p = 1.0 / cfg.m_bases
    sd = np.sqrt(n * p * (1.0 - p))
    max_z = float(np.abs(counts - n * p).max() / sd) if sd > 0 else 0.0
    return _rows(cfg, n, [
        ("n_symbols", n, 0.0),
        ("distinct_symbols", int((counts > 0).sum()), 0.0),
        ("uniformity_max_z", max_z, 0.0),
    ])


def _run_encrypt(cfg: ExperimentConfig) -> list[ResultRow]:
    n = cfg.trials
    rng = np.random.default_rng(derive_trial_seed(cfg.seed, 0))
    plaintext = resolve_plaintext(cfg, n)
    x = rng.integers(0, 2, size=n) if plaintext is None else plaintext
    c = cfg.constellation()
    ct = encrypt_stream(x, resolve_key_bits(cfg, cfg.seed), c, rng)
    pts = c.points()
    nn = abs(metrics.coherent_overlap(pts[0], pts[1])) ** 2
    mean_photons = float(np.mean(np.abs(ct.amplitudes) ** 2)) if len(ct) else 0.0
    return _rows(cfg, n, [
        ("slots", len(ct), 0.0),
        ("mean_photon_number", mean_photons, 0.0),
        ("nn_overlap_sq", float(nn), 0.0),
    ])


def _run_ber(cfg: ExperimentConfig) -> list[ResultRow]:
    rep = metrics.run_ber_experiment(cfg)
    theory = metrics.bob_theory_ber(cfg.constellation(), cfg.channel())
    return _rows(cfg, rep.trials, [
        ("bob_ber", rep.bob_ber, rep.bob_ber_ci95),
        ("bob_ber_theory", theory, 0.0),
        ("eve_index_accuracy", rep.eve_index_accuracy, rep.eve_index_accuracy_ci95),
        ("eve_bit_ber_given_key", rep.eve_bit_ber_given_key, rep.eve_bit_ber_given_key_ci95),
        ("eve_keyless_bit_accuracy", rep.eve_keyless_bit_accuracy,
         rep.eve_keyless_bit_accuracy_ci95),
    ])


def _run_metrics(cfg: ExperimentConfig) -> list[ResultRow]:
    c = cfg.constellation()
    ch = cfg.channel()
    pts = c.points()
    pair = (pts[0], pts[c.m_bases])  # the two points of basis 0
    pairs = [
        ("helstrom_pair_error", metrics.helstrom_binary(pair[0], pair[1], 0.5), 0.0),
        ("nn_overlap_sq", abs(metrics.coherent_overlap(pts[0], pts[1])) ** 2, 0.0),
    ]
    if c.amplitude > 0:
        pairs.append(("masking_number", metrics.masking_number(c, ch.heterodyne_std()), 0.0))
    if c.scheme == "psk":
        pairs.append(("holevo_chi", metrics.uniform_ring_chi(c), 0.0))
    elif c.n_points <= 512:
        pairs.append(("holevo_chi", metrics.holevo_chi(metrics.ring_ensemble(c)), 0.0))
    return _rows(cfg, 0, pairs)


def _run_equivocation(cfg: ExperimentConfig) -> list[ResultRow]:
    rep = metrics.estimate_equivocation(cfg)
    print(f"note: {rep.note}", file=sys.stderr)
    return _rows(cfg, rep.n_slots, [
        ("h_x_given_eve_and_key", rep.h_x_given_eve_and_key, rep.h_eve_ci95),
        ("h_x_given_bob_and_key", rep.h_x_given_bob_and_key, rep.h_bob_ci95),
        ("h_eve_total_bits", rep.h_eve_total_bits, rep.h_eve_ci95 * rep.n_slots),
        ("key_length_bits", rep.key_len, 0.0),
    ])


def _run_attack(cfg: ExperimentConfig) -> list[ResultRow]:
    if cfg.attack == "record":
        rep = attacks.record_ciphertext_attack(cfg)
    elif cfg.attack == "intercept-resend":
        rep = attacks.intercept_resend_attack(cfg)
    else:
        rep = attacks.known_plaintext_key_search(cfg)
    return _rows(cfg, rep.trials,
                 [(k, v, rep.ci95.get(k, 0.0)) for k, v in rep.metrics.items()])


def _run_otp_demo(cfg: ExperimentConfig) -> list[ResultRow]:
    rng = np.random.default_rng(derive_trial_seed(cfg.seed, 0))
    word = attacks.TOY_CORPUS[cfg.seed % len(attacks.TOY_CORPUS)]
    plaintext = attacks.ascii_bits(word)
    key = rng.integers(0, 2, size=len(plaintext))
    # Falsification: every flip mask of the leading 8 bits must forge pt ^ mask.
    ok = True
    for mask_int in range(256):
        mask = np.zeros(len(plaintext), dtype=np.int64)
        mask[:8] = (mask_int >> np.arange(7, -1, -1)) & 1
        forged = attacks.otp_falsification_demo(plaintext, key, mask)
        ok = ok and np.array_equal(forged, plaintext ^ mask)
    ciphertext = plaintext ^ key
    offset = 4
    fragment = plaintext[offset:offset + 8]
    cands = attacks.otp_partial_kpa_demo(attacks.TOY_CORPUS, ciphertext, fragment, offset)
    rank = next((k + 1 for k, cand in enumerate(cands) if cand.word == word), 0)
    return _rows(cfg, 256 + len(attacks.TOY_CORPUS), [
        ("falsification_ok", 1.0 if ok else 0.0, 0.0),
        ("kpa_true_word_rank", rank, 0.0),
        ("kpa_candidate_count", len(cands), 0.0),
    ])


_RUNNERS = {
    "keystream": _run_keystream,
    "encrypt": _run_encrypt,
    "ber": _run_ber,
    "metrics": _run_metrics,
    "equivocation": _run_equivocation,
    "attack": _run_attack,
    "otp-demo": _run_otp_demo,
}


def run(cfg: ExperimentConfig) -> list[ResultRow]:
    """Dispatch a validated config to its experiment; deterministic for a fixed
    (config, seed) and independent of the worker count."""
    try:
        return _RUNNERS[cfg.kind](cfg)
    except Exception as exc:
        raise RuntimeError(f"{cfg.kind}: {exc}") from exc


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def emit(rows, fmt: str = "csv", destination: str | None = None) -> None:
    """Write rows as CSV (header + one line per row, floats at 10 significant
    digits) or JSON-lines with the same keys, to a path or stdout."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to emit")
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        lines += [",".join(_fmt(v) for v in row.as_tuple()) for row in rows]
    elif fmt == "jsonl":
        lines = [json.dumps(dict(zip(CSV_COLUMNS, row.as_tuple()))) for row in rows]
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    text = "\n".join(lines) + "\n"
    if destination is None:
        sys.stdout.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key = value config file")
    sub.add_argument("--scheme", choices=("psk", "isk"))
    sub.add_argument("--M", type=int, dest="M", help="basis count (power of two)")
    sub.add_argument("--amplitude", type=float)
    sub.add_argument("--dsr-spread", type=int, dest="dsr_spread")
    sub.add_argument("--eta", type=float, help="channel transmittance")
    sub.add_argument("--xi", type=float, help="excess noise per quadrature")
    sub.add_argument("--key", help="explicit key bits, e.g. 0110...")
    sub.add_argument("--key-len", type=int, dest="key_len")
    sub.add_argument("--plaintext", help="'random' or a file of 0/1 characters")
    sub.add_argument("--trials", type=int)
    sub.add_argument("--seed", type=int, help="master seed (default 0)")
    sub.add_argument("--noiseless", action="store_const", const=True, default=None,
                     help="force measurement variance to zero")
    sub.add_argument("--workers", type=int)
    sub.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    sub.add_argument("--output", help="destination path (default: stdout)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="y00lab",
        description="Y-00 quantum stream cipher simulation lab",
    )
    subs = parser.add_subparsers(dest="kind", required=True)
    for kind in ("keystream", "encrypt", "ber", "metrics", "equivocation", "otp-demo"):
        _add_common_flags(subs.add_parser(kind))
    atk = subs.add_parser("attack")
    _add_common_flags(atk)
    atk.add_argument("--attack", choices=ATTACKS, dest="attack")
    return parser


_OVERRIDE_KEYS = ("scheme", "M", "amplitude", "dsr_spread", "eta", "xi", "key",
                  "key_len", "plaintext", "trials", "seed", "noiseless", "attack",
                  "workers")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in _OVERRIDE_KEYS
                 if getattr(args, k, None) is not None}
    try:
        cfg = load_config(args.config, overrides, kind=args.kind)
        rows = run(cfg)
        emit(rows, fmt=args.format, destination=args.output)
    except (ConfigError, RuntimeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
