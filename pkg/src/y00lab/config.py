"""Experiment configuration: defaults, file/override loading, validation.

Config files are flat `key = value` lines ('#' starts a comment).  Keys match
the CSV echo columns where they overlap (M, amplitude, dsr_spread, eta, xi,
trials, seed) plus scheme, kind, key, key_len, plaintext, noiseless, attack,
workers.  Unknown keys are rejected with a nearest-match hint.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass, replace

from .channel import ChannelModel
from .modulation import Constellation

KINDS = ("keystream", "encrypt", "ber", "metrics", "equivocation", "attack", "otp-demo")
ATTACKS = ("record", "intercept-resend", "key-search")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    scheme: str = "psk"
    m_bases: int = 2048          # 2M = 4096 signal points by default
    amplitude: float = 10.0
    dsr_spread: int = 0
    eta: float = 1.0
    xi: float = 0.0
    key: str = ""                # explicit key bits; empty -> random key of key_len bits
    key_len: int = 64
    plaintext: str = "random"    # "random" or a path to a file of 0/1 characters
    trials: int = 100_000
    seed: int = 0
    noiseless: bool = False      # force measurement variance to zero (classical limit)
    attack: str = "record"
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.attack not in ATTACKS:
            raise ConfigError(f"attack must be one of {ATTACKS}, got {self.attack!r}")
        if self.trials < 0:
            raise ConfigError(f"trials must be >= 0, got {self.trials}")
        if self.key_len < 1:
            raise ConfigError(f"key_len must be >= 1, got {self.key_len}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.key and any(ch not in "01" for ch in self.key):
            raise ConfigError("key must be a string of 0/1 characters")
        # Delegate the physics invariants so error messages name them once.
        self.constellation()
        self.channel()

    def constellation(self) -> Constellation:
        return Constellation(self.scheme, self.m_bases, self.amplitude, self.dsr_spread)

    def channel(self) -> ChannelModel:
        return ChannelModel(self.eta, self.xi, self.noiseless)

    def key_length_bits(self) -> int:
        return len(self.key) if self.key else self.key_len


# config-file key -> (attribute, parser)
def _parse_bool(v: str) -> bool:
    lv = v.strip().lower()
    if lv in ("1", "true", "yes", "on"):
        return True
    if lv in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


_FIELDS = {
    "kind": ("kind", str),
    "scheme": ("scheme", lambda v: str(v).lower()),
    "M": ("m_bases", int),
    "amplitude": ("amplitude", float),
    "dsr_spread": ("dsr_spread", int),
    "eta": ("eta", float),
    "xi": ("xi", float),
    "key": ("key", str),
    "key_len": ("key_len", int),
    "plaintext": ("plaintext", str),
    "trials": ("trials", int),
    "seed": ("seed", int),
    "noiseless": ("noiseless", _parse_bool),
    "attack": ("attack", str),
    "workers": ("workers", int),
}


def _coerce(key: str, value) -> tuple[str, object]:
    if key not in _FIELDS:
        hint = difflib.get_close_matches(key, _FIELDS.keys(), n=1)
        suffix = f" (did you mean {hint[0]!r}?)" if hint else ""
        raise ConfigError(f"unknown config key {key!r}{suffix}")
    attr, parser = _FIELDS[key]
    if isinstance(value, str):
        try:
            value = parser(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    return attr, value


def load_config(path: str | None = None, overrides: dict | None = None,
                kind: str | None = None) -> ExperimentConfig:
    """Build a validated config from an optional file plus inline overrides.

    Overrides win over the file; `kind` (usually the CLI subcommand) wins over
    both.  Every field except kind has a default.
    """
    fields: dict[str, object] = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
            key, _, value = text.partition("=")
            try:
                attr, val = _coerce(key.strip(), value.strip())
            except ConfigError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
            fields[attr] = val
    for key, value in (overrides or {}).items():
        attr, val = _coerce(key, value)
        fields[attr] = val
    if kind is not None:
        fields["kind"] = kind
    if "kind" not in fields:
        raise ConfigError("experiment kind is required (it is the only field with no default)")
    return ExperimentConfig(**fields)


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(cfg, **changes)
