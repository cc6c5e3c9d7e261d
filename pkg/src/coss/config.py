"""Run configuration: defaults, validation, INI round-trip, stable hashing.

Every key has a default; only data paths (which live on the command line,
not in the file) are mandatory.  Validation failures name the violated
invariant so the CLI can surface it verbatim.
"""

from __future__ import annotations

import configparser
import hashlib
import io as _stdio
import json
from dataclasses import dataclass, fields, replace

from .errors import ConfigError
from .models import ACTIVATIONS, MlpSpec

LOSS_VARIANTS = ("coss", "co_only", "ss_only", "bn")


@dataclass(frozen=True)
class DistillConfig:
    lam: float = 1.0            # weight on the space-similarity term
    beta: float = 1.0           # overall loss scale
    k: int = 4                  # neighbours appended per anchor
    pool: int = 16              # neighbour candidates stored per sample
    batch_size: int = 64
    epochs: int = 50
    lr: float = 0.5
    momentum: float = 0.9
    weight_decay: float = 0.0
    aug_sigma: float = 0.05     # additive Gaussian noise scale
    seed: int = 0
    loss_variant: str = "coss"
    bn_eps: float = 1e-5
    student_hidden: tuple[int, ...] = (48,)
    student_dim: int = 8
    student_activation: str = "relu"

    def student_spec(self, input_dim: int) -> MlpSpec:
        dims = (input_dim, *self.student_hidden, self.student_dim)
        return MlpSpec(dims, hidden_activation=self.student_activation)

    def replace(self, **kwargs) -> "DistillConfig":
        return replace(self, **kwargs)


def validate_config(cfg: DistillConfig) -> None:
    """Raise ConfigError naming the first violated invariant."""
    if cfg.lam < 0:
        raise ConfigError("lambda ≥ 0")
    if cfg.beta <= 0:
        raise ConfigError("beta > 0")
    if cfg.k < 0:
        raise ConfigError("k ≥ 0")
    if cfg.pool < 1:
        raise ConfigError("pool ≥ 1")
    if cfg.k > cfg.pool:
        raise ConfigError("k ≤ pool")
    if cfg.batch_size < 1:
        raise ConfigError("batch_size ≥ 1")
    if cfg.epochs < 1:
        raise ConfigError("epochs ≥ 1")
    if cfg.lr < 0:
        raise ConfigError("lr ≥ 0")
    if not 0.0 <= cfg.momentum < 1.0:
        raise ConfigError("momentum ∈ [0, 1)")
    if cfg.weight_decay < 0:
        raise ConfigError("weight_decay ≥ 0")
    if cfg.aug_sigma < 0:
        raise ConfigError("aug_sigma ≥ 0")
    if cfg.loss_variant not in LOSS_VARIANTS:
        raise ConfigError("loss_variant ∈ {coss, co_only, ss_only, bn}")
    if cfg.bn_eps <= 0:
        raise ConfigError("bn_eps > 0")
    if cfg.loss_variant == "bn" and cfg.batch_size * (1 + cfg.k) < 2:
        raise ConfigError("batch_size × (1 + k) ≥ 2 for bn")
    if not cfg.student_hidden or any(h < 1 for h in cfg.student_hidden):
        raise ConfigError("student hidden dims ≥ 1")
    if cfg.student_dim < 1:
        raise ConfigError("student output_dim ≥ 1")
    if cfg.student_activation not in ACTIVATIONS:
        raise ConfigError(f"student activation ∈ {set(ACTIVATIONS)}")


# config-file key -> dataclass field, per section
_DISTILL_KEYS = {
    "lambda": "lam",
    "beta": "beta",
    "k": "k",
    "pool": "pool",
    "batch_size": "batch_size",
    "epochs": "epochs",
    "lr": "lr",
    "momentum": "momentum",
    "weight_decay": "weight_decay",
    "aug_sigma": "aug_sigma",
    "seed": "seed",
    "loss_variant": "loss_variant",
    "bn_eps": "bn_eps",
}
_STUDENT_KEYS = {
    "hidden_dims": "student_hidden",
    "output_dim": "student_dim",
    "activation": "student_activation",
}

_INT_FIELDS = {"k", "pool", "batch_size", "epochs", "seed", "student_dim"}
_STR_FIELDS = {"loss_variant", "student_activation"}


def _parse_value(field_name: str, raw: str):
    raw = raw.strip()
    try:
        if field_name == "student_hidden":
            return tuple(int(part) for part in raw.split(",") if part.strip())
        if field_name in _STR_FIELDS:
            return raw
        if field_name in _INT_FIELDS:
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {field_name}: {raw!r}") from exc


def parse_config_text(text: str) -> DistillConfig:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    overrides = {}
    for section, keymap in (("distill", _DISTILL_KEYS), ("student", _STUDENT_KEYS)):
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            if key not in keymap:
                raise ConfigError(f"unknown key [{section}] {key}")
            overrides[keymap[key]] = _parse_value(keymap[key], raw)
    for section in parser.sections():
        if section not in ("distill", "student"):
            raise ConfigError(f"unknown section [{section}]")
    cfg = DistillConfig(**overrides)
    validate_config(cfg)
    return cfg


def load_config(path) -> DistillConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def render_config(cfg: DistillConfig) -> str:
    """Canonical INI text; identical configs render byte-identically."""
    parser = configparser.ConfigParser()
    parser.add_section("distill")
    for key, name in _DISTILL_KEYS.items():
        value = getattr(cfg, name)
        parser.set("distill", key, value if isinstance(value, str) else repr(value))
    parser.add_section("student")
    parser.set("student", "hidden_dims", ",".join(str(h) for h in cfg.student_hidden))
    parser.set("student", "output_dim", repr(cfg.student_dim))
    parser.set("student", "activation", cfg.student_activation)
    buf = _stdio.StringIO()
    parser.write(buf)
    return buf.getvalue()


def config_dict(cfg: DistillConfig) -> dict:
    d = {f.name: getattr(cfg, f.name) for f in fields(DistillConfig)}
    d["student_hidden"] = list(cfg.student_hidden)
    return d


def config_hash(cfg: DistillConfig, exclude: tuple[str, ...] = ()) -> str:
    """SHA-256 over a canonical JSON form; stable under key reordering."""
    d = {k: v for k, v in config_dict(cfg).items() if k not in exclude}
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
