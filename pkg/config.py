"""
Run configuration.

Config files are flat ``key = value`` text; ``#`` starts a comment and
there are no includes. Every key must be a RunConfig field.
"""

import dataclasses
import hashlib
import os
from dataclasses import dataclass, fields

from errors import ConfigError, MissingInputError

RUN_ROOT_ENV = "SGALIGN_RUN_ROOT"

DECODER_VARIANTS = ("avg", "att-shared", "att")
GAN_KINDS = ("bce", "mse", "gp")
MAPPINGS = ("separate", "shared", "single")
MAPPER_INITS = ("identity", "random", "moments")
UNKNOWN_POLICIES = ("error", "reserved")

# fields that change tensor shapes or the forward computation
ARCHITECTURE_FIELDS = ("d_e", "d_x", "d_f", "d_h", "variant")


@dataclass
class RunConfig:
    # ---------------- corpus ----------------
    seed: int = 0
    data_dir: str = "data"
    n_sentences: int = 2500
    min_word_count: int = 5
    min_symbol_count: int = 0
    max_len: int = 16
    unknown_symbols: str = "error"

    # ---------------- model ----------------
    d_e: int = 64
    d_x: int = 64
    d_f: int = 64
    d_h: int = 64
    variant: str = "att"

    # ---------------- text training ----------------
    lr: float = 4e-4
    lr_decay: float = 0.8
    lr_decay_every: int = 5
    batch_size: int = 50
    xe_epochs: int = 20
    rl_epochs: int = 10
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip: float = 5.0

    # ---------------- inference ----------------
    beam: int = 5
    length_normalize: bool = False

    # ---------------- alignment ----------------
    gan_kind: str = "gp"
    disc_out_dim: int = 64
    disc_hidden_mult: int = 4
    cycle_weight: float = 10.0
    gp_weight: float = 10.0
    disc_steps: int = 1
    nonsaturating: bool = False
    mapping: str = "separate"
    mapper_init: str = "moments"
    align_calibrate: bool = True
    align_epochs: int = 30
    align_batch_size: int = 50
    align_lr: float = 1e-4
    align_beta1: float = 0.5
    align_beta2: float = 0.9

    def validate(self) -> "RunConfig":
        problems = []
        for name in ("d_e", "d_x", "d_f", "d_h", "n_sentences", "max_len", "batch_size",
                     "lr_decay_every", "beam", "disc_hidden_mult", "disc_steps", "align_batch_size"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        for name in ("lr", "align_lr", "adam_eps", "grad_clip", "lr_decay"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be > 0")
        for name in ("xe_epochs", "rl_epochs", "align_epochs", "min_word_count",
                     "min_symbol_count", "cycle_weight", "gp_weight"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        for name in ("adam_beta1", "adam_beta2", "align_beta1", "align_beta2"):
            if not 0 <= getattr(self, name) < 1:
                problems.append(f"{name} must be in [0, 1)")

        choices = {
            "variant": DECODER_VARIANTS,
            "gan_kind": GAN_KINDS,
            "mapping": MAPPINGS,
            "mapper_init": MAPPER_INITS,
            "unknown_symbols": UNKNOWN_POLICIES,
        }
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                problems.append(f"{name} must be one of {', '.join(allowed)}")

        if self.d_f != self.d_x:
            problems.append("d_f must equal d_x")
        if self.disc_out_dim not in (1, 64, self.d_f):
            problems.append(f"disc_out_dim must be 1, 64 or d_f ({self.d_f})")

        if problems:
            raise ConfigError("invalid config: " + "; ".join(problems))
        return self

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes).validate()

    def dump(self) -> str:
        lines = [f"{f.name} = {_format_value(getattr(self, f.name))}" for f in fields(self)]
        return "\n".join(lines) + "\n"

    def model_hash(self) -> str:
        """sha256 over the fields that decide tensor shapes and computation."""
        text = "\n".join(f"{name}={getattr(self, name)}" for name in ARCHITECTURE_FIELDS)
        return hashlib.sha256(text.encode()).hexdigest()


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _coerce(name: str, kind, raw: str, line_no: int):
    try:
        if kind is bool:
            lowered = raw.lower()
            if lowered not in ("true", "false"):
                raise ValueError(raw)
            return lowered == "true"
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"line {line_no}: '{name}' expects {kind.__name__}, got {raw!r}") from None


def parse_config(text: str) -> RunConfig:
    kinds = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in kinds:
            raise ConfigError(f"line {line_no}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {line_no}: '{key}' set twice")
        values[key] = _coerce(key, kinds[key], value, line_no)
    return RunConfig(**values).validate()


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    if not os.path.exists(path):
        raise MissingInputError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return parse_config(f.read())


def run_root() -> str:
    return os.environ.get(RUN_ROOT_ENV, "runs")
