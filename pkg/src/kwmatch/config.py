"""Model and training configuration plus the flat ``key = value`` config file."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from .errors import ConfigError


@dataclass
class ModelConfig:
    # embedding provider
    embedding_mode: str = "trainable"  # hash | file | trainable
    embedding_init: str = "hash"  # trainable table init: hash | normal
    embedding_file: str = ""
    embedding_dim: int = 64
    embedding_seed: int = 0
    train_embeddings: bool = True
    aliases_file: str = ""
    # text pipeline
    segment_mode: str = "whitespace"
    bucket_count: int = 100
    stopwords_file: str = ""
    # importance network
    idf_embedding_dim: int = 64
    pos_embedding_dim: int = 16
    stopword_embedding_dim: int = 8
    embnn_widths: tuple = (128, 64, 64)
    efnn_widths: tuple = (64, 64, 64)
    jinn_widths: tuple = (64, 32, 1)
    coa_width: int = 0  # 0 -> embedding_dim
    # matching unit
    mlp_view_width: int = 64
    att_width: int = 0  # 0 -> embedding_dim
    att_heads: int = 4
    ffn_width: int = 128
    max_seq: int = 64
    top_widths: tuple = (128, 64)
    bm25_k1: float = 1.2
    bm25_b: float = 0.75
    dropout: float = 0.3
    dtype: str = "float32"
    # ablations
    no_mlp: bool = False
    no_att: bool = False
    no_lm: bool = False
    no_ef: bool = False
    no_dsr: bool = False
    importance_one: bool = False
    importance_tfidf: bool = False
    level_limit: int = 0  # 0 = all pairs

    def __post_init__(self):
        self.validate()

    @property
    def coa_dim(self) -> int:
        return self.coa_width or self.embedding_dim

    @property
    def att_dim(self) -> int:
        return self.att_width or self.embedding_dim

    @property
    def importance_mode(self) -> str:
        if self.importance_one:
            return "one"
        if self.importance_tfidf:
            return "tfidf"
        return "learned"

    def validate(self) -> None:
        if self.embedding_mode not in ("hash", "file", "trainable"):
            raise ConfigError(f"embedding_mode must be hash, file or trainable, not {self.embedding_mode!r}")
        if self.importance_one and self.importance_tfidf:
            raise ConfigError("importance_one and importance_tfidf are mutually exclusive")
        if self.no_ef and self.no_dsr and self.importance_mode == "learned":
            raise ConfigError("no_ef and no_dsr together leave the importance network without input")
        if self.no_mlp and self.no_att and self.no_lm:
            raise ConfigError("at least one matching view must stay enabled")
        if self.jinn_widths and self.jinn_widths[-1] != 1:
            raise ConfigError("the last importance layer must have width 1")
        if self.att_dim % self.att_heads:
            raise ConfigError(f"attention width {self.att_dim} not divisible by {self.att_heads} heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.level_limit < 0:
            raise ConfigError("level_limit must be >= 0")
        if self.max_seq < 5:
            raise ConfigError("max_seq must fit at least one keyword per side")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError("dtype must be float32 or float64")
        for name in ("embedding_dim", "bucket_count", "idf_embedding_dim", "pos_embedding_dim",
                     "stopword_embedding_dim", "mlp_view_width", "ffn_width"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")

    def variant_name(self) -> str:
        flags = [f.name for f in fields(self) if f.type in ("bool", bool)
                 and f.name.startswith(("no_", "importance_")) and getattr(self, f.name)]
        if self.level_limit:
            flags.append(f"level_limit={self.level_limit}")
        return "+".join(flags) or "full"


@dataclass
class TrainingConfig:
    batch_size: int = 32
    learning_rate: float = 2e-5
    lr_multiplier: float = 50.0
    epochs: int = 10
    warmup_fraction: float = 0.1
    weight_decay: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError("warmup_fraction must be in [0, 1)")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")

    @property
    def peak_lr(self) -> float:
        return self.learning_rate * self.lr_multiplier


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_value(field_type, raw: str, key: str):
    t = field_type if isinstance(field_type, str) else getattr(field_type, "__name__", str(field_type))
    try:
        if t == "bool":
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if t == "int":
            return int(raw)
        if t == "float":
            return float(raw)
        if t == "tuple":
            return tuple(int(x) for x in raw.replace(" ", "").split(",") if x)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def config_items(cfg) -> list[tuple[str, str]]:
    return [(f.name, format_value(getattr(cfg, f.name))) for f in fields(cfg)]


def parse_pairs(pairs, model: ModelConfig | None = None, training: TrainingConfig | None = None):
    """Apply ``(key, raw)`` pairs onto copies of the two config objects."""
    mvals = dataclasses.asdict(model or ModelConfig())
    tvals = dataclasses.asdict(training or TrainingConfig())
    mtypes = {f.name: f.type for f in fields(ModelConfig)}
    ttypes = {f.name: f.type for f in fields(TrainingConfig)}
    for key, raw in pairs:
        if key in mtypes:
            mvals[key] = _parse_value(mtypes[key], raw, key)
        elif key in ttypes:
            tvals[key] = _parse_value(ttypes[key], raw, key)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    for k, v in mvals.items():
        if isinstance(v, list):
            mvals[k] = tuple(v)
    return ModelConfig(**mvals), TrainingConfig(**tvals)


def read_config_text(text: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        pairs.append((key.strip(), raw.strip()))
    return pairs


def load_config(path, model: ModelConfig | None = None, training: TrainingConfig | None = None):
    with open(path, encoding="utf-8") as fh:
        return parse_pairs(read_config_text(fh.read()), model, training)
