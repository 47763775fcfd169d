"""Model/training configuration and the ``key = value`` config file format."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, fields
from pathlib import Path

PAIR_POLICIES = ("ordered-all", "ordered-no-self", "unordered")
ATTENTION_SCOPES = ("all", "token")
PRECISIONS = ("fp32", "fp64")


class ConfigError(ValueError):
    def __init__(self, problems: dict[str, str]):
        self.problems = problems
        lines = "; ".join(f"{k}: {v}" for k, v in problems.items())
        super().__init__(f"invalid configuration ({lines})")


@dataclass
class ModelConfig:
    word_dim: int = 300
    pos_dim: int = 50
    char_dim: int = 30
    char_filters: int = 32
    kernel_sizes: tuple[int, ...] = (3, 4, 5)
    lstm_hidden: int = 350
    lstm_layers: int = 3
    lstm_dropout: float = 0.0
    ffn_hidden: int = 300
    rep_dim: int = 300  # predicate/argument representation size
    score_dim: int = 150  # pair-score representation size
    attn_dim: int = 150
    refine_hidden: int = 700
    iterations: int = 2
    pair_policy: str = "ordered-all"
    attention_scope: str = "all"
    extra_dim: int = 0  # width of externally supplied token features (contextual hook)
    init_scale: float = 1.0

    def validate(self) -> None:
        bad = {}
        for name in ("word_dim", "pos_dim", "char_dim", "char_filters", "lstm_hidden",
                     "lstm_layers", "ffn_hidden", "rep_dim", "score_dim", "attn_dim", "refine_hidden"):
            if getattr(self, name) < 1:
                bad[name] = "must be >= 1"
        if not self.kernel_sizes or min(self.kernel_sizes) < 1:
            bad["kernel_sizes"] = "must be a non-empty list of positive widths"
        if self.iterations < 0:
            bad["iterations"] = "must be >= 0"
        if self.pair_policy not in PAIR_POLICIES:
            bad["pair_policy"] = f"must be one of {', '.join(PAIR_POLICIES)}"
        if self.attention_scope not in ATTENTION_SCOPES:
            bad["attention_scope"] = f"must be one of {', '.join(ATTENTION_SCOPES)}"
        if not 0.0 <= self.lstm_dropout < 1.0:
            bad["lstm_dropout"] = "must lie in [0, 1)"
        if self.extra_dim < 0:
            bad["extra_dim"] = "must be >= 0"
        if self.init_scale <= 0:
            bad["init_scale"] = "must be > 0"
        if bad:
            raise ConfigError(bad)

    @property
    def token_dim(self) -> int:
        return 2 * self.lstm_hidden


@dataclass
class TrainConfig:
    learning_rate: float = 1e-5
    batch_size: int = 16
    max_epochs: int = 1000
    patience: int = 10
    seed: int = 1
    precision: str = "fp32"
    clip_norm: float = 5.0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    null_weight: float = 1.0  # loss weight of pairs whose gold role is the null label
    deep_supervision: bool = False
    freeze_embeddings: bool = False
    min_freq: int = 2
    target_f1: float | None = None  # stop once dev argument F1 reaches this

    def validate(self) -> None:
        bad = {}
        if self.learning_rate <= 0:
            bad["learning_rate"] = "must be > 0"
        if self.batch_size < 1:
            bad["batch_size"] = "must be >= 1"
        if self.patience < 1:
            bad["patience"] = "must be >= 1"
        if self.max_epochs < 1:
            bad["max_epochs"] = "must be >= 1"
        if self.precision not in PRECISIONS:
            bad["precision"] = f"must be one of {', '.join(PRECISIONS)}"
        if self.clip_norm < 0:
            bad["clip_norm"] = "must be >= 0 (0 disables)"
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            bad["adam_beta1/adam_beta2"] = "must lie in [0, 1)"
        if self.null_weight < 0:
            bad["null_weight"] = "must be >= 0"
        if self.min_freq < 1:
            bad["min_freq"] = "must be >= 1"
        if bad:
            raise ConfigError(bad)


def _parse_value(raw: str, tp):
    raw = raw.strip()
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union or (origin is not None and type(None) in args):
        if raw.lower() in ("none", ""):
            return None
        tp = next(a for a in args if a is not type(None))
        origin = typing.get_origin(tp)
    if origin is tuple:
        return tuple(int(x) for x in raw.replace(",", " ").split())
    if tp is bool:
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if tp is int:
        return int(raw)
    if tp is float:
        return float(raw)
    return raw


def _format_value(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _hints(cls):
    return typing.get_type_hints(cls)


def parse_config(text: str, base: tuple[ModelConfig, TrainConfig] | None = None):
    """Parse ``key = value`` lines into (ModelConfig, TrainConfig).

    ``#`` starts a comment.  Unknown keys and bad values are collected and
    reported together.
    """
    model, train = base if base is not None else (ModelConfig(), TrainConfig())
    model, train = dataclasses.replace(model), dataclasses.replace(train)
    targets = {}
    for obj in (model, train):
        for f in fields(obj):
            targets[f.name] = (obj, _hints(type(obj))[f.name])
    problems = {}
    for no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            problems[f"line {no}"] = "expected 'key = value'"
            continue
        if key not in targets:
            problems[key] = "unknown key"
            continue
        obj, tp = targets[key]
        try:
            setattr(obj, key, _parse_value(value, tp))
        except (ValueError, StopIteration) as exc:
            problems[key] = str(exc)
    for obj in (model, train):
        try:
            obj.validate()
        except ConfigError as exc:
            for key, msg in exc.problems.items():
                problems.setdefault(key, msg)
    if problems:
        raise ConfigError(problems)
    return model, train


def load_config(path: str | Path | None):
    if path is None:
        model, train = ModelConfig(), TrainConfig()
        model.validate()
        train.validate()
        return model, train
    return parse_config(Path(path).read_text(encoding="utf-8"))


def format_config(model: ModelConfig, train: TrainConfig) -> str:
    lines = ["# model"]
    lines += [f"{f.name} = {_format_value(getattr(model, f.name))}" for f in fields(model)]
    lines.append("# training")
    lines += [f"{f.name} = {_format_value(getattr(train, f.name))}" for f in fields(train)]
    return "\n".join(lines) + "\n"


def config_to_dict(cfg) -> dict:
    d = dataclasses.asdict(cfg)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def config_from_dict(cls, d: dict):
    hints = _hints(cls)
    kwargs = {}
    for f in fields(cls):
        if f.name in d:
            v = d[f.name]
            kwargs[f.name] = tuple(v) if typing.get_origin(hints[f.name]) is tuple else v
    return cls(**kwargs)
