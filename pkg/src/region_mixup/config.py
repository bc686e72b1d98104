"""``key = value`` run configuration files."""
from __future__ import annotations

from dataclasses import dataclass, field, fields

from .core import ConfigError
from .train import TrainConfig


def _parse_int(s):
    return int(s, 10)


def _parse_switch(s):
    if s not in ("on", "off"):
        raise ValueError("expected on or off")
    return s == "on"


def _parse_milestones(s):
    return tuple(int(p, 10) for p in s.split(",") if p.strip())


def _parse_path(s):
    if not s:
        raise ValueError("empty path")
    return s


# key -> (parser, formatter)
_KEYS = {
    "dataset_train": (_parse_path, str),
    "dataset_test": (_parse_path, str),
    "out_dir": (_parse_path, str),
    "limit": (_parse_int, str),
    "method": (str, str),
    "k": (_parse_int, str),
    "alpha": (float, repr),
    "epochs": (_parse_int, str),
    "batch_size": (_parse_int, str),
    "base_lr": (float, repr),
    "momentum": (float, repr),
    "weight_decay": (float, repr),
    "lr_milestones": (_parse_milestones, lambda v: ",".join(str(m) for m in v)),
    "lr_factor": (float, repr),
    "standard_ce": (_parse_switch, lambda v: "on" if v else "off"),
    "seed": (_parse_int, str),
    "augment": (str, str),
}
_TRAIN_KEYS = {f.name for f in fields(TrainConfig)}


@dataclass
class RunConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    dataset_train: str | None = None
    dataset_test: str | None = None
    out_dir: str | None = None
    limit: int | None = None

    def get(self, key):
        return getattr(self.train, key) if key in _TRAIN_KEYS else getattr(self, key)

    def set(self, key, value):
        if key in _TRAIN_KEYS:
            setattr(self.train, key, value)
        else:
            setattr(self, key, value)

    def validate(self):
        self.train.validate()
        if self.limit is not None and self.limit < 1:
            raise ConfigError(f"limit must be >= 1, got {self.limit}")


def parse_config(text: str) -> RunConfig:
    """Parse config text. Unknown keys, duplicates and bad values raise ConfigError naming the line."""
    cfg = RunConfig()
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        parser, _ = _KEYS[key]
        try:
            cfg.set(key, parser(value))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value {value!r} for {key}: {exc}") from None
        try:
            cfg.validate()
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    lines = []
    for key, (_, fmt) in _KEYS.items():
        value = cfg.get(key)
        if value is not None:
            lines.append(f"{key} = {fmt(value)}")
    return "\n".join(lines) + "\n"
