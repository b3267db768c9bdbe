"""Per-kind training hyperparameters."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

from ..domain import ConfigError

KINDS = ("rules", "lr", "dt", "rf", "gbt", "mlp")
LEARNED_KINDS = ("lr", "dt", "rf", "gbt", "mlp")


def _positive_int(name, v):
    if int(v) != v or int(v) < 1:
        raise ConfigError(f"{name} must be a positive integer, got {v!r}")


def _rate(name, v):
    if not (0.0 < float(v) <= 1.0):
        raise ConfigError(f"{name} must lie in (0, 1], got {v!r}")


def _non_negative(name, v):
    if not (math.isfinite(float(v)) and float(v) >= 0.0):
        raise ConfigError(f"{name} must be >= 0, got {v!r}")


@dataclass(frozen=True)
class BaseConfig:
    seed: int = 0
    threshold: float = 0.5

    def __post_init__(self):
        if not (0.0 < float(self.threshold) < 1.0):
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    def with_seed(self, seed: int):
        d = self.to_dict()
        d["seed"] = int(seed)
        return type(self)(**d)


@dataclass(frozen=True)
class LRConfig(BaseConfig):
    learning_rate: float = 0.1
    epochs: int = 200
    l2: float = 1e-4
    batch_size: int = 256

    def __post_init__(self):
        super().__post_init__()
        _rate("learning_rate", self.learning_rate)
        _positive_int("epochs", self.epochs)
        _positive_int("batch_size", self.batch_size)
        _non_negative("l2", self.l2)


@dataclass(frozen=True)
class DTConfig(BaseConfig):
    max_depth: int = 8
    min_samples_leaf: int = 20

    def __post_init__(self):
        super().__post_init__()
        _positive_int("max_depth", self.max_depth)
        _positive_int("min_samples_leaf", self.min_samples_leaf)


@dataclass(frozen=True)
class RFConfig(BaseConfig):
    n_trees: int = 100
    max_features: float | str = "sqrt"
    bootstrap: bool = True
    max_depth: int = 10
    min_samples_leaf: int = 5

    def __post_init__(self):
        super().__post_init__()
        _positive_int("n_trees", self.n_trees)
        _positive_int("max_depth", self.max_depth)
        _positive_int("min_samples_leaf", self.min_samples_leaf)
        if self.max_features != "sqrt":
            _rate("max_features", self.max_features)

    def n_features(self, d: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(round(math.sqrt(d))))
        return max(1, int(round(float(self.max_features) * d)))


@dataclass(frozen=True)
class GBTConfig(BaseConfig):
    n_rounds: int = 200
    shrinkage: float = 0.1
    max_depth: int = 3
    min_samples_leaf: int = 10

    def __post_init__(self):
        super().__post_init__()
        _positive_int("n_rounds", self.n_rounds)
        _rate("shrinkage", self.shrinkage)
        _positive_int("max_depth", self.max_depth)
        _positive_int("min_samples_leaf", self.min_samples_leaf)


@dataclass(frozen=True)
class MLPConfig(BaseConfig):
    hidden: tuple = (64,)
    learning_rate: float = 0.01
    epochs: int = 50
    batch_size: int = 128
    l2: float = 1e-4

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        super().__post_init__()
        if not self.hidden:
            raise ConfigError("MLP needs at least one hidden layer")
        for h in self.hidden:
            _positive_int("hidden layer size", h)
        _rate("learning_rate", self.learning_rate)
        _positive_int("epochs", self.epochs)
        _positive_int("batch_size", self.batch_size)
        _non_negative("l2", self.l2)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


DEFAULT_RULES = """\
# fire SERVICE_A when any line matches
prior_service_a_calls_3m >= 1
services_expiring_60d >= 1
"""


@dataclass(frozen=True)
class RulesConfig(BaseConfig):
    rules: str = field(default=DEFAULT_RULES)


CONFIG_TYPES = {
    "rules": RulesConfig,
    "lr": LRConfig,
    "dt": DTConfig,
    "rf": RFConfig,
    "gbt": GBTConfig,
    "mlp": MLPConfig,
}


def default_config(kind: str, **overrides):
    return config_from_dict(kind, overrides)


def config_from_dict(kind: str, d: dict | None):
    if kind not in CONFIG_TYPES:
        raise ConfigError(f"unknown model kind {kind!r}; choose from {', '.join(KINDS)}")
    cls = CONFIG_TYPES[kind]
    d = dict(d or {})
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown {kind} hyperparameters: {sorted(unknown)}")
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
