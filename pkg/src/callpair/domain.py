"""Shared vocabulary: labels, stage timings, confusion counts and call records."""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from enum import IntEnum


class CallPairError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CallPairError, ValueError):
    pass


class DataError(CallPairError, ValueError):
    pass


class NoDataError(DataError):
    """Raised when an operation receives an empty collection it cannot summarise."""


class InvariantError(CallPairError):
    """A cross-check between two independent computations failed."""


class Label(IntEnum):
    """Binary routing target. SERVICE_A is the positive class."""

    OTHER = 0
    SERVICE_A = 1

    @classmethod
    def parse(cls, value) -> "Label":
        if isinstance(value, Label):
            return value
        if isinstance(value, str):
            key = value.strip().upper()
            if key in cls.__members__:
                return cls[key]
            raise DataError(f"unknown label {value!r}")
        try:
            return cls(int(value))
        except ValueError as exc:
            raise DataError(f"unknown label {value!r}") from exc


def _check_duration(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ConfigError(f"{name} must be a positive finite number of seconds, got {value!r}")
    return value


@dataclass(frozen=True)
class TimingParams:
    """Average stage durations in seconds.

    ``t_stage1`` is keypad navigation through the IVR, ``t_stage2`` is queueing
    plus agent service, ``t_pred`` is the prediction confirmation message.
    """

    t_stage1: float = 45.0
    t_stage2: float = 180.0
    t_pred: float = 5.0

    def __post_init__(self):
        for name in ("t_stage1", "t_stage2", "t_pred"):
            object.__setattr__(self, name, _check_duration(name, getattr(self, name)))
        if not self.t_pred < self.t_stage1:
            raise ConfigError(
                f"t_pred ({self.t_pred}) must be smaller than t_stage1 ({self.t_stage1})"
            )

    @classmethod
    def parse(cls, text: str) -> "TimingParams":
        """Parse ``"T1,T2,TPRED"``."""
        parts = [p for p in text.replace(" ", "").split(",") if p]
        if len(parts) != 3:
            raise ConfigError(f"timing must be T1,T2,TPRED; got {text!r}")
        try:
            t1, t2, tp = (float(p) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"timing must be numeric; got {text!r}") from exc
        return cls(t1, t2, tp)

    def scaled(self, k: float) -> "TimingParams":
        return TimingParams(self.t_stage1 * k, self.t_stage2 * k, self.t_pred * k)

    def to_dict(self) -> dict:
        return {"t_stage1": self.t_stage1, "t_stage2": self.t_stage2, "t_pred": self.t_pred}


@dataclass(frozen=True)
class ConfusionCounts:
    """Binary confusion tallies, positional order ``(tn, fp, fn, tp)``.

    The positional order follows the column order of the reference
    confusion tables; use keywords when in doubt.
    """

    tn: int = 0
    fp: int = 0
    fn: int = 0
    tp: int = 0

    def __post_init__(self):
        for name in ("tn", "fp", "fn", "tp"):
            v = getattr(self, name)
            if isinstance(v, float):
                if not v.is_integer():
                    raise DataError(f"{name} must be an integer count, got {v!r}")
                v = int(v)
            v = int(v)
            if v < 0:
                raise DataError(f"{name} must be non-negative, got {v}")
            object.__setattr__(self, name, v)

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    @property
    def predicted_positive(self) -> int:
        return self.tp + self.fp

    @property
    def actual_positive(self) -> int:
        return self.tp + self.fn

    @classmethod
    def parse(cls, text: str) -> "ConfusionCounts":
        """Parse ``"TN,FP,FN,TP"`` (commas or whitespace)."""
        parts = text.replace(",", " ").split()
        if len(parts) != 4:
            raise DataError(f"counts must be TN,FP,FN,TP; got {text!r}")
        try:
            tn, fp, fn, tp = (int(p) for p in parts)
        except ValueError as exc:
            raise DataError(f"counts must be integers; got {text!r}") from exc
        return cls(tn=tn, fp=fp, fn=fn, tp=tp)

    def scaled(self, k: int) -> "ConfusionCounts":
        return ConfusionCounts(self.tn * k, self.fp * k, self.fn * k, self.tp * k)

    def to_dict(self) -> dict:
        return {"tn": self.tn, "fp": self.fp, "fn": self.fn, "tp": self.tp}

    @classmethod
    def from_dict(cls, d: dict) -> "ConfusionCounts":
        return cls(tn=d["tn"], fp=d["fp"], fn=d["fn"], tp=d["tp"])


@dataclass(frozen=True)
class CallRecord:
    caller_id: int
    timestamp: datetime
    features: tuple
    true_label: Label

    def __post_init__(self):
        if int(self.caller_id) < 1:
            raise DataError(f"caller_id must be >= 1, got {self.caller_id}")
        object.__setattr__(self, "features", tuple(float(v) for v in self.features))
        object.__setattr__(self, "true_label", Label.parse(self.true_label))
