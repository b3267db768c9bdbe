"""Closed-form call-time accounting and break-even analysis.

Every routing policy reduces to three call counts: how many calls hear the
prediction confirmation, how many navigate the IVR menu, and how many reach a
department queue. Totals are those counts times the stage durations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .domain import CallPairError, ConfigError, ConfusionCounts, DataError, TimingParams


class NeverBeneficialError(CallPairError):
    """Raised when no positive stage-1/prediction ratio decides a comparison."""


@dataclass(frozen=True)
class CallTimeForm:
    """Number of calls paying each stage duration."""

    pred_calls: int
    stage1_calls: int
    stage2_calls: int

    def totals(self, p: TimingParams) -> "TimeTotals":
        return TimeTotals.from_terms(
            self.stage2_calls,
            self.pred_calls * p.t_pred,
            self.stage1_calls * p.t_stage1,
            self.stage2_calls * p.t_stage2,
        )

    @property
    def n_calls(self) -> int:
        return self.stage2_calls


@dataclass(frozen=True)
class TimeTotals:
    total_seconds: float
    n_calls: int
    pred_seconds: float
    stage1_seconds: float
    stage2_seconds: float

    @classmethod
    def from_terms(cls, n_calls: int, pred: float, stage1: float, stage2: float) -> "TimeTotals":
        # fsum: the total is the correctly rounded sum of the three terms
        return cls(
            total_seconds=math.fsum((pred, stage1, stage2)),
            n_calls=int(n_calls),
            pred_seconds=float(pred),
            stage1_seconds=float(stage1),
            stage2_seconds=float(stage2),
        )

    @property
    def breakdown(self) -> dict:
        return {
            "pred_seconds": self.pred_seconds,
            "stage1_seconds": self.stage1_seconds,
            "stage2_seconds": self.stage2_seconds,
        }

    @property
    def average_seconds(self) -> float:
        return self.total_seconds / self.n_calls if self.n_calls else 0.0

    def to_dict(self) -> dict:
        return {
            "total_seconds": self.total_seconds,
            "n_calls": self.n_calls,
            "average_seconds": self.average_seconds,
            "breakdown": self.breakdown,
        }


@dataclass(frozen=True)
class BreakEvenReport:
    """Policy B beats the reference when ``t_stage1 <direction> coefficient * t_pred``."""

    coefficient: float
    direction: str
    pred_call_delta: int = 0
    stage1_delta: int = 0

    def __post_init__(self):
        if not self.coefficient > 0:
            raise ValueError("break-even coefficient must be positive")
        if self.direction not in ("greater_than", "less_than"):
            raise ValueError(f"bad direction {self.direction!r}")

    def satisfied_at(self, p: TimingParams) -> bool:
        rhs = self.coefficient * p.t_pred
        if self.direction == "greater_than":
            return p.t_stage1 > rhs
        return p.t_stage1 < rhs

    def describe(self) -> str:
        op = ">" if self.direction == "greater_than" else "<"
        return f"t_stage1 {op} {self.coefficient:.2f}*t_pred"

    def to_dict(self, p: TimingParams | None = None) -> dict:
        out = {
            "coefficient": self.coefficient,
            "direction": self.direction,
            "condition": self.describe(),
            "pred_call_delta": self.pred_call_delta,
            "stage1_delta": self.stage1_delta,
        }
        if p is not None:
            out["satisfied_at"] = self.satisfied_at(p)
        return out


def call_duration_traditional(p: TimingParams) -> float:
    return p.t_stage1 + p.t_stage2


def duration_correct_prediction(p: TimingParams) -> float:
    return p.t_pred + p.t_stage2


def duration_incorrect_prediction(p: TimingParams) -> float:
    return p.t_pred + p.t_stage1 + p.t_stage2


def traditional_form(n_calls: int) -> CallTimeForm:
    if int(n_calls) < 1:
        raise DataError("n_calls must be at least 1")
    n = int(n_calls)
    return CallTimeForm(pred_calls=0, stage1_calls=n, stage2_calls=n)


def binary_form(cm: ConfusionCounts) -> CallTimeForm:
    """Only predicted-positive calls hear the confirmation; true positives skip the IVR."""
    n = cm.total
    return CallTimeForm(pred_calls=cm.tp + cm.fp, stage1_calls=n - cm.tp, stage2_calls=n)


def multiclass_form(cm: ConfusionCounts) -> CallTimeForm:
    """Every call is predicted; correct ones (tp and tn) skip the IVR."""
    n = cm.total
    return CallTimeForm(pred_calls=n, stage1_calls=cm.fp + cm.fn, stage2_calls=n)


def total_traditional(n_calls: int, p: TimingParams) -> TimeTotals:
    return traditional_form(n_calls).totals(p)


def total_predicted_multiclass(cm: ConfusionCounts, p: TimingParams) -> TimeTotals:
    return multiclass_form(cm).totals(p)


def total_predicted_binary(cm: ConfusionCounts, p: TimingParams) -> TimeTotals:
    return binary_form(cm).totals(p)


def break_even_between(a: CallTimeForm, b: CallTimeForm) -> BreakEvenReport:
    """Condition on ``t_stage1 / t_pred`` under which policy ``b`` is faster than ``a``.

    ``total_a - total_b = dpred * t_pred + dstage1 * t_stage1`` with
    ``dpred = pred_a - pred_b`` and ``dstage1 = stage1_a - stage1_b``.
    """
    if a.stage2_calls != b.stage2_calls:
        raise DataError(
            f"policies cover different call counts ({a.stage2_calls} vs {b.stage2_calls})"
        )
    dpred = a.pred_calls - b.pred_calls
    dstage1 = a.stage1_calls - b.stage1_calls
    # b faster  <=>  dstage1 * t_stage1 > -dpred * t_pred
    if dstage1 == 0 or (dstage1 > 0 and dpred >= 0) or (dstage1 < 0 and dpred <= 0):
        raise NeverBeneficialError(
            f"no positive break-even ratio (pred delta {dpred}, stage-1 delta {dstage1})"
        )
    coefficient = float(Fraction(-dpred, dstage1))
    direction = "greater_than" if dstage1 > 0 else "less_than"
    return BreakEvenReport(coefficient, direction, pred_call_delta=dpred, stage1_delta=dstage1)


def break_even_vs_traditional(cm: ConfusionCounts) -> BreakEvenReport:
    """Prediction beats plain IVR iff ``t_stage1 > (tp+fp)/tp * t_pred``."""
    if cm.tp == 0:
        raise NeverBeneficialError("tp = 0: prediction never bypasses the IVR")
    return break_even_between(traditional_form(cm.total), binary_form(cm))


def compare_forms(a: CallTimeForm, b: CallTimeForm, p: TimingParams) -> float:
    if a.stage2_calls != b.stage2_calls:
        raise DataError(
            f"policies cover different call counts ({a.stage2_calls} vs {b.stage2_calls})"
        )
    # exact rational difference, rounded once
    diff = (
        Fraction(a.pred_calls - b.pred_calls) * Fraction(p.t_pred)
        + Fraction(a.stage1_calls - b.stage1_calls) * Fraction(p.t_stage1)
    )
    return float(diff)


def compare_policies(cm_a: ConfusionCounts, cm_b: ConfusionCounts, p: TimingParams) -> float:
    """Seconds saved by policy B relative to policy A (positive: B is faster)."""
    if cm_a.total != cm_b.total:
        raise DataError(f"confusion counts cover different call totals ({cm_a.total} vs {cm_b.total})")
    return compare_forms(binary_form(cm_a), binary_form(cm_b), p)


def traditional_counts(n_calls: int, n_positive: int = 0) -> ConfusionCounts:
    """Encode 'no prediction' as counts where nothing is predicted positive."""
    if n_positive > n_calls:
        raise ConfigError("n_positive exceeds n_calls")
    return ConfusionCounts(tn=n_calls - n_positive, fp=0, fn=n_positive, tp=0)


def parse_timing_or_default(text: str | None) -> TimingParams:
    return TimingParams.parse(text) if text else TimingParams()
