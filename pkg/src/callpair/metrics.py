"""Imbalance-aware metrics over binary confusion counts.

Every metric returns a fraction in [0, 1]. Degenerate denominators map to 0
so threshold sweeps that predict a single class stay well defined.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable

from .domain import ConfusionCounts, Label, NoDataError


def _ratio(num: int, den: int) -> float:
    return num / den if den > 0 else 0.0


def precision(cm: ConfusionCounts) -> float:
    return _ratio(cm.tp, cm.tp + cm.fp)


def recall(cm: ConfusionCounts) -> float:
    return _ratio(cm.tp, cm.tp + cm.fn)


def specificity(cm: ConfusionCounts) -> float:
    return _ratio(cm.tn, cm.tn + cm.fp)


def f1_score(cm: ConfusionCounts) -> float:
    p, r = precision(cm), recall(cm)
    if p + r == 0.0:
        return 0.0
    return 2.0 * (p * r) / (p + r)


def geometric_mean(cm: ConfusionCounts) -> float:
    return math.sqrt(recall(cm) * specificity(cm))


def f1_gm(cm: ConfusionCounts) -> float:
    return math.sqrt(f1_score(cm) * geometric_mean(cm))


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    specificity: float
    f1: float
    gm: float
    f1_gm: float

    FIELDS = ("precision", "recall", "specificity", "f1", "gm", "f1_gm")

    @classmethod
    def from_counts(cls, cm: ConfusionCounts) -> "MetricsReport":
        f1 = f1_score(cm)
        gm = geometric_mean(cm)
        return cls(
            precision=precision(cm),
            recall=recall(cm),
            specificity=specificity(cm),
            f1=f1,
            gm=gm,
            f1_gm=math.sqrt(f1 * gm),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        # repr-precision floats: round-trip exact, well beyond 6 significant digits
        return json.dumps(self.to_dict(), sort_keys=True)

    def percent(self) -> dict:
        return {k: 100.0 * v for k, v in self.to_dict().items()}


def metrics_report(cm: ConfusionCounts) -> MetricsReport:
    return MetricsReport.from_counts(cm)


def accumulate(predictions: Iterable[tuple]) -> ConfusionCounts:
    """Tally ``(predicted, true)`` label pairs into confusion counts."""
    tn = fp = fn = tp = 0
    n = 0
    for pred, true in predictions:
        n += 1
        pos_pred = Label.parse(pred) is Label.SERVICE_A
        pos_true = Label.parse(true) is Label.SERVICE_A
        if pos_pred and pos_true:
            tp += 1
        elif pos_pred:
            fp += 1
        elif pos_true:
            fn += 1
        else:
            tn += 1
    if n == 0:
        raise NoDataError("no data: cannot accumulate an empty prediction list")
    return ConfusionCounts(tn=tn, fp=fp, fn=fn, tp=tp)


def counts_from_arrays(y_pred, y_true) -> ConfusionCounts:
    """Vectorised tally for 0/1 numpy arrays."""
    import numpy as np

    y_pred = np.asarray(y_pred).astype(bool)
    y_true = np.asarray(y_true).astype(bool)
    if y_pred.size == 0:
        raise NoDataError("no data: cannot accumulate an empty prediction list")
    if y_pred.shape != y_true.shape:
        raise ValueError("prediction and label arrays differ in shape")
    tp = int(np.count_nonzero(y_pred & y_true))
    fp = int(np.count_nonzero(y_pred & ~y_true))
    fn = int(np.count_nonzero(~y_pred & y_true))
    tn = int(y_pred.size - tp - fp - fn)
    return ConfusionCounts(tn=tn, fp=fp, fn=fn, tp=tp)
