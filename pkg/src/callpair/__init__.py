"""Predict the department a caller needs before the IVR menu, and cost the result in call time."""

from .domain import (
    CallPairError,
    CallRecord,
    ConfigError,
    ConfusionCounts,
    DataError,
    InvariantError,
    Label,
    NoDataError,
    TimingParams,
)
from .metrics import MetricsReport, accumulate, f1_gm, f1_score, geometric_mean, precision, recall, specificity
from .timing import (
    BreakEvenReport,
    NeverBeneficialError,
    TimeTotals,
    break_even_vs_traditional,
    compare_policies,
    total_predicted_binary,
    total_predicted_multiclass,
    total_traditional,
)

__version__ = "0.1.0"

__all__ = [
    "BreakEvenReport",
    "CallPairError",
    "CallRecord",
    "ConfigError",
    "ConfusionCounts",
    "DataError",
    "InvariantError",
    "Label",
    "MetricsReport",
    "NeverBeneficialError",
    "NoDataError",
    "TimeTotals",
    "TimingParams",
    "accumulate",
    "break_even_vs_traditional",
    "compare_policies",
    "f1_gm",
    "f1_score",
    "geometric_mean",
    "precision",
    "recall",
    "specificity",
    "total_predicted_binary",
    "total_predicted_multiclass",
    "total_traditional",
]
