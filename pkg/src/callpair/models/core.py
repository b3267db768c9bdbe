"""One train/predict/evaluate interface over every model kind."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..domain import ConfigError, ConfusionCounts, DataError, Label, NoDataError
from ..metrics import MetricsReport, counts_from_arrays
from .config import KINDS, config_from_dict
from .ensemble import BoostedState, ForestState, TreeState, fit_dt, fit_gbt, fit_rf
from .linear import LogisticState, fit_logistic
from .mlp import MLPState, fit_mlp
from .rules import RuleSet, RulesState

logger = logging.getLogger(__name__)

_STATE_TYPES = {
    "lr": LogisticState,
    "dt": TreeState,
    "rf": ForestState,
    "gbt": BoostedState,
    "mlp": MLPState,
}


@dataclass
class ClassifierModel:
    kind: str
    config: object
    state: object
    feature_names: list
    threshold: float = 0.5

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _matrix(self, x) -> np.ndarray:
        X = np.asarray(x, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise DataError(
                f"{self.kind} model expects {self.n_features} features, got shape {np.shape(x)}"
            )
        return X

    def proba(self, X) -> np.ndarray:
        return self.state.proba(self._matrix(X))

    def labels(self, X) -> np.ndarray:
        """0/1 predictions; ties at the threshold go to SERVICE_A."""
        return (self.proba(X) >= self.threshold).astype(np.int64)

    def with_threshold(self, threshold: float) -> "ClassifierModel":
        return replace(self, threshold=float(threshold))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "hyperparameters": self.config.to_dict(),
            "feature_names": list(self.feature_names),
            "threshold": self.threshold,
            "parameters": self.state.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierModel":
        kind = d["kind"]
        cfg = config_from_dict(kind, d["hyperparameters"])
        names = list(d["feature_names"])
        if kind == "rules":
            state = RulesState.from_dict(d["parameters"], names)
        else:
            state = _STATE_TYPES[kind].from_dict(d["parameters"])
        return cls(kind=kind, config=cfg, state=state, feature_names=names, threshold=float(d["threshold"]))


def _check_training_data(X, y, kind):
    if X.shape[0] == 0:
        raise NoDataError("no data: training set is empty")
    if not np.all(np.isfinite(X)):
        raise DataError("training features contain non-finite values")
    if kind != "rules" and np.unique(y).size < 2:
        raise DataError("training data contains a single class")


def fit(kind: str, cfg, data) -> ClassifierModel:
    """Train a model of ``kind`` on a dataset exposing ``X``, ``y`` and ``feature_names``."""
    if kind not in KINDS:
        raise ConfigError(f"unknown model kind {kind!r}")
    if cfg is None or isinstance(cfg, dict):
        cfg = config_from_dict(kind, cfg)
    X = np.asarray(data.X, dtype=np.float64)
    y = np.asarray(data.y, dtype=np.float64)
    names = list(data.feature_names)
    _check_training_data(X, y, kind)
    if kind == "rules":
        ruleset = RuleSet.parse(cfg.rules)
        ruleset.validate(names)
        state = RulesState(ruleset=ruleset, feature_names=names)
    elif kind == "lr":
        state = fit_logistic(X, y, cfg)
    elif kind == "dt":
        state = fit_dt(X, y, cfg)
    elif kind == "rf":
        state = fit_rf(X, y, cfg)
    elif kind == "gbt":
        state = fit_gbt(X, y, cfg)
    else:
        state = fit_mlp(X, y, cfg)
    logger.info("trained %s on %d calls x %d features", kind, X.shape[0], X.shape[1])
    return ClassifierModel(kind=kind, config=cfg, state=state, feature_names=names, threshold=cfg.threshold)


def predict_proba(m: ClassifierModel, x) -> float | np.ndarray:
    p = m.proba(x)
    return float(p[0]) if np.ndim(x) == 1 else p


def predict(m: ClassifierModel, x):
    if np.ndim(x) == 1:
        return Label.SERVICE_A if predict_proba(m, x) >= m.threshold else Label.OTHER
    return m.labels(x)


def evaluate(m: ClassifierModel, data) -> tuple[ConfusionCounts, MetricsReport]:
    X = np.asarray(data.X, dtype=np.float64)
    if X.shape[0] == 0:
        raise NoDataError("no data: evaluation set is empty")
    cm = counts_from_arrays(m.labels(X), np.asarray(data.y))
    return cm, MetricsReport.from_counts(cm)


def threshold_sweep(scores: np.ndarray, y: np.ndarray):
    """Confusion counts for every distinct threshold, highest threshold first.

    Returns ``(thresholds, tp, fp)`` arrays; predicting positive means
    ``score >= threshold``.
    """
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    yy = np.asarray(y)[order].astype(np.int64)
    tp = np.cumsum(yy)
    fp = np.cumsum(1 - yy)
    last = np.r_[s[1:] != s[:-1], True]
    return s[last], tp[last], fp[last]


def _safe_div(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def select_threshold(m: ClassifierModel, data, metric: str = "f1_gm") -> ClassifierModel:
    """Return a copy of ``m`` whose threshold maximises ``metric`` on ``data``.

    Ties keep the highest threshold (fewest confirmation prompts).
    """
    if m.kind == "rules":
        return m
    scores = m.proba(np.asarray(data.X, dtype=np.float64))
    y = np.asarray(data.y).astype(np.int64)
    thr, tp, fp = threshold_sweep(scores, y)
    pos = int(y.sum())
    neg = y.size - pos
    tn = neg - fp
    prec = _safe_div(tp, tp + fp)
    rec = _safe_div(tp, np.full_like(tp, pos))
    spec = _safe_div(tn, np.full_like(tn, neg))
    f1 = _safe_div(2.0 * prec * rec, prec + rec)
    gm = np.sqrt(rec * spec)
    values = {"f1": f1, "gm": gm, "f1_gm": np.sqrt(f1 * gm)}[metric]
    best = int(np.argmax(values))
    # keep the threshold strictly inside (0, 1)
    t = min(max(float(thr[best]), 1e-12), 1.0 - 1e-12)
    return m.with_threshold(t)


@dataclass
class RunSummary:
    """Mean and sample standard deviation of each metric over repeated runs.

    ``mean``/``std`` describe the first evaluation target; ``targets`` holds
    the same pair for every named target.
    """

    kind: str
    mean: MetricsReport
    std: dict
    targets: dict = field(default_factory=dict)
    runs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_runs": len(self.runs),
            "targets": {
                name: {"mean": t["mean"].to_dict(), "std": dict(t["std"])}
                for name, t in self.targets.items()
            },
            "runs": self.runs,
        }


def derive_seeds(base_seed: int, n_runs: int) -> list[int]:
    states = np.random.SeedSequence(int(base_seed)).generate_state(int(n_runs), dtype=np.uint32)
    return [int(s) for s in states]


def _aggregate(reports):
    mean = {}
    std = {}
    for k in MetricsReport.FIELDS:
        vals = np.array([getattr(r, k) for r in reports])
        mean[k] = float(vals.mean())
        std[k] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
    return MetricsReport(**mean), std


def repeat_runs(kind, cfg, train, evaluate_on, n_runs: int = 20, tune_on=None, models_out=None) -> RunSummary:
    """Train ``n_runs`` times with seeds derived from ``cfg.seed`` and average the metrics.

    With ``n_runs == 1`` the single run uses ``cfg.seed`` itself. When
    ``tune_on`` is given, each run's threshold is chosen on that set before
    evaluation. ``evaluate_on`` is a dataset or a dict of named datasets.
    """
    if int(n_runs) < 1:
        raise ConfigError("n_runs must be at least 1")
    if cfg is None or isinstance(cfg, dict):
        cfg = config_from_dict(kind, cfg)
    targets = evaluate_on if isinstance(evaluate_on, dict) else {"eval": evaluate_on}
    seeds = [cfg.seed] if n_runs == 1 else derive_seeds(cfg.seed, n_runs)
    reports = {name: [] for name in targets}
    runs = []
    for seed in seeds:
        model = fit(kind, cfg.with_seed(seed), train)
        if tune_on is not None:
            model = select_threshold(model, tune_on)
        record = {"seed": seed, "threshold": model.threshold}
        for name, ds in targets.items():
            cm, rep = evaluate(model, ds)
            record[name] = {"counts": cm.to_dict(), "metrics": rep.to_dict()}
            reports[name].append(rep)
        runs.append(record)
        if models_out is not None:
            models_out.append(model)
    summary = {}
    for name, reps in reports.items():
        mean, std = _aggregate(reps)
        summary[name] = {"mean": mean, "std": std}
    first = summary[next(iter(targets))]
    return RunSummary(kind=kind, mean=first["mean"], std=first["std"], targets=summary, runs=runs)


def save_model(m: ClassifierModel, path) -> None:
    from ..io import write_json

    write_json(path, m.to_dict())


def load_model(path) -> ClassifierModel:
    with open(path, encoding="utf-8") as fh:
        return ClassifierModel.from_dict(json.load(fh))
