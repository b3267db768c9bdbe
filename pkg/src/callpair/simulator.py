"""Discrete-event simulation of the IVR call flow under a routing policy.

Each call arrives, optionally hears a predicted department and confirms it,
then either goes straight to the department queue (correct prediction) or
navigates the IVR menu first. Queue congestion is not modelled, so a call's
duration is the sum of its own stage durations.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import ConfigError, ConfusionCounts, DataError, NoDataError, TimingParams
from .timing import TimeTotals, total_predicted_binary

BYPASS = "bypass"
REJECT_THEN_IVR = "reject_then_ivr"
IVR_ONLY = "ivr_only"
PATHS = (BYPASS, REJECT_THEN_IVR, IVR_ONLY)


@dataclass(frozen=True)
class IvrConfig:
    n_options_j: int = 5
    n_departments: int = 4
    timing: TimingParams = field(default_factory=TimingParams)
    stochastic: bool = False
    duration_jitter: float = 0.0

    def __post_init__(self):
        if int(self.n_options_j) < 1:
            raise ConfigError("n_options_j must be positive")
        if int(self.n_departments) < 2:
            raise ConfigError("n_departments must be at least 2")
        if not (self.duration_jitter >= 0 and math.isfinite(self.duration_jitter)):
            raise ConfigError("duration_jitter must be >= 0")

    def to_dict(self) -> dict:
        return {
            "n_options_j": self.n_options_j,
            "n_departments": self.n_departments,
            "timing": self.timing.to_dict(),
            "stochastic": self.stochastic,
            "duration_jitter": self.duration_jitter,
        }


@dataclass(frozen=True)
class Policy:
    """``traditional`` routes everyone through the IVR; ``rules`` and ``model`` carry a classifier."""

    kind: str
    model: object = None

    def __post_init__(self):
        if self.kind not in ("traditional", "rules", "model"):
            raise ConfigError(f"unknown policy {self.kind!r}")
        if self.kind != "traditional" and self.model is None:
            raise ConfigError(f"{self.kind} policy needs a trained model")

    @classmethod
    def traditional(cls) -> "Policy":
        return cls("traditional")

    @classmethod
    def rules(cls, model) -> "Policy":
        return cls("rules", model)

    @classmethod
    def from_model(cls, model) -> "Policy":
        return cls("rules" if model.kind == "rules" else "model", model)

    @property
    def name(self) -> str:
        if self.kind == "model":
            return self.model.kind
        return self.kind


@dataclass(frozen=True)
class CallOutcome:
    caller_id: int
    path: str
    duration: float


@dataclass
class SimReport:
    policy: str
    per_call: list
    totals: TimeTotals
    cm: ConfusionCounts
    seed: int
    config: IvrConfig

    def path_counts(self) -> dict:
        counts = dict.fromkeys(PATHS, 0)
        for c in self.per_call:
            counts[c.path] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "policy": self.policy,
            "seed": self.seed,
            "config": self.config.to_dict(),
            "totals": self.totals.to_dict(),
            "confusion_counts": self.cm.to_dict(),
            "path_counts": self.path_counts(),
        }

    def per_call_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["caller_id", "path", "duration"])
        for c in self.per_call:
            w.writerow([c.caller_id, c.path, repr(c.duration)])
        return buf.getvalue()


def _stage_durations(n: int, cfg: IvrConfig, rng: np.random.Generator):
    p = cfg.timing
    means = (p.t_pred, p.t_stage1, p.t_stage2)
    if not cfg.stochastic or cfg.duration_jitter == 0.0:
        return [np.full(n, m) for m in means]
    cv = cfg.duration_jitter
    shape = 1.0 / (cv * cv)
    # drawn for every call and stage so policies share random numbers
    return [rng.gamma(shape, m / shape, size=n) for m in means]


class _EventQueue:
    def __init__(self):
        self._heap = []
        self._seq = 0
        self.now = 0.0

    def schedule(self, at: float, handler, *args):
        heapq.heappush(self._heap, (at, self._seq, handler, args))
        self._seq += 1

    def run(self):
        while self._heap:
            self.now, _, handler, args = heapq.heappop(self._heap)
            handler(*args)


def run_calls(caller_ids, arrivals, truth, predicted, cfg: IvrConfig, seed: int, policy: str) -> SimReport:
    """Simulate calls with known true labels and predictions (``None`` = no prediction stage)."""
    n = len(caller_ids)
    if n == 0:
        raise NoDataError("no data: workload is empty")
    rng = np.random.default_rng(int(seed))
    pred_d, s1_d, s2_d = _stage_durations(n, cfg, rng)
    truth = np.asarray(truth, dtype=bool)
    offered = np.zeros(n, dtype=bool) if predicted is None else np.asarray(predicted, dtype=bool)

    spent = [[0.0, 0.0, 0.0] for _ in range(n)]
    paths = [IVR_ONLY] * n
    q = _EventQueue()

    def arrive(i):
        if offered[i]:
            spent[i][0] = pred_d[i]
            q.schedule(q.now + pred_d[i], confirm, i)
        else:
            start_ivr(i)

    def confirm(i):
        # the caller accepts exactly when the offered department is right
        if truth[i]:
            paths[i] = BYPASS
            join_queue(i)
        else:
            paths[i] = REJECT_THEN_IVR
            start_ivr(i)

    def start_ivr(i):
        spent[i][1] = s1_d[i]
        q.schedule(q.now + s1_d[i], join_queue, i)

    def join_queue(i):
        spent[i][2] = s2_d[i]
        q.schedule(q.now + s2_d[i], depart, i)

    def depart(i):
        pass

    for i in range(n):
        q.schedule(float(arrivals[i]), arrive, i)
    q.run()

    per_call = [
        CallOutcome(int(caller_ids[i]), paths[i], spent[i][0] + spent[i][1] + spent[i][2]) for i in range(n)
    ]
    pred_s = math.fsum(s[0] for s in spent)
    s1_s = math.fsum(s[1] for s in spent)
    s2_s = math.fsum(s[2] for s in spent)
    totals = TimeTotals.from_terms(n, pred_s, s1_s, s2_s)
    tp = int(np.count_nonzero(offered & truth))
    fp = int(np.count_nonzero(offered & ~truth))
    fn = int(np.count_nonzero(~offered & truth))
    cm = ConfusionCounts(tn=n - tp - fp - fn, fp=fp, fn=fn, tp=tp)
    return SimReport(policy=policy, per_call=per_call, totals=totals, cm=cm, seed=int(seed), config=cfg)


def simulate(policy: Policy, workload, cfg: IvrConfig | None = None, seed: int = 0) -> SimReport:
    cfg = cfg or IvrConfig()
    records = workload.records
    if not records:
        raise NoDataError("no data: workload is empty")
    X = np.asarray(workload.X, dtype=np.float64)
    truth = np.asarray(workload.y).astype(bool)
    if policy.kind == "traditional":
        predicted = None
    else:
        if X.shape[1] != policy.model.n_features:
            raise DataError(
                f"workload has {X.shape[1]} features, model expects {policy.model.n_features}"
            )
        predicted = policy.model.labels(X).astype(bool)
    t0 = min(r.timestamp for r in records)
    arrivals = [(r.timestamp - t0).total_seconds() for r in records]
    ids = [r.caller_id for r in records]
    return run_calls(ids, arrivals, truth, predicted, cfg, seed, policy.name)


def replay_confusion(cm: ConfusionCounts, cfg: IvrConfig | None = None, seed: int = 0, policy: str = "replay") -> SimReport:
    """Simulate a shuffled call sequence that realises exactly ``cm``."""
    cfg = cfg or IvrConfig()
    n = cm.total
    if n == 0:
        raise NoDataError("no data: confusion counts are all zero")
    truth = np.r_[np.zeros(cm.tn + cm.fp, bool), np.ones(cm.fn + cm.tp, bool)]
    pred = np.r_[np.zeros(cm.tn, bool), np.ones(cm.fp, bool), np.zeros(cm.fn, bool), np.ones(cm.tp, bool)]
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)).spawn(1)[0])
    perm = rng.permutation(n)
    # arrivals spread over 30 days
    arrivals = np.sort(rng.uniform(0.0, 30 * 86400.0, size=n))
    return run_calls(np.arange(1, n + 1), arrivals, truth[perm], pred[perm], cfg, seed, policy)


def analytic_delta(report: SimReport, timing: TimingParams | None = None) -> float:
    """Simulated minus closed-form total for the report's own confusion counts."""
    timing = timing or report.config.timing
    return report.totals.total_seconds - total_predicted_binary(report.cm, timing).total_seconds


def monte_carlo(make_report, seeds) -> dict:
    """Mean and standard error of simulated totals over ``seeds``."""
    totals = np.array([make_report(s).totals.total_seconds for s in seeds])
    n = totals.size
    se = float(totals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return {"n_seeds": int(n), "mean_total": float(totals.mean()), "standard_error": se}
