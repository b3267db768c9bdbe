import math
from datetime import datetime, timedelta

import numpy as np
import pytest

from callpair.datagen import LabeledDataset
from callpair.domain import CallRecord, ConfigError, ConfusionCounts, DataError, NoDataError, TimingParams
from callpair.models import default_config, fit, select_threshold
from callpair.simulator import (
    BYPASS,
    IVR_ONLY,
    REJECT_THEN_IVR,
    IvrConfig,
    Policy,
    analytic_delta,
    monte_carlo,
    replay_confusion,
    simulate,
)
from callpair.timing import total_predicted_binary, total_traditional

from conftest import MLP_CM, RULES_CM

P = TimingParams(45.0, 180.0, 5.0)
T0 = datetime(2022, 3, 1)


def workload(labels, features=None):
    features = features if features is not None else [[float(l)] for l in labels]
    recs = [
        CallRecord(i + 1, T0 + timedelta(minutes=7 * i), f, l) for i, (f, l) in enumerate(zip(features, labels))
    ]
    return LabeledDataset(recs, ["flag"], "test")


def oracle_model():
    d = workload([0, 1, 1, 0])
    return fit("rules", default_config("rules", rules="flag >= 1"), d)


def test_config_validation():
    with pytest.raises(ConfigError):
        IvrConfig(n_departments=1)
    with pytest.raises(ConfigError):
        IvrConfig(duration_jitter=-0.1)
    with pytest.raises(ConfigError):
        Policy("model")


def test_traditional_ten_calls():
    rep = simulate(Policy.traditional(), workload([0, 1] * 5), IvrConfig(timing=P), seed=0)
    assert rep.totals.total_seconds == 2250
    assert rep.totals.pred_seconds == 0
    assert rep.path_counts() == {BYPASS: 0, REJECT_THEN_IVR: 0, IVR_ONLY: 10}
    assert all(c.duration == 225 for c in rep.per_call)


def test_oracle_model_all_service_a():
    rep = simulate(Policy.from_model(oracle_model()), workload([1] * 10), IvrConfig(timing=P), seed=0)
    assert rep.totals.total_seconds == 10 * 185
    assert rep.cm.tp == 10
    assert rep.path_counts()[BYPASS] == 10


def test_per_call_durations_follow_paths():
    m = fit("rules", default_config("rules", rules="flag >= 1"), workload([0, 1]))
    # flag column decoupled from labels: fp, tp, fn, tn
    w = workload([0, 1, 1, 0], features=[[1.0], [1.0], [0.0], [0.0]])
    rep = simulate(Policy.from_model(m), w, IvrConfig(timing=P), seed=0)
    assert [c.path for c in rep.per_call] == [REJECT_THEN_IVR, BYPASS, IVR_ONLY, IVR_ONLY]
    assert [c.duration for c in rep.per_call] == [230, 185, 225, 225]
    assert rep.cm == ConfusionCounts(tn=1, fp=1, fn=1, tp=1)


def test_errors():
    with pytest.raises(NoDataError):
        simulate(Policy.traditional(), LabeledDataset([], ["flag"], "test"))
    bad = LabeledDataset([CallRecord(1, T0, [1.0, 2.0], 1)], ["a", "b"], "test")
    with pytest.raises(DataError):
        simulate(Policy.from_model(oracle_model()), bad)


def test_reference_rows_replayed():
    mlp = replay_confusion(MLP_CM, IvrConfig(timing=P), seed=3)
    assert mlp.totals.pred_seconds == 1898 * 5
    trad = total_traditional(MLP_CM.total, P)
    assert trad.stage1_seconds - mlp.totals.stage1_seconds == 799 * 45
    rules = replay_confusion(RULES_CM, IvrConfig(timing=P), seed=3)
    assert rules.totals.pred_seconds == 94_045
    assert analytic_delta(mlp) == 0.0 and analytic_delta(rules) == 0.0


def test_all_tn_matches_traditional():
    cm = ConfusionCounts(tn=50)
    rep = replay_confusion(cm, IvrConfig(timing=P), seed=1)
    assert rep.totals == total_traditional(50, P)


def test_exact_equivalence_random_counts_and_timings():
    rng = np.random.default_rng(77)
    for k in range(100):
        cm = ConfusionCounts(*(int(v) for v in rng.integers(0, 300, 4)))
        if cm.total == 0:
            cm = ConfusionCounts(tn=1)
        t1 = float(rng.uniform(1, 300))
        p = TimingParams(t1, float(rng.uniform(1, 900)), float(rng.uniform(0.01, 0.99) * t1))
        rep = replay_confusion(cm, IvrConfig(timing=p), seed=k)
        assert rep.cm == cm
        assert rep.totals == total_predicted_binary(cm, p)


def test_path_accounting_and_per_call_sum():
    rep = replay_confusion(ConfusionCounts(400, 60, 25, 40), IvrConfig(timing=TimingParams(37.3, 151.9, 4.1)), seed=2)
    pc = rep.path_counts()
    assert sum(pc.values()) == rep.cm.total
    assert pc[BYPASS] == rep.cm.tp and pc[REJECT_THEN_IVR] == rep.cm.fp
    # per-call rounding means the plain sum agrees only to ~1e-12 relative
    assert math.fsum(c.duration for c in rep.per_call) == pytest.approx(rep.totals.total_seconds, rel=1e-12)


def test_seed_determinism():
    cfg = IvrConfig(timing=P, stochastic=True, duration_jitter=0.3)
    a = replay_confusion(ConfusionCounts(50, 5, 3, 7), cfg, seed=9)
    b = replay_confusion(ConfusionCounts(50, 5, 3, 7), cfg, seed=9)
    c = replay_confusion(ConfusionCounts(50, 5, 3, 7), cfg, seed=10)
    assert a.to_dict() == b.to_dict() and a.per_call_csv() == b.per_call_csv()
    assert a.totals != c.totals


def test_stochastic_mean_within_three_standard_errors():
    cm = ConfusionCounts(300, 40, 10, 30)
    cfg = IvrConfig(timing=P, stochastic=True, duration_jitter=0.4)
    mc = monte_carlo(lambda s: replay_confusion(cm, cfg, s), range(200))
    expected = total_predicted_binary(cm, P).total_seconds
    assert mc["n_seeds"] == 200
    assert abs(mc["mean_total"] - expected) <= 3 * mc["standard_error"]


def test_stochastic_durations_positive():
    rep = replay_confusion(ConfusionCounts(30, 5, 5, 5), IvrConfig(timing=P, stochastic=True, duration_jitter=1.0), 4)
    assert all(c.duration > 0 for c in rep.per_call)


def test_trained_model_on_synthetic_test_split(default_splits):
    train, val, test = default_splits
    m = select_threshold(fit("lr", default_config("lr", epochs=30), train), val)
    rep = simulate(Policy.from_model(m), test, IvrConfig(timing=P), seed=0)
    assert rep.totals == total_predicted_binary(rep.cm, P)
    assert rep.cm.total == len(test)


def test_report_serialisation():
    rep = replay_confusion(ConfusionCounts(3, 1, 1, 1), IvrConfig(timing=P), seed=0, policy="x")
    d = rep.to_dict()
    assert d["seed"] == 0 and d["config"]["timing"] == P.to_dict()
    lines = rep.per_call_csv().splitlines()
    assert lines[0] == "caller_id,path,duration" and len(lines) == 7
