import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from callpair.domain import ConfusionCounts, Label, NoDataError
from callpair.metrics import (
    MetricsReport,
    accumulate,
    counts_from_arrays,
    f1_gm,
    f1_score,
    geometric_mean,
    precision,
    recall,
    specificity,
)

from conftest import MLP_CM, RULES_CM

counts = st.builds(
    ConfusionCounts,
    tn=st.integers(0, 500),
    fp=st.integers(0, 500),
    fn=st.integers(0, 500),
    tp=st.integers(0, 500),
)


def oracle(cm):
    """Exact rational metrics, written out independently of the package."""
    def div(a, b):
        return Fraction(a, b) if b else Fraction(0)

    p = div(cm.tp, cm.tp + cm.fp)
    r = div(cm.tp, cm.tp + cm.fn)
    s = div(cm.tn, cm.tn + cm.fp)
    f1 = 2 * p * r / (p + r) if p + r else Fraction(0)
    gm = math.sqrt(r * s)
    return float(p), float(r), float(s), float(f1), gm, math.sqrt(float(f1) * gm)


def test_rules_row_precision_recall():
    assert precision(RULES_CM) == pytest.approx(0.05726, abs=5e-6)
    assert recall(RULES_CM) == pytest.approx(0.78157, abs=5e-6)


def test_mlp_row_precision_recall():
    assert precision(MLP_CM) == pytest.approx(0.42097, abs=5e-6)
    assert recall(MLP_CM) == pytest.approx(0.57983, abs=5e-6)


def test_rules_row_matches_reference_percentages():
    # reference figures are truncated, not rounded, to 2 dp
    assert 100 * f1_score(RULES_CM) == pytest.approx(10.67, abs=0.01)
    assert 100 * geometric_mean(RULES_CM) == pytest.approx(74.04, abs=0.01)
    assert 100 * f1_gm(RULES_CM) == pytest.approx(28.10, abs=0.01)
    assert math.floor(100 * 100 * geometric_mean(RULES_CM)) / 100 == 74.04
    # 0.28107 is what the truncated F1 and GM give; full precision differs by 1.5e-5
    assert math.sqrt(0.1067 * 0.7404) == pytest.approx(0.28107, abs=5e-6)
    assert f1_gm(RULES_CM) == pytest.approx(0.28107, abs=2e-5)


def test_mlp_row_single_matrix_values():
    assert f1_score(MLP_CM) == pytest.approx(0.48779, abs=5e-6)
    assert geometric_mean(MLP_CM) == pytest.approx(0.75439, abs=5e-6)


def test_perfect_classifier():
    cm = ConfusionCounts(tn=10, fp=0, fn=0, tp=10)
    rep = MetricsReport.from_counts(cm)
    assert rep.to_dict() == dict.fromkeys(MetricsReport.FIELDS, 1.0)


def test_degenerate_denominators_are_zero():
    cm = ConfusionCounts(tn=5, fp=3, fn=0, tp=0)
    assert recall(cm) == 0.0
    assert precision(cm) == 0.0
    assert f1_score(cm) == 0.0
    assert f1_gm(cm) == 0.0
    assert specificity(ConfusionCounts(tp=3, fn=1)) == 0.0


def test_f1_zero_gives_zero_f1_gm():
    cm = ConfusionCounts(tn=100, fp=0, fn=4, tp=0)
    assert f1_score(cm) == 0.0 and f1_gm(cm) == 0.0


@given(counts)
def test_matches_rational_oracle(cm):
    rep = MetricsReport.from_counts(cm)
    p, r, s, f1, gm, fg = oracle(cm)
    assert rep.precision == pytest.approx(p, abs=1e-12)
    assert rep.recall == pytest.approx(r, abs=1e-12)
    assert rep.specificity == pytest.approx(s, abs=1e-12)
    assert rep.f1 == pytest.approx(f1, abs=1e-12)
    assert rep.gm == pytest.approx(gm, abs=1e-12)
    assert rep.f1_gm == pytest.approx(fg, abs=1e-12)


@given(counts)
def test_bounds_and_f1_gm_between(cm):
    rep = MetricsReport.from_counts(cm)
    for v in rep.to_dict().values():
        assert 0.0 <= v <= 1.0
    lo, hi = sorted((rep.f1, rep.gm))
    assert lo - 1e-12 <= rep.f1_gm <= hi + 1e-12


@given(counts, st.integers(1, 50))
def test_scale_invariance(cm, k):
    a = MetricsReport.from_counts(cm).to_dict()
    b = MetricsReport.from_counts(cm.scaled(k)).to_dict()
    for key in a:
        assert b[key] == pytest.approx(a[key], abs=1e-12)


@given(counts)
def test_gm_bounds(cm):
    r, s = recall(cm), specificity(cm)
    assert geometric_mean(cm) <= math.sqrt(max(r, s)) + 1e-12


def test_gm_equals_recall_when_equal_to_specificity():
    cm = ConfusionCounts(tn=30, fp=10, fn=5, tp=15)  # R = S = 0.75
    assert geometric_mean(cm) == pytest.approx(0.75, abs=1e-15)


@given(counts, st.integers(0, 100))
def test_f1_non_increasing_in_errors(cm, extra):
    base = f1_score(cm)
    more_fp = ConfusionCounts(cm.tn, cm.fp + extra, cm.fn, cm.tp)
    more_fn = ConfusionCounts(cm.tn, cm.fp, cm.fn + extra, cm.tp)
    assert f1_score(more_fp) <= base + 1e-12
    assert f1_score(more_fn) <= base + 1e-12


def test_accumulate_cells():
    P, N = Label.SERVICE_A, Label.OTHER
    assert accumulate([(P, P)]) == ConfusionCounts(tp=1)
    assert accumulate([(P, N), (N, P), (N, N)]) == ConfusionCounts(tn=1, fp=1, fn=1, tp=0)


def test_accumulate_empty_is_no_data():
    with pytest.raises(NoDataError, match="no data"):
        accumulate([])


def test_accumulate_round_trip_mlp_row():
    P, N = Label.SERVICE_A, Label.OTHER
    pairs = (
        [(N, N)] * MLP_CM.tn + [(P, N)] * MLP_CM.fp + [(N, P)] * MLP_CM.fn + [(P, P)] * MLP_CM.tp
    )
    assert len(pairs) == 60785
    assert accumulate(pairs) == MLP_CM


@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=60))
def test_accumulate_matches_brute_force(pairs):
    cm = accumulate([(int(p), int(t)) for p, t in pairs])
    assert cm.tp == sum(p and t for p, t in pairs)
    assert cm.fp == sum(p and not t for p, t in pairs)
    assert cm.fn == sum(t and not p for p, t in pairs)
    assert cm.tn == sum(not p and not t for p, t in pairs)
    assert counts_from_arrays([p for p, _ in pairs], [t for _, t in pairs]) == cm


def test_json_has_all_fields_full_precision():
    import json

    d = json.loads(MetricsReport.from_counts(MLP_CM).to_json())
    assert set(d) == set(MetricsReport.FIELDS)
    assert d["f1"] == f1_score(MLP_CM)


def test_counts_validation():
    from callpair.domain import DataError

    with pytest.raises(DataError):
        ConfusionCounts(tn=-1)
    with pytest.raises(DataError):
        ConfusionCounts.parse("1,2,3")
    assert ConfusionCounts.parse("58308,1099,579,799") == MLP_CM
    assert MLP_CM.total == 60785
