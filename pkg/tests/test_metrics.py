import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from varframe import metrics as M
from varframe.errors import EmptyInputError, UndefinedMetricError


def mann_whitney(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


def hand_ap(scores, labels):
    """Sweep every distinct threshold from the top, summing recall steps times precision."""
    n_pos = sum(labels)
    ap, prev = 0.0, 0.0
    for thr in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, labels) if s >= thr and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= thr and y == 0)
        recall = tp / n_pos
        ap += (recall - prev) * tp / (tp + fp)
        prev = recall
    return ap


ranked = st.lists(
    st.tuples(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.5, 0.75, 0.9, 1.0]) | st.floats(0, 1), st.integers(0, 1)),
    min_size=1,
    max_size=40,
)


def test_confusion_basic():
    cm = M.confusion_at_threshold([0.9, 0.1], [1, 0], 0.5)
    assert cm == M.ConfusionMatrix(tp=1, tn=1, fp=0, fn=0)


def test_threshold_is_strict():
    cm = M.confusion_at_threshold([0.5, 0.5, 0.5], [1, 0, 1], 0.5)
    assert cm.tp == cm.fp == 0 and cm.fn == 2 and cm.tn == 1


def test_confusion_hand_tally():
    scores = [0.95, 0.7, 0.51, 0.5, 0.3, 0.05]
    labels = [1, 0, 1, 1, 0, 0]
    assert M.confusion_at_threshold(scores, labels, 0.5) == M.ConfusionMatrix(tp=2, tn=2, fp=1, fn=1)


def test_confusion_empty():
    with pytest.raises(EmptyInputError):
        M.confusion_at_threshold([], [], 0.5)


def test_reference_row_metrics():
    cm = M.ConfusionMatrix(tp=292, tn=300, fp=20, fn=28)
    assert round(100 * M.accuracy(cm), 2) == 92.50
    assert round(100 * M.precision(cm), 2) == 93.59
    assert round(100 * M.sensitivity(cm), 2) == 91.25
    assert round(100 * M.specificity(cm), 2) == 93.75


def test_undefined_sensitivity():
    with pytest.raises(UndefinedMetricError):
        M.sensitivity(M.ConfusionMatrix(tp=0, tn=5, fp=1, fn=0))


def test_f1_from_reported_precision_and_sensitivity():
    assert round(100 * M.f1_from(0.9553, 0.9026), 2) == 92.82


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_f1_identity(tp, tn, fp, fn):
    assume(tp > 0)
    cm = M.ConfusionMatrix(tp, tn, fp, fn)
    assert abs(M.f1(cm) - 2 * tp / (2 * tp + fp + fn)) <= 1e-12


@given(ranked, st.floats(0, 1), st.floats(0, 1))
def test_threshold_monotonicity(pairs, a, b):
    scores, labels = zip(*pairs)
    lo, hi = sorted((a, b))
    c_lo, c_hi = M.confusion_at_threshold(scores, labels, lo), M.confusion_at_threshold(scores, labels, hi)
    assert c_hi.tp <= c_lo.tp and c_hi.fp <= c_lo.fp
    assert c_hi.tn >= c_lo.tn and c_hi.fn >= c_lo.fn


def test_ap_examples():
    assert M.average_precision([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert M.average_precision([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0]) == pytest.approx(0.5 + (2 / 3) * 0.5)
    n = 7
    scores = list(np.linspace(0.9, 0.1, n))
    assert M.average_precision(scores, [0] * (n - 1) + [1]) == pytest.approx(1 / n)


def test_pr_curve_points():
    pts = M.pr_curve([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0])
    assert [(p.x, p.y) for p in pts] == [(0.5, 1.0), (0.5, 0.5), (1.0, 2 / 3), (1.0, 0.5)]
    assert [p.threshold for p in pts] == [0.9, 0.8, 0.7, 0.6]


def test_pr_needs_positive():
    with pytest.raises(UndefinedMetricError):
        M.average_precision([0.2, 0.4], [0, 0])


@given(ranked)
def test_ap_matches_hand_sweep(pairs):
    scores, labels = zip(*pairs)
    assume(sum(labels) > 0)
    assert M.average_precision(scores, labels) == pytest.approx(hand_ap(scores, labels), abs=1e-12)
    recalls = [p.x for p in M.pr_curve(scores, labels)]
    assert recalls == sorted(recalls)


def test_auc_examples():
    assert M.auc([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0]) == 1.0
    assert M.auc([0.9, 0.8, 0.3, 0.1], [0, 0, 1, 1]) == 0.0
    assert M.auc([0.5] * 6, [1, 0, 1, 0, 0, 1]) == 0.5


def test_auc_random_instance_matches_pairwise(rng):
    scores = np.round(rng.random(10), 1).tolist()
    labels = [1, 0, 1, 1, 0, 0, 1, 0, 0, 1]
    assert abs(M.auc(scores, labels) - mann_whitney(scores, labels)) <= 1e-12


@given(ranked)
def test_auc_equals_mann_whitney(pairs):
    scores, labels = zip(*pairs)
    assume(0 < sum(labels) < len(labels))
    assert abs(M.auc(scores, labels) - mann_whitney(scores, labels)) <= 1e-12
    pts = M.roc_curve(scores, labels)
    assert (pts[0].x, pts[0].y) == (0.0, 0.0) and (pts[-1].x, pts[-1].y) == (1.0, 1.0)
    assert all(0 <= p.x <= 1 and 0 <= p.y <= 1 for p in pts)


def test_roc_single_class():
    with pytest.raises(UndefinedMetricError):
        M.roc_curve([0.1, 0.9], [1, 1])


@given(st.lists(st.tuples(st.integers(0, 100), st.integers(0, 1)), min_size=2, max_size=40))
def test_increasing_transform_invariance(pairs):
    # grid scores so the transform cannot merge distinct values through rounding
    scores, labels = zip(*((k / 100, y) for k, y in pairs))
    assume(0 < sum(labels) < len(labels))
    warped = [s**3 for s in scores]  # strictly increasing on [0, 1]
    assert M.auc(warped, labels) == M.auc(scores, labels)
    assert M.average_precision(warped, labels) == M.average_precision(scores, labels)
    a, b = M.roc_curve(scores, labels), M.roc_curve(warped, labels)
    assert [(p.x, p.y) for p in a] == [(p.x, p.y) for p in b]


def test_normalized_confusion():
    np.testing.assert_allclose(
        M.normalized_confusion(M.ConfusionMatrix(tp=98, tn=82, fp=18, fn=2)), [[0.82, 0.18], [0.02, 0.98]]
    )
    np.testing.assert_array_equal(M.normalized_confusion(M.ConfusionMatrix(5, 5, 0, 0)), np.eye(2))
    np.testing.assert_array_equal(M.normalized_confusion(M.ConfusionMatrix(1, 1, 1, 1)), 0.5)
    with pytest.raises(UndefinedMetricError):
        M.normalized_confusion(M.ConfusionMatrix(0, 3, 1, 0))


@given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30), st.integers(0, 30))
def test_normalized_rows_sum_to_one(tp, tn, fp, fn):
    assume(tn + fp > 0 and tp + fn > 0)
    rows = M.normalized_confusion(M.ConfusionMatrix(tp, tn, fp, fn)).sum(axis=1)
    np.testing.assert_allclose(rows, 1.0, atol=1e-12)


def test_distribution_examples():
    perfect = M.prob_distribution([0.9, 0.2], [1, 0])
    assert perfect["FP"] == [] and perfect["FN"] == []
    d = M.prob_distribution([0.6, 0.4], [0, 1], 0.5)
    assert d["FP"] == [0.6] and d["FN"] == [0.4]


@given(ranked, st.floats(0, 1))
def test_distribution_reproduces_counts(pairs, thr):
    scores, labels = zip(*pairs)
    d = M.prob_distribution(scores, labels, thr)
    cm = M.confusion_at_threshold(scores, labels, thr)
    assert (len(d["TP"]), len(d["TN"]), len(d["FP"]), len(d["FN"])) == (cm.tp, cm.tn, cm.fp, cm.fn)
    assert sum(map(len, d.values())) == len(scores)


def test_report_has_all_keys_and_marks_undefined():
    rep = M.metric_report([0.2, 0.3], [0, 0], 0.5)
    assert set(rep) == set(M.METRIC_KEYS)
    assert rep["precision"] is None and rep["auc"] is None and rep["accuracy"] == 1.0


def test_mean_report_skips_undefined():
    out = M.mean_report([{"accuracy": 0.5, "precision": None}, {"accuracy": 1.0, "precision": 0.4}])
    assert out["accuracy"] == 0.75 and out["precision"] == 0.4 and out["auc"] is None


def test_curve_csv_round_trip(tmp_path):
    pts = M.roc_curve([0.9, 0.8, 1 / 3, 0.1], [1, 0, 1, 0])
    path = tmp_path / "roc.csv"
    M.write_curve_csv(path, pts)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,y,threshold"
    assert lines[1] == "0,0,inf"
    assert "0.333333333" in path.read_text()
    back = M.read_curve_csv(path)
    assert len(back) == len(pts)
    for a, b in zip(back, pts):
        assert a.x == pytest.approx(b.x, rel=1e-8) and a.y == pytest.approx(b.y, rel=1e-8)
        assert a.threshold == b.threshold or math.isclose(a.threshold, b.threshold, rel_tol=1e-8)


def test_keyvalue_export(tmp_path):
    rep = M.metric_report([0.9, 0.1, 0.7], [1, 0, 0])
    M.write_keyvalue(tmp_path / "m.txt", rep)
    lines = dict(line.split("=") for line in (tmp_path / "m.txt").read_text().splitlines())
    assert list(lines) == list(M.METRIC_KEYS)
    assert lines["tp"] == "1" and lines["fp"] == "1"
