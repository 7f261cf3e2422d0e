import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import mann_whitney_auc
from qeeg.evaluation import (
    MetricError,
    auc,
    classification_metrics,
    confusion_matrix,
    evaluate,
    mae,
    roc_curve,
    write_roc_csv,
)

seeds = st.integers(0, 2**32 - 1)


def test_confusion_example():
    cm = confusion_matrix([0, 0, 1, 1], [0, 1, 1, 1], 2)
    assert cm.tolist() == [[1, 1], [0, 2]]


def test_confusion_perfect_and_empty():
    assert confusion_matrix([0, 1, 2, 1], [0, 1, 2, 1], 3).tolist() == [[1, 0, 0], [0, 2, 0], [0, 0, 1]]
    assert confusion_matrix([], [], 2).tolist() == [[0, 0], [0, 0]]


def test_confusion_errors():
    with pytest.raises(MetricError):
        confusion_matrix([0, 2], [0, 1], 2)
    with pytest.raises(MetricError):
        confusion_matrix([0, 1], [0], 2)


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), max_size=60))
def test_confusion_total_and_accuracy(pairs):
    t = [a for a, _ in pairs]
    p = [b for _, b in pairs]
    cm = confusion_matrix(t, p, 4)
    assert cm.sum() == len(pairs)
    if pairs:
        acc = classification_metrics(cm, "macro")[0]
        assert acc == pytest.approx(np.mean(np.array(t) == np.array(p)), abs=1e-15)


def test_metrics_example():
    acc, prec, rec, f1 = classification_metrics([[1, 1], [0, 2]])
    assert acc == 0.75
    assert prec == pytest.approx(2 / 3, abs=1e-15)
    assert rec == 1.0
    assert f1 == pytest.approx(0.8, abs=1e-15)


def test_metrics_diagonal():
    assert classification_metrics([[3, 0], [0, 5]]) == (1.0, 1.0, 1.0, 1.0)
    assert classification_metrics(np.diag([2, 3, 4]), "macro") == (1.0, 1.0, 1.0, 1.0)


def test_no_predicted_positives():
    acc, prec, rec, f1 = classification_metrics([[3, 0], [2, 0]])
    assert (prec, rec, f1) == (0.0, 0.0, 0.0)
    assert acc == 0.6


def test_metric_errors():
    with pytest.raises(MetricError):
        classification_metrics([[0, 0], [0, 0]])
    with pytest.raises(MetricError):
        classification_metrics(np.eye(3, dtype=int))
    with pytest.raises(MetricError):
        classification_metrics([[1, 0], [0, 1]], "weighted")


def test_macro_average():
    cm = [[2, 1, 0], [0, 3, 0], [1, 0, 1]]
    _, p, r, _ = classification_metrics(cm, "macro")
    assert p == pytest.approx(np.mean([2 / 3, 3 / 4, 1.0]))
    assert r == pytest.approx(np.mean([2 / 3, 1.0, 1 / 2]))


@settings(max_examples=50)
@given(st.lists(st.integers(0, 20), min_size=4, max_size=4).filter(lambda v: sum(v) > 0))
def test_f1_between_precision_and_recall(counts):
    _, p, r, f1 = classification_metrics(np.reshape(counts, (2, 2)))
    assert 0 <= f1 <= max(p, r) + 1e-15
    assert f1 >= min(p, r) - 1e-15 or f1 == 0


# --- ROC / AUC --------------------------------------------------------------


def _xy(curve):
    return [p.false_positive_rate for p in curve], [p.true_positive_rate for p in curve]


def test_roc_hand_sweep():
    curve = roc_curve([0.9, 0.8, 0.7, 0.6], [1, 1, 0, 1])
    fpr, tpr = _xy(curve)
    assert fpr == [0, 0, 0, 1, 1]
    assert tpr == pytest.approx([0, 1 / 3, 2 / 3, 2 / 3, 1], abs=1e-15)
    assert curve[0].threshold == float("inf")
    # trapezoid over those points; one of the three positives ranks below the negative
    assert auc(curve) == pytest.approx(2 / 3, abs=1e-9)


def test_roc_perfect_separation():
    curve = roc_curve([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0])
    assert any(p.false_positive_rate == 0 and p.true_positive_rate == 1 for p in curve)
    assert auc(curve) == 1.0


def test_roc_all_tied_is_diagonal():
    curve = roc_curve([0.5] * 6, [0, 1, 0, 1, 1, 0])
    assert _xy(curve) == ([0, 1], [0, 1])
    assert auc(curve) == 0.5


def test_roc_single_class_raises():
    with pytest.raises(MetricError):
        roc_curve([0.1, 0.2], [1, 1])
    with pytest.raises(MetricError):
        roc_curve([0.1, 0.2], [0, 1, 1])


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(2, 80), st.booleans())
def test_auc_matches_rank_statistic(seed, n, coarse):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, n)
    labels[:2] = [0, 1]
    scores = rng.integers(0, 5, n) / 4 if coarse else rng.random(n)
    assert auc(roc_curve(scores, labels)) == pytest.approx(mann_whitney_auc(scores, labels), abs=1e-9)


@settings(max_examples=50)
@given(seeds, st.integers(2, 50))
def test_roc_monotone_and_anchored(seed, n):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, n)
    labels[:2] = [1, 0]
    curve = roc_curve(rng.integers(0, 10, n), labels)
    fpr, tpr = _xy(curve)
    assert (fpr[0], tpr[0]) == (0, 0) and (fpr[-1], tpr[-1]) == (1, 1)
    assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)
    assert 0 <= auc(curve) <= 1


def test_roc_csv(tmp_path):
    path = tmp_path / "roc.csv"
    write_roc_csv(roc_curve([0.9, 0.2], [1, 0]), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "fpr,tpr,threshold"
    assert lines[1] == "0.0,0.0,inf"
    assert len(lines) == 4


# --- MAE --------------------------------------------------------------------


def test_mae_examples():
    assert mae([[1, 0], [0, 1]], [0, 1]) == 0.0
    assert mae([[0.5, 0.5]] * 3, [0, 1, 1]) == 0.5
    assert mae([[0.8, 0.2]], [0]) == pytest.approx(0.2)
    with pytest.raises(MetricError):
        mae([[0.5, 0.5]], [0, 1])


@settings(max_examples=50)
@given(seeds, st.integers(2, 5))
def test_mae_bounds(seed, k):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(k), size=20)
    v = mae(p, rng.integers(0, k, 20))
    assert 0 <= v <= 2 * (k - 1) / k / 1 + 1e-12


# --- report -----------------------------------------------------------------


def test_evaluate_binary_report():
    probs = np.array([[0.1, 0.9], [0.2, 0.8], [0.3, 0.7], [0.4, 0.6]])
    r = evaluate(probs, [1, 1, 0, 1])
    assert r.confusion == [[0, 1], [0, 3]]
    assert r.averaging == "binary_positive" and r.n_samples == 4
    assert r.auc == pytest.approx(2 / 3)
    d = json.loads(r.to_json())
    assert set(d) >= {"accuracy", "precision", "recall", "f1", "confusion", "auc", "mae"}


def test_evaluate_multiclass_defaults_to_macro():
    probs = np.eye(3)[[0, 1, 2, 2]]
    r = evaluate(probs, [0, 1, 2, 1])
    assert r.averaging == "macro" and r.auc is None
    assert r.accuracy == 0.75
