import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seismicwarn.metrics import (
    ConfusionMatrix,
    auc_pairwise,
    auc_rank,
    best_class_gain_threshold,
    confusion_at,
    derived_metrics,
    metrics_report,
    pr_curve,
    write_pr_curve,
)


def brute_auc(scores, labels, tie_credit=0.0):
    """Independent double loop over all (negative, positive) pairs."""
    total = hits = 0.0
    for s_neg, y_neg in zip(scores, labels):
        if y_neg != 0:
            continue
        for s_pos, y_pos in zip(scores, labels):
            if y_pos != 1:
                continue
            total += 1
            hits += 1.0 if s_neg < s_pos else (tie_credit if s_neg == s_pos else 0.0)
    return hits / total


def brute_cut_gains(scores, labels):
    """Class-gain at every candidate threshold, evaluated from scratch."""
    out = {}
    for t in sorted(set(scores)):
        pred = [s >= t for s in scores]
        tp = sum(p and y for p, y in zip(pred, labels))
        fp = sum(p and not y for p, y in zip(pred, labels))
        pos = sum(labels)
        neg = len(labels) - pos
        out[t] = tp / pos + (neg - fp) / neg - 1
    return out


def labeled_scores(draw_ties=True):
    @st.composite
    def strat(draw):
        n = draw(st.integers(2, 60))
        labels = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
        if len(set(labels)) < 2:
            labels[0], labels[1] = 0, 1
        elems = st.integers(0, 6).map(float) if draw_ties else st.floats(-1e3, 1e3, allow_nan=False)
        scores = draw(st.lists(elems, min_size=n, max_size=n))
        return np.array(scores), np.array(labels)

    return strat()


# --- AUC -------------------------------------------------------------------


@pytest.mark.parametrize(
    "scores, labels, expected",
    [([0.1, 0.9], [0, 1], 1.0), ([0.9, 0.1], [0, 1], 0.0), ([0.5, 0.5, 0.5], [0, 1, 1], 0.0)],
)
def test_auc_pairwise_trivial(scores, labels, expected):
    assert auc_pairwise(scores, labels) == expected


def test_auc_half_credit_all_ties():
    assert auc_rank([0.3] * 6, [0, 1, 0, 1, 1, 0], tie_mode="half") == 0.5


def test_auc_single_class_errors():
    for f in (auc_pairwise, auc_rank, best_class_gain_threshold):
        with pytest.raises(ValueError):
            f([0.1, 0.2], [1, 1])


def test_auc_rejects_unknown_tie_mode():
    with pytest.raises(ValueError):
        auc_rank([0.1, 0.2], [0, 1], tie_mode="avg")


def test_random_predictor_near_half():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 2, 10_000)
    assert abs(auc_rank(rng.uniform(size=10_000), labels) - 0.5) <= 0.02


@given(labeled_scores())
@settings(max_examples=200, deadline=None)
def test_auc_rank_strict_equals_pairwise(data):
    scores, labels = data
    assert abs(auc_rank(scores, labels, "strict") - auc_pairwise(scores, labels)) <= 1e-12


@given(labeled_scores())
@settings(max_examples=100, deadline=None)
def test_auc_matches_double_loop_oracle(data):
    scores, labels = data
    assert auc_pairwise(scores, labels) == pytest.approx(brute_auc(scores, labels), abs=1e-12)
    assert auc_rank(scores, labels, "half") == pytest.approx(brute_auc(scores, labels, 0.5), abs=1e-12)


@given(labeled_scores())
@settings(max_examples=100, deadline=None)
def test_half_credit_dominates_strict(data):
    scores, labels = data
    assert auc_rank(scores, labels, "half") >= auc_rank(scores, labels, "strict")


@given(labeled_scores(draw_ties=False))
@settings(max_examples=100, deadline=None)
def test_auc_complement_without_ties(data):
    scores, labels = data
    if len(np.unique(scores)) < len(scores):
        scores = scores + np.arange(len(scores)) * 1e-3
    assert auc_rank(scores, labels) + auc_rank(-scores, labels) == pytest.approx(1.0, abs=1e-12)


@given(labeled_scores())
@settings(max_examples=100, deadline=None)
def test_auc_invariant_to_monotone_transform(data):
    scores, labels = data
    for mode in ("strict", "half"):
        assert auc_rank(np.exp(scores / 3) * 5 - 1, labels, mode) == auc_rank(scores, labels, mode)


def test_auc_pairwise_large_input_matches_rank():
    rng = np.random.default_rng(1)
    scores = rng.integers(0, 50, 3000).astype(float)
    labels = rng.integers(0, 2, 3000)
    assert auc_pairwise(scores, labels) == pytest.approx(auc_rank(scores, labels, "strict"), abs=1e-12)


# --- confusion matrix and derived metrics -----------------------------------


def reported_matrix_fixture():
    """Scores and labels built so that threshold 0.018 gives (126, 284, 11, 2390)."""
    scores = np.concatenate([np.full(126, 0.5), np.full(284, 0.2), np.full(11, 0.01), np.full(2390, 0.001)])
    labels = np.concatenate([np.ones(126), np.zeros(284), np.ones(11), np.zeros(2390)]).astype(int)
    return scores, labels


def test_confusion_reproduces_reported_matrix():
    scores, labels = reported_matrix_fixture()
    assert confusion_at(scores, labels, 0.018) == ConfusionMatrix(126, 284, 11, 2390)


def test_derived_metrics_match_reported_table():
    m = derived_metrics(ConfusionMatrix(126, 284, 11, 2390))
    expected = dict(precision=0.31, recall=0.92, specificity=0.89, f1=0.46, class_gain=0.81)
    for name, value in expected.items():
        assert abs(getattr(m, name) - value) <= 0.005, name


def test_derived_metrics_exact_fractions():
    m = derived_metrics(ConfusionMatrix(126, 284, 11, 2390))
    assert m.precision == 126 / 410
    assert m.recall == 126 / 137
    assert m.specificity == 2390 / 2674
    assert m.f1 == pytest.approx(2 * 126 / (2 * 126 + 284 + 11), rel=1e-12)


@pytest.mark.parametrize(
    "cm, expected",
    [
        (ConfusionMatrix(5, 0, 0, 0), (1.0, 1.0, 0.0, 1.0, 0.0)),
        (ConfusionMatrix(4, 0, 0, 6), (1.0, 1.0, 1.0, 1.0, 1.0)),
        (ConfusionMatrix(0, 0, 3, 7), (0.0, 0.0, 1.0, 0.0, 0.0)),
        (ConfusionMatrix(0, 0, 0, 0), (0.0, 0.0, 0.0, 0.0, -1.0)),
    ],
)
def test_derived_metrics_degenerate(cm, expected):
    m = derived_metrics(cm)
    assert (m.precision, m.recall, m.specificity, m.f1, m.class_gain) == expected


def test_confusion_threshold_extremes():
    scores = np.array([0.2, 0.4, 0.6, 0.8])
    labels = np.array([0, 1, 0, 1])
    above = confusion_at(scores, labels, 0.9)
    assert above.tp == above.fp == 0
    below = confusion_at(scores, labels, 0.2)
    assert below.fn == below.tn == 0


def test_confusion_rejects_negative_counts():
    with pytest.raises(ValueError):
        ConfusionMatrix(-1, 0, 0, 0)


@given(labeled_scores(), st.floats(-1, 7))
@settings(max_examples=100, deadline=None)
def test_class_gain_consistent_with_confusion(data, t):
    scores, labels = data
    cm = confusion_at(scores, labels, t)
    assert cm.n == len(scores)
    m = derived_metrics(cm)
    assert m.class_gain == pytest.approx(m.recall + m.specificity - 1)
    for v in (m.precision, m.recall, m.specificity, m.f1):
        assert 0 <= v <= 1
    assert -1 <= m.class_gain <= 1


# --- threshold search ----------------------------------------------------------


def test_best_threshold_separated_is_lowest_positive_score():
    scores = np.array([0.1, 0.2, 0.3, 0.7, 0.8])
    labels = np.array([0, 0, 0, 1, 1])
    assert best_class_gain_threshold(scores, labels) == (0.7, 1.0)


def test_best_threshold_matches_exhaustive_enumeration():
    scores = [0.9, 0.8, 0.8, 0.4, 0.3, 0.1]
    labels = [1, 0, 1, 1, 0, 0]
    gains = brute_cut_gains(scores, labels)
    best = max(gains.values())
    t, g = best_class_gain_threshold(scores, labels)
    assert g == pytest.approx(best)
    assert t == min(k for k, v in gains.items() if v == pytest.approx(best))


@given(labeled_scores())
@settings(max_examples=100, deadline=None)
def test_best_threshold_property(data):
    scores, labels = data
    gains = brute_cut_gains(list(scores), list(labels))
    best = max(gains.values())
    t, g = best_class_gain_threshold(scores, labels)
    assert g == pytest.approx(best, abs=1e-12)
    assert t == min(k for k, v in gains.items() if abs(v - best) <= 1e-12)


def test_random_scores_have_small_gain():
    rng = np.random.default_rng(2)
    gains = [
        best_class_gain_threshold(rng.uniform(size=2000), rng.integers(0, 2, 2000))[1] for _ in range(20)
    ]
    # permutation null: the maximum over cuts of a random walk stays small
    assert np.mean(gains) < 0.08


# --- PR curve ------------------------------------------------------------------


def brute_pr(scores, labels):
    pts = [(0.0, 1.0)]
    pos = sum(labels)
    for t in sorted(set(scores), reverse=True):
        pred = [s >= t for s in scores]
        tp = sum(p and y for p, y in zip(pred, labels))
        fp = sum(p and not y for p, y in zip(pred, labels))
        pts.append((tp / pos, tp / (tp + fp)))
        if tp == pos:
            break
    return pts


def test_pr_curve_perfect_scores():
    pts = pr_curve([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1])
    assert all(p.precision == 1.0 for p in pts)
    assert pts[-1].recall == 1.0


def test_pr_curve_single_positive_two_points():
    pts = pr_curve([0.9, 0.1, 0.2], [1, 0, 0])
    assert [(p.recall, p.precision) for p in pts] == [(0.0, 1.0), (1.0, 1.0)]


def test_pr_curve_matches_exhaustive_thresholds():
    scores = [0.9, 0.7, 0.7, 0.5, 0.4, 0.2, 0.2]
    labels = [1, 0, 1, 0, 1, 0, 0]
    got = [(p.recall, p.precision) for p in pr_curve(scores, labels)]
    assert got == pytest.approx(brute_pr(scores, labels))


@given(labeled_scores())
@settings(max_examples=100, deadline=None)
def test_pr_curve_recall_non_decreasing(data):
    scores, labels = data
    pts = pr_curve(scores, labels)
    recalls = [p.recall for p in pts]
    assert recalls == sorted(recalls)
    assert [(p.recall, p.precision) for p in pts] == pytest.approx(brute_pr(list(scores), list(labels)))


def test_metrics_report_and_pr_export(tmp_path):
    scores, labels = reported_matrix_fixture()
    report = metrics_report(scores, labels, threshold=0.018)
    assert report["confusion"] == {"tp": 126, "fp": 284, "fn": 11, "tn": 2390}
    assert abs(report["metrics"]["class_gain"] - 0.81) <= 0.005
    path = tmp_path / "pr.csv"
    write_pr_curve(pr_curve(scores, labels), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "recall,precision"
    assert lines[1] == "0.0,1.0"


def test_best_threshold_on_reported_fixture():
    scores, labels = reported_matrix_fixture()
    t, g = best_class_gain_threshold(scores, labels)
    cands = {}
    for cut in sorted(set(scores)):
        cm = confusion_at(scores, labels, cut)
        cands[cut] = derived_metrics(cm).class_gain
    assert g == pytest.approx(max(cands.values()))
    assert t == min(k for k, v in cands.items() if v == pytest.approx(g))
