import math

import numpy as np
import pytest

from boostlab.errors import LengthMismatch, NoPositives, SingleClassTruth
from boostlab.metrics import (
    ConfusionMatrix,
    MetricScores,
    accuracy,
    confusion,
    f_score,
    fpr,
    pr_curve,
    precision,
    read_curve_csv,
    recall,
    roc_curve,
    roc_to_csv,
    pr_to_csv,
    specificity,
    tpr,
)


def oracle_confusion(pred, truth):
    """Per-row counting, no vectorization."""
    tp = fp = tn = fn = 0
    for p, t in zip(pred, truth):
        if p == 1 and t == 1:
            tp += 1
        elif p == 1 and t == 0:
            fp += 1
        elif p == 0 and t == 0:
            tn += 1
        else:
            fn += 1
    return tp, fp, tn, fn


def oracle_pairwise_auc(scores, truth):
    """P(score_pos > score_neg) + 0.5 * P(tie) over all positive-negative pairs."""
    pos = [s for s, t in zip(scores, truth) if t == 1]
    neg = [s for s, t in zip(scores, truth) if t == 0]
    wins = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                wins += 1.0
            elif sp == sn:
                wins += 0.5
    return wins / (len(pos) * len(neg))


class TestConfusion:
    def test_perfect_prediction(self):
        cm = confusion([1, 0, 1], [1, 0, 1])
        assert (cm.tp, cm.tn, cm.fp, cm.fn) == (2, 1, 0, 0)

    def test_hand_count(self):
        cm = confusion([1, 1, 0, 0], [1, 0, 1, 0])
        assert (cm.tp, cm.fp, cm.fn, cm.tn) == (1, 1, 1, 1)

    def test_one_fn_one_fp(self):
        pred = [1, 1, 1, 0, 0, 1]
        truth = [1, 1, 1, 1, 0, 0]
        cm = confusion(pred, truth)
        assert (cm.fn, cm.fp) == (1, 1)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            confusion([1, 0], [1, 0, 1])

    def test_matches_counting_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = int(rng.integers(1, 40))
            pred = rng.integers(0, 2, n)
            truth = rng.integers(0, 2, n)
            cm = confusion(pred, truth)
            assert (cm.tp, cm.fp, cm.tn, cm.fn) == oracle_confusion(pred, truth)


class TestScalarMetrics:
    def test_precision_values(self):
        assert precision(ConfusionMatrix(20, 1, 0, 0)) == pytest.approx(20 / 21)
        assert precision(ConfusionMatrix(0, 0, 3, 2)) is None
        assert precision(ConfusionMatrix(5, 5, 0, 0)) == 0.5

    def test_recall_values(self):
        assert recall(ConfusionMatrix(39, 0, 0, 1)) == pytest.approx(0.975)
        assert recall(ConfusionMatrix(7, 2, 3, 0)) == 1.0
        assert recall(ConfusionMatrix(0, 4, 4, 0)) is None

    def test_f_score_values(self):
        # P = R = 0.9
        assert f_score(ConfusionMatrix(9, 1, 0, 1)) == pytest.approx(0.9)
        # P = 20/21, R = 1 -> 2PR/(P+R)
        cm = ConfusionMatrix(20, 1, 0, 0)
        p = 20 / 21
        assert f_score(cm) == pytest.approx(2 * p / (p + 1))
        # tp = 0 zeroes both P and R, so P + R = 0 and F is undefined
        assert f_score(ConfusionMatrix(0, 0, 1, 5)) is None  # P undefined
        assert f_score(ConfusionMatrix(0, 3, 1, 5)) is None

    def test_specificity_fpr_pair(self):
        cm = ConfusionMatrix(0, 8, 40, 0)
        assert specificity(cm) == pytest.approx(40 / 48)
        assert fpr(cm) == pytest.approx(8 / 48)
        assert fpr(cm) == pytest.approx(1 - specificity(cm))

    def test_no_false_positives(self):
        cm = ConfusionMatrix(3, 0, 7, 1)
        assert fpr(cm) == 0.0
        assert specificity(cm) == 1.0

    def test_no_negatives_undefined(self):
        cm = ConfusionMatrix(3, 0, 0, 1)
        assert fpr(cm) is None
        assert specificity(cm) is None

    def test_recall_equals_tpr(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            cm = ConfusionMatrix(*(int(v) for v in rng.integers(0, 50, 4)))
            if cm.total == 0:
                continue
            assert recall(cm) == tpr(cm)

    def test_accuracy(self):
        assert accuracy([1, 0, 1, 0], [1, 0, 0, 0]) == 0.75


class TestRocCurve:
    def test_perfect_ranking(self):
        series = roc_curve([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        assert series.auc == pytest.approx(1.0)

    def test_all_tied(self):
        series = roc_curve([0.5, 0.5, 0.5], [1, 0, 1])
        assert series.points == ((0.0, 0.0), (1.0, 1.0))
        assert series.auc == pytest.approx(0.5)

    def test_hand_example(self):
        series = roc_curve([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0])
        assert series.auc == pytest.approx(0.75)
        assert series.auc == pytest.approx(
            oracle_pairwise_auc([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0])
        )

    def test_endpoints_and_monotone(self):
        rng = np.random.default_rng(2)
        scores = rng.random(60).round(1)  # heavy ties
        truth = rng.integers(0, 2, 60)
        series = roc_curve(scores, truth)
        assert series.points[0] == (0.0, 0.0)
        assert series.points[-1] == (1.0, 1.0)
        xs = [p[0] for p in series.points]
        ys = [p[1] for p in series.points]
        assert xs == sorted(xs)
        assert ys == sorted(ys)

    def test_single_class_raises(self):
        with pytest.raises(SingleClassTruth):
            roc_curve([0.1, 0.9], [1, 1])

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            n = int(rng.integers(4, 80))
            scores = rng.random(n).round(2)
            truth = rng.integers(0, 2, n)
            if truth.min() == truth.max():
                continue
            assert roc_curve(scores, truth).auc == pytest.approx(
                oracle_pairwise_auc(scores, truth), abs=1e-12
            )

    def test_rank_invariance(self):
        rng = np.random.default_rng(4)
        scores = rng.random(50).round(1)
        truth = rng.integers(0, 2, 50)
        base = roc_curve(scores, truth)
        for transform in (lambda s: 2 * s + 1, np.exp, lambda s: s**3 + s):
            other = roc_curve(transform(scores), truth)
            assert other.points == base.points
            assert other.auc == pytest.approx(base.auc, abs=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(5)
        scores = rng.random(40)
        truth = rng.integers(0, 2, 40)
        perm = rng.permutation(40)
        a = roc_curve(scores, truth)
        b = roc_curve(scores[perm], truth[perm])
        assert a.points == b.points and a.auc == b.auc


class TestPrCurve:
    def test_perfect_ranking(self):
        series = pr_curve([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        precisions = [p for _, p in series.points[:2]]
        assert precisions == [1.0, 1.0]
        assert series.points[1][0] == 1.0  # recall reaches 1 while precision still 1

    def test_all_tied_single_point(self):
        series = pr_curve([0.3, 0.3, 0.3, 0.3], [1, 0, 0, 1])
        assert series.points == ((1.0, 0.5),)

    def test_hand_example(self):
        series = pr_curve([0.9, 0.8, 0.7], [1, 0, 1])
        assert series.points == ((0.5, 1.0), (0.5, 0.5), (1.0, 2 / 3))

    def test_no_positives_raises(self):
        with pytest.raises(NoPositives):
            pr_curve([0.2, 0.4], [0, 0])


class TestCurveCsv:
    def test_round_trip_six_decimals(self, tmp_path):
        rng = np.random.default_rng(6)
        scores = rng.random(30)
        truth = rng.integers(0, 2, 30)
        roc = roc_curve(scores, truth)
        pr = pr_curve(scores, truth)
        for series, text in ((roc, roc_to_csv(roc)), (pr, pr_to_csv(pr))):
            path = tmp_path / "curve.csv"
            path.write_text(text)
            back = read_curve_csv(path)
            assert len(back.points) == len(series.points)
            for (x1, y1), (x2, y2) in zip(back.points, series.points):
                assert x1 == pytest.approx(round(x2, 6), abs=1e-12)
                assert y1 == pytest.approx(round(y2, 6), abs=1e-12)

    def test_headers(self):
        series = roc_curve([0.9, 0.1], [1, 0])
        assert roc_to_csv(series).splitlines()[0] == "fpr,tpr"
        assert pr_to_csv(pr_curve([0.9, 0.1], [1, 0])).splitlines()[0] == "recall,precision"


class TestMetricScores:
    def test_from_confusion_identities(self):
        cm = ConfusionMatrix(12, 3, 30, 5)
        scores = MetricScores.from_confusion(cm)
        assert scores.recall == scores.tpr
        assert scores.fpr == pytest.approx(1 - scores.specificity)
        assert scores.accuracy == pytest.approx(42 / 50)
