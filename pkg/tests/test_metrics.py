import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.metrics import roc_auc_score

from graphda.metrics import (ClassReport, FeatureReport, UndefinedAucError, aggregate_trials,
                             auc_score, classification_metrics, feature_metrics,
                             format_mean_std)


def indicator(S, p=10):
    w = np.zeros(p)
    w[list(S)] = 1.0
    return w


def test_feature_metrics_examples():
    r = feature_metrics(indicator({1, 2, 3}), indicator({1, 2, 3}))
    assert (r.precision, r.recall, r.f1, r.nonzero_ratio) == (1.0, 1.0, 1.0, 0.3)
    r = feature_metrics(indicator({2, 3, 4, 5}), indicator({1, 2, 3}))
    assert r.precision == 0.5 and r.recall == pytest.approx(2 / 3)
    assert r.f1 == pytest.approx(4 / 7) and r.nonzero_ratio == 0.4
    assert feature_metrics(np.zeros(10), indicator({1})) == FeatureReport(0.0, 0.0, 0.0, 0.0)
    r = feature_metrics([1e-12, 1.0], [0.0, 1.0], tolerance=1e-9)
    assert r.f1 == 1.0
    with pytest.raises(ValueError):
        feature_metrics(np.zeros(3), np.zeros(4))


@given(st.sets(st.integers(0, 9)), st.sets(st.integers(0, 9), min_size=1))
def test_feature_metrics_bounds(A, B):
    r = feature_metrics(indicator(B), indicator(A))
    for v in (r.precision, r.recall, r.f1, r.nonzero_ratio):
        assert 0.0 <= v <= 1.0
    if A:
        assert r.f1 == pytest.approx(2 * len(A & B) / (len(A) + len(B)))


def test_classification_examples():
    r = classification_metrics([0.9, -0.1, 0.8, -0.3], [1, -1, 1, -1])
    assert r == ClassReport(1.0, 0, 1.0)
    r = classification_metrics([0.9, 0.1, 0.8, 0.3], [1, -1, 1, -1])
    assert r.auc == 1.0 and r.accuracy == 0.5 and r.miss == 2
    assert classification_metrics([0.0] * 4, [1, -1, 1, -1]).auc == 0.5
    # sign(0) counts as -1
    assert classification_metrics([0.0, 0.0], [-1, 1]).miss == 1
    with pytest.raises(UndefinedAucError) as err:
        classification_metrics([0.5, -0.5], [1, 1])
    assert err.value.report.miss == 1 and np.isnan(err.value.report.auc)
    with pytest.raises(ValueError):
        classification_metrics([0.1], [0])


@given(st.lists(st.tuples(st.integers(-3, 3), st.booleans()), min_size=2, max_size=30))
def test_auc_matches_sklearn(pairs):
    scores = np.array([p[0] for p in pairs], dtype=float)
    labels = np.array([1 if p[1] else -1 for p in pairs])
    if len(set(labels)) < 2:
        return
    assert auc_score(scores, labels) == pytest.approx(roc_auc_score(labels, scores))


def test_aggregate_trials():
    agg = aggregate_trials([{"f1": 0.8}, {"f1": 1.0}])
    assert agg["f1"][0] == pytest.approx(0.9) and agg["f1"][1] == pytest.approx(0.1)
    assert aggregate_trials([{"f1": 0.5}])["f1"][1] == 0.0
    agg = aggregate_trials([FeatureReport(0.5, 0.5, 0.5, 0.1)] * 20)
    assert all(std == 0 for _, std in agg.values())
    with pytest.raises(ValueError):
        aggregate_trials([])
    assert format_mean_std(0.88, 0.08) == "0.880±0.080"
