"""Embedding metric tests against double-loop oracles."""
import json

import numpy as np
import pytest

from ctstd import (
    DegenerateSpread,
    EmbeddingSet,
    EmptyCell,
    UndefinedAUC,
    ValidationError,
    analyze,
    auc_roc,
    centroid,
    fisher_score,
    inter_source_variance,
    intra_class_distance,
    macro_f1,
    separability,
)
from ctstd.io import canonical_json

from oracles import (
    centroid_loop,
    hand_macro_f1,
    inter_source_variance_loop,
    pairwise_mean_distance_loop,
    trapezoid_auc,
)


def _set(vectors, labels, sources):
    return EmbeddingSet(np.asarray(vectors, dtype=float), tuple(labels), tuple(sources))


def _random_set(rng, n_sources=3, per_cell=12, d=6, offsets=None):
    vecs, labels, sources = [], [], []
    for s in range(n_sources):
        for label in ("covid", "non_covid"):
            center = rng.normal(0, 5, d)
            if offsets is not None:
                center = center * 0 + offsets[(s, label)]
            for _ in range(per_cell):
                vecs.append(center + rng.normal(0, 1, d))
                labels.append(label)
                sources.append(s)
    return _set(vecs, labels, sources)


def test_centroid_midpoint_and_single():
    e = _set([[1, 1], [3, 3], [9, 9]], ["covid", "covid", "non_covid"], [0, 0, 0])
    assert centroid(e, 0, "covid").tolist() == [2.0, 2.0]
    assert centroid(e, 0, "non_covid").tolist() == [9.0, 9.0]


def test_centroid_matches_compensated_sum():
    rng = np.random.default_rng(0)
    vecs = rng.normal(0, 1, (100, 16)) * 1e3
    e = _set(vecs, ["covid"] * 100, [0] * 100)
    got = centroid(e, 0, "covid")
    want = centroid_loop(vecs)
    assert np.abs(got - want).max() <= 1e-12 * np.abs(want).max()


def test_centroid_empty_cell():
    e = _set([[1.0]], ["covid"], [0])
    with pytest.raises(EmptyCell) as err:
        centroid(e, 0, "non_covid")
    assert "non_covid" in str(err.value)


def test_intra_class_distance_small_cases():
    e = _set([[0, 0], [3, 4]], ["covid", "covid"], [0, 0])
    assert intra_class_distance(e, 0, "covid") == pytest.approx(5.0)
    e3 = _set([[0.0], [1.0], [2.0]], ["covid"] * 3, [0] * 3)
    assert intra_class_distance(e3, 0, "covid") == pytest.approx(4.0 / 3.0)


def test_intra_class_distance_matches_double_loop():
    rng = np.random.default_rng(1)
    vecs = rng.normal(0, 2, (50, 8))
    e = _set(vecs, ["covid"] * 50, [0] * 50)
    got = intra_class_distance(e, 0, "covid")
    want = pairwise_mean_distance_loop(vecs)
    assert got == pytest.approx(want, rel=1e-12)


def test_intra_class_distance_needs_two():
    e = _set([[1.0]], ["covid"], [0])
    with pytest.raises(EmptyCell):
        intra_class_distance(e, 0, "covid")


def test_fisher_zero_when_centroids_match():
    e = _set(
        [[0, 0], [2, 2], [0, 0], [2, 2]],
        ["covid", "covid", "non_covid", "non_covid"],
        [0, 0, 0, 0],
    )
    assert fisher_score(e) == 0.0


def test_fisher_hand_example():
    e = _set(
        [[0, 0], [0, 2], [10, 0], [10, 2]],
        ["covid", "covid", "non_covid", "non_covid"],
        [0, 0, 0, 0],
    )
    assert fisher_score(e) == pytest.approx(5.0, rel=1e-12)


def test_fisher_scale_invariant():
    rng = np.random.default_rng(2)
    e = _random_set(rng)
    base = fisher_score(e)
    scaled = _set(e.vectors * 3.7, e.labels, e.sources)
    assert fisher_score(scaled) == pytest.approx(base, rel=1e-9)


def test_fisher_degenerate_spread():
    e = _set(
        [[1, 1], [1, 1], [4, 4], [4, 4]],
        ["covid", "covid", "non_covid", "non_covid"],
        [0, 0, 0, 0],
    )
    with pytest.raises(DegenerateSpread):
        fisher_score(e)


def test_separability_hand_example():
    e = _set(
        [[0, 0], [0, 2], [10, 0], [10, 2]],
        ["covid", "covid", "non_covid", "non_covid"],
        [0, 0, 0, 0],
    )
    assert separability(e) == pytest.approx(2.5, rel=1e-12)
    # duplicating the geometry in a second source leaves the mean unchanged
    e2 = _set(
        [[0, 0], [0, 2], [10, 0], [10, 2]] * 2,
        ["covid", "covid", "non_covid", "non_covid"] * 2,
        [0] * 4 + [1] * 4,
    )
    assert separability(e2) == pytest.approx(2.5, rel=1e-12)


def test_separability_zero_when_per_source_centroids_match():
    e = _set(
        [[0, 0], [2, 2], [0, 2], [2, 0]],
        ["covid", "covid", "non_covid", "non_covid"],
        [0, 0, 0, 0],
    )
    assert separability(e) == 0.0


def test_inter_source_variance_cases():
    # identical centroids across three sources
    vecs = [[1, 2], [1, 2], [1, 2]]
    e = _set(vecs * 2, ["covid"] * 3 + ["non_covid"] * 3, [0, 1, 2, 0, 1, 2])
    assert inter_source_variance(e, "covid") == 0.0
    # unit equilateral triangle of centroids
    tri = [[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]]
    e_tri = _set(tri, ["covid"] * 3, [0, 1, 2])
    assert inter_source_variance(e_tri, "covid") == pytest.approx(1.0, rel=1e-12)


def test_inter_source_variance_matches_double_loop():
    rng = np.random.default_rng(3)
    cents = rng.normal(0, 4, (5, 7))
    vecs, labels, sources = [], [], []
    for s in range(5):
        # two symmetric points per cell keep the centroid exactly at cents[s]
        delta = rng.normal(0, 1, 7)
        vecs += [cents[s] + delta, cents[s] - delta]
        labels += ["covid", "covid"]
        sources += [s, s]
    e = _set(vecs, labels, sources)
    got = inter_source_variance(e, "covid")
    want = inter_source_variance_loop(cents)
    assert got == pytest.approx(want, rel=1e-12)


def test_inter_source_variance_needs_two_sources():
    e = _set([[1.0], [2.0]], ["covid", "covid"], [0, 0])
    with pytest.raises(EmptyCell):
        inter_source_variance(e, "covid")


def test_macro_f1_cases():
    perfect = ["covid", "non_covid", "covid"]
    assert macro_f1(perfect, perfect) == 100.0
    truth = ["covid", "covid", "non_covid", "non_covid"]
    pred = ["covid", "non_covid", "covid", "non_covid"]  # TP=FP=FN=TN=1
    assert macro_f1(truth, pred) == pytest.approx(50.0)
    all_covid = ["covid"] * 4
    assert macro_f1(truth, all_covid) == pytest.approx(100.0 / 3.0)
    assert macro_f1(truth, all_covid) == pytest.approx(hand_macro_f1(truth, all_covid))


def test_macro_f1_label_swap_symmetry():
    rng = np.random.default_rng(4)
    labels = ["covid", "non_covid"]
    truth = [labels[i] for i in rng.integers(0, 2, 30)]
    pred = [labels[i] for i in rng.integers(0, 2, 30)]
    swap = {"covid": "non_covid", "non_covid": "covid"}
    swapped = macro_f1([swap[t] for t in truth], [swap[p] for p in pred])
    assert macro_f1(truth, pred) == pytest.approx(swapped, rel=1e-12)


def test_macro_f1_errors():
    with pytest.raises(ValidationError):
        macro_f1([], [])
    with pytest.raises(ValidationError):
        macro_f1(["covid"], ["covid", "covid"])
    with pytest.raises(ValidationError):
        macro_f1(["covid"], ["positive"])


def test_auc_extremes():
    truth = ["covid"] * 3 + ["non_covid"] * 3
    assert auc_roc(truth, [0.9, 0.8, 0.7, 0.3, 0.2, 0.1]) == 1.0
    assert auc_roc(truth, [0.5] * 6) == 0.5


def test_auc_matches_trapezoid_oracle():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = int(rng.integers(4, 30))
        truth = ["covid" if x else "non_covid" for x in rng.integers(0, 2, n)]
        if "covid" not in truth or "non_covid" not in truth:
            continue
        scores = np.round(rng.normal(0, 1, n), 1)  # coarse scores force ties
        assert auc_roc(truth, scores) == pytest.approx(
            trapezoid_auc(truth, scores), abs=1e-12
        )


def test_auc_complement_under_negation():
    rng = np.random.default_rng(6)
    truth = ["covid"] * 10 + ["non_covid"] * 10
    scores = rng.normal(0, 1, 20)
    assert auc_roc(truth, -scores) == pytest.approx(1.0 - auc_roc(truth, scores))


def test_auc_single_class_undefined():
    with pytest.raises(UndefinedAUC):
        auc_roc(["covid", "covid"], [0.1, 0.2])


def test_analyze_composes_individual_metrics():
    rng = np.random.default_rng(7)
    e = _random_set(rng, n_sources=3, per_cell=8, d=5)
    report = analyze(e)
    assert report.fisher_score == fisher_score(e)
    assert report.separability == separability(e)
    for label in ("covid", "non_covid"):
        assert report.inter_source_variance[label] == inter_source_variance(e, label)
    for s in range(3):
        for label in ("covid", "non_covid"):
            assert np.array_equal(report.centroids[(s, label)], centroid(e, s, label))
            assert report.intra_class_distances[(s, label)] == intra_class_distance(
                e, s, label
            )


def test_analyze_names_missing_cell():
    e = _set(
        [[0, 0], [1, 1], [5, 5], [6, 6], [0, 1], [1, 0]],
        ["covid", "covid", "non_covid", "non_covid", "covid", "covid"],
        [0, 0, 0, 0, 1, 1],
    )
    with pytest.raises(EmptyCell) as err:
        analyze(e)
    assert "source=1" in str(err.value) and "non_covid" in str(err.value)


def test_report_round_trips_through_json():
    rng = np.random.default_rng(8)
    report = analyze(_random_set(rng))
    text = canonical_json(report.to_dict())
    parsed = json.loads(text)
    assert parsed["fisher_score"] == pytest.approx(report.fisher_score, rel=1e-11)
    assert canonical_json(parsed) == text


def test_rigid_motion_invariance():
    rng = np.random.default_rng(9)
    e = _random_set(rng, n_sources=3, per_cell=10, d=4)
    # a random rotation (QR orthogonalization) plus a translation
    q, _ = np.linalg.qr(rng.normal(0, 1, (4, 4)))
    moved = _set(e.vectors @ q.T + rng.normal(0, 10, 4), e.labels, e.sources)
    base, after = analyze(e), analyze(moved)
    assert after.fisher_score == pytest.approx(base.fisher_score, rel=1e-9)
    assert after.separability == pytest.approx(base.separability, rel=1e-9)
    for label in ("covid", "non_covid"):
        assert after.inter_source_variance[label] == pytest.approx(
            base.inter_source_variance[label], rel=1e-9
        )


def test_scale_behavior():
    rng = np.random.default_rng(10)
    e = _random_set(rng, n_sources=3, per_cell=10, d=4)
    lam = 4.25
    scaled = _set(e.vectors * lam, e.labels, e.sources)
    base, after = analyze(e), analyze(scaled)
    assert after.fisher_score == pytest.approx(base.fisher_score, rel=1e-12)
    assert after.separability == pytest.approx(base.separability, rel=1e-12)
    for label in ("covid", "non_covid"):
        assert after.inter_source_variance[label] == pytest.approx(
            lam * base.inter_source_variance[label], rel=1e-12
        )


def test_embedding_set_validation():
    with pytest.raises(ValidationError):
        _set([[1.0], [2.0]], ["covid", "sick"], [0, 0])
    with pytest.raises(ValidationError):
        _set([[1.0]], ["covid", "covid"], [0])
    with pytest.raises(ValidationError):
        _set(np.array([[np.nan]]), ["covid"], [0])
