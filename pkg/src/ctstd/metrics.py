"""Embedding-space metrics: class separability and cross-source consistency.

All scores are built from Euclidean distances between feature vectors,
their per-(source, class) centroids, and mean pairwise intra-class
distances, plus the macro-F1 / AUC evaluation metrics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateSpread,
    EmptyCell,
    UndefinedAUC,
    ValidationError,
)

CLASS_LABELS = ("covid", "non_covid")


@dataclass(frozen=True)
class EmbeddingSet:
    """Labeled, source-tagged feature vectors of one common dimension."""

    vectors: np.ndarray  # (n, d) float64
    labels: tuple  # per-vector class label
    sources: tuple  # per-vector source id
    scan_ids: tuple = ()

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vectors, dtype=np.float64))
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValidationError(
                f"vectors must be a non-empty (n, d) array, got shape {v.shape}"
            )
        if not np.isfinite(v).all():
            raise ValidationError("vectors must be finite")
        labels = tuple(self.labels)
        sources = tuple(int(s) for s in self.sources)
        if len(labels) != v.shape[0] or len(sources) != v.shape[0]:
            raise ValidationError("labels/sources length must match vector count")
        bad = sorted({l for l in labels if l not in CLASS_LABELS})
        if bad:
            raise ValidationError(f"unknown class labels: {bad}")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "scan_ids", tuple(self.scan_ids))

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    @property
    def source_ids(self) -> tuple:
        return tuple(sorted(set(self.sources)))

    def cell(self, source: int, label: str) -> np.ndarray:
        """Vectors belonging to one (source, class) cell."""
        rows = [
            i
            for i, (s, l) in enumerate(zip(self.sources, self.labels))
            if s == source and l == label
        ]
        return self.vectors[rows]

    def class_vectors(self, label: str) -> np.ndarray:
        """Vectors of one class pooled across every source."""
        rows = [i for i, l in enumerate(self.labels) if l == label]
        return self.vectors[rows]


@dataclass(frozen=True)
class MetricsReport:
    """All embedding metrics for one set, keyed the way they are computed."""

    fisher_score: float
    separability: float
    inter_source_variance: dict  # class label -> value
    centroids: dict  # (source, class) -> vector
    intra_class_distances: dict  # (source, class) -> mean pairwise distance

    def __post_init__(self):
        scalars = [self.fisher_score, self.separability]
        # inter-source variance is absent (None) for single-source sets
        scalars += [x for x in self.inter_source_variance.values() if x is not None]
        scalars += list(self.intra_class_distances.values())
        for x in scalars:
            if not np.isfinite(x) or x < 0:
                raise ValidationError(f"metric value {x} is not finite and >= 0")

    def to_dict(self) -> dict:
        return {
            "fisher_score": self.fisher_score,
            "separability": self.separability,
            "inter_source_variance": dict(self.inter_source_variance),
            "centroids": {
                f"{s}/{c}": list(map(float, v)) for (s, c), v in self.centroids.items()
            },
            "intra_class_distances": {
                f"{s}/{c}": float(v) for (s, c), v in self.intra_class_distances.items()
            },
        }


def _mean_vector(rows: np.ndarray) -> np.ndarray:
    return rows.mean(axis=0)


def _mean_pairwise_distance(rows: np.ndarray) -> float:
    """Mean Euclidean distance over all unordered pairs of rows."""
    n = rows.shape[0]
    diff = rows[:, None, :] - rows[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    iu = np.triu_indices(n, k=1)
    return float(dist[iu].mean())


def centroid(e: EmbeddingSet, source: int, label: str) -> np.ndarray:
    """Arithmetic mean of one (source, class) cell."""
    rows = e.cell(source, label)
    if rows.shape[0] == 0:
        raise EmptyCell(source, label)
    return _mean_vector(rows)


def intra_class_distance(e: EmbeddingSet, source: int, label: str) -> float:
    """Mean Euclidean distance over all unordered pairs within the cell."""
    rows = e.cell(source, label)
    if rows.shape[0] < 2:
        raise EmptyCell(source, label, needed=2)
    return _mean_pairwise_distance(rows)


def fisher_score(e: EmbeddingSet) -> float:
    """Global class separation: centroid gap over the mean pooled spread.

    Both classes are pooled across all sources; the denominator is half
    the sum of the two pooled mean intra-class distances.
    """
    pooled = {}
    for label in CLASS_LABELS:
        rows = e.class_vectors(label)
        if rows.shape[0] < 2:
            raise EmptyCell("all", label, needed=2)
        pooled[label] = rows
    gap = float(
        np.linalg.norm(_mean_vector(pooled["covid"]) - _mean_vector(pooled["non_covid"]))
    )
    spread = 0.5 * (
        _mean_pairwise_distance(pooled["covid"])
        + _mean_pairwise_distance(pooled["non_covid"])
    )
    if spread == 0.0:
        raise DegenerateSpread("both pooled classes have zero spread")
    return gap / spread


def separability(e: EmbeddingSet) -> float:
    """Per-source class separation averaged over sources.

    Each source contributes its centroid gap divided by the plain sum of
    its two intra-class distances (not halved).
    """
    terms = []
    for source in e.source_ids:
        gap = float(
            np.linalg.norm(centroid(e, source, "covid") - centroid(e, source, "non_covid"))
        )
        denom = intra_class_distance(e, source, "covid") + intra_class_distance(
            e, source, "non_covid"
        )
        if denom == 0.0:
            raise DegenerateSpread(f"source {source} has zero intra-class spread")
        terms.append(gap / denom)
    return float(np.mean(terms))


def inter_source_variance(e: EmbeddingSet, label: str) -> float:
    """Mean pairwise distance between one class's per-source centroids."""
    cents = []
    for source in e.source_ids:
        rows = e.cell(source, label)
        if rows.shape[0] >= 1:
            cents.append(_mean_vector(rows))
    if len(cents) < 2:
        raise EmptyCell("fewer than 2 sources", label)
    return _mean_pairwise_distance(np.asarray(cents))


def macro_f1(truth, pred) -> float:
    """Unweighted mean of per-class F1 scores, as a percentage.

    A class whose precision + recall is zero contributes F1 = 0.
    """
    truth = list(truth)
    pred = list(pred)
    if len(truth) == 0:
        raise ValidationError("empty truth/prediction lists")
    if len(truth) != len(pred):
        raise ValidationError(
            f"length mismatch: {len(truth)} truth vs {len(pred)} predictions"
        )
    bad = sorted({l for l in truth + pred if l not in CLASS_LABELS})
    if bad:
        raise ValidationError(f"unknown class labels: {bad}")
    f1s = []
    for label in CLASS_LABELS:
        tp = sum(1 for t, p in zip(truth, pred) if t == label and p == label)
        fp = sum(1 for t, p in zip(truth, pred) if t != label and p == label)
        fn = sum(1 for t, p in zip(truth, pred) if t == label and p != label)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        if precision + recall == 0.0:
            f1s.append(0.0)
        else:
            f1s.append(2.0 * precision * recall / (precision + recall))
    return 100.0 * float(np.mean(f1s))


def auc_roc(truth, scores) -> float:
    """Area under the ROC curve via the rank statistic, ties worth 1/2."""
    truth = list(truth)
    scores = np.asarray(list(scores), dtype=np.float64)
    if len(truth) != scores.size:
        raise ValidationError(
            f"length mismatch: {len(truth)} truth vs {scores.size} scores"
        )
    bad = sorted({l for l in truth if l not in CLASS_LABELS})
    if bad:
        raise ValidationError(f"unknown class labels: {bad}")
    positive = np.array([t == "covid" for t in truth])
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUC("both classes must be present in the truth labels")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum = float(ranks[positive].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def analyze(e: EmbeddingSet) -> MetricsReport:
    """Assemble every metric into one report; cell errors name the cell.

    A single-source set carries no cross-source information, so its
    inter-source variance entries are reported as None.
    """
    centroids = {}
    intra = {}
    for source in e.source_ids:
        for label in CLASS_LABELS:
            centroids[(source, label)] = centroid(e, source, label)
            intra[(source, label)] = intra_class_distance(e, source, label)
    if len(e.source_ids) >= 2:
        isv = {label: inter_source_variance(e, label) for label in CLASS_LABELS}
    else:
        isv = {label: None for label in CLASS_LABELS}
    return MetricsReport(
        fisher_score=fisher_score(e),
        separability=separability(e),
        inter_source_variance=isv,
        centroids=centroids,
        intra_class_distances=intra,
    )
