"""Recognition, ranking, and regression metrics.

Multi-label accuracy takes the top-k predicted verbs per video with k set
to that video's ground-truth verb count, then scores the overlap fraction:

    accuracy(video i) = |gt_i  intersect  topk(pred_i, |gt_i|)| / |gt_i|

averaged over videos. With singleton ground-truth sets this reduces to
plain top-1 accuracy. Average precision is the uninterpolated kind: the
mean, over relevant items, of precision at that item's rank.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Hashable, Iterable, Sequence

import numpy as np

from .annotations import SoftLabel, relevant_set
from .model import Prediction
from .vocab import MANNER, RESULT, VerbVocabulary, verb_type_mask


class MetricError(ValueError):
    """Raised for invalid metric input."""


#: Default threshold grid: 0.05 steps over [0, 0.95], kept as exact rationals
#: so boundary scores like 2/40 compare inclusively against 0.05.
DEFAULT_ALPHA_GRID: tuple[Fraction, ...] = tuple(Fraction(i, 20) for i in range(20))


@dataclass(frozen=True)
class AccuracyReport:
    scheme: str
    per_video: list[float]
    mean: float
    counted: int

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "mean_accuracy": self.mean,
            "counted_videos": self.counted,
            "per_video": self.per_video,
        }


@dataclass(frozen=True)
class SweepPoint:
    alpha: float
    accuracy: float | None  # None when every video was excluded
    mean_set_size: float | None
    counted: int


@dataclass(frozen=True)
class SweepCurve:
    points: list[SweepPoint]

    def to_rows(self) -> list[tuple[float, float | None]]:
        """Plot-ready two-column table (alpha, accuracy)."""
        return [(p.alpha, p.accuracy) for p in self.points]

    def to_dict(self) -> dict:
        return {
            "points": [
                {
                    "alpha": p.alpha,
                    "accuracy": p.accuracy,
                    "mean_set_size": p.mean_set_size,
                    "counted_videos": p.counted,
                }
                for p in self.points
            ]
        }


def _score_matrix(preds: Sequence[Prediction] | np.ndarray) -> np.ndarray:
    if isinstance(preds, np.ndarray):
        return np.atleast_2d(np.asarray(preds, dtype=np.float64))
    rows = [p.scores if isinstance(p, Prediction) else np.asarray(p) for p in preds]
    return np.atleast_2d(np.stack(rows).astype(np.float64))


def topk_indices(scores: np.ndarray, k: int) -> list[int]:
    """Indices of the k highest scores, ties broken by lowest index."""
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    return [int(j) for j in order[:k]]


def multilabel_accuracy(
    preds: Sequence[Prediction] | np.ndarray,
    gts: Sequence[Iterable[int]],
    scheme: str = "",
) -> AccuracyReport:
    """Mean top-k overlap accuracy with k = |gt set| per video.

    Every ground-truth set in the counted population must be nonempty;
    callers excluding videos (e.g. at high thresholds) must drop them first.
    """
    scores = _score_matrix(preds)
    if scores.shape[0] != len(gts):
        raise MetricError("predictions and ground-truth sets are not aligned")
    per_video: list[float] = []
    for i, gt in enumerate(gts):
        gt = set(gt)
        if not gt:
            raise MetricError(f"video at position {i} has an empty relevant set")
        top = set(topk_indices(scores[i], len(gt)))
        per_video.append(len(gt & top) / len(gt))
    # plain left-to-right sum, so the mean is bit-reproducible
    return AccuracyReport(
        scheme=scheme,
        per_video=per_video,
        mean=sum(per_video) / len(per_video),
        counted=len(per_video),
    )


def alpha_sweep(
    preds: Sequence[Prediction] | np.ndarray,
    soft_gts: Sequence[SoftLabel],
    alphas: Sequence[float | Fraction] | None = None,
) -> SweepCurve:
    """Accuracy as the relevance threshold varies.

    At each threshold, videos whose relevant set is empty are excluded from
    both the accuracy numerator and the counted total. A grid point where
    every video is excluded reports counted 0 and accuracy None, never a
    silent zero.
    """
    scores = _score_matrix(preds)
    if scores.shape[0] != len(soft_gts):
        raise MetricError("predictions and ground-truth labels are not aligned")
    grid = list(DEFAULT_ALPHA_GRID) if alphas is None else list(alphas)
    values = [float(a) for a in grid]
    if any(not 0 <= v <= 1 for v in values):
        raise MetricError("alpha grid must lie within [0, 1]")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise MetricError("alpha grid must be strictly increasing")

    points: list[SweepPoint] = []
    for alpha, alpha_value in zip(grid, values):
        sets = [relevant_set(gt, alpha) for gt in soft_gts]
        kept = [(scores[i], s) for i, s in enumerate(sets) if s]
        if not kept:
            points.append(
                SweepPoint(alpha=alpha_value, accuracy=None, mean_set_size=None, counted=0)
            )
            continue
        kept_scores = np.stack([row for row, _ in kept])
        kept_sets = [s for _, s in kept]
        report = multilabel_accuracy(kept_scores, kept_sets)
        points.append(
            SweepPoint(
                alpha=alpha_value,
                accuracy=report.mean,
                mean_set_size=float(np.mean([len(s) for s in kept_sets])),
                counted=len(kept_sets),
            )
        )
    return SweepCurve(points=points)


def average_precision(
    ranking: Sequence[Hashable], relevant: Iterable[Hashable]
) -> float:
    """Uninterpolated AP: mean of precision at each relevant item's rank."""
    relevant = set(relevant)
    if not relevant:
        raise MetricError("relevant set is empty")
    missing = relevant - set(ranking)
    if missing:
        raise MetricError(f"relevant items missing from ranking: {sorted(missing)!r}")
    hits = 0
    precision_sum = 0.0
    for rank, item in enumerate(ranking, start=1):
        if item in relevant:
            hits += 1
            precision_sum += hits / rank
    return precision_sum / len(relevant)


def mean_ap(
    queries: Sequence[tuple[Sequence[Hashable], Iterable[Hashable]]]
) -> float:
    """Arithmetic mean of per-query average precision."""
    if not queries:
        raise MetricError("no queries to average over")
    return float(np.mean([average_precision(r, rel) for r, rel in queries]))


def rmse_by_verb_type(
    preds: Sequence[Prediction] | np.ndarray,
    soft_gts: Sequence[SoftLabel],
    vocab: VerbVocabulary,
) -> tuple[float, float]:
    """RMSE of predicted vs ground-truth scores, split into manner and
    result verb cells (uniform weight per cell)."""
    scores = _score_matrix(preds)
    if scores.shape[0] != len(soft_gts):
        raise MetricError("predictions and ground-truth labels are not aligned")
    gt = np.stack([s.scores for s in soft_gts])
    if gt.shape != scores.shape:
        raise MetricError("prediction width does not match ground-truth width")
    residual_sq = (scores - gt) ** 2
    out = []
    for verb_type in (MANNER, RESULT):
        mask = verb_type_mask(vocab, verb_type).astype(bool)
        if not mask.any():
            raise MetricError(f"vocabulary has no {verb_type} verbs")
        out.append(float(np.sqrt(residual_sq[:, mask].mean())))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------


def write_report_json(report: AccuracyReport | SweepCurve, dest: str | Path) -> None:
    Path(dest).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")


def write_sweep_csv(curve: SweepCurve, dest: str | Path) -> None:
    """Two columns (alpha, accuracy); excluded grid points get an empty cell."""
    with Path(dest).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "accuracy"])
        for alpha, accuracy in curve.to_rows():
            writer.writerow([alpha, "" if accuracy is None else accuracy])
