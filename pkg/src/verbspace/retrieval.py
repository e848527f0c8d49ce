"""Retrieval over predicted verb-score vectors.

Three protocols share one corpus index:

* video-to-text: rank all verbs for one video by predicted score
* text-to-video: rank videos for a verb-set query; multi-verb queries score
  each video by the minimum over the query verbs (conjunctive: every verb
  must apply), with mean scoring available for comparison
* video-to-video: rank other videos by cosine similarity of score vectors,
  optionally restricted to other datasets

Corpora are a few thousand items, so search is exact. Ordering ties break
by ascending id for reproducible rankings.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .annotations import LabelBundle, bundle_from_dict, bundle_to_dict
from .metrics import average_precision
from .model import FingerprintMismatch, Prediction
from .vocab import VerbVocabulary

INDEX_VERSION = 1


class RetrievalError(ValueError):
    """Raised for invalid retrieval input."""


class UnknownVideo(KeyError):
    """Query video id not present in the index."""


@dataclass(frozen=True)
class IndexItem:
    video_id: str
    dataset_id: str
    scores: np.ndarray
    gt: LabelBundle | None = None


@dataclass(frozen=True)
class VerbSpaceIndex:
    """Immutable corpus of per-video score vectors, all of one vocabulary."""

    items: tuple[IndexItem, ...]
    fingerprint: str
    _by_id: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        widths = {len(item.scores) for item in self.items}
        if len(widths) > 1:
            raise RetrievalError(f"score vectors disagree on width: {sorted(widths)}")
        by_id = {}
        for pos, item in enumerate(self.items):
            if item.video_id in by_id:
                raise RetrievalError(f"duplicate video id {item.video_id!r}")
            by_id[item.video_id] = pos
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def width(self) -> int:
        return len(self.items[0].scores) if self.items else 0

    def get(self, video_id: str) -> IndexItem:
        try:
            return self.items[self._by_id[video_id]]
        except KeyError:
            raise UnknownVideo(video_id) from None

    def dataset_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for item in self.items:
            seen.setdefault(item.dataset_id, None)
        return list(seen)


@dataclass(frozen=True)
class RetrievalResult:
    """Ranked (item id, score) list; scores non-increasing, ids unique."""

    items: tuple[tuple[str | int, float], ...]
    query: dict

    def __post_init__(self) -> None:
        scores = [s for _, s in self.items]
        if any(b > a for a, b in zip(scores, scores[1:])):
            raise RetrievalError("result scores must be non-increasing")
        ids = [i for i, _ in self.items]
        if len(set(ids)) != len(ids):
            raise RetrievalError("result ids must be unique")

    def ids(self) -> list[str | int]:
        return [i for i, _ in self.items]


def build_index(
    entries: Iterable[tuple[str, str, np.ndarray]],
    fingerprint: str,
    bundles: Mapping[str, LabelBundle] | None = None,
) -> VerbSpaceIndex:
    items = []
    for video_id, dataset_id, scores in entries:
        scores = np.asarray(scores, dtype=np.float64)
        gt = bundles.get(video_id) if bundles else None
        items.append(IndexItem(video_id=video_id, dataset_id=dataset_id, scores=scores, gt=gt))
    return VerbSpaceIndex(items=tuple(items), fingerprint=fingerprint)


# ---------------------------------------------------------------------------
# Protocols
# ---------------------------------------------------------------------------


def video_to_text(
    pred: Prediction | np.ndarray, vocab: VerbVocabulary | None = None
) -> RetrievalResult:
    """All verbs sorted by descending score, ties by lowest verb index."""
    scores = pred.scores if isinstance(pred, Prediction) else np.asarray(pred, dtype=np.float64)
    if scores.ndim != 1:
        raise RetrievalError("video_to_text expects a single score vector")
    order = np.argsort(-scores, kind="stable")
    items = tuple(
        (vocab.verbs[j] if vocab else int(j), float(scores[j])) for j in order
    )
    return RetrievalResult(items=items, query={"protocol": "video_to_text"})


def enumerate_cooccurring_queries(
    gts: Iterable[Iterable[int]], n: int
) -> set[frozenset[int]]:
    """Every n-subset of verbs co-occurring in at least one relevant set."""
    if not 1 <= n <= 5:
        raise RetrievalError(f"query size {n} outside [1, 5]")
    queries: set[frozenset[int]] = set()
    for gt in gts:
        gt = sorted(set(gt))
        if len(gt) >= n:
            queries.update(frozenset(c) for c in combinations(gt, n))
    return queries


def _query_scores(index: VerbSpaceIndex, verb_indices: Sequence[int], mode: str) -> np.ndarray:
    matrix = np.stack([item.scores for item in index.items])
    columns = matrix[:, list(verb_indices)]
    if mode == "min":
        return columns.min(axis=1)
    if mode == "mean":
        return columns.mean(axis=1)
    raise RetrievalError(f"unknown query scoring mode {mode!r}")


def _ranked_videos(
    index: VerbSpaceIndex, scores: np.ndarray, exclude: str | None = None
) -> list[tuple[str, float]]:
    pairs = [
        (item.video_id, float(scores[pos]))
        for pos, item in enumerate(index.items)
        if item.video_id != exclude
    ]
    pairs.sort(key=lambda p: (-p[1], p[0]))
    return pairs


def text_to_video(
    query: Iterable[str],
    index: VerbSpaceIndex,
    vocab: VerbVocabulary,
    mode: str = "min",
) -> RetrievalResult:
    """Videos ranked for a verb-set query (min scoring by default)."""
    lemmas = sorted(set(query))
    if not lemmas:
        raise RetrievalError("query must contain at least one verb")
    indices = [vocab.lookup(lemma) for lemma in lemmas]
    scores = _query_scores(index, indices, mode)
    return RetrievalResult(
        items=tuple(_ranked_videos(index, scores)),
        query={"protocol": "text_to_video", "verbs": lemmas, "mode": mode},
    )


def query_average_precision(
    index: VerbSpaceIndex,
    query_indices: frozenset[int] | set[int],
    gt_sets: Mapping[str, set[int]],
    mode: str = "min",
) -> float | None:
    """AP for one verb-index query; None when no video is relevant.

    A video is relevant iff its ground-truth relevant set contains every
    query verb.
    """
    relevant = {vid for vid, gt in gt_sets.items() if query_indices <= gt}
    if not relevant:
        return None
    scores = _query_scores(index, sorted(query_indices), mode)
    ranking = [vid for vid, _ in _ranked_videos(index, scores)]
    return average_precision(ranking, relevant)


@dataclass(frozen=True)
class QuerySweepRow:
    n: int
    mean_ap: float | None  # None when no query of this size has a relevant video
    query_count: int
    excluded_queries: int


def text_to_video_sweep(
    index: VerbSpaceIndex,
    gt_sets: Mapping[str, set[int]],
    n_range: Iterable[int] = range(1, 6),
    mode: str = "min",
) -> list[QuerySweepRow]:
    """Mean AP over all co-occurring n-verb queries, per query size.

    Queries with no relevant video make AP undefined; they are excluded from
    the mean and counted in `excluded_queries`.
    """
    rows = []
    for n in n_range:
        queries = enumerate_cooccurring_queries(gt_sets.values(), n)
        aps = []
        excluded = 0
        for q in sorted(queries, key=sorted):
            ap = query_average_precision(index, q, gt_sets, mode)
            if ap is None:
                excluded += 1
            else:
                aps.append(ap)
        rows.append(
            QuerySweepRow(
                n=n,
                mean_ap=float(np.mean(aps)) if aps else None,
                query_count=len(queries),
                excluded_queries=excluded,
            )
        )
    return rows


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def video_to_video(
    query_id: str, index: VerbSpaceIndex, cross_dataset_only: bool = False
) -> RetrievalResult:
    """Other videos ranked by cosine similarity to the query's score vector."""
    query_item = index.get(query_id)
    if cross_dataset_only and len(index.dataset_ids()) < 2:
        raise RetrievalError("cross-dataset retrieval needs at least two datasets")
    pairs = []
    for item in index.items:
        if item.video_id == query_id:
            continue
        if cross_dataset_only and item.dataset_id == query_item.dataset_id:
            continue
        pairs.append((item.video_id, cosine_similarity(query_item.scores, item.scores)))
    pairs.sort(key=lambda p: (-p[1], p[0]))
    return RetrievalResult(
        items=tuple(pairs),
        query={
            "protocol": "video_to_video",
            "video_id": query_id,
            "cross_dataset": cross_dataset_only,
        },
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def save_index(index: VerbSpaceIndex, dest: str | Path) -> None:
    payload = {
        "format_version": INDEX_VERSION,
        "fingerprint": index.fingerprint,
        "items": [
            {
                "video_id": item.video_id,
                "dataset_id": item.dataset_id,
                "scores": item.scores.tolist(),
                **({"gt": bundle_to_dict(item.gt)} if item.gt is not None else {}),
            }
            for item in index.items
        ],
    }
    Path(dest).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_index(
    source: str | Path, expected_fingerprint: str | None = None
) -> VerbSpaceIndex:
    payload = json.loads(Path(source).read_text(encoding="utf-8"))
    if payload.get("format_version") != INDEX_VERSION:
        raise RetrievalError(f"unsupported index version {payload.get('format_version')!r}")
    fingerprint = payload["fingerprint"]
    if expected_fingerprint is not None and fingerprint != expected_fingerprint:
        raise FingerprintMismatch(
            "index was built against a different vocabulary "
            f"(index {fingerprint[:12]}..., expected {expected_fingerprint[:12]}...)"
        )
    items = tuple(
        IndexItem(
            video_id=str(obj["video_id"]),
            dataset_id=str(obj["dataset_id"]),
            scores=np.asarray(obj["scores"], dtype=np.float64),
            gt=bundle_from_dict(obj["gt"]) if "gt" in obj else None,
        )
        for obj in payload["items"]
    )
    return VerbSpaceIndex(items=items, fingerprint=fingerprint)


def export_scores_csv(
    index: VerbSpaceIndex, dest: str | Path, vocab: VerbVocabulary | None = None
) -> None:
    """One row per video with all verb scores, for external plotting."""
    header = ["video_id", "dataset_id"]
    header += list(vocab.verbs) if vocab else [f"v{j}" for j in range(index.width)]
    with Path(dest).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for item in index.items:
            writer.writerow(
                [item.video_id, item.dataset_id] + [repr(float(s)) for s in item.scores]
            )
