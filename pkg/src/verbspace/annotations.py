"""Aggregation of raw annotator verb selections into label representations.

Four representations are produced per video:

* single-verb (SV): majority-vote verb index, one-hot over the vocabulary
* verb-noun (VN): the source dataset's verb-noun class, when supplied
* multi-verb (MV): binary verb vector, soft scores thresholded at 0.5
* soft-assigned multi-verb (SAMV): per-verb fraction of annotators that
  selected the verb, kept as an exact rational (count, total)

Soft scores are stored as integer counts over an annotator total so that
thresholding is exact integer arithmetic, never float rounding.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .vocab import VerbVocabulary, VocabularyError


class AnnotationError(ValueError):
    """Raised for invalid annotation input."""


@dataclass(frozen=True)
class AnnotationSet:
    """All annotator responses for one video: one verb-index set per annotator."""

    video_id: str
    annotator_selections: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        if len(self.annotator_selections) < 1:
            raise AnnotationError(f"video {self.video_id!r}: no annotator responses")

    @property
    def annotator_count(self) -> int:
        return len(self.annotator_selections)


@dataclass(frozen=True)
class SoftLabel:
    """Per-verb selection fraction, exact: counts[j] annotators out of total."""

    counts: np.ndarray
    total: int

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        object.__setattr__(self, "counts", counts)
        if self.total < 1:
            raise AnnotationError("annotator total must be >= 1")
        if counts.min(initial=0) < 0 or counts.max(initial=0) > self.total:
            raise AnnotationError("counts must lie in [0, total]")

    @property
    def scores(self) -> np.ndarray:
        return self.counts / float(self.total)

    def score_fraction(self, j: int) -> Fraction:
        return Fraction(int(self.counts[j]), self.total)

    def __len__(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class HardLabel:
    """Binary verb vector."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=np.int8)
        object.__setattr__(self, "bits", bits)
        if not np.isin(bits, (0, 1)).all():
            raise AnnotationError("hard label bits must be 0 or 1")

    def __len__(self) -> int:
        return len(self.bits)


@dataclass(frozen=True)
class LabelBundle:
    """All label representations for one video."""

    video_id: str
    sv: int
    mv: HardLabel
    samv: SoftLabel
    vn: int | None = None


def _as_threshold(value: float | Fraction) -> Fraction:
    # Fraction(float) is the exact binary value of the float, so comparisons
    # against exact rational scores are deterministic.
    threshold = Fraction(value)
    if not 0 <= threshold <= 1:
        raise AnnotationError(f"threshold {value} outside [0, 1]")
    return threshold


def aggregate_scores(a: AnnotationSet, vocab: VerbVocabulary) -> SoftLabel:
    """Selection count per verb divided by the number of annotators."""
    width = len(vocab)
    counts = np.zeros(width, dtype=np.int64)
    for selection in a.annotator_selections:
        for j in selection:
            if not 0 <= j < width:
                raise AnnotationError(
                    f"video {a.video_id!r}: verb index {j} outside vocabulary of size {width}"
                )
            counts[j] += 1
    return SoftLabel(counts=counts, total=a.annotator_count)


def binarize(s: SoftLabel, threshold: float | Fraction = 0.5) -> HardLabel:
    """bits[j] = 1 iff scores[j] >= threshold (inclusive)."""
    t = _as_threshold(threshold)
    bits = np.fromiter(
        (1 if Fraction(int(c), s.total) >= t else 0 for c in s.counts),
        dtype=np.int8,
        count=len(s.counts),
    )
    return HardLabel(bits=bits)


def majority_vote(s: SoftLabel) -> int:
    """Index of the most-selected verb; ties broken by lowest index."""
    if int(s.counts.max(initial=0)) == 0:
        raise AnnotationError("majority vote undefined: no verb was selected")
    return int(np.argmax(s.counts))


def relevant_set(s: SoftLabel, alpha: float | Fraction) -> set[int]:
    """Verb indices with score >= alpha (inclusive). May be empty."""
    t = _as_threshold(alpha)
    return {j for j, c in enumerate(s.counts) if Fraction(int(c), s.total) >= t}


def build_bundle(
    a: AnnotationSet, vocab: VerbVocabulary, vn_class: int | None = None
) -> LabelBundle:
    """Compute SV, MV, and SAMV from one annotation set; VN when supplied."""
    samv = aggregate_scores(a, vocab)
    return LabelBundle(
        video_id=a.video_id,
        sv=majority_vote(samv),
        mv=binarize(samv, Fraction(1, 2)),
        samv=samv,
        vn=vn_class,
    )


# ---------------------------------------------------------------------------
# Annotation file formats
# ---------------------------------------------------------------------------

#: One response by one annotator: (video_id, annotator_id, selected lemmas).
RawRecord = tuple[str, str, tuple[str, ...]]


def load_annotation_records(source: str | Path) -> list[RawRecord]:
    """Read annotator responses from CSV or JSON (selected by extension).

    CSV rows are `video_id,annotator_id,"lemma;lemma;..."`; the JSON variant
    is an array of {"video_id", "annotator_id", "verbs"} objects. An empty
    verb list is a valid response and still counts toward the annotator total.
    """
    path = Path(source)
    if path.suffix.lower() == ".json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(payload, list):
            raise AnnotationError(f"{path}: expected a JSON array of responses")
        records = []
        for obj in payload:
            verbs = tuple(str(v) for v in obj.get("verbs", []))
            records.append((str(obj["video_id"]), str(obj["annotator_id"]), verbs))
        return records
    records = []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != 3:
                raise AnnotationError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            video_id, annotator_id, verb_field = row
            lemmas = tuple(v.strip() for v in verb_field.split(";") if v.strip())
            records.append((video_id, annotator_id, lemmas))
    if not records:
        raise AnnotationError(f"{path}: no annotation records")
    return records


def records_to_annotation_sets(
    records: Iterable[RawRecord], vocab: VerbVocabulary
) -> dict[str, AnnotationSet]:
    """Group responses by video id and map lemmas to verb indices."""
    grouped: dict[str, list[frozenset[int]]] = {}
    for video_id, _annotator_id, lemmas in records:
        try:
            selection = frozenset(vocab.lookup(lemma) for lemma in lemmas)
        except VocabularyError as exc:
            raise AnnotationError(f"video {video_id!r}: {exc}") from exc
        grouped.setdefault(video_id, []).append(selection)
    return {
        vid: AnnotationSet(video_id=vid, annotator_selections=tuple(sels))
        for vid, sels in grouped.items()
    }


def load_annotation_sets(
    source: str | Path, vocab: VerbVocabulary
) -> dict[str, AnnotationSet]:
    return records_to_annotation_sets(load_annotation_records(source), vocab)


def load_aggregated_annotations(
    source: str | Path, vocab: VerbVocabulary
) -> dict[str, SoftLabel]:
    """Read pre-aggregated soft labels published as per-verb counts or scores.

    JSON array of {"video_id", "annotator_count", "counts" | "scores"}; keys of
    the mapping are lemmas. Scores are converted back to integer counts and
    rejected when `score * annotator_count` is not within 1e-6 of an integer.
    """
    payload = json.loads(Path(source).read_text(encoding="utf-8"))
    out: dict[str, SoftLabel] = {}
    for obj in payload:
        video_id = str(obj["video_id"])
        total = int(obj["annotator_count"])
        counts = np.zeros(len(vocab), dtype=np.int64)
        mapping = obj.get("counts") or obj.get("scores") or {}
        use_scores = "counts" not in obj
        for lemma, value in mapping.items():
            j = vocab.lookup(lemma)
            if use_scores:
                exact = float(value) * total
                rounded = round(exact)
                if abs(exact - rounded) > 1e-6:
                    raise AnnotationError(
                        f"video {video_id!r}: score {value} for {lemma!r} is not a "
                        f"multiple of 1/{total}"
                    )
                counts[j] = rounded
            else:
                counts[j] = int(value)
        out[video_id] = SoftLabel(counts=counts, total=total)
    return out


# ---------------------------------------------------------------------------
# Bundle persistence
# ---------------------------------------------------------------------------


def bundle_to_dict(bundle: LabelBundle) -> dict:
    record = {
        "video_id": bundle.video_id,
        "sv": bundle.sv,
        "mv": bundle.mv.bits.tolist(),
        "samv": {"counts": bundle.samv.counts.tolist(), "total": bundle.samv.total},
    }
    if bundle.vn is not None:
        record["vn"] = bundle.vn
    return record


def bundle_from_dict(record: dict) -> LabelBundle:
    samv = SoftLabel(
        counts=np.asarray(record["samv"]["counts"], dtype=np.int64),
        total=int(record["samv"]["total"]),
    )
    return LabelBundle(
        video_id=str(record["video_id"]),
        sv=int(record["sv"]),
        mv=HardLabel(bits=np.asarray(record["mv"], dtype=np.int8)),
        samv=samv,
        vn=int(record["vn"]) if "vn" in record else None,
    )


def save_bundles(bundles: Sequence[LabelBundle], dest: str | Path) -> None:
    """One JSON object per line, in input order."""
    with Path(dest).open("w", encoding="utf-8") as fh:
        for bundle in bundles:
            fh.write(json.dumps(bundle_to_dict(bundle), sort_keys=True))
            fh.write("\n")


def load_bundles(source: str | Path) -> list[LabelBundle]:
    bundles = []
    with Path(source).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                bundles.append(bundle_from_dict(json.loads(line)))
    return bundles
