"""Dataset ingestion, fold splitting, synthetic corpora, and file formats.

A dataset is described by a manifest (CSV) whose rows point at an
annotation file and a feature file. Many videos may share one annotated
representative clip via the manifest's action id column; every video still
gets its own feature vector and its own resolved label bundle.

The synthetic generator builds desk-scale corpora with the co-occurrence
structure of real kitchen actions: each action prototype couples one
result verb with manner verbs (a strong one and a weaker alternative) plus
generic supplementary verbs that annotators disagree on. Features are an
orthogonal linear mix of the soft labels plus Gaussian noise, so labels
are recoverable from features up to the noise level.
"""

from __future__ import annotations

import csv
import os
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Hashable, Mapping, Sequence

import numpy as np

from .annotations import AnnotationSet, LabelBundle, build_bundle
from .model import FeatureVector
from .vocab import MANNER, RESULT, VerbVocabulary, VNClassList, verb_type_mask

DATA_DIR_ENV = "VERBSPACE_DATA_DIR"

#: Published segment counts of the three annotated datasets.
PUBLIC_DATASET_SIZES = {"BEOID": 732, "CMU": 404, "GTEA+": 1001}

FEATURE_BINARY_MAGIC = b"VSF1"


class DataError(ValueError):
    """Raised for malformed dataset files or inconsistent references."""


def resolve_data_path(path: str | Path) -> Path:
    """Resolve a path against VERBSPACE_DATA_DIR when it is relative."""
    p = Path(path)
    if p.is_absolute():
        return p
    root = os.environ.get(DATA_DIR_ENV)
    return (Path(root) / p) if root else p


# ---------------------------------------------------------------------------
# Manifest
# ---------------------------------------------------------------------------

MANIFEST_HEADER = ["video_id", "action_id", "vn_class", "feature_row", "dataset_id"]


@dataclass(frozen=True)
class ManifestRecord:
    video_id: str
    action_id: str
    vn_class: str  # "verb/noun", empty when the source dataset has none
    feature_row: str  # key into the feature file; defaults to video_id
    dataset_id: str


@dataclass(frozen=True)
class DatasetManifest:
    dataset_id: str
    records: tuple[ManifestRecord, ...]
    bundles: dict[str, LabelBundle]
    features: dict[str, FeatureVector]
    vn_classes: VNClassList | None = None

    def __len__(self) -> int:
        return len(self.records)

    def training_pairs(self) -> list[tuple[FeatureVector, LabelBundle]]:
        return [(self.features[r.video_id], self.bundles[r.video_id]) for r in self.records]


def load_manifest_records(source: str | Path) -> list[ManifestRecord]:
    path = Path(source)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != MANIFEST_HEADER:
            raise DataError(f"{path}: expected header {','.join(MANIFEST_HEADER)}")
        records = []
        seen: set[str] = set()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataError(f"{path}:{lineno}: expected 5 columns")
            video_id, action_id, vn_class, feature_row, dataset_id = row
            if video_id in seen:
                raise DataError(f"{path}:{lineno}: duplicate video id {video_id!r}")
            seen.add(video_id)
            records.append(
                ManifestRecord(
                    video_id=video_id,
                    action_id=action_id or video_id,
                    vn_class=vn_class,
                    feature_row=feature_row or video_id,
                    dataset_id=dataset_id,
                )
            )
    if not records:
        raise DataError(f"{path}: manifest has no records")
    return records


def save_manifest_records(records: Sequence[ManifestRecord], dest: str | Path) -> None:
    with Path(dest).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for r in records:
            writer.writerow([r.video_id, r.action_id, r.vn_class, r.feature_row, r.dataset_id])


# ---------------------------------------------------------------------------
# Feature files
# ---------------------------------------------------------------------------


def save_features_text(features: Mapping[str, np.ndarray], dest: str | Path) -> None:
    """Header `video_id,<dim>`, then one `id,f1,...,fD` row per video."""
    items = list(features.items())
    dim = len(next(iter(features.values()))) if items else 0
    with Path(dest).open("w", encoding="utf-8") as fh:
        fh.write(f"video_id,{dim}\n")
        for video_id, values in items:
            fh.write(video_id + "," + ",".join(repr(float(v)) for v in values) + "\n")


def save_features_binary(features: Mapping[str, np.ndarray], dest: str | Path) -> None:
    """Little-endian float32 records behind a 4-byte magic, for bulk use."""
    items = list(features.items())
    dim = len(next(iter(features.values()))) if items else 0
    with Path(dest).open("wb") as fh:
        fh.write(FEATURE_BINARY_MAGIC)
        fh.write(struct.pack("<II", len(items), dim))
        for video_id, values in items:
            encoded = video_id.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(np.asarray(values, dtype="<f4").tobytes())


def load_features(source: str | Path) -> dict[str, np.ndarray]:
    """Read either feature format, sniffed by the binary magic."""
    path = Path(source)
    with path.open("rb") as fh:
        magic = fh.read(4)
    if magic == FEATURE_BINARY_MAGIC:
        return _load_features_binary(path)
    return _load_features_text(path)


def _load_features_text(path: Path) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().strip()
        parts = header.split(",")
        if len(parts) != 2 or parts[0] != "video_id":
            raise DataError(f"{path}: bad feature header {header!r}")
        dim = int(parts[1])
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != dim + 1:
                raise DataError(
                    f"{path}:{lineno}: expected {dim} values, got {len(fields) - 1}"
                )
            out[fields[0]] = np.array([float(v) for v in fields[1:]], dtype=np.float64)
    if not out:
        raise DataError(f"{path}: feature file has no rows")
    return out


def _load_features_binary(path: Path) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    raw = path.read_bytes()
    count, dim = struct.unpack_from("<II", raw, 4)
    offset = 12
    for _ in range(count):
        (id_len,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        video_id = raw[offset : offset + id_len].decode("utf-8")
        offset += id_len
        values = np.frombuffer(raw, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
        out[video_id] = values.astype(np.float64)
    return out


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------


def ingest(
    manifest_file: str | Path,
    annotation_sets: Mapping[str, AnnotationSet],
    feature_file: str | Path,
    vocab: VerbVocabulary,
    vn_classes: VNClassList | None = None,
) -> DatasetManifest:
    """Resolve every manifest record to a feature vector and a label bundle.

    Annotations are keyed by the record's action id (the representative
    clip), so videos sharing an action share its annotation. The verb-noun
    class list is taken from `vn_classes` or derived from the manifest's
    `verb/noun` column in first-appearance order.
    """
    records = load_manifest_records(resolve_data_path(manifest_file))
    features_raw = load_features(resolve_data_path(feature_file))

    if vn_classes is None:
        pairs: list[tuple[str, str]] = []
        for r in records:
            if r.vn_class:
                pair = _parse_vn(r.vn_class)
                if pair not in pairs:
                    pairs.append(pair)
        vn_classes = VNClassList(classes=tuple(pairs)) if pairs else None

    missing_annotations = [r.video_id for r in records if r.action_id not in annotation_sets]
    if missing_annotations:
        raise DataError(
            f"no annotation for {len(missing_annotations)} videos: "
            f"{missing_annotations[:10]!r}"
        )
    missing_features = [r.video_id for r in records if r.feature_row not in features_raw]
    if missing_features:
        raise DataError(
            f"no feature row for {len(missing_features)} videos: {missing_features[:10]!r}"
        )

    dims = {len(v) for v in features_raw.values()}
    if len(dims) > 1:
        raise DataError(f"feature dimensions are not uniform: {sorted(dims)}")

    bundles: dict[str, LabelBundle] = {}
    features: dict[str, FeatureVector] = {}
    for r in records:
        vn = vn_classes.lookup(*_parse_vn(r.vn_class)) if (vn_classes and r.vn_class) else None
        bundle = build_bundle(annotation_sets[r.action_id], vocab, vn_class=vn)
        bundles[r.video_id] = replace(bundle, video_id=r.video_id)
        features[r.video_id] = FeatureVector(
            video_id=r.video_id, values=features_raw[r.feature_row]
        )
    dataset_ids = {r.dataset_id for r in records}
    dataset_id = records[0].dataset_id if len(dataset_ids) == 1 else ",".join(sorted(dataset_ids))
    return DatasetManifest(
        dataset_id=dataset_id,
        records=tuple(records),
        bundles=bundles,
        features=features,
        vn_classes=vn_classes,
    )


def _parse_vn(value: str) -> tuple[str, str]:
    if "/" not in value:
        raise DataError(f"verb-noun class {value!r} is not `verb/noun`")
    verb, noun = value.split("/", 1)
    return verb.strip(), noun.strip()


# ---------------------------------------------------------------------------
# Stratified k-fold
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldSplit:
    folds: tuple[tuple[str, ...], ...]
    strata: dict[str, Hashable]
    warnings: tuple[str, ...]

    def fold_of(self, video_id: str) -> int:
        for i, fold in enumerate(self.folds):
            if video_id in fold:
                return i
        raise KeyError(video_id)

    def train_test(self, test_fold: int) -> tuple[list[str], list[str]]:
        test = list(self.folds[test_fold])
        train = [v for i, fold in enumerate(self.folds) if i != test_fold for v in fold]
        return train, test


def stratified_kfold(
    strata: Mapping[str, Hashable] | DatasetManifest, k: int = 5, seed: int = 0
) -> FoldSplit:
    """Disjoint, exhaustive folds with per-stratum counts within one of even.

    The stratification key for a manifest is the majority-vote verb (the
    only scheme giving every video exactly one class). Ids within a stratum
    are shuffled by the seed, then dealt round-robin starting at a rotating
    offset so small strata spread across folds instead of piling into the
    first one.
    """
    if isinstance(strata, DatasetManifest):
        strata = {r.video_id: strata.bundles[r.video_id].sv for r in strata.records}
    if k < 2:
        raise DataError("fold count must be >= 2")
    if not strata:
        raise DataError("nothing to split")
    rng = np.random.default_rng(seed)
    groups: dict[Hashable, list[str]] = {}
    for video_id, key in strata.items():
        groups.setdefault(key, []).append(video_id)

    folds: list[list[str]] = [[] for _ in range(k)]
    warnings: list[str] = []
    offset = 0
    for key in sorted(groups, key=repr):
        ids = sorted(groups[key])
        rng.shuffle(ids)
        if len(ids) < k:
            warnings.append(f"stratum {key!r} has {len(ids)} videos for {k} folds")
        for i, video_id in enumerate(ids):
            folds[(offset + i) % k].append(video_id)
        offset += len(ids)
    return FoldSplit(
        folds=tuple(tuple(f) for f in folds),
        strata=dict(strata),
        warnings=tuple(warnings),
    )


# ---------------------------------------------------------------------------
# Synthetic corpora
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticCorpus:
    vocab: VerbVocabulary
    records: tuple[ManifestRecord, ...]
    annotation_sets: dict[str, AnnotationSet]  # keyed by action id
    bundles: list[LabelBundle]  # one per video, manifest order
    features: list[FeatureVector]  # aligned with bundles
    mixing: np.ndarray  # the label-to-feature linear map

    def training_pairs(self) -> list[tuple[FeatureVector, LabelBundle]]:
        return list(zip(self.features, self.bundles))

    def soft_labels(self):
        return [b.samv for b in self.bundles]


def _synthetic_vocabulary(verb_count: int) -> VerbVocabulary:
    n_manner = verb_count // 2
    verbs = [f"m{i:02d}" for i in range(n_manner)]
    verbs += [f"r{i:02d}" for i in range(verb_count - n_manner)]
    types = {v: (MANNER if v.startswith("m") else RESULT) for v in verbs}
    return VerbVocabulary(verbs=tuple(verbs), verb_type=types)


@dataclass(frozen=True)
class _ActionProfile:
    probabilities: np.ndarray  # per-verb selection probability
    primary: int  # the action's defining verb (forced clear majority)
    small: bool  # sparse relevant set (generic verb + result only)


def _action_profiles(
    vocab: VerbVocabulary,
    rng: np.random.Generator,
    count: int,
    small_share: float,
) -> list[_ActionProfile]:
    """Per-action verb selection probabilities.

    Two action populations mirror how annotators label real kitchen
    actions. Big actions couple one result verb with a quad of manner
    verbs at graded strengths (verbs shared between neighbouring actions,
    so co-occurrence carries context); generic verbs show up weakly.
    Small actions are dominated by a single generic verb plus a mid-level
    result verb, so their relevant sets stay tiny. Generic verbs are thus
    easy to confuse corpus-wide but pinned down once combined with an
    anchor verb in a query.
    """
    width = len(vocab)
    manner_idx = np.flatnonzero(verb_type_mask(vocab, MANNER)).tolist()
    result_idx = np.flatnonzero(verb_type_mask(vocab, RESULT)).tolist()
    if not manner_idx or not result_idx:
        # degenerate vocabulary: one dominant verb per action
        return [
            _ActionProfile(
                probabilities=np.where(np.arange(width) == a % width, 0.9, 0.05),
                primary=a % width,
                small=False,
            )
            for a in range(count)
        ]
    n_gm = max(1, len(manner_idx) // 4)
    n_gr = max(1, len(result_idx) // 4)
    anchor_m = manner_idx[:-n_gm] or manner_idx
    generic = manner_idx[len(anchor_m):] + result_idx[len(result_idx) - n_gr:]
    core_r = result_idx[: len(result_idx) - n_gr] or result_idx

    profiles = []
    for a in range(count):
        q = rng.uniform(0.0, 0.10, size=width)
        r = core_r[a % len(core_r)]
        if generic and rng.random() < small_share:
            g = generic[int(rng.integers(len(generic)))]
            q[g] = rng.uniform(0.32, 0.6)
            q[r] = rng.uniform(0.35, 0.6)
            profiles.append(_ActionProfile(probabilities=q, primary=g, small=True))
        else:
            quad = [anchor_m[(a + d) % len(anchor_m)] for d in range(min(4, len(anchor_m)))]
            q[r] = 0.88 + rng.uniform(-0.04, 0.04)
            for d, m in enumerate(quad):
                q[m] = 0.82 - 0.05 * d + rng.uniform(-0.04, 0.04)
            for g in generic:
                q[g] = rng.uniform(0.02, 0.15)
            profiles.append(_ActionProfile(probabilities=q, primary=r, small=False))
    return profiles


def _sample_annotation(
    profile: _ActionProfile, total: int, rng: np.random.Generator, width: int
) -> np.ndarray:
    """Per-verb selection counts for one action's annotator pool.

    Counts are binomial draws from the profile. Two regularities of real
    annotator pools are imposed: the defining verb always draws a clear
    majority, and verbs that do not genuinely apply never hover right at
    the relevance boundary (weakly present verbs either stay below it or
    clearly cross it).
    """
    q = np.clip(profile.probabilities, 0.0, 1.0)
    counts = rng.binomial(total, q)
    if not profile.small:
        fraction = counts / total
        hovering = (fraction >= 0.22) & (fraction < 0.32) & (q < 0.3)
        counts[hovering] = int(0.2 * total)
    counts[profile.primary] = max(counts[profile.primary], -(-9 * total // 20))
    return counts


def synthesize(
    verb_count: int = 20,
    video_count: int = 200,
    noise: float = 0.05,
    seed: int = 0,
    vocab: VerbVocabulary | None = None,
    dataset_id: str = "SYNTH",
    videos_per_action: int = 20,
    annotators: tuple[int, int] = (30, 50),
    feature_dim: int | None = None,
    small_action_share: float = 0.3,
) -> SyntheticCorpus:
    """Deterministic synthetic corpus of annotations plus features.

    One annotation is collected per action and shared by all of that
    action's videos, matching how the real datasets were annotated. Soft
    labels are genuine count/total rationals over a 30-50 annotator pool.
    Features are an orthogonal linear mix of each video's soft label plus
    `noise` times standard Gaussian noise, so labels are recoverable from
    features up to the noise level.
    """
    if verb_count < 1 or video_count < 1 or videos_per_action < 1:
        raise DataError("counts must be >= 1")
    if noise < 0:
        raise DataError("noise level must be >= 0")
    rng = np.random.default_rng(seed)
    if vocab is None:
        vocab = _synthetic_vocabulary(verb_count)
    width = len(vocab)
    feature_dim = feature_dim or width

    action_count = -(-video_count // videos_per_action)  # ceil
    profiles = _action_profiles(vocab, rng, action_count, small_action_share)
    # Orthogonal mixing matrix: labels are exactly recoverable at noise 0.
    square = max(feature_dim, width)
    gaussian = rng.normal(size=(square, square))
    orthogonal, _ = np.linalg.qr(gaussian)
    mixing = orthogonal[:feature_dim, :width]

    annotation_sets: dict[str, AnnotationSet] = {}
    action_ids = []
    for a, profile in enumerate(profiles):
        action_id = f"{dataset_id}_act{a:04d}"
        total = int(rng.integers(annotators[0], annotators[1] + 1))
        counts = _sample_annotation(profile, total, rng, width)
        # Distribute each verb's count over a random annotator subset.
        matrix = np.zeros((total, width), dtype=bool)
        for j in range(width):
            chosen = rng.permutation(total)[: counts[j]]
            matrix[chosen, j] = True
        selections = tuple(
            frozenset(np.flatnonzero(row).tolist()) for row in matrix
        )
        annotation_sets[action_id] = AnnotationSet(
            video_id=action_id, annotator_selections=selections
        )
        action_ids.append(action_id)

    records: list[ManifestRecord] = []
    bundles: list[LabelBundle] = []
    features: list[FeatureVector] = []
    for v in range(video_count):
        action_id = action_ids[v // videos_per_action]
        video_id = f"{dataset_id}_vid{v:05d}"
        bundle = build_bundle(annotation_sets[action_id], vocab)
        bundle = replace(bundle, video_id=video_id)
        values = mixing @ bundle.samv.scores + noise * rng.normal(size=feature_dim)
        records.append(
            ManifestRecord(
                video_id=video_id,
                action_id=action_id,
                vn_class="",
                feature_row=video_id,
                dataset_id=dataset_id,
            )
        )
        bundles.append(bundle)
        features.append(FeatureVector(video_id=video_id, values=values))
    return SyntheticCorpus(
        vocab=vocab,
        records=tuple(records),
        annotation_sets=annotation_sets,
        bundles=bundles,
        features=features,
        mixing=mixing,
    )
