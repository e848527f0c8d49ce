"""Verb vocabulary: ordered lemmas, manner/result typing, index lookup.

The vocabulary ordering defines the dimension order of every score vector
in the system, so it is frozen at load time and fingerprinted into every
artifact that stores score vectors.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

MANNER = "Manner"
RESULT = "Result"
VERB_TYPES = (MANNER, RESULT)

DEFAULT_VOCABULARY_RESOURCE = "verbs_90.csv"


class VocabularyError(ValueError):
    """Raised for malformed vocabulary input."""


@dataclass(frozen=True)
class VerbVocabulary:
    """Ordered verb lemmas with a Manner/Result tag per lemma.

    Immutable after construction; safe to share across threads.
    """

    verbs: tuple[str, ...]
    verb_type: dict[str, str]
    index: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        if len(set(self.verbs)) != len(self.verbs):
            raise VocabularyError("duplicate lemmas in vocabulary")
        for lemma in self.verbs:
            t = self.verb_type.get(lemma)
            if t not in VERB_TYPES:
                raise VocabularyError(f"lemma {lemma!r} has invalid type {t!r}")
        object.__setattr__(
            self, "index", {lemma: j for j, lemma in enumerate(self.verbs)}
        )

    def __len__(self) -> int:
        return len(self.verbs)

    def lookup(self, lemma: str) -> int:
        """Index of a lemma, raising VocabularyError naming unknown lemmas."""
        try:
            return self.index[lemma]
        except KeyError:
            raise VocabularyError(f"unknown verb lemma {lemma!r}") from None

    def fingerprint(self) -> str:
        """SHA-256 over the canonical `lemma,type` serialization.

        Any reordering, addition, or retyping changes the fingerprint, which
        is how checkpoints and retrieval indices detect dimension mismatch.
        """
        blob = "\n".join(f"{v},{self.verb_type[v]}" for v in self.verbs)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def load_vocabulary(source: str | Path) -> VerbVocabulary:
    """Load a `lemma,type` file (one entry per line, UTF-8, LF endings)."""
    text = Path(source).read_text(encoding="utf-8")
    return parse_vocabulary(text.splitlines())


def parse_vocabulary(lines: Iterable[str]) -> VerbVocabulary:
    verbs: list[str] = []
    types: dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise VocabularyError(f"line {lineno}: expected `lemma,type`, got {raw!r}")
        lemma, tag = parts[0].strip(), parts[1].strip()
        if not lemma:
            raise VocabularyError(f"line {lineno}: empty lemma")
        if tag not in VERB_TYPES:
            raise VocabularyError(f"line {lineno}: unknown type tag {tag!r}")
        if lemma in types:
            raise VocabularyError(f"duplicate lemma {lemma!r}")
        verbs.append(lemma)
        types[lemma] = tag
    if not verbs:
        raise VocabularyError("vocabulary file is empty")
    return VerbVocabulary(verbs=tuple(verbs), verb_type=types)


def save_vocabulary(vocab: VerbVocabulary, dest: str | Path) -> None:
    """Write in the same `lemma,type` format that load_vocabulary reads."""
    lines = "".join(f"{v},{vocab.verb_type[v]}\n" for v in vocab.verbs)
    Path(dest).write_text(lines, encoding="utf-8")


def default_vocabulary() -> VerbVocabulary:
    """The shipped 90-verb vocabulary (47 manner, 43 result)."""
    ref = resources.files("verbspace.data").joinpath(DEFAULT_VOCABULARY_RESOURCE)
    return parse_vocabulary(ref.read_text(encoding="utf-8").splitlines())


def verb_type_mask(vocab: VerbVocabulary, verb_type: str) -> np.ndarray:
    """Binary vector with mask[j] = 1 iff verb j has the given type."""
    if verb_type not in VERB_TYPES:
        raise VocabularyError(f"unknown verb type {verb_type!r}")
    return np.array(
        [1 if vocab.verb_type[v] == verb_type else 0 for v in vocab.verbs],
        dtype=np.int8,
    )


@dataclass(frozen=True)
class VNClassList:
    """Ordered verb-noun pair classes, as published with the source datasets."""

    classes: tuple[tuple[str, str], ...]
    index: dict[tuple[str, str], int] = field(init=False)

    def __post_init__(self) -> None:
        if len(set(self.classes)) != len(self.classes):
            raise VocabularyError("duplicate verb-noun pairs")
        object.__setattr__(
            self, "index", {pair: j for j, pair in enumerate(self.classes)}
        )

    def __len__(self) -> int:
        return len(self.classes)

    def lookup(self, verb: str, noun: str) -> int:
        try:
            return self.index[(verb, noun)]
        except KeyError:
            raise VocabularyError(f"unknown verb-noun class {verb!r},{noun!r}") from None


def load_vn_classes(source: str | Path) -> VNClassList:
    """Load `verb,noun` lines into an ordered class list."""
    pairs: list[tuple[str, str]] = []
    for lineno, raw in enumerate(Path(source).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2 or not all(parts):
            raise VocabularyError(f"line {lineno}: expected `verb,noun`, got {raw!r}")
        pairs.append((parts[0], parts[1]))
    if not pairs:
        raise VocabularyError("verb-noun class file is empty")
    return VNClassList(classes=tuple(pairs))
