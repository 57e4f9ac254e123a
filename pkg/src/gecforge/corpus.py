"""Corpus ingestion, parallel-pair construction, and deterministic data mixing.

Annotated learner corpora arrive in the line-based M2 format ("S" sentence
lines followed by "A" edit lines). This module parses and re-serializes that
format bit-exactly, applies gold edits to recover corrected sentences, drops
error-free pairs, and mixes real with artificial pairs at controlled sizes
using seeded sampling so every experiment is reproducible.

All functions here are pure: no shared mutable state, safe to call
concurrently.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "Sentence",
    "EditAnnotation",
    "AnnotatedSentence",
    "Provenance",
    "ParallelPair",
    "DatasetMix",
    "M2ParseError",
    "CorpusError",
    "tokenize",
    "parse_m2",
    "parse_m2_file",
    "serialize_m2",
    "apply_edits",
    "pairs_from_annotated",
    "filter_error_free",
    "mix_datasets",
    "read_parallel_tsv",
    "write_parallel_tsv",
    "read_sentence_file",
    "write_sentence_file",
]


class CorpusError(ValueError):
    """Invalid corpus data (bad offsets, overlapping edits, bad mixes)."""


class M2ParseError(CorpusError):
    """Malformed M2 input; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Sentence:
    """A tokenized sentence. Tokens are non-empty and whitespace-free."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) == 0:
            raise CorpusError("sentence must contain at least one token")
        for tok in self.tokens:
            if not tok or tok != tok.strip() or any(ch.isspace() for ch in tok):
                raise CorpusError(f"bad token {tok!r}: empty or contains whitespace")

    @classmethod
    def from_text(cls, text: str) -> "Sentence":
        """Build from a pre-tokenized, space-separated string."""
        return cls(tuple(text.split()))

    def text(self) -> str:
        return " ".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


# Rule-based tokenizer for raw (non pre-tokenized) text: splits leading and
# trailing punctuation off words. M2 corpora are already token-delimited and
# never pass through here.
_TOKEN_RE = re.compile(r"\w+(?:[-']\w+)*|[^\w\s]")


def tokenize(text: str) -> Sentence:
    """Tokenize raw text by splitting punctuation from word edges."""
    tokens = _TOKEN_RE.findall(text)
    if not tokens:
        raise CorpusError(f"no tokens in input {text!r}")
    return Sentence(tuple(tokens))


@dataclass(frozen=True)
class EditAnnotation:
    """One gold edit against a source sentence (M2 semantics).

    ``start == end`` denotes insertion before ``start``; an empty replacement
    with ``start < end`` denotes deletion. An empty replacement over an empty
    span would be a no-op and is rejected.
    """

    start: int
    end: int
    replacement: str
    error_type: str = "UNK"
    annotator_id: int = 0

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise CorpusError(f"bad edit span ({self.start}, {self.end})")
        if self.start == self.end and not self.replacement.strip():
            raise CorpusError(f"no-op edit at {self.start}: empty insertion")

    def validate_against(self, sentence: Sentence) -> None:
        if self.end > len(sentence):
            raise CorpusError(
                f"edit span ({self.start}, {self.end}) exceeds sentence "
                f"length {len(sentence)}"
            )


@dataclass
class AnnotatedSentence:
    """A source sentence plus per-annotator gold edits.

    ``edits`` maps annotator id to that annotator's edits, sorted by
    (start, end) and non-overlapping. An annotator recorded with an empty
    list marked the sentence as needing no correction (M2 "noop").
    """

    source: Sentence
    edits: dict[int, list[EditAnnotation]] = field(default_factory=dict)

    def __post_init__(self):
        for annotator, edits in self.edits.items():
            _check_edit_list(self.source, edits)
            for e in edits:
                if e.annotator_id != annotator:
                    raise CorpusError(
                        f"edit annotator {e.annotator_id} filed under {annotator}"
                    )

    def annotators(self) -> list[int]:
        return sorted(self.edits)


def _check_edit_list(sentence: Sentence, edits: Sequence[EditAnnotation]) -> None:
    """Validate offsets, ordering, and non-overlap for one annotator."""
    for e in edits:
        e.validate_against(sentence)
    for prev, cur in zip(edits, edits[1:]):
        if (prev.start, prev.end) > (cur.start, cur.end):
            raise CorpusError(
                f"edits not sorted: ({prev.start},{prev.end}) before "
                f"({cur.start},{cur.end})"
            )
        if cur.start < prev.end or (prev.start, prev.end) == (cur.start, cur.end):
            raise CorpusError(
                f"overlapping edits ({prev.start},{prev.end}) and "
                f"({cur.start},{cur.end})"
            )


class Provenance(str, Enum):
    REAL = "real"
    RULE = "rule"
    NEURAL = "neural"


@dataclass(frozen=True)
class ParallelPair:
    """(errorful source, correct target) with a provenance tag."""

    source: Sentence
    target: Sentence
    provenance: Provenance = Provenance.REAL


@dataclass
class DatasetMix:
    """Base pairs plus ``k`` artificial pairs sampled from a pool by ``seed``."""

    base: list[ParallelPair]
    artificial_pool: list[ParallelPair]
    k: int
    seed: int

    def __post_init__(self):
        if self.k < 0:
            raise CorpusError(f"k must be non-negative, got {self.k}")
        if self.k > len(self.artificial_pool):
            raise CorpusError(
                f"k={self.k} exceeds artificial pool size {len(self.artificial_pool)}"
            )


# --------------------------------------------------------------------------
# M2 format
# --------------------------------------------------------------------------

_NOOP_TYPES = {"noop"}
_NONE_REPL = "-NONE-"


def parse_m2(text: str) -> list[AnnotatedSentence]:
    """Parse M2-format text into annotated sentences.

    Blocks are separated by blank lines. Each block is one "S <tokens>" line
    followed by zero or more "A <start> <end>|||<type>|||<repl>|||..." lines.
    A "noop" annotation registers its annotator with an empty edit list.

    Raises M2ParseError (with line number) on malformed lines and
    CorpusError on out-of-range edit offsets.
    """
    sentences: list[AnnotatedSentence] = []
    source: Sentence | None = None
    edits: dict[int, list[EditAnnotation]] = {}

    def flush():
        if source is not None:
            for annotator in edits:
                edits[annotator].sort(key=lambda e: (e.start, e.end))
            sentences.append(AnnotatedSentence(source, dict(edits)))

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush()
            source, edits = None, {}
            continue
        if line.startswith("S "):
            if source is not None:
                flush()
                edits = {}
            body = line[2:].strip()
            if not body:
                raise M2ParseError(lineno, "empty S line")
            source = Sentence(tuple(body.split()))
        elif line.startswith("A "):
            if source is None:
                raise M2ParseError(lineno, "A line before any S line")
            annotator, edit = _parse_a_line(line, lineno, source)
            edits.setdefault(annotator, [])
            if edit is not None:
                edits[annotator].append(edit)
        else:
            raise M2ParseError(lineno, f"unrecognized line {line!r}")
    flush()
    return sentences


def _parse_a_line(
    line: str, lineno: int, source: Sentence
) -> tuple[int, EditAnnotation | None]:
    fields = line[2:].split("|||")
    if len(fields) != 6:
        raise M2ParseError(lineno, f"expected 6 |||-separated fields, got {len(fields)}")
    span, error_type, replacement = fields[0], fields[1], fields[2]
    parts = span.split()
    if len(parts) != 2:
        raise M2ParseError(lineno, f"bad span field {span!r}")
    try:
        start, end = int(parts[0]), int(parts[1])
        annotator = int(fields[5])
    except ValueError as exc:
        raise M2ParseError(lineno, f"non-integer field: {exc}") from None

    if error_type in _NOOP_TYPES:
        return annotator, None
    if replacement == _NONE_REPL:
        replacement = ""
    if not (0 <= start <= end <= len(source)):
        raise CorpusError(
            f"line {lineno}: edit span ({start}, {end}) out of range for "
            f"sentence of length {len(source)}"
        )
    try:
        edit = EditAnnotation(start, end, replacement, error_type, annotator)
    except CorpusError as exc:
        raise M2ParseError(lineno, str(exc)) from None
    return annotator, edit


def parse_m2_file(path: str | Path) -> list[AnnotatedSentence]:
    return parse_m2(Path(path).read_text(encoding="utf-8"))


def serialize_m2(sentences: Iterable[AnnotatedSentence]) -> str:
    """Serialize annotated sentences to canonical M2 text.

    Canonical form round-trips through parse_m2 bit-exactly: single-space
    token separation, annotators in ascending order, REQUIRED/-NONE-
    placeholder fields, noop lines for empty-edit annotators, blank line
    between blocks, trailing newline.
    """
    blocks: list[str] = []
    for asent in sentences:
        lines = ["S " + asent.source.text()]
        for annotator in asent.annotators():
            edits = asent.edits[annotator]
            if not edits:
                lines.append(f"A -1 -1|||noop|||{_NONE_REPL}|||REQUIRED|||{_NONE_REPL}|||{annotator}")
                continue
            for e in edits:
                repl = e.replacement if e.replacement else _NONE_REPL
                lines.append(
                    f"A {e.start} {e.end}|||{e.error_type}|||{repl}|||REQUIRED|||{_NONE_REPL}|||{annotator}"
                )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


# --------------------------------------------------------------------------
# Edit application and pair construction
# --------------------------------------------------------------------------


def apply_edits(sentence: Sentence, edits: Sequence[EditAnnotation]) -> Sentence:
    """Apply non-overlapping edits, producing the corrected sentence.

    Edits are applied right-to-left so earlier offsets stay valid. Multi-word
    replacements are split on whitespace; an empty replacement deletes the
    span. Raises CorpusError on overlap or bad offsets.
    """
    ordered = sorted(edits, key=lambda e: (e.start, e.end))
    _check_edit_list(sentence, ordered)
    tokens = list(sentence.tokens)
    for e in reversed(ordered):
        tokens[e.start : e.end] = e.replacement.split()
    if not tokens:
        raise CorpusError("edits deleted the entire sentence")
    return Sentence(tuple(tokens))


def pairs_from_annotated(
    sentences: Iterable[AnnotatedSentence],
    provenance: Provenance = Provenance.REAL,
) -> list[ParallelPair]:
    """Build (errorful, corrected) pairs using each sentence's lowest-id
    annotator for the correction target. All annotators stay available on the
    AnnotatedSentence for scoring."""
    pairs = []
    for asent in sentences:
        annotators = asent.annotators()
        edits = asent.edits[annotators[0]] if annotators else []
        target = apply_edits(asent.source, edits)
        pairs.append(ParallelPair(asent.source, target, provenance))
    return pairs


def filter_error_free(pairs: Sequence[ParallelPair]) -> list[ParallelPair]:
    """Drop pairs whose source and target token sequences are identical."""
    return [p for p in pairs if p.source.tokens != p.target.tokens]


def mix_datasets(mix: DatasetMix) -> list[ParallelPair]:
    """Combine base pairs with ``k`` pool pairs sampled without replacement.

    Sampling is a seeded Fisher-Yates prefix over pool indices; the combined
    list is then shuffled with the same RNG stream. Deterministic: equal
    (inputs, seed) gives byte-identical output order.
    """
    rng = random.Random(mix.seed)
    indices = list(range(len(mix.artificial_pool)))
    for i in range(mix.k):
        j = rng.randrange(i, len(indices))
        indices[i], indices[j] = indices[j], indices[i]
    sampled = [mix.artificial_pool[i] for i in indices[: mix.k]]
    combined = list(mix.base) + sampled
    rng.shuffle(combined)
    return combined


# --------------------------------------------------------------------------
# Parallel TSV and plain sentence files
# --------------------------------------------------------------------------


def write_parallel_tsv(pairs: Iterable[ParallelPair], path: str | Path) -> None:
    """One pair per line: source<TAB>target<TAB>provenance, UTF-8, LF."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(f"{p.source.text()}\t{p.target.text()}\t{p.provenance.value}\n")


def read_parallel_tsv(path: str | Path) -> list[ParallelPair]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise CorpusError(
                    f"{path}: line {lineno}: expected 3 tab-separated fields, "
                    f"got {len(fields)}"
                )
            src, tgt, prov = fields
            try:
                provenance = Provenance(prov)
            except ValueError:
                raise CorpusError(
                    f"{path}: line {lineno}: unknown provenance {prov!r}"
                ) from None
            pairs.append(
                ParallelPair(Sentence.from_text(src), Sentence.from_text(tgt), provenance)
            )
    return pairs


def write_sentence_file(sentences: Iterable[Sentence], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in sentences:
            fh.write(s.text() + "\n")


def read_sentence_file(path: str | Path) -> list[Sentence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(Sentence.from_text(line))
    return out
