"""Synthetic micro-language: a tiny templated English-like corpus.

Real learner corpora are licensed and large; experiments here run instead on
sentences drawn from a handful of phrase templates over a ~60-word
vocabulary. "Human" errors are simulated by sampling uniformly from the same
confusion-set candidates the rule-based generator targets (prepositions,
determiners, morphology), so correction is learnable at toy scale and gold
annotations are exact by construction.

The monolingual pool intentionally draws from a subset of the templates:
artificial data then covers only part of the test distribution, the same
domain gap real pipelines face between news text and learner essays.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from gecforge.confusion import build_candidates, default_confusion_sets
from gecforge.corpus import (
    AnnotatedSentence,
    ParallelPair,
    Provenance,
    Sentence,
    serialize_m2,
    write_parallel_tsv,
    write_sentence_file,
)

__all__ = [
    "DETERMINERS",
    "PREPOSITIONS",
    "NOUNS",
    "VERBS",
    "ADJECTIVES",
    "TEMPLATES",
    "MONO_TEMPLATES",
    "generate_clean_sentences",
    "generate_real_pairs",
    "emit_micro_corpus",
]

DETERMINERS = ("the", "a")
PREPOSITIONS = ("on", "in", "at", "to")
NOUNS = (
    "cat", "dog", "bird", "boy", "girl", "teacher", "student", "book",
    "letter", "table", "chair", "garden", "school", "park", "house",
    "river", "friend", "story", "song", "picture",
)
VERBS = (
    "sits", "walks", "looks", "plays", "reads", "writes", "sleeps",
    "jumps", "sings", "waits",
)
ADJECTIVES = ("small", "big", "red", "young", "happy", "quiet", "bright")

# Slot names fill from the word classes above; anything else is a literal.
TEMPLATES: tuple[tuple[str, ...], ...] = (
    ("det", "noun", "verb", "prep", "det", "noun", "."),
    ("det", "adj", "noun", "verb", "prep", "det", "noun", "."),
    ("det", "noun", "of", "det", "noun", "verb", "."),
    ("det", "noun", "verb", "."),
    ("det", "adj", "noun", "verb", "prep", "det", "adj", "noun", "."),
    ("det", "noun", "with", "det", "noun", "verb", "prep", "det", "noun", "."),
)

# The monolingual pool drops the last two templates (see module docstring).
MONO_TEMPLATES: tuple[int, ...] = (0, 1, 2, 3)

_SLOTS = {
    "det": DETERMINERS,
    "prep": PREPOSITIONS,
    "noun": NOUNS,
    "verb": VERBS,
    "adj": ADJECTIVES,
}


def _fill(template: Sequence[str], rng: random.Random) -> Sentence:
    tokens = []
    for slot in template:
        choices = _SLOTS.get(slot)
        tokens.append(rng.choice(choices) if choices else slot)
    return Sentence(tuple(tokens))


def generate_clean_sentences(
    n: int, seed: int, template_indices: Sequence[int] | None = None
) -> list[Sentence]:
    """Draw ``n`` grammatical sentences, optionally restricted to a subset
    of templates. Deterministic per seed."""
    indices = tuple(template_indices) if template_indices is not None else tuple(
        range(len(TEMPLATES))
    )
    rng = random.Random(seed)
    return [_fill(TEMPLATES[rng.choice(indices)], rng) for _ in range(n)]


@dataclass
class RealCorpus:
    """Simulated human-annotated data: pairs for training, M2-style gold."""

    pairs: list[ParallelPair]
    annotated: list[AnnotatedSentence]


def generate_real_pairs(n: int, seed: int) -> RealCorpus:
    """Simulate human errors: per clean sentence, pick one confusion-set
    candidate uniformly (no language-model steering). The inverse edit
    becomes the gold annotation, exact by construction."""
    sets = default_confusion_sets()
    rng = random.Random(seed)
    pairs: list[ParallelPair] = []
    annotated: list[AnnotatedSentence] = []
    produced = 0
    clean_rng_seed = seed + 1
    while produced < n:
        batch = generate_clean_sentences(n, clean_rng_seed)
        clean_rng_seed += 1
        for sentence in batch:
            if produced >= n:
                break
            candidates = build_candidates(sentence, sets)
            if not candidates:
                continue
            choice = candidates[rng.randrange(len(candidates))]
            pairs.append(ParallelPair(choice.sentence, sentence, Provenance.REAL))
            annotated.append(
                AnnotatedSentence(choice.sentence, {0: [choice.edit]})
            )
            produced += 1
    return RealCorpus(pairs, annotated)


def emit_micro_corpus(
    out_dir: str | Path,
    n_train: int = 600,
    n_test: int = 200,
    n_mono: int = 1500,
    seed: int = 0,
) -> dict[str, Path]:
    """Write the standard micro-language experiment inputs.

    base.tsv      parallel training pairs with simulated human errors
    test.m2       held-out errorful sentences with gold edits
    mono.txt      clean monolingual sentences (template subset)
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train = generate_real_pairs(n_train, seed)
    test = generate_real_pairs(n_test, seed + 10_000)
    mono = generate_clean_sentences(n_mono, seed + 20_000, MONO_TEMPLATES)

    paths = {
        "base": out / "base.tsv",
        "test": out / "test.m2",
        "mono": out / "mono.txt",
    }
    write_parallel_tsv(train.pairs, paths["base"])
    paths["test"].write_text(serialize_m2(test.annotated), encoding="utf-8")
    write_sentence_file(mono, paths["mono"])
    return paths
