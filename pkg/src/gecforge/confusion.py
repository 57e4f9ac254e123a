"""Rule-based artificial error generation.

Errorful sentences are produced from clean ones by swapping, deleting, or
inserting members of closed-class confusion sets (prepositions, determiners)
and by morphological alternation of open-class words (cat -> cats). Every
candidate sentence is scored by a language model, the single most probable
candidate is excluded, and the output is sampled from the next-most-probable
few, so the generator prefers plausible but not perfectly fluent errors.

Each emitted pair differs from its clean sentence by exactly one edit, and
the edit is recorded as its inverse correction: applying it to the errorful
sentence restores the clean one bit-exactly.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

from gecforge.corpus import EditAnnotation, ParallelPair, Provenance, Sentence
from gecforge.scorers import LmScorer, ScorerError

EPSILON = ""  # the empty confusion-set element (deletion / insertion)

__all__ = [
    "Category",
    "ConfusionSet",
    "ErrorCandidate",
    "GenerationResult",
    "GenerationError",
    "LexiconError",
    "DEFAULT_PREPOSITIONS",
    "DEFAULT_DETERMINERS",
    "default_confusion_sets",
    "parse_lexicon",
    "morph_variants",
    "build_candidates",
    "score_candidates",
    "select_errorful",
    "generate_corpus",
    "sentence_seed",
]


class Category(str, Enum):
    PREPOSITION = "preposition"
    DETERMINER = "determiner"
    MORPHOLOGY = "morphology"


DEFAULT_PREPOSITIONS = frozenset(
    {"on", "in", "at", "for", "to", "of", "with", "by", "about", "from", EPSILON}
)
DEFAULT_DETERMINERS = frozenset({"the", "a", "an", EPSILON})


@dataclass(frozen=True)
class ConfusionSet:
    """Alternatives for one error category.

    Closed-class sets (preposition, determiner) list their members explicitly
    and always include the empty element. Morphology membership is decided
    per token by rule, so its set carries no members.
    """

    category: Category
    members: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.category is Category.MORPHOLOGY:
            if self.members:
                raise LexiconError("morphology sets are generated per token")
        elif EPSILON not in self.members:
            raise LexiconError(f"{self.category.value} set must include the empty element")


class LexiconError(ValueError):
    pass


def default_confusion_sets() -> list[ConfusionSet]:
    return [
        ConfusionSet(Category.PREPOSITION, DEFAULT_PREPOSITIONS),
        ConfusionSet(Category.DETERMINER, DEFAULT_DETERMINERS),
        ConfusionSet(Category.MORPHOLOGY),
    ]


def parse_lexicon(text: str) -> list[ConfusionSet]:
    """Parse a lexicon file: ``[preposition]`` / ``[determiner]`` section
    headers, one member per line, ``<eps>`` for the empty element. Morphology
    is rule-driven and always included."""
    sections: dict[str, set[str]] = {}
    current: set[str] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in ("preposition", "determiner"):
                raise LexiconError(f"line {lineno}: unknown section [{name}]")
            current = sections.setdefault(name, set())
        elif current is None:
            raise LexiconError(f"line {lineno}: member {line!r} outside any section")
        else:
            current.add(EPSILON if line == "<eps>" else line.lower())
    sets = []
    for category in (Category.PREPOSITION, Category.DETERMINER):
        if category.value in sections:
            sets.append(ConfusionSet(category, frozenset(sections[category.value])))
    sets.append(ConfusionSet(Category.MORPHOLOGY))
    return sets


# --------------------------------------------------------------------------
# Morphology
# --------------------------------------------------------------------------

# Closed-class words never take morphological alternatives; their errors are
# the business of the closed-class confusion sets.
_FUNCTION_WORDS = frozenset(
    """
    the a an this that these those some any no each every all both
    i you he she it we they me him her us them
    my your his its our their mine yours hers ours theirs
    and or but if because so as than then when while
    is am are was were be been being
    do does did have has had
    will would can could may might must shall should
    not too also there here what who whom which why how
    on in at for to of with by about from into onto over under up down
    off out near between through during after before above below
    """.split()
)

# Irregular paradigms looked up before the suffix rules.
_EXCEPTIONS: dict[str, frozenset[str]] = {
    word: frozenset(alts)
    for word, alts in {
        "man": {"men"},
        "men": {"man"},
        "woman": {"women"},
        "women": {"woman"},
        "child": {"children"},
        "children": {"child"},
        "person": {"people"},
        "people": {"person"},
        "foot": {"feet"},
        "feet": {"foot"},
        "tooth": {"teeth"},
        "teeth": {"tooth"},
        "mouse": {"mice"},
        "mice": {"mouse"},
        "go": {"goes", "went", "going", "gone"},
        "goes": {"go", "went", "going", "gone"},
        "went": {"go", "goes", "going", "gone"},
        "gone": {"go", "goes", "went", "going"},
        "going": {"go", "goes", "went", "gone"},
        "sit": {"sits", "sat", "sitting"},
        "sits": {"sit", "sat", "sitting"},
        "sat": {"sit", "sits", "sitting"},
        "sitting": {"sit", "sits", "sat"},
        "run": {"runs", "ran", "running"},
        "runs": {"run", "ran", "running"},
        "ran": {"run", "runs", "running"},
        "running": {"run", "runs", "ran"},
        "write": {"writes", "wrote", "written", "writing"},
        "writes": {"write", "wrote", "written", "writing"},
        "wrote": {"write", "writes", "written", "writing"},
        "writing": {"write", "writes", "wrote", "written"},
        "written": {"write", "writes", "wrote", "writing"},
        "make": {"makes", "made", "making"},
        "makes": {"make", "made", "making"},
        "made": {"make", "makes", "making"},
        "making": {"make", "makes", "made"},
    }.items()
}

_ES_STEMS = ("s", "x", "z", "ch", "sh")


def _pluralize(word: str) -> str:
    if len(word) > 2 and word.endswith("y") and word[-2] not in "aeiou":
        return word[:-1] + "ies"
    if word.endswith(_ES_STEMS):
        return word + "es"
    return word + "s"


def _singularize(word: str) -> str | None:
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("es") and len(word) > 3 and word[:-2].endswith(_ES_STEMS):
        return word[:-2]
    if word.endswith("s") and not word.endswith("ss") and len(word) > 2:
        return word[:-1]
    return None


def morph_variants(token: str) -> set[str]:
    """Inflectional alternatives of an alphabetic token by suffix rule.

    Verb forms with an overt -ed/-ing suffix expand to the rest of their
    paradigm; -s forms drop to the base; bare forms pluralize. Closed-class
    words and tokens no rule covers get the empty set. The token itself is
    never returned.
    """
    if not token.isalpha():
        return set()
    lower = token.lower()
    if lower in _FUNCTION_WORDS:
        return set()
    if lower in _EXCEPTIONS:
        return set(_EXCEPTIONS[lower]) - {lower}
    variants: set[str] = set()
    if lower.endswith("ed") and len(lower) > 3:
        base = lower[:-2]
        variants = {base, base + "s", base + "ing"}
    elif lower.endswith("ing") and len(lower) > 4:
        base = lower[:-3]
        variants = {base, base + "s", base + "ed"}
    else:
        singular = _singularize(lower)
        if singular is not None:
            variants = {singular}
        else:
            variants = {_pluralize(lower)}
    return variants - {lower}


# --------------------------------------------------------------------------
# Candidate construction, scoring, selection
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ErrorCandidate:
    """One errorful variant of a clean sentence.

    ``edit`` is the inverse correction, positioned in the errorful
    sentence's coordinates: applying it restores the clean sentence.
    """

    sentence: Sentence
    edit: EditAnnotation
    category: Category
    lm_logprob: float | None = None


def build_candidates(
    sentence: Sentence,
    sets: Sequence[ConfusionSet],
    allow_insertions: bool = False,
) -> list[ErrorCandidate]:
    """Enumerate single-edit errorful variants of ``sentence``.

    Closed-class tokens substitute (or, via the empty element, delete) each
    alternative set member; other tokens take their morphological variants.
    Insertion candidates at inter-token gaps are off by default. Order is
    deterministic: positions left to right, categories in declaration order,
    alternatives sorted.
    """
    closed = [s for s in sets if s.category is not Category.MORPHOLOGY]
    morphology_on = any(s.category is Category.MORPHOLOGY for s in sets)
    candidates: list[ErrorCandidate] = []
    tokens = sentence.tokens

    for i, token in enumerate(tokens):
        lower = token.lower()
        matched = False
        for cset in closed:
            if lower not in cset.members:
                continue
            matched = True
            for alt in sorted(cset.members - {lower, EPSILON}):
                variant = Sentence(tokens[:i] + (alt,) + tokens[i + 1 :])
                inverse = EditAnnotation(i, i + 1, token, cset.category.value)
                candidates.append(ErrorCandidate(variant, inverse, cset.category))
            if EPSILON in cset.members and len(tokens) > 1:
                variant = Sentence(tokens[:i] + tokens[i + 1 :])
                inverse = EditAnnotation(i, i, token, cset.category.value)
                candidates.append(ErrorCandidate(variant, inverse, cset.category))
            break
        if matched or not morphology_on:
            continue
        for alt in sorted(morph_variants(token)):
            variant = Sentence(tokens[:i] + (alt,) + tokens[i + 1 :])
            inverse = EditAnnotation(i, i + 1, token, Category.MORPHOLOGY.value)
            candidates.append(ErrorCandidate(variant, inverse, Category.MORPHOLOGY))

    if allow_insertions:
        for gap in range(len(tokens) + 1):
            for cset in closed:
                for word in sorted(cset.members - {EPSILON}):
                    variant = Sentence(tokens[:gap] + (word,) + tokens[gap:])
                    inverse = EditAnnotation(gap, gap + 1, "", cset.category.value)
                    candidates.append(ErrorCandidate(variant, inverse, cset.category))
    return candidates


def score_candidates(
    candidates: Sequence[ErrorCandidate], scorer: LmScorer
) -> list[ErrorCandidate]:
    """Attach the scorer's full-sentence log probability to each candidate,
    preserving order. A scorer failure names the candidate it died on."""
    scored = []
    for i, cand in enumerate(candidates):
        try:
            logprob = scorer.score_sentence(cand.sentence.text())
        except Exception as exc:
            raise ScorerError(f"scoring failed for candidate {i}: {exc}") from exc
        if not math.isfinite(logprob):
            raise ScorerError(f"non-finite log probability for candidate {i}")
        scored.append(replace(cand, lm_logprob=logprob))
    return scored


def select_errorful(
    candidates: Sequence[ErrorCandidate],
    rng_seed: int | str,
    m: int = 5,
) -> ErrorCandidate | None:
    """Pick an errorful candidate while avoiding the most probable one.

    Candidates are ranked by log probability (descending, stable), rank 1 is
    removed, and the result is drawn uniformly from the top ``m`` of the
    remainder with a seeded RNG. Returns None when fewer than two candidates
    exist.
    """
    if len(candidates) < 2:
        return None
    for i, cand in enumerate(candidates):
        if cand.lm_logprob is None:
            raise ValueError(f"candidate {i} has no lm_logprob; score first")
    ranked = sorted(candidates, key=lambda c: -c.lm_logprob)
    pool = ranked[1 : 1 + m]
    rng = random.Random(rng_seed)
    return pool[rng.randrange(len(pool))]


@dataclass
class GenerationResult:
    pairs: list[ParallelPair] = field(default_factory=list)
    skipped: int = 0


class GenerationError(RuntimeError):
    """Generation aborted; carries the partial-progress manifest."""

    def __init__(self, message: str, partial: GenerationResult, failed_index: int):
        super().__init__(message)
        self.partial = partial
        self.failed_index = failed_index


def sentence_seed(seed: int, index: int) -> str:
    """Per-sentence RNG stream id, split from the master seed so serial and
    parallel generation agree."""
    return f"{seed}:{index}"


def generate_corpus(
    clean: Sequence[Sentence],
    sets: Sequence[ConfusionSet],
    scorer: LmScorer,
    seed: int,
    m: int = 5,
    allow_insertions: bool = False,
) -> GenerationResult:
    """Generate one (errorful, clean) pair per clean sentence where possible.

    Sentences yielding fewer than two candidates are skipped and counted.
    A scorer failure aborts with a GenerationError carrying the pairs
    produced so far.
    """
    result = GenerationResult()
    for i, sentence in enumerate(clean):
        candidates = build_candidates(sentence, sets, allow_insertions=allow_insertions)
        if len(candidates) < 2:
            result.skipped += 1
            continue
        try:
            scored = score_candidates(candidates, scorer)
        except ScorerError as exc:
            raise GenerationError(
                f"scorer failed on sentence {i}: {exc}", result, i
            ) from exc
        choice = select_errorful(scored, sentence_seed(seed, i), m=m)
        if choice is None:
            result.skipped += 1
            continue
        result.pairs.append(ParallelPair(choice.sentence, sentence, Provenance.RULE))
    return result
