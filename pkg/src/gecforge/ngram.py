"""Add-k smoothed n-gram language model used as the local sentence scorer.

Counts are kept at the highest order only; unseen contexts fall back to a
uniform distribution over the vocabulary (no backoff chain). Out-of-vocabulary
tokens map to a reserved unknown symbol that is part of the vocabulary, so
every sentence receives a finite log-probability. Start padding symbols are
excluded from the vocabulary; the end-of-sentence marker is included and
scored.

A trained model is immutable in practice and safe for concurrent scoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from gecforge.corpus import Sentence

START = "<s>"
END = "</s>"
UNK = "<unk>"

__all__ = ["NGramModel", "train_lm", "load_lm", "START", "END", "UNK"]


@dataclass
class NGramModel:
    """Highest-order counts plus add-k smoothing parameters.

    counts maps a context tuple (length order-1) to per-token counts;
    totals caches the sum of each context's counts. vocabulary holds all
    observed tokens plus END and UNK, never START.
    """

    order: int
    k: float
    counts: dict[tuple[str, ...], dict[str, int]]
    totals: dict[tuple[str, ...], int]
    vocabulary: set[str] = field(default_factory=set)

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    def _lookup(self, token: str) -> str:
        return token if token in self.vocabulary else UNK

    def _context_key(self, context: Sequence[str]) -> tuple[str, ...]:
        """Normalize a context: last order-1 tokens, START-padded on the
        left, non-vocabulary words mapped to UNK (START padding kept)."""
        width = self.order - 1
        window = list(context)[-width:] if width else []
        window = [t if t == START else self._lookup(t) for t in window]
        return tuple([START] * (width - len(window)) + window)

    def _prob(self, key: tuple[str, ...], token: str) -> float:
        by_token = self.counts.get(key)
        if by_token is None:
            return 1.0 / self.vocab_size
        count = by_token.get(token, 0)
        return (count + self.k) / (self.totals[key] + self.k * self.vocab_size)

    def next_distribution(self, context: Sequence[str]) -> dict[str, float]:
        """Smoothed distribution over the vocabulary after ``context``.

        Sums to 1 within 1e-9; unseen contexts give the uniform
        distribution.
        """
        key = self._context_key(context)
        return {token: self._prob(key, token) for token in sorted(self.vocabulary)}

    def logprob(self, sentence: Sentence | Sequence[str]) -> float:
        """Natural-log probability of the full sentence including the
        end-of-sentence term. Finite for any input; OOV tokens score as
        UNK."""
        tokens = list(sentence.tokens if isinstance(sentence, Sentence) else sentence)
        mapped = [self._lookup(t) for t in tokens] + [END]
        padded = [START] * (self.order - 1) + mapped
        total = 0.0
        for i, token in enumerate(mapped):
            key = tuple(padded[i : i + self.order - 1])
            total += math.log(self._prob(key, token))
        return total

    # ------------------------------------------------------------------
    # Plain-text persistence: one header line "order<TAB>k<TAB>vocab_size",
    # then sorted "context<TAB>token<TAB>count" lines (context space-joined,
    # empty for unigram models).
    # ------------------------------------------------------------------

    def save(self, path: str | Path) -> None:
        lines = [f"{self.order}\t{self.k!r}\t{self.vocab_size}"]
        for key in sorted(self.counts):
            for token in sorted(self.counts[key]):
                lines.append(f"{' '.join(key)}\t{token}\t{self.counts[key][token]}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_lm(path: str | Path) -> NGramModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"{path}: empty model file")
    header = lines[0].split("\t")
    if len(header) != 3:
        raise ValueError(f"{path}: bad header {lines[0]!r}")
    order, k, vocab_size = int(header[0]), float(header[1]), int(header[2])
    counts: dict[tuple[str, ...], dict[str, int]] = {}
    vocabulary: set[str] = {END, UNK}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) != 3:
            raise ValueError(f"{path}: line {lineno}: bad count line {line!r}")
        context = tuple(fields[0].split()) if fields[0] else ()
        token, count = fields[1], int(fields[2])
        counts.setdefault(context, {})[token] = count
        if token != START:
            vocabulary.add(token)
    totals = {ctx: sum(by_token.values()) for ctx, by_token in counts.items()}
    if len(vocabulary) != vocab_size:
        raise ValueError(
            f"{path}: header vocab size {vocab_size} != reconstructed "
            f"{len(vocabulary)}"
        )
    return NGramModel(order=order, k=k, counts=counts, totals=totals, vocabulary=vocabulary)


def train_lm(corpus: Iterable[Sentence | Sequence[str]], order: int, k: float = 1.0) -> NGramModel:
    """Count all highest-order n-grams with boundary padding.

    Every token position, plus the end-of-sentence marker, contributes one
    (context, token) count. Raises ValueError on an empty corpus or bad
    hyperparameters.
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if k <= 0:
        raise ValueError(f"smoothing constant must be > 0, got {k}")
    counts: dict[tuple[str, ...], dict[str, int]] = {}
    vocabulary: set[str] = {END, UNK}
    n_sentences = 0
    for sentence in corpus:
        tokens = list(sentence.tokens if isinstance(sentence, Sentence) else sentence)
        if not tokens:
            raise ValueError("empty sentence in training corpus")
        n_sentences += 1
        vocabulary.update(tokens)
        padded = [START] * (order - 1) + tokens + [END]
        for i in range(order - 1, len(padded)):
            context = tuple(padded[i - order + 1 : i])
            by_token = counts.setdefault(context, {})
            by_token[padded[i]] = by_token.get(padded[i], 0) + 1
    if n_sentences == 0:
        raise ValueError("training corpus is empty")
    totals = {ctx: sum(by_token.values()) for ctx, by_token in counts.items()}
    return NGramModel(order=order, k=k, counts=counts, totals=totals, vocabulary=vocabulary)
