"""MaxMatch edit-lattice scorer reporting F0.5.

The system's edits are not observed directly: only its output sentence is.
All ways of explaining the difference between source and hypothesis are
captured in a lattice built from the Levenshtein alignment (the arcs of every
minimum-cost alignment), augmented with merged arcs that fuse nearby edits
into phrase-level edits. Scoring then picks the path through the lattice
whose edits maximally overlap the gold annotation, so the system gets the
benefit of the doubt, and computes precision, recall, and F-beta from the
matched counts.

Everything here is pure and deterministic; sentence-level scoring can run
concurrently and corpus accumulation is order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from gecforge.corpus import AnnotatedSentence, EditAnnotation, Sentence

Node = tuple[int, int]

__all__ = [
    "SystemEdit",
    "Arc",
    "EditLattice",
    "MaxMatchResult",
    "SentenceScore",
    "ScoreReport",
    "f_beta",
    "extract_edit_lattice",
    "max_match",
    "score_corpus",
]


@dataclass(frozen=True, order=True)
class SystemEdit:
    """A candidate system edit: replace source[start:end] with replacement."""

    start: int
    end: int
    replacement: str

    def key(self) -> tuple[int, int, str]:
        """Span plus whitespace-normalized replacement, used for matching."""
        return (self.start, self.end, " ".join(self.replacement.split()))


@dataclass(frozen=True)
class Arc:
    tail: Node
    head: Node
    edit: SystemEdit | None  # None marks a match arc

    @property
    def is_edit(self) -> bool:
        return self.edit is not None


@dataclass
class EditLattice:
    source: Sentence
    hypothesis: Sentence
    arcs: list[Arc]

    @property
    def start(self) -> Node:
        return (0, 0)

    @property
    def end(self) -> Node:
        return (len(self.source), len(self.hypothesis))

    def edit_arcs(self) -> list[Arc]:
        return [a for a in self.arcs if a.is_edit]


def f_beta(tp: int, fp: int, fn: int, beta: float = 0.5) -> float:
    """F-beta from match counts.

    Conventions: all-zero counts score 1 (nothing to do, nothing done);
    zero matches with any nonzero count scores 0.
    """
    if tp < 0 or fp < 0 or fn < 0:
        raise ValueError(f"negative counts: tp={tp} fp={fp} fn={fn}")
    if tp == 0:
        return 1.0 if fp == 0 and fn == 0 else 0.0
    b2 = beta * beta
    return (1 + b2) * tp / ((1 + b2) * tp + b2 * fn + fp)


def _precision(tp: int, fp: int) -> float:
    return 1.0 if tp + fp == 0 else tp / (tp + fp)


def _recall(tp: int, fn: int) -> float:
    return 1.0 if tp + fn == 0 else tp / (tp + fn)


# --------------------------------------------------------------------------
# Lattice construction
# --------------------------------------------------------------------------


def extract_edit_lattice(
    source: Sentence, hypothesis: Sentence, merge_window: int = 2
) -> EditLattice:
    """Build the alignment lattice between source and hypothesis.

    Base arcs are the unit-cost Levenshtein operations (match 0,
    substitution/insertion/deletion 1) that lie on at least one minimum-cost
    alignment. Merged arcs fuse any base-arc run that starts and ends with an
    edit and contains at most ``merge_window`` match arcs in between,
    yielding phrase-level edit alternatives.
    """
    src, hyp = source.tokens, hypothesis.tokens
    n, m = len(src), len(hyp)

    forward = _distance_table(src, hyp)
    backward = [row[::-1] for row in _distance_table(src[::-1], hyp[::-1])][::-1]
    total = forward[n][m]

    arcs: list[Arc] = []
    for i in range(n + 1):
        for j in range(m + 1):
            if forward[i][j] + backward[i][j] > total:
                continue  # node off every optimal path
            here = forward[i][j]
            if i < n and j < m:
                cost = 0 if src[i] == hyp[j] else 1
                if here + cost + backward[i + 1][j + 1] == total:
                    edit = None if cost == 0 else SystemEdit(i, i + 1, hyp[j])
                    arcs.append(Arc((i, j), (i + 1, j + 1), edit))
            if i < n and here + 1 + backward[i + 1][j] == total:
                arcs.append(Arc((i, j), (i + 1, j), SystemEdit(i, i + 1, "")))
            if j < m and here + 1 + backward[i][j + 1] == total:
                arcs.append(Arc((i, j), (i, j + 1), SystemEdit(i, i, hyp[j])))

    arcs.extend(_merged_arcs(arcs, hyp, merge_window))
    return EditLattice(source, hypothesis, arcs)


def _distance_table(src: Sequence[str], hyp: Sequence[str]) -> list[list[int]]:
    n, m = len(src), len(hyp)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = dist[i - 1][j - 1] + (0 if src[i - 1] == hyp[j - 1] else 1)
            dist[i][j] = min(sub, dist[i - 1][j] + 1, dist[i][j - 1] + 1)
    return dist


def _merged_arcs(base: list[Arc], hyp: Sequence[str], window: int) -> list[Arc]:
    """Enumerate merged arcs over runs of base arcs.

    A run qualifies when it has at least two arcs, its first and last arcs
    are edits, and it passes through at most ``window`` match arcs. The
    merged arc rewrites the whole spanned source segment to the spanned
    hypothesis segment in one edit.
    """
    arcs_from: dict[Node, list[Arc]] = {}
    for arc in base:
        arcs_from.setdefault(arc.tail, []).append(arc)

    merged: set[tuple[Node, Node]] = set()

    def walk(origin: Node, node: Node, arcs_used: int, matches: int, last_was_edit: bool):
        if arcs_used >= 2 and last_was_edit:
            merged.add((origin, node))
        for arc in arcs_from.get(node, ()):
            next_matches = matches + (0 if arc.is_edit else 1)
            if next_matches > window:
                continue
            walk(origin, arc.head, arcs_used + 1, next_matches, arc.is_edit)

    for arc in base:
        if arc.is_edit:
            walk(arc.tail, arc.head, 1, 0, True)

    out = []
    for (i1, j1), (i2, j2) in sorted(merged):
        replacement = " ".join(hyp[j1:j2])
        out.append(Arc((i1, j1), (i2, j2), SystemEdit(i1, i2, replacement)))
    return out


# --------------------------------------------------------------------------
# MaxMatch dynamic program
# --------------------------------------------------------------------------


@dataclass
class MaxMatchResult:
    tp: int
    fp: int
    fn: int
    edits: list[SystemEdit]


def max_match(
    lattice: EditLattice, gold: Sequence[EditAnnotation]
) -> MaxMatchResult:
    """Pick the lattice path whose edits best match the gold annotation.

    Maximizes the number of gold edits matched (same span, same replacement
    after whitespace normalization); ties prefer fewer system edits, then
    the lexicographically smallest edit list. Each gold edit matches at most
    once, which the DP tracks with a matched-gold bitmask.
    """
    gold_index: dict[tuple[int, int, str], int] = {}
    for idx, g in enumerate(gold):
        key = (g.start, g.end, " ".join(g.replacement.split()))
        if key in gold_index:
            raise ValueError(f"duplicate gold edit {key}")
        gold_index[key] = idx

    arcs_from: dict[Node, list[Arc]] = {}
    nodes = {lattice.start, lattice.end}
    for arc in lattice.arcs:
        arcs_from.setdefault(arc.tail, []).append(arc)
        nodes.add(arc.tail)
        nodes.add(arc.head)

    # states[node][mask] = best (edit_count, edits_tuple) for paths reaching
    # node having matched exactly the gold edits in mask
    states: dict[Node, dict[int, tuple[int, tuple[SystemEdit, ...]]]] = {
        node: {} for node in nodes
    }
    states[lattice.start][0] = (0, ())

    for node in sorted(nodes):
        for mask, (count, edits) in states[node].items():
            for arc in arcs_from.get(node, ()):
                new_mask, new_count, new_edits = mask, count, edits
                if arc.edit is not None:
                    new_count += 1
                    new_edits = edits + (arc.edit,)
                    g = gold_index.get(arc.edit.key())
                    if g is not None and not mask & (1 << g):
                        new_mask = mask | (1 << g)
                candidate = (new_count, new_edits)
                best = states[arc.head].get(new_mask)
                if best is None or candidate < best:
                    states[arc.head][new_mask] = candidate

    final = states[lattice.end]
    if not final:
        raise RuntimeError("lattice has no path from start to end")
    best_mask, (best_count, best_edits) = min(
        final.items(), key=lambda kv: (-_popcount(kv[0]), kv[1])
    )
    tp = _popcount(best_mask)
    return MaxMatchResult(tp, best_count - tp, len(gold) - tp, list(best_edits))


def _popcount(mask: int) -> int:
    return bin(mask).count("1")


# --------------------------------------------------------------------------
# Corpus scoring
# --------------------------------------------------------------------------


@dataclass
class SentenceScore:
    index: int
    annotator: int
    tp: int
    fp: int
    fn: int
    f_half: float


@dataclass
class ScoreReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f_half: float
    macro_f_half: float
    sentences: list[SentenceScore] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f_half": self.f_half,
            "macro_f_half": self.macro_f_half,
            "sentences": [
                {
                    "index": s.index,
                    "annotator": s.annotator,
                    "tp": s.tp,
                    "fp": s.fp,
                    "fn": s.fn,
                    "f_half": s.f_half,
                }
                for s in self.sentences
            ],
        }

    def format_table(self) -> str:
        lines = [
            f"{'TP':>10} {self.tp}",
            f"{'FP':>10} {self.fp}",
            f"{'FN':>10} {self.fn}",
            f"{'Precision':>10} {self.precision:.4f}",
            f"{'Recall':>10} {self.recall:.4f}",
            f"{'F0.5':>10} {self.f_half:.4f}",
            f"{'macro-F0.5':>10} {self.macro_f_half:.4f}",
        ]
        return "\n".join(lines)


def score_corpus(
    hypotheses: Sequence[Sentence],
    gold: Sequence[AnnotatedSentence],
    beta: float = 0.5,
    merge_window: int = 2,
) -> ScoreReport:
    """Score hypotheses against gold annotations, index-aligned.

    Each sentence is scored against every annotator and keeps the annotator
    maximizing its sentence-level F-beta (ties to the lower annotator id).
    Counts are micro-accumulated over the corpus; the mean per-sentence
    F-beta is also reported as the macro reading.
    """
    if len(hypotheses) != len(gold):
        raise ValueError(
            f"hypothesis/gold length mismatch: {len(hypotheses)} != {len(gold)}"
        )
    total_tp = total_fp = total_fn = 0
    breakdown: list[SentenceScore] = []
    for index, (hyp, asent) in enumerate(zip(hypotheses, gold)):
        lattice = extract_edit_lattice(asent.source, hyp, merge_window=merge_window)
        best: SentenceScore | None = None
        annotators = asent.annotators() or [0]
        for annotator in annotators:
            result = max_match(lattice, asent.edits.get(annotator, []))
            f = f_beta(result.tp, result.fp, result.fn, beta)
            if best is None or f > best.f_half:
                best = SentenceScore(index, annotator, result.tp, result.fp, result.fn, f)
        assert best is not None
        breakdown.append(best)
        total_tp += best.tp
        total_fp += best.fp
        total_fn += best.fn
    macro = (
        sum(s.f_half for s in breakdown) / len(breakdown) if breakdown else 1.0
    )
    return ScoreReport(
        tp=total_tp,
        fp=total_fp,
        fn=total_fn,
        precision=_precision(total_tp, total_fp),
        recall=_recall(total_tp, total_fn),
        f_half=f_beta(total_tp, total_fp, total_fn, beta),
        macro_f_half=macro,
        sentences=breakdown,
    )
