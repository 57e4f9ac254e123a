import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gecforge.corpus import AnnotatedSentence, EditAnnotation, Sentence, apply_edits
from gecforge.m2score import (
    SystemEdit,
    extract_edit_lattice,
    f_beta,
    max_match,
    score_corpus,
)


def sent(text):
    return Sentence.from_text(text)


# --------------------------------------------------------------------------
# Exhaustive path-enumeration oracle, independent of the DP
# --------------------------------------------------------------------------


def enumerate_paths(lattice):
    arcs_from = {}
    for arc in lattice.arcs:
        arcs_from.setdefault(arc.tail, []).append(arc)
    paths = []

    def dfs(node, edits):
        if node == lattice.end:
            paths.append(tuple(edits))
            return
        for arc in arcs_from.get(node, ()):
            if arc.edit is not None:
                edits.append(arc.edit)
            dfs(arc.head, edits)
            if arc.edit is not None:
                edits.pop()

    dfs(lattice.start, [])
    return paths


def oracle_counts(lattice, gold):
    """Best (tp, fp, fn) over all lattice paths, matching each gold edit at
    most once against the path's edit multiset."""
    gold_keys = [(g.start, g.end, " ".join(g.replacement.split())) for g in gold]
    best = None
    for path in enumerate_paths(lattice):
        remaining = list(gold_keys)
        tp = 0
        for e in path:
            if e.key() in remaining:
                remaining.remove(e.key())
                tp += 1
        cand = (-tp, len(path))
        if best is None or cand < best:
            best = cand
    tp, count = -best[0], best[1]
    return tp, count - tp, len(gold_keys) - tp


class TestFBeta:
    def test_worked_example(self):
        assert f_beta(2, 1, 2, beta=0.5) == 0.625

    def test_perfect_empty_convention(self):
        assert f_beta(0, 0, 0) == 1.0

    def test_zero_tp_with_nonzero_counts(self):
        assert f_beta(0, 3, 2) == 0.0
        assert f_beta(0, 0, 2) == 0.0
        assert f_beta(0, 3, 0) == 0.0

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            f_beta(-1, 0, 0)

    def test_beta_one_is_harmonic_mean(self):
        # P=0.5, R=0.5 -> F1=0.5
        assert f_beta(2, 2, 2, beta=1.0) == pytest.approx(0.5)

    @given(st.integers(0, 20), st.integers(0, 20), st.integers(0, 20))
    def test_bounded(self, tp, fp, fn):
        assert 0.0 <= f_beta(tp, fp, fn) <= 1.0


class TestExtractEditLattice:
    def test_single_substitution(self):
        lattice = extract_edit_lattice(sent("a b c"), sent("a d c"))
        assert [a.edit for a in lattice.edit_arcs()] == [SystemEdit(1, 2, "d")]

    def test_identity_has_no_edit_arcs(self):
        lattice = extract_edit_lattice(sent("a b c"), sent("a b c"))
        assert lattice.edit_arcs() == []
        assert len(lattice.arcs) == 3

    def test_merged_arc_example(self):
        lattice = extract_edit_lattice(
            sent("He go to school"), sent("He goes to the school")
        )
        edits = {a.edit for a in lattice.edit_arcs()}
        assert SystemEdit(1, 2, "goes") in edits
        assert SystemEdit(3, 3, "the") in edits
        assert SystemEdit(1, 3, "goes to the") in edits

    def test_merge_window_zero_blocks_gapped_merge(self):
        lattice = extract_edit_lattice(
            sent("He go to school"), sent("He goes to the school"), merge_window=0
        )
        edits = {a.edit for a in lattice.edit_arcs()}
        assert SystemEdit(1, 3, "goes to the") not in edits

    def test_adjacent_edits_merge_without_window(self):
        lattice = extract_edit_lattice(sent("a b"), sent("a c d"), merge_window=0)
        edits = {a.edit for a in lattice.edit_arcs()}
        assert SystemEdit(1, 2, "c d") in edits

    def test_no_noop_merged_arcs(self):
        for src_text, hyp_text in [("a b", "b a"), ("x y z", "z y x"), ("a b c d", "a c b d")]:
            lattice = extract_edit_lattice(sent(src_text), sent(hyp_text))
            src = lattice.source.tokens
            for arc in lattice.edit_arcs():
                e = arc.edit
                assert " ".join(src[e.start : e.end]) != e.replacement


class TestMaxMatch:
    def test_exact_match_single_edit(self):
        lattice = extract_edit_lattice(sent("He go to school"), sent("He goes to school"))
        gold = [EditAnnotation(1, 2, "goes")]
        result = max_match(lattice, gold)
        assert (result.tp, result.fp, result.fn) == (1, 0, 0)
        assert result.edits == [SystemEdit(1, 2, "goes")]

    def test_unchanged_hypothesis_counts_misses(self):
        src = sent("a b c")
        lattice = extract_edit_lattice(src, src)
        gold = [EditAnnotation(0, 1, "x"), EditAnnotation(2, 3, "y")]
        result = max_match(lattice, gold)
        assert (result.tp, result.fp, result.fn) == (0, 0, 2)

    def test_whitespace_normalization_in_matching(self):
        lattice = extract_edit_lattice(sent("He go to school"), sent("He goes to the school"))
        gold = [EditAnnotation(1, 3, "goes  to  the ")]  # extra internal/trailing spaces
        result = max_match(lattice, gold)
        assert result.tp == 1 and result.fn == 0

    def test_prefers_merge_matching_gold(self):
        # Without the gold-guided merge, the path would carry two separate
        # edits; the merged arc matches gold exactly.
        lattice = extract_edit_lattice(sent("He go to school"), sent("He goes to the school"))
        gold = [EditAnnotation(1, 3, "goes to the")]
        result = max_match(lattice, gold)
        assert (result.tp, result.fp, result.fn) == (1, 0, 0)

    def test_tie_prefers_fewer_edits(self):
        # zero matches everywhere, so the tie-break picks the fewest system
        # edits: the single merged arc beats the two-edit base path
        lattice = extract_edit_lattice(sent("He go to school"), sent("He goes to the school"))
        result = max_match(lattice, [])
        assert result.tp == 0 and result.fp == 1
        assert result.edits == [SystemEdit(1, 3, "goes to the")]

    def test_tp_plus_fn_equals_gold_size(self):
        lattice = extract_edit_lattice(sent("a b c d"), sent("a x c y"))
        gold = [EditAnnotation(1, 2, "x"), EditAnnotation(3, 4, "z")]
        result = max_match(lattice, gold)
        assert result.tp + result.fn == len(gold)


def _random_case(rng):
    alphabet = ["a", "b", "c", "d", "e"]
    n = rng.randint(1, 8)
    src = [rng.choice(alphabet) for _ in range(n)]
    source = Sentence(tuple(src))

    # random non-overlapping gold edits
    gold = []
    cursor = 0
    while cursor < len(src) and len(gold) < 3:
        start = rng.randint(cursor, len(src))
        if start > len(src) - 1 and rng.random() < 0.5:
            break
        end = min(len(src), start + rng.randint(0, 2))
        repl = " ".join(rng.choice(alphabet) for _ in range(rng.randint(0, 2)))
        if start == end and not repl:
            cursor = start + 1
            continue
        try:
            gold.append(EditAnnotation(start, end, repl))
        except Exception:
            pass
        cursor = max(end, start + 1)

    # hypothesis: apply a subset of gold plus occasional extra noise
    applied = [g for g in gold if rng.random() < 0.6]
    try:
        hyp = apply_edits(source, applied)
    except Exception:
        hyp = source
    if rng.random() < 0.4 and len(hyp) > 1:
        toks = list(hyp.tokens)
        pos = rng.randrange(len(toks))
        toks[pos] = rng.choice(alphabet)
        hyp = Sentence(tuple(toks))
    return source, hyp, gold


class TestOracleEquivalence:
    def test_dp_equals_path_enumeration_on_random_cases(self):
        rng = random.Random(20240817)
        checked = 0
        while checked < 120:
            source, hyp, gold = _random_case(rng)
            lattice = extract_edit_lattice(source, hyp)
            result = max_match(lattice, gold)
            expected = oracle_counts(lattice, gold)
            assert (result.tp, result.fp, result.fn) == expected, (
                source.text(),
                hyp.text(),
                [(g.start, g.end, g.replacement) for g in gold],
            )
            checked += 1

    def test_dp_equals_oracle_with_merge_window_variants(self):
        rng = random.Random(7)
        for _ in range(40):
            source, hyp, gold = _random_case(rng)
            for window in (0, 1, 3):
                lattice = extract_edit_lattice(source, hyp, merge_window=window)
                result = max_match(lattice, gold)
                assert (result.tp, result.fp, result.fn) == oracle_counts(lattice, gold)


def asent(src_text, *edits, annotators=None):
    by_annotator = {}
    for e in edits:
        by_annotator.setdefault(e.annotator_id, []).append(e)
    if annotators:
        for a in annotators:
            by_annotator.setdefault(a, [])
    return AnnotatedSentence(sent(src_text), by_annotator)


class TestScoreCorpus:
    def test_all_corrections_applied_scores_one(self):
        gold = [
            asent("He go to school", EditAnnotation(1, 2, "goes")),
            asent("the cat sat on mat", EditAnnotation(4, 4, "the")),
        ]
        hyps = [apply_edits(g.source, g.edits[0]) for g in gold]
        report = score_corpus(hyps, gold)
        assert report.f_half == 1.0
        assert (report.tp, report.fp, report.fn) == (2, 0, 0)

    def test_no_corrections_scores_zero(self):
        gold = [
            asent("He go to school", EditAnnotation(1, 2, "goes")),
            asent("a b c", EditAnnotation(0, 1, "x")),
        ]
        report = score_corpus([g.source for g in gold], gold)
        assert (report.tp, report.fp) == (0, 0)
        assert report.precision == 1.0  # 0/0 convention
        assert report.recall == 0.0
        assert report.f_half == 0.0

    def test_better_annotator_chosen_per_sentence(self):
        e0 = EditAnnotation(1, 2, "x", "Wci", 0)
        e1 = EditAnnotation(1, 2, "goes", "SVA", 1)
        gold = [asent("He go to school", e0, e1)]
        hyp = [sent("He goes to school")]
        report = score_corpus(hyp, gold)
        assert report.sentences[0].annotator == 1
        assert report.f_half == 1.0

    def test_annotator_tie_prefers_lower_id(self):
        e0 = EditAnnotation(1, 2, "x", "Wci", 0)
        e1 = EditAnnotation(1, 2, "y", "Wci", 1)
        gold = [asent("a b c", e0, e1)]
        report = score_corpus([sent("a b c")], gold)
        assert report.sentences[0].annotator == 0

    def test_identity_with_no_gold_edits_does_not_move_score(self):
        gold = [asent("He go to school", EditAnnotation(1, 2, "goes"))]
        hyps = [sent("He goes to school")]
        base = score_corpus(hyps, gold)
        gold_plus = gold + [asent("all fine here")]
        hyps_plus = hyps + [sent("all fine here")]
        extended = score_corpus(hyps_plus, gold_plus)
        assert (extended.tp, extended.fp, extended.fn) == (base.tp, base.fp, base.fn)
        assert extended.f_half == base.f_half

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            score_corpus([sent("a")], [])

    def test_macro_in_report_and_json_shape(self):
        gold = [
            asent("He go to school", EditAnnotation(1, 2, "goes")),
            asent("a b", EditAnnotation(0, 1, "x")),
        ]
        hyps = [sent("He goes to school"), sent("a b")]
        report = score_corpus(hyps, gold)
        payload = report.to_json_dict()
        assert payload["f_half"] == report.f_half
        assert len(payload["sentences"]) == 2
        assert report.macro_f_half == pytest.approx((1.0 + 0.0) / 2)
        assert "F0.5" in report.format_table()


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_max_match_invariants_property(data):
    rng = random.Random(data.draw(st.integers(0, 10_000)))
    source, hyp, gold = _random_case(rng)
    lattice = extract_edit_lattice(source, hyp)
    result = max_match(lattice, gold)
    assert result.tp + result.fn == len(gold)
    assert result.tp <= len(result.edits)
    assert result.fp == len(result.edits) - result.tp
    # chosen edits must realize the hypothesis (stable order handles
    # repeated insertions at one point, which gold edits never have)
    toks = list(source.tokens)
    for e in reversed(sorted(result.edits, key=lambda e: (e.start, e.end))):
        toks[e.start : e.end] = e.replacement.split()
    assert tuple(toks) == hyp.tokens
