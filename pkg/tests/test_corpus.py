import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gecforge.corpus import (
    AnnotatedSentence,
    CorpusError,
    DatasetMix,
    EditAnnotation,
    M2ParseError,
    ParallelPair,
    Provenance,
    Sentence,
    apply_edits,
    filter_error_free,
    mix_datasets,
    pairs_from_annotated,
    parse_m2,
    read_parallel_tsv,
    serialize_m2,
    tokenize,
    write_parallel_tsv,
)


def sent(text):
    return Sentence.from_text(text)


def pair(src, tgt, prov=Provenance.REAL):
    return ParallelPair(sent(src), sent(tgt), prov)


class TestSentence:
    def test_join_retokenize_identity(self):
        s = sent("The cat sat on mat .")
        assert Sentence.from_text(s.text()) == s

    def test_rejects_empty(self):
        with pytest.raises(CorpusError):
            Sentence(())

    def test_rejects_whitespace_token(self):
        with pytest.raises(CorpusError):
            Sentence(("a b",))

    def test_tokenize_splits_punctuation(self):
        assert tokenize("The cat sat, then left.").tokens == (
            "The", "cat", "sat", ",", "then", "left", ".",
        )

    def test_tokenize_keeps_contractions(self):
        assert tokenize("don't stop").tokens == ("don't", "stop")


class TestEditAnnotation:
    def test_rejects_noop_insertion(self):
        with pytest.raises(CorpusError):
            EditAnnotation(2, 2, "")

    def test_rejects_inverted_span(self):
        with pytest.raises(CorpusError):
            EditAnnotation(3, 2, "x")

    def test_out_of_range_caught_by_annotated_sentence(self):
        with pytest.raises(CorpusError):
            AnnotatedSentence(sent("a b"), {0: [EditAnnotation(0, 5, "x")]})

    def test_overlap_rejected(self):
        edits = [EditAnnotation(0, 2, "x"), EditAnnotation(1, 3, "y")]
        with pytest.raises(CorpusError):
            AnnotatedSentence(sent("a b c d"), {0: edits})


class TestParseM2:
    def test_single_insertion(self):
        # Hand-applied M2 convention: "A 4 4" inserts before token 4.
        text = "S The cat sat on mat .\nA 4 4|||ArtOrDet|||the|||REQUIRED|||-NONE-|||0\n"
        parsed = parse_m2(text)
        assert len(parsed) == 1
        asent = parsed[0]
        assert asent.source == sent("The cat sat on mat .")
        assert asent.annotators() == [0]
        (edit,) = asent.edits[0]
        assert (edit.start, edit.end, edit.replacement) == (4, 4, "the")
        assert edit.error_type == "ArtOrDet"

    def test_no_edits(self):
        parsed = parse_m2("S A perfect sentence .\n")
        assert len(parsed) == 1
        assert parsed[0].edits == {}

    def test_two_blocks(self):
        text = "S a b .\n\nS c d .\n"
        parsed = parse_m2(text)
        assert len(parsed) == 2
        assert parsed[0].source == sent("a b .")
        assert parsed[1].source == sent("c d .")

    def test_noop_registers_annotator_with_no_edits(self):
        text = "S a b .\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||1\n"
        parsed = parse_m2(text)
        assert parsed[0].edits == {1: []}

    def test_multiple_annotators(self):
        text = (
            "S a b c\n"
            "A 0 1|||Wci|||x|||REQUIRED|||-NONE-|||0\n"
            "A 1 2|||Wci|||y|||REQUIRED|||-NONE-|||1\n"
        )
        parsed = parse_m2(text)
        assert parsed[0].annotators() == [0, 1]

    def test_malformed_line_reports_lineno(self):
        with pytest.raises(M2ParseError) as exc:
            parse_m2("S a b\nA 0 1|||broken\n")
        assert exc.value.lineno == 2

    def test_unknown_prefix_rejected(self):
        with pytest.raises(M2ParseError):
            parse_m2("S a b\nX nonsense\n")

    def test_out_of_range_offset_rejected(self):
        with pytest.raises(CorpusError):
            parse_m2("S a b\nA 0 9|||Wci|||x|||REQUIRED|||-NONE-|||0\n")

    def test_a_line_before_s_line_rejected(self):
        with pytest.raises(M2ParseError):
            parse_m2("A 0 1|||Wci|||x|||REQUIRED|||-NONE-|||0\n")

    def test_deletion_uses_none_placeholder(self):
        text = "S a b c\nA 1 2|||Prep||| -NONE-|||REQUIRED|||-NONE-|||0\n"
        # replacement field is " -NONE-" with a stray space: not the
        # placeholder, kept verbatim after strip by the edit itself
        parsed = parse_m2(text)
        assert parsed[0].edits[0][0].replacement == " -NONE-"

    def test_round_trip_canonical_text(self):
        text = (
            "S The cat sat on mat .\n"
            "A 4 4|||ArtOrDet|||the|||REQUIRED|||-NONE-|||0\n"
            "\n"
            "S A perfect sentence .\n"
            "\n"
            "S a b c\n"
            "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n"
            "A 0 1|||Wci|||x|||REQUIRED|||-NONE-|||1\n"
        )
        assert serialize_m2(parse_m2(text)) == text


# Strategy for random annotated sentences with valid, sorted,
# non-overlapping edits per annotator.
_tokens = st.text(alphabet="abcdefg", min_size=1, max_size=3)


@st.composite
def annotated_sentences(draw):
    toks = draw(st.lists(_tokens, min_size=1, max_size=8))
    source = Sentence(tuple(toks))
    edits_by_annotator = {}
    for annotator in range(draw(st.integers(0, 2))):
        n = draw(st.integers(0, 3))
        edits = []
        cursor = 0
        for _ in range(n):
            if cursor > len(toks):
                break
            start = draw(st.integers(cursor, len(toks)))
            end = draw(st.integers(start, len(toks)))
            repl_words = draw(st.lists(_tokens, min_size=0, max_size=2))
            if start == end and not repl_words:
                continue
            if edits and (edits[-1].start, edits[-1].end) == (start, end):
                continue
            edits.append(
                EditAnnotation(start, end, " ".join(repl_words), "Wci", annotator)
            )
            cursor = max(end, start + 1)
        edits_by_annotator[annotator] = edits
    return AnnotatedSentence(source, edits_by_annotator)


@given(st.lists(annotated_sentences(), min_size=0, max_size=5))
@settings(max_examples=150, deadline=None)
def test_m2_round_trip_property(asents):
    text = serialize_m2(asents)
    assert parse_m2(text) == asents
    assert serialize_m2(parse_m2(text)) == text


class TestApplyEdits:
    def test_insertion(self):
        s = sent("The cat sat on mat .")
        out = apply_edits(s, [EditAnnotation(4, 4, "the")])
        assert out == sent("The cat sat on the mat .")

    def test_empty_edit_list_is_identity(self):
        s = sent("a b c")
        assert apply_edits(s, []) == s

    def test_right_to_left_application(self):
        # Hand application: delete (2,3) first, then replace (1,2) with X.
        s = sent("a b c")
        edits = [EditAnnotation(1, 2, "X"), EditAnnotation(2, 3, "")]
        assert apply_edits(s, edits) == sent("a X")

    def test_multi_word_replacement(self):
        s = sent("a b")
        assert apply_edits(s, [EditAnnotation(1, 2, "x y z")]) == sent("a x y z")

    def test_overlap_rejected(self):
        s = sent("a b c d")
        with pytest.raises(CorpusError):
            apply_edits(s, [EditAnnotation(0, 2, "x"), EditAnnotation(1, 3, "y")])

    def test_order_independent_of_input_order(self):
        s = sent("a b c d e")
        edits = [EditAnnotation(3, 4, "Y"), EditAnnotation(0, 1, "X")]
        assert apply_edits(s, edits) == apply_edits(s, list(reversed(edits)))


@given(annotated_sentences())
@settings(max_examples=150, deadline=None)
def test_apply_edits_consistent_with_annotations(asent):
    # Net-effect property: re-deriving the correction from scratch on the
    # serialized form gives the same corrected sentence.
    for annotator in asent.annotators():
        edits = asent.edits[annotator]
        try:
            corrected = apply_edits(asent.source, edits)
        except CorpusError:
            continue  # edits that delete the entire sentence
        again = apply_edits(asent.source, list(reversed(edits)))
        assert corrected == again
        if not edits:
            assert corrected == asent.source


class TestPairsFromAnnotated:
    def test_uses_lowest_annotator(self):
        asent = AnnotatedSentence(
            sent("a b"),
            {
                1: [EditAnnotation(0, 1, "y", "Wci", 1)],
                0: [EditAnnotation(0, 1, "x", "Wci", 0)],
            },
        )
        (p,) = pairs_from_annotated([asent])
        assert p.target == sent("x b")
        assert p.source == sent("a b")

    def test_no_annotators_gives_identity_target(self):
        (p,) = pairs_from_annotated([AnnotatedSentence(sent("a b"), {})])
        assert p.source == p.target


class TestFilterErrorFree:
    def test_identity_pair_dropped(self):
        pairs = [pair("a b", "a b"), pair("a b", "a c")]
        assert filter_error_free(pairs) == [pair("a b", "a c")]

    def test_all_identical_gives_empty(self):
        assert filter_error_free([pair("a b", "a b")] * 3) == []

    def test_distinct_pairs_kept_in_order(self):
        pairs = [pair("a", "b"), pair("c", "d"), pair("e", "f")]
        assert filter_error_free(pairs) == pairs

    @given(
        st.lists(
            st.tuples(
                st.lists(_tokens, min_size=1, max_size=4),
                st.lists(_tokens, min_size=1, max_size=4),
            ),
            max_size=20,
        )
    )
    def test_never_keeps_identity(self, raw):
        pairs = [
            ParallelPair(Sentence(tuple(a)), Sentence(tuple(b))) for a, b in raw
        ]
        for p in filter_error_free(pairs):
            assert p.source.tokens != p.target.tokens


class TestMixDatasets:
    def _base(self, n):
        return [pair(f"b{i}", f"t{i}") for i in range(n)]

    def _pool(self, n):
        return [pair(f"p{i}", f"q{i}", Provenance.RULE) for i in range(n)]

    def test_sizes_and_determinism(self):
        mix = DatasetMix(self._base(100), self._pool(1000), k=50, seed=7)
        out1 = mix_datasets(mix)
        out2 = mix_datasets(mix)
        assert len(out1) == 150
        assert out1 == out2

    def test_k_zero_is_permutation_of_base(self):
        base = self._base(10)
        out = mix_datasets(DatasetMix(base, self._pool(5), k=0, seed=3))
        assert sorted(out, key=lambda p: p.source.text()) == base

    def test_artificial_only(self):
        pool = self._pool(1000)
        out = mix_datasets(DatasetMix([], pool, k=1000, seed=1))
        assert sorted(out, key=lambda p: int(p.source.text()[1:])) == pool

    def test_k_exceeding_pool_rejected(self):
        with pytest.raises(CorpusError):
            DatasetMix(self._base(1), self._pool(3), k=4, seed=0)

    def test_output_multiset(self):
        base, pool = self._base(20), self._pool(30)
        out = mix_datasets(DatasetMix(base, pool, k=10, seed=11))
        key = lambda p: (p.source.text(), p.target.text())
        assert len(out) == 30
        out_keys = sorted(key(p) for p in out)
        base_keys = {key(p) for p in base}
        sampled = [k for k in out_keys if k not in base_keys]
        assert sorted(key(p) for p in base) == [k for k in out_keys if k in base_keys]
        assert len(set(sampled)) == 10  # without replacement

    def test_different_seed_can_differ(self):
        base, pool = self._base(5), self._pool(50)
        outs = {
            tuple(p.source.text() for p in mix_datasets(DatasetMix(base, pool, 5, s)))
            for s in range(5)
        }
        assert len(outs) > 1


class TestParallelTsv:
    def test_round_trip(self, tmp_path):
        pairs = [
            pair("a b", "a c"),
            pair("x y .", "x z .", Provenance.NEURAL),
            pair("q", "r", Provenance.RULE),
        ]
        path = tmp_path / "pairs.tsv"
        write_parallel_tsv(pairs, path)
        assert read_parallel_tsv(path) == pairs
        raw = path.read_bytes()
        assert raw.endswith(b"\n") and b"\r" not in raw

    def test_bad_provenance_rejected(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("a\tb\tmystery\n")
        with pytest.raises(CorpusError):
            read_parallel_tsv(path)

    def test_bad_field_count_rejected(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("a\tb\n")
        with pytest.raises(CorpusError):
            read_parallel_tsv(path)
