from collections import Counter

from gecforge.confusion import Category
from gecforge.corpus import apply_edits, parse_m2_file, read_parallel_tsv
from gecforge.microlang import (
    MONO_TEMPLATES,
    TEMPLATES,
    emit_micro_corpus,
    generate_clean_sentences,
    generate_real_pairs,
)


class TestGenerateClean:
    def test_deterministic(self):
        assert generate_clean_sentences(20, 3) == generate_clean_sentences(20, 3)

    def test_seed_changes_output(self):
        assert generate_clean_sentences(20, 3) != generate_clean_sentences(20, 4)

    def test_sentences_end_with_period(self):
        for s in generate_clean_sentences(50, 1):
            assert s.tokens[-1] == "."
            assert len(s) >= 4

    def test_template_restriction(self):
        lengths = {len(t) for i, t in enumerate(TEMPLATES) if i in MONO_TEMPLATES}
        for s in generate_clean_sentences(100, 2, MONO_TEMPLATES):
            assert len(s) in lengths

    def test_full_templates_cover_more_shapes(self):
        full = {len(s) for s in generate_clean_sentences(300, 5)}
        mono = {len(s) for s in generate_clean_sentences(300, 5, MONO_TEMPLATES)}
        assert mono < full


class TestGenerateRealPairs:
    def test_exact_count_and_single_edit(self):
        corpus = generate_real_pairs(40, 7)
        assert len(corpus.pairs) == len(corpus.annotated) == 40
        for pair, asent in zip(corpus.pairs, corpus.annotated):
            assert pair.source == asent.source
            (edit,) = asent.edits[0]
            assert apply_edits(pair.source, [edit]) == pair.target
            assert pair.source != pair.target

    def test_error_categories_all_appear(self):
        corpus = generate_real_pairs(300, 11)
        kinds = Counter(asent.edits[0][0].error_type for asent in corpus.annotated)
        assert set(kinds) == {
            Category.PREPOSITION.value,
            Category.DETERMINER.value,
            Category.MORPHOLOGY.value,
        }

    def test_deterministic(self):
        a = generate_real_pairs(25, 5)
        b = generate_real_pairs(25, 5)
        assert a.pairs == b.pairs


class TestEmitMicroCorpus:
    def test_files_round_trip(self, tmp_path):
        paths = emit_micro_corpus(tmp_path, n_train=30, n_test=10, n_mono=40, seed=1)
        base = read_parallel_tsv(paths["base"])
        test = parse_m2_file(paths["test"])
        mono = paths["mono"].read_text().strip().splitlines()
        assert len(base) == 30
        assert len(test) == 10
        assert len(mono) == 40
        for asent in test:
            (edit,) = asent.edits[0]
            apply_edits(asent.source, [edit])  # offsets valid

    def test_emit_deterministic(self, tmp_path):
        p1 = emit_micro_corpus(tmp_path / "a", n_train=15, n_test=5, n_mono=20, seed=9)
        p2 = emit_micro_corpus(tmp_path / "b", n_train=15, n_test=5, n_mono=20, seed=9)
        for key in p1:
            assert p1[key].read_bytes() == p2[key].read_bytes()
