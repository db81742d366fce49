import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kwmatch.errors import ConfigError, EmptyCorpus, EmptyQuestion
from kwmatch.text import (
    POS_TAGS,
    build_corpus_stats,
    idf_bucket,
    keyword_candidates,
    load_presegmented,
    pos_lexicon,
    segment,
    tag_pos,
)

words = st.text(alphabet="abcdefgh", min_size=1, max_size=6)


def test_segment_worked_example():
    assert segment("How to keep the mobile phone cool") == ["how", "to", "keep", "the", "mobile", "phone", "cool"]


def test_segment_single_token_and_normalization():
    assert segment("cool") == ["cool"]
    assert segment("  Why   IS\tit  ") == ["why", "is", "it"]


@pytest.mark.parametrize("mode", ["whitespace", "character-bigram", "external-list"])
def test_blank_question_rejected(mode):
    with pytest.raises(EmptyQuestion):
        segment("   ", mode)


def test_unknown_mode():
    with pytest.raises(ConfigError):
        segment("a b", "morphemes")


def test_character_bigrams():
    assert segment("手机 发热", "character-bigram") == ["手机", "发热"]
    assert segment("abc d", "character-bigram") == ["ab", "bc", "d"]


def test_presegmented_file(tmp_path):
    path = tmp_path / "seg.txt"
    path.write_text("手机 发热 怎么办\n\nhow to\n", encoding="utf-8")
    assert load_presegmented(path) == [["手机", "发热", "怎么办"], ["how", "to"]]


@given(st.lists(words, min_size=1, max_size=8))
def test_segmentation_idempotent(tokens):
    text = "  ".join(tokens)
    once = segment(text)
    assert segment(" ".join(once)) == once


def test_pos_lexicon_lookups():
    lex = pos_lexicon()
    # the expected tags are read back from the shipped lexicon file
    assert lex["how"] == "WH" and lex["the"] == "DET"
    assert tag_pos(["how"]) == ["WH"]
    assert tag_pos(["the"]) == ["DET"]
    assert tag_pos(["zzxqv"]) == ["OTHER"]


def test_pos_tags_closed_set():
    tags = tag_pos(["quickly", "42", "overheating", "happiness", "phone", "we"])
    assert all(t in POS_TAGS for t in tags)
    assert tags[0] == "ADV" and tags[1] == "NUM"
    assert set(pos_lexicon().values()) <= set(POS_TAGS)
    assert len(pos_lexicon()) >= 500


def test_idf_formula():
    stats = build_corpus_stats(["the cat", "the dog", "the cow eats"])
    assert stats.idf("the") == pytest.approx(math.log(4 / 4) + 1)
    assert stats.idf("cat") == pytest.approx(math.log(4 / 2) + 1)
    assert stats.idf("cat") == pytest.approx(1.6931, abs=1e-4)
    assert stats.idf("unseen") == pytest.approx(math.log(4 / 1) + 1)
    assert stats.idf_min == pytest.approx(1.0)
    assert stats.idf_max == pytest.approx(math.log(2) + 1)


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        build_corpus_stats([])


def test_bucket_boundaries():
    stats = build_corpus_stats(["the cat", "the dog", "the cow eats"], bucket_count=10)
    assert idf_bucket("the", stats) == 0
    assert idf_bucket("cat", stats) == 9
    assert idf_bucket("never-seen", stats) == 9  # above idf_max, clamped


def test_bucket_degenerate_width():
    stats = build_corpus_stats(["a b", "a b"], bucket_count=100)
    assert stats.idf_min == stats.idf_max
    assert idf_bucket("a", stats) == 0 and idf_bucket("zzz", stats) == 0


@given(st.lists(st.lists(words, min_size=1, max_size=5), min_size=1, max_size=12))
def test_doc_freq_bounded_and_buckets_monotone(corpus):
    stats = build_corpus_stats(corpus, bucket_count=7)
    assert all(0 < df <= stats.document_count for df in stats.doc_freq.values())
    toks = sorted(stats.doc_freq, key=stats.idf)
    buckets = [idf_bucket(t, stats) for t in toks]
    assert buckets == sorted(buckets)
    assert all(0 <= b < 7 for b in buckets)


def test_stopwords_flagged_not_removed(tmp_path):
    sw = tmp_path / "stop.txt"
    sw.write_text("# comment\nthe\nto\n", encoding="utf-8")
    stats = build_corpus_stats(["how to keep the phone cool"], stopwords=sw)
    cands = keyword_candidates(segment("how to keep the phone cool"), stats)
    assert [c.surface for c in cands] == ["how", "to", "keep", "the", "phone", "cool"]
    assert [c.is_stopword for c in cands] == [False, True, False, True, False, False]
    assert [c.position for c in cands] == list(range(6))


def test_default_stopwords_include_function_words():
    stats = build_corpus_stats(["how to keep the phone cool"])
    assert stats.is_stopword("the") and not stats.is_stopword("phone")
