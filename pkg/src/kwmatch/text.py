"""Question segmentation, coarse POS tagging and corpus IDF statistics.

Keyword candidates are the segments of a question. Each one carries three
lexical features that the importance network embeds: a coarse POS label, a
stopword flag and the index of its IDF bucket.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, EmptyCorpus, EmptyQuestion

POS_TAGS = ("NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM", "WH", "OTHER")
POS_INDEX = {tag: i for i, tag in enumerate(POS_TAGS)}

SEGMENT_MODES = ("whitespace", "character-bigram", "external-list")

_WS = re.compile(r"\s+")
_NUMBER = re.compile(r"^[+-]?\d+([.,]\d+)*(st|nd|rd|th|%)?$")
# ordered: first matching suffix wins; min stem length guards short words
_SUFFIXES = (
    ("ly", "ADV", 3),
    ("tion", "NOUN", 3),
    ("sion", "NOUN", 3),
    ("ment", "NOUN", 3),
    ("ness", "NOUN", 3),
    ("ity", "NOUN", 3),
    ("ship", "NOUN", 3),
    ("ance", "NOUN", 3),
    ("ence", "NOUN", 3),
    ("er", "NOUN", 4),
    ("ist", "NOUN", 3),
    ("ing", "VERB", 3),
    ("ed", "VERB", 3),
    ("ize", "VERB", 3),
    ("ise", "VERB", 4),
    ("ify", "VERB", 3),
    ("ous", "ADJ", 3),
    ("ful", "ADJ", 3),
    ("less", "ADJ", 3),
    ("able", "ADJ", 3),
    ("ible", "ADJ", 3),
    ("ive", "ADJ", 3),
    ("al", "ADJ", 4),
    ("ic", "ADJ", 3),
)


def normalize(text: str) -> str:
    return _WS.sub(" ", text.strip().lower())


def segment(text: str, mode: str = "whitespace") -> list[str]:
    """Split a question into keyword-candidate surfaces.

    ``whitespace`` splits normalized text on spaces. ``character-bigram``
    is the fallback for unsegmented scripts: overlapping character bigrams
    of each space-free run (a one-character run yields itself).
    ``external-list`` takes text that was segmented upstream, tokens joined
    by single spaces.
    """
    if mode not in SEGMENT_MODES:
        raise ConfigError(f"unknown segmentation mode {mode!r}")
    norm = normalize(text)
    if not norm:
        raise EmptyQuestion("question is blank")
    if mode == "character-bigram":
        out = []
        for run in norm.split(" "):
            if len(run) == 1:
                out.append(run)
            else:
                out.extend(run[i:i + 2] for i in range(len(run) - 1))
        return out
    if mode == "external-list":
        return [tok for tok in text.strip().lower().split(" ") if tok.strip()]
    return norm.split(" ")


def load_presegmented(path) -> list[list[str]]:
    """Read a pre-segmented file: one question per line, tokens split by single spaces."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\r\n")
            if line.strip():
                out.append(segment(line, "external-list"))
    return out


def load_wordlist(path) -> set[str]:
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip().lower()
            if line:
                words.add(line)
    return words


def _data_path(name: str) -> Path:
    return Path(str(resources.files("kwmatch") / "data" / name))


_DEFAULT_STOPWORDS: frozenset[str] | None = None
_POS_LEXICON: dict[str, str] | None = None


def default_stopwords() -> frozenset[str]:
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        _DEFAULT_STOPWORDS = frozenset(load_wordlist(_data_path("stopwords_en.txt")))
    return _DEFAULT_STOPWORDS


def pos_lexicon() -> dict[str, str]:
    global _POS_LEXICON
    if _POS_LEXICON is None:
        lex = {}
        with open(_data_path("pos_lexicon.txt"), encoding="utf-8") as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                tok, tag = line.split("\t")
                lex[tok] = tag
        _POS_LEXICON = lex
    return _POS_LEXICON


def _tag_one(token: str, lex: dict[str, str]) -> str:
    tag = lex.get(token)
    if tag is not None:
        return tag
    if _NUMBER.match(token):
        return "NUM"
    for suffix, t, min_stem in _SUFFIXES:
        if token.endswith(suffix) and len(token) - len(suffix) >= min_stem:
            return t
    return "OTHER"


def tag_pos(tokens: Sequence[str]) -> list[str]:
    """Coarse POS labels from the shipped lexicon, then suffix rules, else OTHER."""
    lex = pos_lexicon()
    return [_tag_one(t, lex) for t in tokens]


@dataclass(frozen=True)
class KeywordCandidate:
    surface: str
    position: int
    pos_tag: str
    is_stopword: bool
    idf_bucket: int


@dataclass(frozen=True)
class CorpusStats:
    """Document frequencies over a question corpus (immutable once built).

    ``avg_length`` is the mean keyword count per question; BM25 uses it as
    the average document length.
    """

    document_count: int
    doc_freq: dict[str, int]
    idf_min: float
    idf_max: float
    bucket_count: int = 100
    stopword_lexicon: frozenset[str] = field(default_factory=frozenset)
    avg_length: float = 1.0

    def idf(self, token: str) -> float:
        df = self.doc_freq.get(token, 0)
        return math.log((self.document_count + 1) / (df + 1)) + 1.0

    def is_stopword(self, token: str) -> bool:
        return token in self.stopword_lexicon


def build_corpus_stats(
    corpus: Iterable[str | Sequence[str]],
    bucket_count: int = 100,
    stopwords: Iterable[str] | str | Path | None = None,
    mode: str = "whitespace",
) -> CorpusStats:
    """Count document frequencies; questions may be raw strings or token lists.

    ``stopwords`` is a path to a wordlist, an iterable of words, or None for
    the shipped English list.
    """
    if bucket_count < 1:
        raise ConfigError("bucket_count must be >= 1")
    n = 0
    total_len = 0
    df: dict[str, int] = {}
    for question in corpus:
        tokens = segment(question, mode) if isinstance(question, str) else list(question)
        n += 1
        total_len += len(tokens)
        for tok in set(tokens):
            df[tok] = df.get(tok, 0) + 1
    if n == 0:
        raise EmptyCorpus("corpus contains no questions")
    if stopwords is None:
        lexicon = default_stopwords()
    elif isinstance(stopwords, (str, Path)):
        lexicon = frozenset(load_wordlist(stopwords))
    else:
        lexicon = frozenset(stopwords)
    idfs = [math.log((n + 1) / (c + 1)) + 1.0 for c in df.values()]
    return CorpusStats(
        document_count=n,
        doc_freq=df,
        idf_min=min(idfs) if idfs else 1.0,
        idf_max=max(idfs) if idfs else 1.0,
        bucket_count=bucket_count,
        stopword_lexicon=lexicon,
        avg_length=total_len / n,
    )


def idf_bucket(token: str, stats: CorpusStats) -> int:
    k = stats.bucket_count
    width = stats.idf_max - stats.idf_min
    if width <= 0:
        return 0
    b = math.floor(k * (stats.idf(token) - stats.idf_min) / width)
    return min(max(b, 0), k - 1)


def keyword_candidates(tokens: Sequence[str], stats: CorpusStats) -> list[KeywordCandidate]:
    if not tokens:
        raise EmptyQuestion("question has no tokens")
    tags = tag_pos(tokens)
    return [
        KeywordCandidate(tok, i, tags[i], stats.is_stopword(tok), idf_bucket(tok, stats))
        for i, tok in enumerate(tokens)
    ]
