"""Question-pair TSV files and the seeded synthetic pair generator."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParseError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuestionPairRecord:
    q: str
    d: str
    y: int


class Dataset(list):
    """List of records; ``skipped`` counts lines dropped for a blank question."""

    def __init__(self, records=(), skipped: int = 0):
        super().__init__(records)
        self.skipped = skipped


def parse_tsv_line(line: str, lineno: int, path=None) -> QuestionPairRecord | None:
    parts = line.rstrip("\r\n").split("\t")
    if len(parts) != 3:
        raise ParseError(f"expected 3 tab-separated fields, got {len(parts)}", line=lineno, path=path)
    q, d, raw = parts
    try:
        y = int(raw.strip())
    except ValueError:
        raise ParseError(f"label {raw!r} is not an integer", line=lineno, path=path) from None
    if y not in (0, 1):
        raise ParseError(f"label must be 0 or 1, got {y}", line=lineno, path=path)
    if not q.strip() or not d.strip():
        return None
    return QuestionPairRecord(q, d, y)


def load_tsv(path) -> Dataset:
    """Read ``q<TAB>d<TAB>y`` lines; empty lines are ignored."""
    records = []
    skipped = 0
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip("\r\n"):
                continue
            rec = parse_tsv_line(line, lineno, path)
            if rec is None:
                skipped += 1
            else:
                records.append(rec)
    if skipped:
        log.warning("%s: skipped %d pairs with a blank question", path, skipped)
    return Dataset(records, skipped)


def save_tsv(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            if "\t" in r.q or "\t" in r.d or "\n" in r.q or "\n" in r.d:
                raise ConfigError("question text cannot contain tabs or newlines")
            fh.write(f"{r.q}\t{r.d}\t{int(r.y)}\n")


def load_candidates(path) -> list[str]:
    """One candidate question per non-empty line."""
    with open(path, encoding="utf-8", newline="") as fh:
        out = [line.rstrip("\r\n") for line in fh]
    return [c for c in out if c.strip()]


# synthetic data -----------------------------------------------------------

_ONSETS = "bdfgklmnprstvz"
_VOWELS = "aeiou"

FUNCTION_WORDS = (
    "how", "what", "why", "when", "where", "which", "who", "can", "do", "does",
    "is", "are", "was", "the", "a", "an", "to", "of", "in", "on",
    "for", "with", "my", "your", "i", "you", "it", "this", "that", "from",
    "at", "by", "about", "should", "would", "could", "will", "be", "get", "some",
    "any", "there", "their", "me", "we", "our", "has", "have", "did", "if",
)


def content_vocabulary(size: int) -> list[str]:
    """Deterministic three-syllable pseudo-words (independent of the data seed)."""
    syl = [c + v for c in _ONSETS for v in _VOWELS]
    order = np.random.default_rng(12345).permutation(len(syl) ** 3)
    out = []
    for code in order:
        a, rest = divmod(int(code), len(syl) ** 2)
        b, c = divmod(rest, len(syl))
        out.append(syl[a] + syl[b] + syl[c])
        if len(out) == size:
            break
    return out


@dataclass
class SyntheticConfig:
    n_pairs: int = 1000
    content_vocab: int = 200
    function_vocab: int = 50
    seed: int = 0
    hard_fraction: float = 0.3
    min_content: int = 2
    max_content: int = 5
    max_filler: int = 3

    def validate(self) -> None:
        if self.n_pairs < 2:
            raise ConfigError("n_pairs must be >= 2")
        if self.content_vocab < 4 or self.content_vocab % 2:
            raise ConfigError("content_vocab must be an even number >= 4")
        if not 1 <= self.function_vocab <= len(FUNCTION_WORDS):
            raise ConfigError(f"function_vocab must be in [1, {len(FUNCTION_WORDS)}]")
        if not 0.0 <= self.hard_fraction <= 1.0:
            raise ConfigError("hard_fraction must be in [0, 1]")
        if not 2 <= self.min_content <= self.max_content:
            raise ConfigError("need 2 <= min_content <= max_content")
        if 2 * self.max_content > self.content_vocab // 2:
            raise ConfigError("content vocabulary too small for disjoint negatives")
        if self.max_filler < 1:
            raise ConfigError("max_filler must be >= 1")


@dataclass
class SyntheticSet:
    records: Dataset
    kinds: list[str]  # regular | hard | negative
    synonyms: dict[str, str] = field(default_factory=dict)

    def alias_map(self) -> dict[str, str]:
        """Map each synonym to its partner so both sides share a hash vector."""
        return {b: a for a, b in self.synonyms.items()}


def gen_synthetic(config: SyntheticConfig | None = None, **overrides) -> SyntheticSet:
    """Balanced pairs over concept tokens that come in synonym pairs.

    Each concept has two surfaces. A regular positive repeats the query's
    surfaces (dropping at most one), a hard positive swaps every content
    token for its synonym and uses disjoint fillers, and a negative draws
    disjoint concepts.
    """
    cfg = config or SyntheticConfig()
    if overrides:
        cfg = SyntheticConfig(**{**cfg.__dict__, **overrides})
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    vocab = content_vocabulary(cfg.content_vocab)
    n_concepts = cfg.content_vocab // 2
    fillers = list(FUNCTION_WORDS[:cfg.function_vocab])
    synonyms = {vocab[c]: vocab[c + n_concepts] for c in range(n_concepts)}

    def surface(concept: int, side: int) -> str:
        return vocab[concept + side * n_concepts]

    def pick_fillers(exclude=()):
        pool = [i for i in range(len(fillers)) if i not in exclude]
        k = int(rng.integers(1, min(cfg.max_filler, len(pool)) + 1)) if pool else 0
        return [int(i) for i in rng.choice(pool, size=k, replace=False)] if k else []

    def text(tokens):
        tokens = list(tokens)
        return " ".join(tokens[i] for i in rng.permutation(len(tokens)))

    labels = np.zeros(cfg.n_pairs, dtype=np.int64)
    labels[: (cfg.n_pairs + 1) // 2] = 1
    labels = labels[rng.permutation(cfg.n_pairs)]
    records, kinds = [], []
    for y in labels:
        k = int(rng.integers(cfg.min_content, cfg.max_content + 1))
        concepts = [int(c) for c in rng.choice(n_concepts, size=k, replace=False)]
        sides = [int(s) for s in rng.integers(0, 2, size=k)]
        q_fill = pick_fillers()
        q = text([surface(c, s) for c, s in zip(concepts, sides)] + [fillers[i] for i in q_fill])
        if y == 1 and rng.random() < cfg.hard_fraction:
            kind = "hard"
            d_tokens = [surface(c, 1 - s) for c, s in zip(concepts, sides)]
            d_fill = pick_fillers(exclude=set(q_fill))
        elif y == 1:
            kind = "regular"
            keep = list(zip(concepts, sides))
            if k >= 3 and rng.random() < 0.3:
                keep.pop(int(rng.integers(0, k)))
            d_tokens = [surface(c, s) for c, s in keep]
            d_fill = q_fill if rng.random() < 0.5 else pick_fillers()
        else:
            kind = "negative"
            others = [c for c in range(n_concepts) if c not in set(concepts)]
            k2 = int(rng.integers(cfg.min_content, cfg.max_content + 1))
            picked = [others[int(i)] for i in rng.choice(len(others), size=k2, replace=False)]
            d_tokens = [surface(c, int(s)) for c, s in zip(picked, rng.integers(0, 2, size=k2))]
            d_fill = q_fill if rng.random() < 0.5 else pick_fillers()
        d = text(d_tokens + [fillers[i] for i in d_fill])
        records.append(QuestionPairRecord(q, d, int(y)))
        kinds.append(kind)
    return SyntheticSet(Dataset(records), kinds, synonyms)


def save_aliases(path, aliases: dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a, b in aliases.items():
            fh.write(f"{a}\t{b}\n")


def split(records, n_first: int) -> tuple[Dataset, Dataset]:
    return Dataset(records[:n_first]), Dataset(records[n_first:])
