"""Keyword importance network.

Three subnets score a keyword k inside question q:

* EmbNN reads the question vector, the keyword vector and their co-action
  ``coa(e1, e2) = relu([e1, e2, |e1 - e2|] @ W + b)``;
* EFNN reads learnable embeddings of the IDF bucket, POS tag and stopword
  flag;
* JINN joins both and ends in a sigmoid, so the score lies in (0, 1).

No keyword labels exist. The only training signal is the question-pair
loss, which reaches these weights through the matching unit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import ModelConfig
from .errors import ConfigError, EmptyQuestion, ShapeError
from .nn import autograd as ag
from .nn.autograd import Tensor
from .nn.layers import MlpSpec, init_mlp, mlp_forward
from .nn.params import ParameterStore
from .text import POS_INDEX, POS_TAGS, KeywordCandidate


@dataclass(frozen=True)
class ScoredKeyword:
    candidate: KeywordCandidate
    importance: float

    @property
    def surface(self) -> str:
        return self.candidate.surface


def _relu_stack(widths) -> tuple[str, ...]:
    return ("relu",) * len(widths)


def coa(e1, e2, params, train_mode: bool = False, rng=None, dropout: float = 0.0) -> Tensor:
    """Co-action features: relu([e1, e2, |e1 - e2|] @ W + b)."""
    e1 = ag.as_tensor(e1)
    e2 = ag.as_tensor(e2, e1)
    if e1.shape[-1] != e2.shape[-1]:
        raise ShapeError(f"coa inputs differ in width: {e1.shape[-1]} vs {e2.shape[-1]}")
    W, b = params
    x = ag.concat([e1, e2, ag.tabs(e1 - e2)], axis=-1)
    if x.shape[-1] != W.shape[0]:
        raise ShapeError(f"coa weight expects input width {W.shape[0]}, got {x.shape[-1]}")
    x = ag.dropout(x, dropout, rng, train_mode)
    return ag.relu(x @ W + b)


class ImportanceNet:
    """Parameters and forward pass of the importance network."""

    def __init__(self, config: ModelConfig, store: ParameterStore, prefix: str = "importance"):
        self.config = config
        self.use_dsr = not config.no_dsr
        self.use_ef = not config.no_ef
        p = config.dropout
        d = config.embedding_dim
        join = 0
        if self.use_dsr:
            self.coa_params = (
                store.xavier(f"{prefix}.coa.W", 3 * d, config.coa_dim),
                store.zeros(f"{prefix}.coa.b", (config.coa_dim,)),
            )
            self.embnn_spec = MlpSpec(tuple(config.embnn_widths), _relu_stack(config.embnn_widths), p)
            self.embnn_params = init_mlp(store, f"{prefix}.embnn", 2 * d + config.coa_dim, self.embnn_spec)
            join += config.embnn_widths[-1]
        if self.use_ef:
            self.idf_table = store.normal(f"{prefix}.eidf", (config.bucket_count, config.idf_embedding_dim))
            self.pos_table = store.normal(f"{prefix}.epos", (len(POS_TAGS), config.pos_embedding_dim))
            self.sw_table = store.normal(f"{prefix}.esw", (2, config.stopword_embedding_dim))
            self.efnn_spec = MlpSpec(tuple(config.efnn_widths), _relu_stack(config.efnn_widths), p)
            feat = config.idf_embedding_dim + config.pos_embedding_dim + config.stopword_embedding_dim
            self.efnn_params = init_mlp(store, f"{prefix}.efnn", feat, self.efnn_spec)
            join += config.efnn_widths[-1]
        widths = tuple(config.jinn_widths)
        self.jinn_spec = MlpSpec(widths, ("relu",) * (len(widths) - 1) + ("sigmoid",), p)
        self.jinn_params = init_mlp(store, f"{prefix}.jinn", join, self.jinn_spec)

    def embnn(self, e_cls, e_k, train_mode=False, rng=None) -> Tensor:
        c = coa(e_cls, e_k, self.coa_params, train_mode, rng, self.config.dropout)
        x = ag.concat([ag.as_tensor(e_cls), ag.as_tensor(e_k), c], axis=-1)
        return mlp_forward(self.embnn_spec, self.embnn_params, x, train_mode, rng)

    def efnn(self, buckets, pos_ids, stop_flags, train_mode=False, rng=None) -> Tensor:
        buckets = np.asarray(buckets)
        pos_ids = np.asarray(pos_ids)
        stop_flags = np.asarray(stop_flags)
        if buckets.size and (buckets.min() < 0 or buckets.max() >= self.idf_table.shape[0]):
            raise ConfigError("IDF bucket outside the embedding table")
        if pos_ids.size and (pos_ids.min() < 0 or pos_ids.max() >= self.pos_table.shape[0]):
            raise ConfigError("POS id outside the embedding table")
        if stop_flags.size and (stop_flags.min() < 0 or stop_flags.max() > 1):
            raise ConfigError("stopword flag must be 0 or 1")
        x = ag.concat([
            ag.take(self.idf_table, buckets),
            ag.take(self.pos_table, pos_ids),
            ag.take(self.sw_table, stop_flags),
        ], axis=-1)
        return mlp_forward(self.efnn_spec, self.efnn_params, x, train_mode, rng)

    def forward(self, e_cls, e_k, buckets, pos_ids, stop_flags, train_mode=False, rng=None) -> Tensor:
        """Importance for a batch of keywords; ``e_cls`` holds each keyword's question vector."""
        parts = []
        if self.use_dsr:
            parts.append(self.embnn(e_cls, e_k, train_mode, rng))
        if self.use_ef:
            parts.append(self.efnn(buckets, pos_ids, stop_flags, train_mode, rng))
        out = mlp_forward(self.jinn_spec, self.jinn_params, ag.concat(parts, axis=-1), train_mode, rng)
        return out.reshape(out.shape[:-1])


def candidate_features(candidates: Sequence[KeywordCandidate]):
    buckets = np.array([c.idf_bucket for c in candidates], dtype=np.intp)
    pos = np.array([POS_INDEX[c.pos_tag] for c in candidates], dtype=np.intp)
    stop = np.array([int(c.is_stopword) for c in candidates], dtype=np.intp)
    return buckets, pos, stop


def tfidf_importance(tokens: Sequence[str], stats) -> np.ndarray:
    """tf * idf scaled by the question maximum, so values lie in (0, 1]."""
    counts: dict[str, int] = {}
    for t in tokens:
        counts[t] = counts.get(t, 0) + 1
    raw = np.array([counts[t] * stats.idf(t) for t in tokens], dtype=np.float64)
    top = raw.max()
    return np.clip(raw / top, np.finfo(np.float64).tiny, 1.0) if top > 0 else np.ones(len(tokens))


def embnn(e_cls, e_k, net: ImportanceNet) -> Tensor:
    return net.embnn(e_cls, e_k)


def efnn(candidate: KeywordCandidate, net: ImportanceNet) -> Tensor:
    b, p, s = candidate_features([candidate])
    return net.efnn(b, p, s).reshape(-1)


def _question_vector(provider, tokens):
    return provider.project(provider.keyword_matrix(tokens).mean(axis=0, keepdims=True))


def importance(keyword: KeywordCandidate, question_tokens: Sequence[str], provider, net: ImportanceNet) -> float:
    """Importance of one candidate within its question (inference mode)."""
    with ag.no_grad():
        e_cls = _question_vector(provider, question_tokens)
        e_k = provider.keyword_matrix([keyword.surface])
        b, p, s = candidate_features([keyword])
        return float(net.forward(e_cls, e_k, b, p, s).data[0])


def score_question(question_tokens: Sequence[str], provider, stats, net: ImportanceNet | None,
                   mode: str = "learned") -> list[ScoredKeyword]:
    """Score every candidate of a question, keeping the original order.

    ``mode`` is ``learned`` (use ``net``), ``one`` (every keyword gets 1.0) or
    ``tfidf``.
    """
    from .text import keyword_candidates

    if not question_tokens:
        raise EmptyQuestion("question has no keyword candidates")
    cands = keyword_candidates(question_tokens, stats)
    if mode == "one":
        values = np.ones(len(cands))
    elif mode == "tfidf":
        values = tfidf_importance(question_tokens, stats)
    else:
        with ag.no_grad():
            e_k = provider.keyword_matrix(question_tokens)
            e_cls = provider.project(e_k.mean(axis=0, keepdims=True))
            e_cls = ag.take(e_cls, np.zeros(len(cands), dtype=np.intp))
            values = net.forward(e_cls, e_k, *candidate_features(cands)).data
    return [ScoredKeyword(c, float(v)) for c, v in zip(cands, values)]
