"""Shared fixtures for the test suite: toy configs and the worked example."""

from __future__ import annotations

import numpy as np

from kwmatch.config import ModelConfig
from kwmatch.data import QuestionPairRecord
from kwmatch.embeddings import TrainableEmbeddings
from kwmatch.matching import FRMModel
from kwmatch.text import build_corpus_stats, segment

Q = "how to keep the mobile phone cool"
D1 = "stop my iphone from overheating"
D2 = "how to keep the mobile phone fast"
Q_IMPORTANCE = [0.3, 0.1, 0.5, 0.05, 0.4, 0.85, 0.8]
D1_IMPORTANCE = [0.3, 0.1, 0.85, 0.05, 0.8]

CORPUS = [Q, D1, D2, "why does my phone get hot", "what is the capital of france", "capital city of france"]

# results of acceptance criteria, printed again in the terminal summary
ACCEPTANCE_RESULTS: list[str] = []


def toy_config(**overrides) -> ModelConfig:
    """float64 model with embedding width 8 and every layer width <= 16."""
    base = dict(
        embedding_dim=8, idf_embedding_dim=4, pos_embedding_dim=4, stopword_embedding_dim=2,
        embnn_widths=(8, 8), efnn_widths=(8, 8), jinn_widths=(8, 1), mlp_view_width=8,
        att_heads=2, ffn_width=16, max_seq=16, top_widths=(16, 8), dropout=0.0,
        dtype="float64", bucket_count=10,
    )
    base.update(overrides)
    return ModelConfig(**base)


def toy_model(config: ModelConfig | None = None, corpus=CORPUS, seed: int = 42) -> FRMModel:
    config = config or toy_config()
    stats = build_corpus_stats(corpus, bucket_count=config.bucket_count)
    vocab = [t for q in corpus for t in segment(q)]
    provider = TrainableEmbeddings(vocab, config.embedding_dim, seed=seed, dtype=np.dtype(config.dtype))
    return FRMModel(config, stats, provider, seed)


def records(*triples) -> list[QuestionPairRecord]:
    return [QuestionPairRecord(q, d, y) for q, d, y in triples]


def report(criterion: str, passed: bool, detail: str) -> bool:
    line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} ({detail})"
    print(line)
    ACCEPTANCE_RESULTS.append(line)
    return passed
