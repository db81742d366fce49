"""Build a model from a config and a training set, and train it."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .config import ModelConfig, TrainingConfig
from .embeddings import HashEmbeddings, TrainableEmbeddings, load_aliases, load_embedding_file
from .errors import EmptyDataset
from .matching import FRMModel
from .text import build_corpus_stats, segment
from .training import TrainResult, train


def corpus_questions(records) -> list[str]:
    """Distinct questions of a dataset in first-seen order."""
    return list(dict.fromkeys(t for r in records for t in (r.q, r.d)))


def make_provider(config: ModelConfig, vocab: Sequence[str], aliases: Mapping[str, str] | None = None):
    dtype = np.dtype(config.dtype)
    if aliases is None and config.aliases_file:
        aliases = load_aliases(config.aliases_file)
    if config.embedding_mode == "hash":
        return HashEmbeddings(config.embedding_dim, config.embedding_seed, aliases,
                              train=config.train_embeddings, dtype=dtype)
    if config.embedding_mode == "file":
        prov = load_embedding_file(config.embedding_file, train=config.train_embeddings, dtype=dtype)
        return prov
    return TrainableEmbeddings(vocab, config.embedding_dim, config.embedding_init, config.embedding_seed,
                               aliases, train=config.train_embeddings, dtype=dtype)


def build_model(config: ModelConfig, records, seed: int = 0,
                aliases: Mapping[str, str] | None = None) -> FRMModel:
    """Corpus statistics and vocabulary come from the questions in ``records``."""
    if len(records) == 0:
        raise EmptyDataset("cannot build a model from an empty dataset")
    questions = corpus_questions(records)
    tokenized = [segment(q, config.segment_mode) for q in questions]
    stats = build_corpus_stats(tokenized, config.bucket_count, config.stopwords_file or None,
                               config.segment_mode)
    vocab = [t for toks in tokenized for t in toks]
    provider = make_provider(config, vocab, aliases)
    return FRMModel(config, stats, provider, seed)


def fit(model_config: ModelConfig, training_config: TrainingConfig, train_set, dev_set=None,
        aliases: Mapping[str, str] | None = None, on_epoch=None) -> tuple[FRMModel, TrainResult]:
    model = build_model(model_config, train_set, training_config.seed, aliases)
    return model, train(model, training_config, train_set, dev_set, on_epoch)
