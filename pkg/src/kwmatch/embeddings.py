"""Keyword and question vectors behind one provider interface.

Three interchangeable modes:

* ``hash``: a seeded pseudo-random unit vector per keyword, derived from
  the keyword bytes. An alias map lets several surfaces share one vector.
* ``file``: vectors read from a text embedding file; multi-character
  keywords missing from the file are the mean of their character vectors.
* ``trainable``: rows of a learnable table plus a shared UNK row.

The question vector is the mean of its keyword vectors passed through a
learnable affine map and tanh. The map starts as the identity.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DimensionMismatch, EmptyQuestion, ParseError
from .nn import autograd as ag
from .nn.autograd import Tensor
from .nn.params import ParameterStore

UNK = "<unk>"


def hash_vector(key: str, dim: int, seed: int = 0) -> np.ndarray:
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8, salt=seed.to_bytes(8, "little")).digest()
    v = np.random.default_rng(int.from_bytes(digest, "little")).standard_normal(dim)
    return v / np.linalg.norm(v)


class EmbeddingProvider:
    mode = "base"

    def __init__(self, dim: int, train: bool = False, dtype=np.float32):
        if dim < 1:
            raise ConfigError("embedding dimension must be positive")
        self.dim = dim
        self.train = train
        self.params = ParameterStore(dtype)
        self.params.add("proj.W", np.eye(dim), trainable=train)
        self.params.add("proj.b", np.zeros(dim), trainable=train)

    @property
    def dtype(self):
        return self.params.dtype

    def vector(self, token: str) -> np.ndarray:
        raise NotImplementedError

    def keyword_matrix(self, tokens: Sequence[str]) -> Tensor:
        """(n, dim) tensor of keyword vectors, differentiable in trainable mode."""
        return Tensor(np.stack([self.vector(t) for t in tokens]).astype(self.dtype, copy=False))

    def project(self, pooled: Tensor) -> Tensor:
        return ag.tanh(pooled @ self.params["proj.W"] + self.params["proj.b"])

    def embed_keyword(self, keyword: str, question_tokens: Sequence[str] | None = None) -> np.ndarray:
        if not keyword:
            raise EmptyQuestion("keyword is empty")
        return self.keyword_matrix([keyword]).data[0].copy()

    def embed_question(self, tokens: Sequence[str]) -> np.ndarray:
        if not tokens:
            raise EmptyQuestion("question has no tokens")
        with ag.no_grad():
            pooled = self.keyword_matrix(tokens).mean(axis=0, keepdims=True)
            return self.project(pooled).data[0].copy()

    def config(self) -> dict:
        return {"mode": self.mode, "dim": self.dim, "train": self.train}


class HashEmbeddings(EmbeddingProvider):
    mode = "hash"

    def __init__(self, dim: int = 64, seed: int = 0, aliases: Mapping[str, str] | None = None,
                 train: bool = False, dtype=np.float32):
        super().__init__(dim, train, dtype)
        self.seed = seed
        self.aliases = dict(aliases or {})
        self._cache: dict[str, np.ndarray] = {}

    def vector(self, token: str) -> np.ndarray:
        v = self._cache.get(token)
        if v is None:
            v = hash_vector(self.aliases.get(token, token), self.dim, self.seed)
            self._cache[token] = v
        return v


class FileEmbeddings(EmbeddingProvider):
    mode = "file"

    def __init__(self, vectors: Mapping[str, np.ndarray], dim: int, train: bool = False, dtype=np.float32,
                 path: str | None = None):
        super().__init__(dim, train, dtype)
        self.vectors = dict(vectors)
        self.path = path
        self._zero = np.zeros(dim)

    def vector(self, token: str) -> np.ndarray:
        v = self.vectors.get(token)
        if v is not None:
            return v
        if len(token) > 1:
            # character pooling: unknown characters count as zero vectors
            acc = np.zeros(self.dim)
            for ch in token:
                cv = self.vectors.get(ch)
                if cv is not None:
                    acc = acc + cv
            return acc / len(token)
        return self._zero


class TrainableEmbeddings(EmbeddingProvider):
    """Learnable table; row 0 is the shared UNK row."""

    mode = "trainable"

    def __init__(self, vocab: Sequence[str], dim: int = 64, init: str = "hash", seed: int = 0,
                 aliases: Mapping[str, str] | None = None, train: bool = True, dtype=np.float32):
        super().__init__(dim, train, dtype)
        self.vocab = [UNK] + [t for t in dict.fromkeys(vocab) if t != UNK]
        self.index = {t: i for i, t in enumerate(self.vocab)}
        self.init = init
        self.seed = seed
        aliases = dict(aliases or {})
        if init == "hash":
            rows = np.stack([hash_vector(aliases.get(t, t), dim, seed) for t in self.vocab])
        elif init == "normal":
            rows = np.random.default_rng(seed).normal(0.0, 0.02, size=(len(self.vocab), dim))
        else:
            raise ConfigError(f"unknown table init {init!r}")
        self.params.add("table", rows, trainable=train)

    def ids(self, tokens: Sequence[str]) -> np.ndarray:
        return np.array([self.index.get(t, 0) for t in tokens], dtype=np.intp)

    def keyword_matrix(self, tokens: Sequence[str]) -> Tensor:
        return ag.take(self.params["table"], self.ids(tokens))

    def vector(self, token: str) -> np.ndarray:
        return self.params["table"].data[self.index.get(token, 0)]


def load_embedding_file(path, train: bool = False, dtype=np.float32) -> FileEmbeddings:
    """Read ``<vocab_size> <dim>`` then ``<token> <f1> ... <f_dim>`` rows."""
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ParseError("header must be '<vocab_size> <dimension>'", line=1, path=path)
        try:
            size, dim = int(header[0]), int(header[1])
        except ValueError:
            raise ParseError("header must hold two integers", line=1, path=path) from None
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\r\n").split(" ")
            if not parts or not parts[0]:
                if line.strip():
                    raise ParseError("row has no token", line=lineno, path=path)
                continue
            try:
                vals = np.array([float(x) for x in parts[1:]])
            except ValueError:
                raise ParseError("non-numeric value", line=lineno, path=path) from None
            if vals.size != dim:
                raise DimensionMismatch(f"{path}:{lineno}: expected {dim} floats, got {vals.size}")
            vectors[parts[0]] = vals
    if len(vectors) != size:
        raise ParseError(f"header declares {size} rows but file has {len(vectors)}", path=path)
    return FileEmbeddings(vectors, dim, train=train, dtype=dtype, path=str(path))


def save_embedding_file(path, vectors: Mapping[str, np.ndarray]) -> None:
    items = list(vectors.items())
    dim = len(items[0][1]) if items else 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(items)} {dim}\n")
        for tok, vec in items:
            fh.write(tok + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def load_aliases(path) -> dict[str, str]:
    """Two tab-separated columns per line: surface, canonical key."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError("expected 'surface<TAB>canonical'", line=lineno, path=path)
            out[parts[0]] = parts[1]
    return out
