"""Checkpoint files: a readable text header followed by raw tensor bytes.

Layout::

    FGQR 1
    @@ model <n>          n lines of ``key = value``
    @@ training <n>
    @@ meta <n>
    @@ vocab <n>          one token per line (trainable or file provider)
    @@ aliases <n>        ``surface<TAB>canonical``
    @@ corpus <n>         stats scalars, then ``df<TAB>token<TAB>count`` and ``stop<TAB>token``
    @@ tensors <n>        ``name<TAB>dtype<TAB>shape<TAB>offset<TAB>nbytes``
    @@ end 0
    <little-endian tensor bytes>

Sections are length-prefixed, so no token can be mistaken for a header.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .config import ModelConfig, TrainingConfig, config_items, parse_pairs
from .embeddings import FileEmbeddings, HashEmbeddings, TrainableEmbeddings
from .errors import CorruptCheckpoint, IncompatibleCheckpoint, KwMatchError
from .matching import FRMModel
from .text import CorpusStats

MAGIC = "FGQR"
VERSION = 1
FILE_VECTORS = "provider.file_vectors"

# fields that change parameter shapes or the meaning of stored tensors
STRUCTURAL = (
    "embedding_mode", "embedding_dim", "bucket_count", "idf_embedding_dim", "pos_embedding_dim",
    "stopword_embedding_dim", "embnn_widths", "efnn_widths", "jinn_widths", "coa_width",
    "mlp_view_width", "att_width", "att_heads", "ffn_width", "max_seq", "top_widths",
    "no_mlp", "no_att", "no_lm", "no_ef", "no_dsr", "importance_one", "importance_tfidf", "dtype",
)


def _corpus_lines(stats: CorpusStats) -> list[str]:
    lines = [
        f"document_count = {stats.document_count}",
        f"avg_length = {stats.avg_length!r}",
        f"idf_min = {stats.idf_min!r}",
        f"idf_max = {stats.idf_max!r}",
        f"bucket_count = {stats.bucket_count}",
    ]
    lines += [f"df\t{tok}\t{n}" for tok, n in stats.doc_freq.items()]
    lines += [f"stop\t{tok}" for tok in sorted(stats.stopword_lexicon)]
    return lines


def corpus_digest(stats: CorpusStats) -> str:
    return hashlib.sha256("\n".join(_corpus_lines(stats)).encode("utf-8")).hexdigest()


def _le(arr: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<"))


def encode(model: FRMModel, training: TrainingConfig | None = None) -> bytes:
    prov = model.provider
    tensors = [(n, t.data) for n, t in model.store]
    vocab: list[str] = []
    aliases: dict[str, str] = {}
    if isinstance(prov, TrainableEmbeddings):
        vocab = list(prov.vocab)
    elif isinstance(prov, FileEmbeddings):
        vocab = list(prov.vectors)
        mat = np.stack([prov.vectors[t] for t in vocab]) if vocab else np.zeros((0, prov.dim))
        tensors.append((FILE_VECTORS, mat.astype(np.float64)))
    if isinstance(prov, HashEmbeddings):
        aliases = prov.aliases
    meta = [
        f"seed = {model.seed}",
        f"provider = {prov.mode}",
        f"provider_seed = {getattr(prov, 'seed', 0)}",
        f"provider_init = {getattr(prov, 'init', '')}",
        f"provider_train = {int(prov.train)}",
        f"corpus_digest = {corpus_digest(model.stats)}",
    ]
    index, blobs, offset = [], [], 0
    for name, arr in tensors:
        raw = _le(arr).tobytes()
        shape = ",".join(str(s) for s in arr.shape)
        index.append(f"{name}\t{arr.dtype.name}\t{shape}\t{offset}\t{len(raw)}")
        blobs.append(raw)
        offset += len(raw)
    sections = [
        ("model", [f"{k} = {v}" for k, v in config_items(model.config)]),
        ("training", [f"{k} = {v}" for k, v in config_items(training)] if training else []),
        ("meta", meta),
        ("vocab", vocab),
        ("aliases", [f"{a}\t{b}" for a, b in aliases.items()]),
        ("corpus", _corpus_lines(model.stats)),
        ("tensors", index),
    ]
    out = [f"{MAGIC} {VERSION}"]
    for name, lines in sections:
        out.append(f"@@ {name} {len(lines)}")
        out.extend(lines)
    out.append("@@ end 0")
    return ("\n".join(out) + "\n").encode("utf-8") + b"".join(blobs)


def save_checkpoint(model: FRMModel, path, training: TrainingConfig | None = None) -> None:
    Path(path).write_bytes(encode(model, training))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def line(self) -> str:
        end = self.data.find(b"\n", self.pos)
        if end < 0:
            raise CorruptCheckpoint("checkpoint header is truncated")
        raw = self.data[self.pos:end]
        self.pos = end + 1
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise CorruptCheckpoint("checkpoint header is not UTF-8") from None


def _kv(lines) -> list[tuple[str, str]]:
    out = []
    for line in lines:
        key, sep, value = line.partition(" = ")
        if not sep:
            raise CorruptCheckpoint(f"bad header line {line!r}")
        out.append((key, value))
    return out


def read_sections(data: bytes) -> tuple[dict[str, list[str]], int]:
    """Parse the header; returns the sections and the byte offset of the first blob."""
    r = _Reader(data)
    first = data[:64].split(b"\n", 1)[0].split(b" ")
    if first[0] != MAGIC.encode():
        raise IncompatibleCheckpoint("not a checkpoint file (bad magic)")
    first_line = r.line().split(" ")
    if len(first_line) != 2 or first_line[1] != str(VERSION):
        raise IncompatibleCheckpoint(f"checkpoint format version {first_line[1:]} is not {VERSION}")
    sections: dict[str, list[str]] = {}
    while True:
        head = r.line().split(" ")
        if len(head) != 3 or head[0] != "@@":
            raise CorruptCheckpoint("malformed section header")
        name = head[1]
        try:
            count = int(head[2])
        except ValueError:
            raise CorruptCheckpoint("malformed section length") from None
        if name == "end":
            return sections, r.pos
        sections[name] = [r.line() for _ in range(count)]


def _stats_from(lines: list[str]) -> CorpusStats:
    scalars, df, stop = {}, {}, []
    for line in lines:
        if line.startswith("df\t"):
            _, tok, n = line.split("\t")
            df[tok] = int(n)
        elif line.startswith("stop\t"):
            stop.append(line.split("\t", 1)[1])
        else:
            key, _, value = line.partition(" = ")
            scalars[key] = value
    try:
        return CorpusStats(
            document_count=int(scalars["document_count"]), doc_freq=df,
            idf_min=float(scalars["idf_min"]), idf_max=float(scalars["idf_max"]),
            bucket_count=int(scalars["bucket_count"]), stopword_lexicon=frozenset(stop),
            avg_length=float(scalars["avg_length"]),
        )
    except (KeyError, ValueError) as exc:
        raise CorruptCheckpoint(f"bad corpus section: {exc}") from None


def _check_compatible(stored: ModelConfig, expected: ModelConfig) -> None:
    diffs = [f"{k}: checkpoint has {getattr(stored, k)!r}, config asks for {getattr(expected, k)!r}"
             for k in STRUCTURAL if getattr(stored, k) != getattr(expected, k)]
    if diffs:
        raise IncompatibleCheckpoint("checkpoint does not match the configuration; " + "; ".join(diffs))


def decode(data: bytes, expect: ModelConfig | None = None) -> tuple[FRMModel, TrainingConfig | None]:
    sections, blob_start = read_sections(data)
    for name in ("model", "meta", "corpus", "tensors"):
        if name not in sections:
            raise CorruptCheckpoint(f"missing section {name!r}")
    try:
        config, _ = parse_pairs(_kv(sections["model"]))
        training = parse_pairs(_kv(sections["training"]))[1] if sections.get("training") else None
    except KwMatchError as exc:
        raise IncompatibleCheckpoint(f"stored configuration is not understood: {exc}") from None
    if expect is not None:
        _check_compatible(config, expect)
    meta = dict(_kv(sections["meta"]))
    stats = _stats_from(sections["corpus"])
    if corpus_digest(stats) != meta.get("corpus_digest"):
        raise CorruptCheckpoint("corpus statistics do not match their digest")

    arrays = {}
    blobs = data[blob_start:]
    end = 0
    for line in sections["tensors"]:
        try:
            name, dtype, shape, offset, nbytes = line.split("\t")
            shape_t = tuple(int(s) for s in shape.split(",") if s)
            offset, nbytes = int(offset), int(nbytes)
            dt = np.dtype(dtype).newbyteorder("<")
        except (ValueError, TypeError):
            raise CorruptCheckpoint(f"bad tensor index line {line!r}") from None
        if offset + nbytes > len(blobs):
            raise CorruptCheckpoint(f"tensor {name} is truncated")
        if int(np.prod(shape_t)) * dt.itemsize != nbytes:
            raise CorruptCheckpoint(f"tensor {name}: size does not match its shape")
        arrays[name] = np.frombuffer(blobs, dtype=dt, count=nbytes // dt.itemsize,
                                     offset=offset).reshape(shape_t).astype(dt.newbyteorder("="))
        end = max(end, offset + nbytes)
    if end != len(blobs):
        raise CorruptCheckpoint("trailing bytes after the last tensor")

    dtype = np.dtype(config.dtype)
    mode = meta.get("provider")
    train = meta.get("provider_train") == "1"
    seed = int(meta.get("provider_seed", "0"))
    vocab = sections.get("vocab", [])
    if mode == "hash":
        aliases = dict(line.split("\t", 1) for line in sections.get("aliases", []))
        provider = HashEmbeddings(config.embedding_dim, seed, aliases, train=train, dtype=dtype)
    elif mode == "file":
        mat = arrays.pop(FILE_VECTORS, None)
        if mat is None or len(mat) != len(vocab):
            raise CorruptCheckpoint("file embedding vectors missing or inconsistent")
        provider = FileEmbeddings(dict(zip(vocab, mat)), config.embedding_dim, train=train, dtype=dtype)
    elif mode == "trainable":
        provider = TrainableEmbeddings(vocab[1:], config.embedding_dim, meta.get("provider_init") or "normal", seed, train=train, dtype=dtype)
    else:
        raise IncompatibleCheckpoint(f"unknown embedding provider {mode!r}")
    model = FRMModel(config, stats, provider, int(meta.get("seed", "0")))
    names = {n for n, _ in model.store}
    if names != set(arrays):
        missing = sorted(names - set(arrays))
        extra = sorted(set(arrays) - names)
        raise IncompatibleCheckpoint(f"tensor set differs from the model (missing {missing}, unexpected {extra})")
    for name, arr in arrays.items():
        if model.store[name].shape != arr.shape:
            raise IncompatibleCheckpoint(f"{name}: checkpoint shape {arr.shape} != model shape {model.store[name].shape}")
    model.store.load_state(arrays)
    return model, training


def load_checkpoint(path, expect: ModelConfig | None = None) -> FRMModel:
    return decode(Path(path).read_bytes(), expect)[0]


def load_checkpoint_with_training(path, expect: ModelConfig | None = None):
    return decode(Path(path).read_bytes(), expect)
