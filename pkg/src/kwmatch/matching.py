"""Multi-view matching over comparable keyword-set pairs, and the full model.

For every comparable pair (KS_m(q), KS_n(d)) the model builds a vector with
up to three blocks:

* MLP view: importance-weighted set vectors of both levels with their
  co-action, through one ReLU layer;
* attention view: ``[CLS] q-level [SEP] d-level [SEP]`` through multi-head
  attention, a position-wise FFN with residual and layer norm; the [CLS]
  row is kept;
* lexical view: BM25, Jaccard and the importance-weighted exact overlap.

Pair vectors are averaged with pair weights and fed to a sigmoid MLP.
:class:`FRMModel` runs a whole minibatch as one graph, so gradients reach
the importance network through pair weights, set vectors and the overlap
term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .config import ModelConfig
from .embeddings import EmbeddingProvider
from .errors import ConfigError, EmptyQuestion, NoComparablePairs
from .importance import ImportanceNet, ScoredKeyword, candidate_features, coa, tfidf_importance
from .keyword_sets import ComparablePair, KeywordSetLevels
from .nn import autograd as ag
from .nn.autograd import Tensor
from .nn.layers import MlpSpec, init_attention, init_mlp, layer_norm, mlp_forward, multi_head_attention
from .nn.params import ParameterStore
from .text import CorpusStats, KeywordCandidate, keyword_candidates, segment

EPS = 1e-12


def set_representation(vectors, weights, eps: float = EPS) -> Tensor:
    """sum_i w_i * v_i / (sum_i w_i + eps); ``weights`` is (n,) or (P, n)."""
    vectors = ag.as_tensor(vectors)
    weights = ag.as_tensor(weights, vectors)
    if weights.ndim == 1:
        w2 = weights.reshape(1, -1)
        return ((w2 @ vectors) / (w2.sum(axis=1, keepdims=True) + eps)).reshape(vectors.shape[-1])
    return (weights @ vectors) / (weights.sum(axis=1, keepdims=True) + eps)


def aggregate(weights, mv, eps: float = EPS):
    """Weighted mean of pair vectors: sum_i w_i mv_i / (sum_i w_i + eps)."""
    if len(weights) == 0:
        raise NoComparablePairs("no comparable keyword-set pairs to aggregate")
    if isinstance(weights, Tensor) or isinstance(mv, Tensor):
        mv = ag.as_tensor(mv)
        w = ag.as_tensor(weights, mv).reshape(1, -1)
        return ((w @ mv) / (w.sum(axis=1, keepdims=True) + eps)).reshape(mv.shape[-1])
    w = np.asarray(weights, dtype=np.float64)
    mv = np.asarray(mv, dtype=np.float64)
    return (w @ mv) / (w.sum() + eps)


class MlpView:
    def __init__(self, store: ParameterStore, prefix: str, in_dim: int, coa_dim: int, width: int,
                 dropout: float = 0.0):
        self.dropout = dropout
        self.coa = (store.xavier(f"{prefix}.coa.W", 3 * in_dim, coa_dim), store.zeros(f"{prefix}.coa.b", (coa_dim,)))
        self.spec = MlpSpec((width,), ("relu",), dropout)
        self.params = init_mlp(store, f"{prefix}.out", 2 * in_dim + coa_dim, self.spec)

    def __call__(self, rep_q, rep_d, train_mode=False, rng=None) -> Tensor:
        rep_q = ag.as_tensor(rep_q)
        rep_d = ag.as_tensor(rep_d, rep_q)
        c = coa(rep_q, rep_d, self.coa, train_mode, rng, self.dropout)
        return mlp_forward(self.spec, self.params, ag.concat([rep_q, rep_d, c], axis=-1), train_mode, rng)


def m_mlp(rep_q, rep_d, view: MlpView, train_mode=False, rng=None) -> Tensor:
    return view(rep_q, rep_d, train_mode, rng)


class AttentionView:
    """[CLS] q [SEP] d [SEP] encoder returning the [CLS] row."""

    def __init__(self, store: ParameterStore, prefix: str, in_dim: int, width: int, heads: int,
                 ffn_width: int, max_seq: int, dropout: float = 0.0):
        self.width = width
        self.heads = heads
        self.max_seq = max_seq
        self.dropout = dropout
        self.proj = store.xavier(f"{prefix}.in", in_dim, width) if in_dim != width else None
        self.cls = store.normal(f"{prefix}.cls", (1, width))
        self.sep = store.normal(f"{prefix}.sep", (1, width))
        self.pos = store.normal(f"{prefix}.pos", (max_seq, width))
        self.att = init_attention(store, prefix, width, heads)
        self.ffn_spec = MlpSpec((ffn_width, width), ("relu", "identity"), dropout)
        self.ffn = init_mlp(store, f"{prefix}.ffn", width, self.ffn_spec)
        self.ln_gain = store.add(f"{prefix}.ln.gain", np.ones(width))
        self.ln_bias = store.zeros(f"{prefix}.ln.bias", (width,))

    def __call__(self, E: Tensor, index: np.ndarray, mask: np.ndarray, train_mode=False, rng=None) -> Tensor:
        """``index`` (P, S) points into rows of E, then CLS, SEP, PAD (in that order)."""
        if self.proj is not None:
            E = E @ self.proj
        pad = Tensor(np.zeros((1, self.width), dtype=E.dtype))
        ext = ag.concat([E, self.cls, self.sep, pad], axis=0)
        P, S = index.shape
        X = ag.take(ext, index) + ag.take(self.pos, np.arange(S))
        head = multi_head_attention(X, self.att, self.heads, key_mask=mask, query_rows=slice(0, 1))
        out = layer_norm(head + mlp_forward(self.ffn_spec, self.ffn, head, train_mode, rng),
                         self.ln_gain, self.ln_bias)
        return out.reshape(P, self.width)

    @staticmethod
    def sequence(q_rows: Sequence[int], d_rows: Sequence[int], n_rows: int) -> list[int]:
        cls, sep = n_rows, n_rows + 1
        return [cls, *q_rows, sep, *d_rows, sep]


def m_att(q_vectors, d_vectors, view: AttentionView, train_mode=False, rng=None) -> Tensor:
    """Attention view of one pair given the keyword vectors of both levels."""
    q = ag.as_tensor(q_vectors)
    d = ag.as_tensor(d_vectors, q)
    nq, nd = q.shape[0], d.shape[0]
    E = ag.concat([q, d], axis=0)
    seq = AttentionView.sequence(range(nq), range(nq, nq + nd), nq + nd)
    if len(seq) > view.max_seq:
        raise ConfigError(f"sequence of {len(seq)} exceeds max_seq={view.max_seq}")
    idx = np.array([seq], dtype=np.intp)
    return view(E, idx, np.ones_like(idx, dtype=bool), train_mode, rng).reshape(view.width)


def m_lm(q_surfaces: Sequence[str], q_importance, d_surfaces: Sequence[str], d_importance,
         stats: CorpusStats, k1: float = 1.2, b: float = 0.75) -> np.ndarray:
    """[BM25, Jaccard, wlm] for two keyword sets (q acts as the BM25 query)."""
    ids: dict[str, int] = {}
    q_ids = np.array([ids.setdefault(s, len(ids)) for s in q_surfaces], dtype=np.int64)
    d_ids = np.array([ids.setdefault(s, len(ids)) for s in d_surfaces], dtype=np.int64)
    idf = np.array([stats.idf(s) for s in ids], dtype=np.float64)
    pairs = np.array([[1, 1]], dtype=np.int64)
    bm25, jac, _, mi, mj = kernels.lexical_features(
        q_ids, np.zeros(len(q_ids), np.int64), d_ids, np.zeros(len(d_ids), np.int64),
        pairs, idf, stats.avg_length, k1, b)
    wq = np.asarray(q_importance, dtype=np.float64)
    wd = np.asarray(d_importance, dtype=np.float64)
    wlm = float((wq[mi] * wd[mj]).sum())
    return np.array([bm25[0], jac[0], wlm])


@dataclass
class PreparedQuestion:
    text: str
    tokens: tuple[str, ...]
    candidates: tuple[KeywordCandidate, ...]
    lex_ids: np.ndarray
    buckets: np.ndarray
    pos: np.ndarray
    stop: np.ndarray
    tfidf: np.ndarray

    def __len__(self):
        return len(self.tokens)


@dataclass
class MultiViewVector:
    mlp_part: np.ndarray | None
    att_part: np.ndarray | None
    lex_part: np.ndarray | None

    def concat(self) -> np.ndarray:
        return np.concatenate([p for p in (self.mlp_part, self.att_part, self.lex_part) if p is not None])


@dataclass
class PairDetail:
    pair: ComparablePair
    views: MultiViewVector
    truncated: bool = False


@dataclass
class MatchReport:
    similarity: float
    q_keywords: list[ScoredKeyword]
    d_keywords: list[ScoredKeyword]
    q_levels: KeywordSetLevels
    d_levels: KeywordSetLevels
    pairs: list[PairDetail] = field(default_factory=list)

    @property
    def decision(self) -> bool:
        return self.similarity > 0.5

    @property
    def truncated(self) -> bool:
        return any(p.truncated for p in self.pairs)


def _levels_from_ranks(ranks: np.ndarray) -> KeywordSetLevels:
    n = len(ranks)
    levels = tuple(tuple(int(p) for p in np.flatnonzero(ranks >= m)) for m in range(n))
    return KeywordSetLevels(levels, tuple(int(r) for r in ranks), n)


class FRMModel:
    """Importance network + matching unit with one shared parameter store."""

    def __init__(self, config: ModelConfig, stats: CorpusStats, provider: EmbeddingProvider, seed: int = 0):
        config.validate()
        if provider.dim != config.embedding_dim:
            raise ConfigError(f"provider dimension {provider.dim} != embedding_dim {config.embedding_dim}")
        if stats.bucket_count != config.bucket_count:
            raise ConfigError(f"corpus stats use {stats.bucket_count} IDF buckets, config {config.bucket_count}")
        self.config = config
        self.stats = stats
        self.provider = provider
        self.seed = seed
        self.dtype = np.dtype(config.dtype)
        if provider.dtype != self.dtype:
            raise ConfigError("provider and model dtypes differ")
        self.store = ParameterStore(self.dtype, seed)
        for name, t in provider.params:
            self.store.tensors[f"provider.{name}"] = t
        D = config.embedding_dim
        p = config.dropout
        self.importance_net = ImportanceNet(config, self.store) if config.importance_mode == "learned" else None
        width = 0
        self.mlp_view = None
        self.att_view = None
        if not config.no_mlp:
            self.mlp_view = MlpView(self.store, "matching.mlp", D, config.coa_dim, config.mlp_view_width, p)
            width += config.mlp_view_width
        if not config.no_att:
            self.att_view = AttentionView(self.store, "matching.att", D, config.att_dim, config.att_heads,
                                          config.ffn_width, config.max_seq, p)
            width += config.att_dim
        if not config.no_lm:
            width += 3
        self.mv_width = width
        widths = tuple(config.top_widths) + (1,)
        self.top_spec = MlpSpec(widths, ("relu",) * (len(widths) - 1) + ("sigmoid",), p)
        self.top_params = init_mlp(self.store, "top", width, self.top_spec)
        self._prepared: dict = {}
        self._lex: dict[str, int] = {}
        self._idf: list[float] = []
        self._idf_arr = np.zeros(0)

    # preprocessing -----------------------------------------------------

    def _lex_id(self, token: str) -> int:
        i = self._lex.get(token)
        if i is None:
            i = len(self._lex)
            self._lex[token] = i
            self._idf.append(self.stats.idf(token))
        return i

    def prepare(self, question) -> PreparedQuestion:
        key = question if isinstance(question, str) else tuple(question)
        prep = self._prepared.get(key)
        if prep is not None:
            return prep
        tokens = segment(question, self.config.segment_mode) if isinstance(question, str) else list(question)
        if not tokens:
            raise EmptyQuestion("question has no tokens")
        cands = keyword_candidates(tokens, self.stats)
        b, p, s = candidate_features(cands)
        prep = PreparedQuestion(
            text=question if isinstance(question, str) else " ".join(tokens),
            tokens=tuple(tokens),
            candidates=tuple(cands),
            lex_ids=np.array([self._lex_id(t) for t in tokens], dtype=np.int64),
            buckets=b, pos=p, stop=s,
            tfidf=tfidf_importance(tokens, self.stats),
        )
        if len(self._prepared) < 200_000:
            self._prepared[key] = prep
        return prep

    def _idf_array(self) -> np.ndarray:
        if len(self._idf_arr) != len(self._idf):
            self._idf_arr = np.array(self._idf, dtype=np.float64)
        return self._idf_arr

    # forward -------------------------------------------------------------

    def _importance(self, questions, E, lens, offs, train_mode, rng) -> Tensor:
        mode = self.config.importance_mode
        if mode == "one":
            return Tensor(np.ones(int(offs[-1]), dtype=self.dtype))
        if mode == "tfidf":
            return Tensor(np.concatenate([q.tfidf for q in questions]).astype(self.dtype))
        net = self.importance_net
        e_cls_k = None
        if net.use_dsr:
            nQ = len(questions)
            owner = np.repeat(np.arange(nQ), lens)
            pool = np.zeros((nQ, int(offs[-1])), dtype=self.dtype)
            pool[owner, np.arange(int(offs[-1]))] = (1.0 / lens)[owner]
            e_cls = self.provider.project(Tensor(pool) @ E)
            e_cls_k = ag.take(e_cls, owner)
        buckets = np.concatenate([q.buckets for q in questions])
        pos = np.concatenate([q.pos for q in questions])
        stop = np.concatenate([q.stop for q in questions])
        return net.forward(e_cls_k, E, buckets, pos, stop, train_mode, rng)

    def forward(self, examples: Sequence[tuple[PreparedQuestion, PreparedQuestion]], train_mode: bool = False,
                rng=None, details: bool = False):
        """Similarities (B,) for prepared (q, d) pairs; with ``details`` also a per-example breakdown."""
        cfg = self.config
        B = len(examples)
        questions = [q for q, _ in examples] + [d for _, d in examples]
        lens = np.array([len(x) for x in questions], dtype=np.int64)
        offs = np.concatenate([[0], np.cumsum(lens)])
        T = int(offs[-1])
        E = self.provider.keyword_matrix([t for x in questions for t in x.tokens])
        w = self._importance(questions, E, lens, offs, train_mode, rng)
        w_np = w.data.astype(np.float64)
        ranks = [kernels.removal_ranks(w_np[offs[i]:offs[i + 1]]) for i in range(2 * B)]
        ag.note_kink(np.concatenate(ranks))

        idf = self._idf_array()
        pair_rows = []  # (example, m, n)
        bm25_all, jac_all, match_p, match_i, match_j = [], [], [], [], []
        for bi in range(B):
            qi, di = bi, B + bi
            pr = kernels.comparable_pairs(lens[qi], lens[di])
            if cfg.level_limit:
                pr = pr[:cfg.level_limit]
            if len(pr) == 0:
                raise NoComparablePairs("no comparable pairs for a question pair")
            base = len(pair_rows)
            pair_rows.extend((bi, int(m), int(n)) for m, n in pr)
            if not cfg.no_lm:
                bm, jc, mp, mi, mj = kernels.lexical_features(
                    questions[qi].lex_ids, ranks[qi], questions[di].lex_ids, ranks[di], pr, idf,
                    self.stats.avg_length, cfg.bm25_k1, cfg.bm25_b)
                bm25_all.append(bm)
                jac_all.append(jc)
                match_p.append(mp + base)
                match_i.append(mi + offs[qi])
                match_j.append(mj + offs[di])
        P = len(pair_rows)
        rows = np.array(pair_rows, dtype=np.int64)
        ex, lv_q, lv_d = rows[:, 0], rows[:, 1], rows[:, 2]

        Mq = np.zeros((P, T), dtype=self.dtype)
        Md = np.zeros((P, T), dtype=self.dtype)
        for bi in range(B):
            sel = np.flatnonzero(ex == bi)
            qi, di = bi, B + bi
            Mq[sel, offs[qi]:offs[qi + 1]] = ranks[qi][None, :] >= (lv_q[sel] - 1)[:, None]
            Md[sel, offs[di]:offs[di + 1]] = ranks[di][None, :] >= (lv_d[sel] - 1)[:, None]
        Wq = Tensor(Mq) * w
        Wd = Tensor(Md) * w
        sum_q = Wq.sum(axis=1)
        sum_d = Wd.sum(axis=1)
        len_q = lens[ex].astype(self.dtype)
        len_d = lens[B + ex].astype(self.dtype)
        pair_w = (sum_q * (1.0 / len_q)) * (sum_d * (1.0 / len_d))

        views = []
        mlp_part = att_part = lex_part = None
        truncated = np.zeros(P, dtype=bool)
        if self.mlp_view is not None:
            rep_q = (Wq @ E) / (sum_q.reshape(P, 1) + EPS)
            rep_d = (Wd @ E) / (sum_d.reshape(P, 1) + EPS)
            mlp_part = self.mlp_view(rep_q, rep_d, train_mode, rng)
            views.append(mlp_part)
        if self.att_view is not None:
            idx, mask, truncated = self._sequences(Mq, Md, w_np, T)
            att_part = self.att_view(E, idx, mask, train_mode, rng)
            views.append(att_part)
        if not cfg.no_lm:
            gi = np.concatenate(match_i)
            gj = np.concatenate(match_j)
            seg = np.concatenate(match_p)
            wlm = ag.segment_sum(ag.take(w, gi) * ag.take(w, gj), seg, P)
            fixed = np.stack([np.concatenate(bm25_all), np.concatenate(jac_all)], axis=1).astype(self.dtype)
            lex_part = ag.concat([Tensor(fixed), wlm.reshape(P, 1)], axis=1)
            views.append(lex_part)
        mv = ag.concat(views, axis=1)

        R = np.zeros((B, P), dtype=self.dtype)
        R[ex, np.arange(P)] = 1.0
        Rw = Tensor(R) * pair_w
        agg = (Rw @ mv) / (Rw.sum(axis=1, keepdims=True) + EPS)
        sim = mlp_forward(self.top_spec, self.top_params, agg, train_mode, rng).reshape(B)
        if not details:
            return sim
        info = []
        for bi in range(B):
            sel = np.flatnonzero(ex == bi)
            pd = []
            for p in sel:
                pd.append(PairDetail(
                    ComparablePair(int(lv_q[p]), int(lv_d[p]), float(pair_w.data[p])),
                    MultiViewVector(
                        None if mlp_part is None else mlp_part.data[p].astype(np.float64),
                        None if att_part is None else att_part.data[p].astype(np.float64),
                        None if lex_part is None else lex_part.data[p].astype(np.float64),
                    ),
                    bool(truncated[p]),
                ))
            info.append({
                "q_importance": w_np[offs[bi]:offs[bi + 1]],
                "d_importance": w_np[offs[B + bi]:offs[B + bi + 1]],
                "q_levels": _levels_from_ranks(ranks[bi]),
                "d_levels": _levels_from_ranks(ranks[B + bi]),
                "pairs": pd,
            })
        return sim, info

    def _sequences(self, Mq, Md, w_np, T):
        max_seq = self.att_view.max_seq
        seqs = []
        truncated = np.zeros(len(Mq), dtype=bool)
        for p in range(len(Mq)):
            q_rows = np.flatnonzero(Mq[p])
            d_rows = np.flatnonzero(Md[p])
            excess = len(q_rows) + len(d_rows) + 3 - max_seq
            if excess > 0:
                # drop the least important keywords across both sides, keep one per side
                truncated[p] = True
                cand = sorted(np.concatenate([q_rows, d_rows]).tolist(), key=lambda r: (w_np[r], -r))
                drop = set()
                nq, nd = len(q_rows), len(d_rows)
                qs = set(q_rows.tolist())
                for r in cand:
                    if len(drop) == excess:
                        break
                    if r in qs and nq > 1:
                        drop.add(r)
                        nq -= 1
                    elif r not in qs and nd > 1:
                        drop.add(r)
                        nd -= 1
                q_rows = [r for r in q_rows if r not in drop]
                d_rows = [r for r in d_rows if r not in drop]
            seqs.append(AttentionView.sequence(q_rows, d_rows, T))
        S = max(len(s) for s in seqs)
        idx = np.full((len(seqs), S), T + 2, dtype=np.intp)
        mask = np.zeros((len(seqs), S), dtype=bool)
        for p, s in enumerate(seqs):
            idx[p, :len(s)] = s
            mask[p, :len(s)] = True
        return idx, mask, truncated

    # convenience ---------------------------------------------------------

    def prepare_pairs(self, pairs) -> list[tuple[PreparedQuestion, PreparedQuestion]]:
        return [(self.prepare(q), self.prepare(d)) for q, d in pairs]

    def predict(self, pairs, batch_size: int = 256) -> np.ndarray:
        """Similarity for each (q, d) text pair, inference mode."""
        prepared = self.prepare_pairs(pairs)
        out = []
        with ag.no_grad():
            for i in range(0, len(prepared), batch_size):
                out.append(self.forward(prepared[i:i + batch_size]).data.astype(np.float64))
        return np.concatenate(out) if out else np.zeros(0)

    def score_keywords(self, question) -> list[ScoredKeyword]:
        prep = self.prepare(question)
        with ag.no_grad():
            lens = np.array([len(prep)])
            E = self.provider.keyword_matrix(prep.tokens)
            w = self._importance([prep], E, lens, np.array([0, len(prep)]), False, None)
        return [ScoredKeyword(c, float(v)) for c, v in zip(prep.candidates, w.data)]


def similarity(q, d, model: FRMModel) -> MatchReport:
    """Score one question pair and keep the per-pair breakdown."""
    pq, pd = model.prepare(q), model.prepare(d)
    with ag.no_grad():
        sim, info = model.forward([(pq, pd)], details=True)
    info = info[0]
    q_kw = [ScoredKeyword(c, float(v)) for c, v in zip(pq.candidates, info["q_importance"])]
    d_kw = [ScoredKeyword(c, float(v)) for c, v in zip(pd.candidates, info["d_importance"])]
    return MatchReport(float(sim.data[0]), q_kw, d_kw, info["q_levels"], info["d_levels"], info["pairs"])
