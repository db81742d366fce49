"""Training loop and evaluation protocol."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import TrainingConfig
from .errors import EmptyDataset, LabelError, ShapeError, UndefinedAUC
from .nn import autograd as ag
from .nn.autograd import Tensor
from .nn.optim import adamw_step, warmup_linear
from .text import segment

log = logging.getLogger(__name__)

CLAMP = 1e-7
LENGTH_BINS = ((1, 5), (6, 10), (11, 15), (16, None))
BUCKETS = ("hard", "middle", "easy")


def _labels(labels) -> np.ndarray:
    y = np.asarray(labels)
    if y.size and not np.isin(y, (0, 1)).all():
        raise LabelError("labels must be 0 or 1")
    return y.astype(np.int64)


def log_likelihood_loss(sim, labels) -> Tensor:
    """-mean(y log s + (1 - y) log(1 - s)) with s clamped to [1e-7, 1 - 1e-7]."""
    y = _labels(labels)
    if y.size == 0:
        raise EmptyDataset("loss over an empty batch")
    sim = ag.as_tensor(sim)
    if sim.shape != y.shape:
        raise ShapeError(f"{sim.shape[0]} scores for {y.size} labels")
    s = ag.clip(sim, CLAMP, 1.0 - CLAMP)
    yf = y.astype(sim.dtype)
    ll = ag.log(s) * yf + ag.log(1.0 - s) * (1.0 - yf)
    return ll.sum() * (-1.0 / y.size)


def loss(batch, model, train_mode: bool = False, rng=None) -> Tensor:
    """Loss of ``model`` on records with ``q``, ``d`` and ``y``."""
    if not batch:
        raise EmptyDataset("loss over an empty batch")
    y = _labels([r.y for r in batch])
    sims = model.forward(model.prepare_pairs([(r.q, r.d) for r in batch]), train_mode, rng)
    return log_likelihood_loss(sims, y)


def accuracy(scores, labels, threshold: float = 0.5) -> float:
    s = np.asarray(scores, dtype=np.float64)
    y = _labels(labels)
    if s.shape != y.shape:
        raise ShapeError(f"{s.size} scores for {y.size} labels")
    if s.size == 0:
        raise EmptyDataset("accuracy of nothing")
    return float(((s > threshold) == (y == 1)).mean())


def auc(scores, labels) -> float:
    """Mann-Whitney AUC via the rank sum, ties counted as one half.

    Doubled average ranks keep the numerator an integer, so the result is
    the same float as exact pair counting.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _labels(labels)
    if s.shape != y.shape:
        raise ShapeError(f"{s.size} scores for {y.size} labels")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUC("AUC needs at least one positive and one negative")
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    # tie groups [start, end) in sorted order; doubled mean rank = start + end + 1
    starts = np.flatnonzero(np.r_[True, sorted_s[1:] != sorted_s[:-1]])
    ends = np.r_[starts[1:], s.size]
    rank2 = np.empty(s.size, dtype=np.int64)
    rank2[order] = np.repeat(starts + ends + 1, ends - starts)
    u2 = int(rank2[y == 1].sum()) - n_pos * (n_pos + 1)
    return u2 / (2 * n_pos * n_neg)


def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    union = a | b
    return len(a & b) / len(union) if union else 0.0


def hardness_bucket(q, d, label: int, mode: str = "whitespace") -> str:
    """hard / middle / easy from the label and surface Jaccard of the two keyword sets."""
    if label not in (0, 1):
        raise LabelError("label must be 0 or 1")
    tq = segment(q, mode) if isinstance(q, str) else list(q)
    td = segment(d, mode) if isinstance(d, str) else list(d)
    j = jaccard(tq, td)
    low = j <= 0.2
    high = j >= 0.7
    if (label == 1 and low) or (label == 0 and high):
        return "hard"
    if (label == 1 and high) or (label == 0 and low):
        return "easy"
    return "middle"


def length_bin(n: int) -> str:
    for lo, hi in LENGTH_BINS:
        if n >= lo and (hi is None or n <= hi):
            return f"{lo}-{hi}" if hi is not None else f"{lo}+"
    return "0"


@dataclass
class EvalReport:
    accuracy: float
    auc: float | None
    tp: int
    fp: int
    tn: int
    fn: int
    bucket_accuracy: dict[str, float | None]
    bucket_counts: dict[str, int]
    length_accuracy: dict[str, float | None]
    length_counts: dict[str, int]

    @property
    def size(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def lines(self) -> list[str]:
        """Machine-readable ``key=value`` lines."""
        def fmt(v):
            return "n/a" if v is None else f"{v:.6f}"

        out = [f"accuracy={fmt(self.accuracy)}", f"auc={fmt(self.auc)}",
               f"tp={self.tp}", f"fp={self.fp}", f"tn={self.tn}", f"fn={self.fn}"]
        for b in BUCKETS:
            out.append(f"bucket.{b}.accuracy={fmt(self.bucket_accuracy[b])}")
            out.append(f"bucket.{b}.count={self.bucket_counts[b]}")
        for name in self.length_accuracy:
            out.append(f"length.{name}.accuracy={fmt(self.length_accuracy[name])}")
            out.append(f"length.{name}.count={self.length_counts[name]}")
        return out

    def table(self) -> str:
        def fmt(v):
            return "n/a" if v is None else f"{100 * v:6.2f}"

        rows = [("overall", self.size, self.accuracy)]
        rows += [(f"bucket {b}", self.bucket_counts[b], self.bucket_accuracy[b]) for b in BUCKETS]
        rows += [(f"length {k}", self.length_counts[k], v) for k, v in self.length_accuracy.items()]
        out = [f"{'slice':<14}{'n':>7}  {'Acc.(%)':>8}"]
        out += [f"{name:<14}{n:>7}  {fmt(acc):>8}" for name, n, acc in rows]
        out.append(f"{'AUC.(%)':<14}{'':>7}  {fmt(self.auc):>8}")
        return "\n".join(out)


def evaluate_scores(scores, records, token_counts=None, mode: str = "whitespace") -> EvalReport:
    """Report for precomputed scores; ``token_counts`` gives (|q|, |d|) per record."""
    if len(records) == 0:
        raise EmptyDataset("evaluation set is empty")
    s = np.asarray(scores, dtype=np.float64)
    y = _labels([r.y for r in records])
    pred = s > 0.5
    tp = int((pred & (y == 1)).sum())
    fp = int((pred & (y == 0)).sum())
    tn = int((~pred & (y == 0)).sum())
    fn = int((~pred & (y == 1)).sum())
    try:
        a = auc(s, y)
    except UndefinedAUC:
        a = None
    correct = pred == (y == 1)
    buckets = np.array([hardness_bucket(r.q, r.d, r.y, mode) for r in records])
    if token_counts is None:
        token_counts = [(len(segment(r.q, mode)), len(segment(r.d, mode))) for r in records]
    bins = np.array([length_bin(max(nq, nd)) for nq, nd in token_counts])

    def acc_of(mask):
        return float(correct[mask].mean()) if mask.any() else None

    names = [length_bin(lo) for lo, _ in LENGTH_BINS]
    return EvalReport(
        accuracy=float(correct.mean()), auc=a, tp=tp, fp=fp, tn=tn, fn=fn,
        bucket_accuracy={b: acc_of(buckets == b) for b in BUCKETS},
        bucket_counts={b: int((buckets == b).sum()) for b in BUCKETS},
        length_accuracy={n: acc_of(bins == n) for n in names},
        length_counts={n: int((bins == n).sum()) for n in names},
    )


def evaluate(model, records) -> EvalReport:
    """Score every record with ``model.predict`` and build the report."""
    if len(records) == 0:
        raise EmptyDataset("evaluation set is empty")
    scores = model.predict([(r.q, r.d) for r in records])
    mode = getattr(getattr(model, "config", None), "segment_mode", "whitespace")
    counts = None
    if hasattr(model, "prepare"):
        counts = [(len(model.prepare(r.q)), len(model.prepare(r.d))) for r in records]
    return evaluate_scores(scores, records, counts, mode)


@dataclass
class EpochStats:
    epoch: int
    loss: float
    dev_accuracy: float | None = None
    dev_auc: float | None = None
    lr: float = 0.0


@dataclass
class TrainResult:
    history: list[EpochStats] = field(default_factory=list)
    best_epoch: int | None = None

    def lines(self) -> list[str]:
        def fmt(v):
            return "n/a" if v is None else f"{v:.6f}"

        return [f"epoch={h.epoch} loss={h.loss:.6f} dev_accuracy={fmt(h.dev_accuracy)} "
                f"dev_auc={fmt(h.dev_auc)}" for h in self.history]


def train(model, config: TrainingConfig, train_set, dev_set=None,
          on_epoch: Callable[[EpochStats], None] | None = None) -> TrainResult:
    """AdamW with linear warmup/decay over seeded shuffled batches.

    With a dev set, the parameters from the epoch with the best dev accuracy
    (earliest on ties) are restored at the end.
    """
    if len(train_set) == 0:
        raise EmptyDataset("training set is empty")
    shuffle_seq, dropout_seq = np.random.SeedSequence(config.seed).spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    dropout_rng = np.random.default_rng(dropout_seq)
    prepared = model.prepare_pairs([(r.q, r.d) for r in train_set])
    labels = _labels([r.y for r in train_set])
    n = len(prepared)
    bs = config.batch_size
    steps_per_epoch = math.ceil(n / bs)
    total = steps_per_epoch * config.epochs
    store = model.store
    result = TrainResult()
    best_acc = -1.0
    best_state = None
    step = 0
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        total_loss = 0.0
        lr = 0.0
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            store.zero_grads()
            sims = model.forward([prepared[i] for i in idx], True, dropout_rng)
            batch_loss = log_likelihood_loss(sims, labels[idx])
            ag.backward(batch_loss)
            step += 1
            lr = warmup_linear(step, total, config.peak_lr, config.warmup_fraction)
            adamw_step(store, lr, (config.adam_beta1, config.adam_beta2), config.adam_eps, config.weight_decay)
            total_loss += float(batch_loss.data) * len(idx)
        stats = EpochStats(epoch, total_loss / n, lr=lr)
        if dev_set is not None and len(dev_set):
            scores = model.predict([(r.q, r.d) for r in dev_set])
            y = _labels([r.y for r in dev_set])
            stats.dev_accuracy = accuracy(scores, y)
            try:
                stats.dev_auc = auc(scores, y)
            except UndefinedAUC:
                stats.dev_auc = None
            if stats.dev_accuracy > best_acc:
                best_acc = stats.dev_accuracy
                best_state = store.state()
                result.best_epoch = epoch
        result.history.append(stats)
        log.info("epoch %d loss %.4f dev_acc %s", epoch, stats.loss, stats.dev_accuracy)
        if on_epoch is not None:
            on_epoch(stats)
    if best_state is not None:
        store.load_state(best_state)
    return result


def format_comparison(rows: Sequence[tuple[str, float, float | None]]) -> str:
    """Ablation table: one (variant, accuracy, auc) row per model."""
    out = [f"{'Model':<24}{'Acc.(%)':>9}{'AUC.(%)':>9}"]
    for name, acc, a in rows:
        a_txt = "n/a" if a is None else f"{100 * a:.2f}"
        out.append(f"{name:<24}{100 * acc:>9.2f}{a_txt:>9}")
    return "\n".join(out)
