"""MLPs, multi-head attention and layer normalization on top of the autograd core."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ShapeError
from . import autograd as ag
from .autograd import Tensor
from .params import ParameterStore


@dataclass(frozen=True)
class MlpSpec:
    """Layer output widths, one activation per layer, dropout before each layer."""

    widths: tuple[int, ...]
    activations: tuple[str, ...]
    dropout: float = 0.0

    def __post_init__(self):
        if not self.widths:
            raise ConfigError("an MLP needs at least one layer")
        if any(w <= 0 for w in self.widths):
            raise ConfigError(f"MLP widths must be positive: {self.widths}")
        if len(self.activations) != len(self.widths):
            raise ConfigError("one activation per layer")
        for a in self.activations:
            if a not in ag.ACTIVATIONS:
                raise ConfigError(f"unknown activation {a!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")


def init_mlp(store: ParameterStore, prefix: str, in_width: int, spec: MlpSpec) -> list[tuple[Tensor, Tensor]]:
    layers = []
    fan_in = in_width
    for i, w in enumerate(spec.widths):
        W = store.xavier(f"{prefix}.{i}.W", fan_in, w)
        b = store.zeros(f"{prefix}.{i}.b", (w,))
        layers.append((W, b))
        fan_in = w
    return layers


def mlp_forward(spec: MlpSpec, params, x, train_mode: bool = False, rng=None) -> Tensor:
    """y_l = act_l(drop(y_{l-1}) @ W_l + b_l), row-vector convention."""
    x = ag.as_tensor(x)
    if len(params) != len(spec.widths):
        raise ShapeError(f"MLP has {len(spec.widths)} layers but {len(params)} parameter pairs")
    for i, ((W, b), act) in enumerate(zip(params, spec.activations)):
        if x.shape[-1] != W.shape[0]:
            raise ShapeError(f"layer {i}: input width {x.shape[-1]} but weight expects {W.shape[0]}")
        x = ag.dropout(x, spec.dropout, rng, train_mode)
        x = ag.ACTIVATIONS[act](x @ W + b)
    return x


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """(x - mean) / sqrt(var + eps) * gain + bias over the last axis (population variance)."""
    x = ag.as_tensor(x)
    return ag.layer_norm_op(x, ag.as_tensor(gain, x), ag.as_tensor(bias, x), eps)


def init_attention(store: ParameterStore, prefix: str, width: int, heads: int) -> dict[str, Tensor]:
    if width % heads:
        raise ConfigError(f"attention width {width} not divisible by {heads} heads")
    return {k: store.xavier(f"{prefix}.{k}", width, width) for k in ("W_Q", "W_K", "W_V", "W_O")}


def multi_head_attention(L, params, heads: int, key_mask=None, query_rows=None, return_weights=False):
    """Scaled dot-product attention with ``heads`` heads over a sequence.

    ``L`` is (S, D) or (P, S, D). Head i uses column block i of W_Q, W_K and
    W_V (each D x D); the concatenated heads are projected by W_O.
    ``key_mask`` (P, S) marks valid keys. ``query_rows`` restricts which
    positions are computed as queries (a slice), e.g. ``slice(0, 1)`` for
    the first position only.
    """
    L = ag.as_tensor(L)
    squeeze = L.ndim == 2
    if squeeze:
        L = L.reshape(1, *L.shape)
        if key_mask is not None:
            key_mask = np.asarray(key_mask)[None]
    P, S, D = L.shape
    if D % heads:
        raise ConfigError(f"attention width {D} not divisible by {heads} heads")
    dk = D // heads
    Lq = L if query_rows is None else L[:, query_rows, :]
    Sq = Lq.shape[1]

    def split(t, n):
        return t.reshape(P, n, heads, dk).transpose(0, 2, 1, 3)

    Q = split(Lq @ params["W_Q"], Sq)
    K = split(L @ params["W_K"], S)
    V = split(L @ params["W_V"], S)
    scores = (Q @ K.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(dk))
    mask = None
    if key_mask is not None:
        mask = np.where(np.asarray(key_mask, dtype=bool), 0.0, -1e9).astype(L.dtype)[:, None, None, :]
    A = ag.softmax(scores, axis=-1, mask=mask)
    heads_out = (A @ V).transpose(0, 2, 1, 3).reshape(P, Sq, D)
    out = heads_out @ params["W_O"]
    if squeeze:
        out = out.reshape(Sq, D)
        A = A.reshape(heads, Sq, S)
    return (out, A) if return_weights else out
