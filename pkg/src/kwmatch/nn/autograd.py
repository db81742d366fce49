"""Tape-based reverse-mode differentiation over numpy arrays.

Every op returns a new :class:`Tensor` that remembers its parents and a
closure pushing the incoming gradient back to them. :func:`backward` walks
the graph in reverse topological order. Gradients accumulate by rebinding
(``p.grad = p.grad + g``); nothing is updated in place, so views handed to
closures stay valid.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from ..errors import NoTraceError, ShapeError

_grad_enabled = True
_kink_log: list | None = None


@contextmanager
def no_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


@contextmanager
def record_kinks():
    """Collect the branch pattern of every non-smooth op evaluated inside.

    Two forward passes with equal logs went through the same ReLU/abs/clip
    branches (and the same discrete choices reported through
    :func:`note_kink`), so finite differences across them are valid.
    """
    global _kink_log
    prev = _kink_log
    _kink_log = []
    try:
        yield _kink_log
    finally:
        _kink_log = prev


def note_kink(pattern) -> None:
    if _kink_log is not None:
        arr = np.asarray(pattern)
        if arr.dtype == bool:
            _kink_log.append(np.packbits(arr.ravel()).tobytes())
        else:
            _kink_log.append(arr.tobytes())


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, dtype={self.dtype}, grad={self.requires_grad})"

    def __len__(self):
        return len(self.data)

    # arithmetic sugar
    def __add__(self, o):
        return add(self, o)

    __radd__ = __add__

    def __sub__(self, o):
        return sub(self, o)

    def __rsub__(self, o):
        return sub(o, self)

    def __mul__(self, o):
        return mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        return div(self, o)

    def __rtruediv__(self, o):
        return div(o, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, o):
        return matmul(self, o)

    def __rmatmul__(self, o):
        return matmul(o, self)

    def __getitem__(self, key):
        return getitem(self, key)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes or None)

    @property
    def T(self):
        return transpose(self, None)


def as_tensor(x, like: Tensor | None = None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(x, dtype=dtype))


def _acc(p: Tensor, g) -> None:
    if p.requires_grad:
        p.grad = g if p.grad is None else p.grad + g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def _node(data, parents, backward) -> Tensor:
    track = _grad_enabled and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=track)
    if track:
        out._parents = parents
        out._backward = backward
    return out


def _pair(a, b):
    if isinstance(a, Tensor):
        return a, as_tensor(b, a)
    b = as_tensor(b)
    return as_tensor(a, b), b


def add(a, b) -> Tensor:
    a, b = _pair(a, b)

    def bw(g):
        _acc(a, _unbroadcast(g, a.shape))
        _acc(b, _unbroadcast(g, b.shape))

    return _node(a.data + b.data, (a, b), bw)


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)

    def bw(g):
        _acc(a, _unbroadcast(g, a.shape))
        _acc(b, _unbroadcast(-g, b.shape))

    return _node(a.data - b.data, (a, b), bw)


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)

    def bw(g):
        if a.requires_grad:
            _acc(a, _unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            _acc(b, _unbroadcast(g * a.data, b.shape))

    return _node(a.data * b.data, (a, b), bw)


def div(a, b) -> Tensor:
    a, b = _pair(a, b)
    out = a.data / b.data

    def bw(g):
        if a.requires_grad:
            _acc(a, _unbroadcast(g / b.data, a.shape))
        if b.requires_grad:
            _acc(b, _unbroadcast(-g * out / b.data, b.shape))

    return _node(out, (a, b), bw)


def matmul(a, b) -> Tensor:
    a, b = _pair(a, b)
    if b.ndim < 2:
        raise ShapeError("matmul right operand must be at least 2-D")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul shapes {a.shape} and {b.shape} do not align")
    out = a.data @ b.data

    def bw(g):
        ad, bd = a.data, b.data
        if a.requires_grad:
            _acc(a, _unbroadcast(g @ np.swapaxes(bd, -1, -2), a.shape))
        if b.requires_grad:
            if ad.ndim == 1:
                gb = np.multiply.outer(ad, g)
            elif bd.ndim == 2:
                k, m = bd.shape
                gb = ad.reshape(-1, k).T @ g.reshape(-1, m)
            else:
                gb = _unbroadcast(np.swapaxes(ad, -1, -2) @ g, bd.shape)
            _acc(b, gb)

    return _node(out, (a, b), bw)


def relu(x: Tensor) -> Tensor:
    pos = x.data > 0
    note_kink(pos)

    def bw(g):
        _acc(x, g * pos)

    return _node(np.where(pos, x.data, 0).astype(x.dtype, copy=False), (x,), bw)


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    # split by sign so exp never overflows
    e = np.exp(-np.abs(d))
    out = np.where(d >= 0, 1.0 / (1.0 + e), e / (1.0 + e)).astype(x.dtype, copy=False)

    def bw(g):
        _acc(x, g * out * (1 - out))

    return _node(out, (x,), bw)


def tanh(x: Tensor) -> Tensor:
    out = np.tanh(x.data)

    def bw(g):
        _acc(x, g * (1 - out * out))

    return _node(out, (x,), bw)


def identity(x: Tensor) -> Tensor:
    return x


def tabs(x: Tensor) -> Tensor:
    sign = np.sign(x.data)
    note_kink(x.data >= 0)

    def bw(g):
        _acc(x, g * sign)

    return _node(np.abs(x.data), (x,), bw)


def log(x: Tensor) -> Tensor:
    def bw(g):
        _acc(x, g / x.data)

    return _node(np.log(x.data), (x,), bw)


def clip(x: Tensor, lo: float, hi: float) -> Tensor:
    inside = (x.data >= lo) & (x.data <= hi)
    note_kink(inside)

    def bw(g):
        _acc(x, g * inside)

    return _node(np.clip(x.data, lo, hi), (x,), bw)


def tsum(x: Tensor, axis=None, keepdims=False) -> Tensor:
    shape = x.shape

    def bw(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _acc(x, np.broadcast_to(g, shape))

    return _node(np.asarray(x.data.sum(axis=axis, keepdims=keepdims)), (x,), bw)


def mean(x: Tensor, axis=None, keepdims=False) -> Tensor:
    n = x.data.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return tsum(x, axis, keepdims) * (1.0 / n)


def reshape(x: Tensor, shape) -> Tensor:
    old = x.shape

    def bw(g):
        _acc(x, g.reshape(old))

    return _node(x.data.reshape(shape), (x,), bw)


def transpose(x: Tensor, axes=None) -> Tensor:
    inv = None if axes is None else tuple(np.argsort(axes))

    def bw(g):
        _acc(x, np.transpose(g, inv))

    return _node(np.transpose(x.data, axes), (x,), bw)


def getitem(x: Tensor, key) -> Tensor:
    def bw(g):
        full = np.zeros(x.shape, dtype=g.dtype)
        np.add.at(full, key, g)
        _acc(x, full)

    return _node(x.data[key], (x,), bw)


def take(x: Tensor, index) -> Tensor:
    """Gather rows (first axis) of ``x``; ``index`` may have any shape."""
    index = np.asarray(index, dtype=np.intp)

    def bw(g):
        full = np.zeros(x.shape, dtype=g.dtype)
        np.add.at(full, index.reshape(-1), g.reshape((-1,) + x.shape[1:]))
        _acc(x, full)

    return _node(x.data[index], (x,), bw)


def segment_sum(x: Tensor, segments, n_segments: int) -> Tensor:
    """out[s] = sum of x[i] with segments[i] == s, for 1-D ``x``."""
    segments = np.asarray(segments, dtype=np.intp)
    out = np.bincount(segments, weights=x.data, minlength=n_segments).astype(x.dtype, copy=False)

    def bw(g):
        _acc(x, g[segments])

    return _node(out, (x,), bw)


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if len(tensors) == 1:
        return tensors[0]
    ax = axis % tensors[0].ndim
    sizes = [t.shape[ax] for t in tensors]
    cuts = np.cumsum(sizes)[:-1]

    def bw(g):
        for t, piece in zip(tensors, np.split(g, cuts, axis=ax)):
            _acc(t, piece)

    return _node(np.concatenate([t.data for t in tensors], axis=ax), tuple(tensors), bw)


def softmax(x: Tensor, axis: int = -1, mask=None) -> Tensor:
    """Softmax with max subtraction; ``mask`` is an additive constant (0 or large negative)."""
    z = x.data if mask is None else x.data + mask
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        _acc(x, out * (g - (g * out).sum(axis=axis, keepdims=True)))

    return _node(out, (x,), bw)


def layer_norm_op(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = xhat * gain.data + bias.data

    def bw(g):
        if gain.requires_grad:
            _acc(gain, _unbroadcast(g * xhat, gain.shape))
        if bias.requires_grad:
            _acc(bias, _unbroadcast(g, bias.shape))
        if x.requires_grad:
            gx = g * gain.data
            gx = inv * (gx - gx.mean(axis=-1, keepdims=True)
                        - xhat * (gx * xhat).mean(axis=-1, keepdims=True))
            _acc(x, gx)

    return _node(out, (x, gain, bias), bw)


def dropout(x: Tensor, p: float, rng: np.random.Generator | None, train: bool) -> Tensor:
    """Inverted dropout; the identity when not training."""
    if not train or p <= 0.0:
        return x
    if rng is None:
        raise ValueError("dropout in training mode needs an rng")
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / np.asarray(1.0 - p, dtype=x.dtype)
    return mul(x, Tensor(keep))


ACTIVATIONS = {
    "relu": relu,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "identity": identity,
}


def backward(loss: Tensor) -> None:
    """Propagate d(loss)/d(.) to every reachable tensor with ``requires_grad``."""
    if not isinstance(loss, Tensor) or loss._backward is None:
        raise NoTraceError("backward() needs the scalar output of a recorded forward pass")
    if loss.data.size != 1:
        raise ShapeError(f"backward() needs a scalar, got shape {loss.shape}")
    order = []
    visited = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p._backward is not None and id(p) not in visited:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        g = node.grad
        node.grad = None
        if g is not None:
            node._backward(g)
        node._backward = None
        node._parents = ()
