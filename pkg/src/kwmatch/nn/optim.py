from __future__ import annotations

import numpy as np

from .params import ParameterStore


def warmup_linear(step: int, total_steps: int, peak_lr: float, warmup_fraction: float = 0.1) -> float:
    """Linear warmup to ``peak_lr`` over the first fraction of steps, then linear decay to 0.

    ``step`` is 1-based: the first optimizer update uses ``step=1``.
    """
    total_steps = max(int(total_steps), 1)
    warm = int(round(warmup_fraction * total_steps))
    if warm > 0 and step <= warm:
        return peak_lr * step / warm
    rest = total_steps - warm
    if rest <= 0:
        return peak_lr
    return peak_lr * max(total_steps - step, 0) / rest


def adamw_step(
    store: ParameterStore,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    weight_decay: float = 0.01,
) -> None:
    """One AdamW update over every trainable tensor in ``store``.

    Weight decay is decoupled: ``theta -= lr * wd * theta`` happens apart from
    the bias-corrected moment step. Missing gradients count as zeros.
    """
    b1, b2 = betas
    store.step += 1
    t = store.step
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for name, p in store.trainable():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = store.m.get(name)
        v = store.v.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        store.m[name] = m.astype(p.dtype, copy=False)
        store.v[name] = v.astype(p.dtype, copy=False)
        data = p.data
        if weight_decay:
            data = data - lr * weight_decay * data
        data = data - lr * (m / c1) / (np.sqrt(v / c2) + eps)
        p.data = data.astype(p.dtype, copy=False)
