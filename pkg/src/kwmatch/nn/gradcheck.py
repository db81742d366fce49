from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import autograd as ag
from .autograd import Tensor


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst: tuple[str, tuple] | None
    checked: int
    excluded: int
    per_param: dict[str, float] = field(default_factory=dict)

    def passed(self, tolerance: float) -> bool:
        return self.checked > 0 and self.max_rel_error < tolerance


def grad_check(
    fn: Callable[[], Tensor],
    params,
    eps: float = 1e-5,
    atol: float = 1e-7,
    names=None,
) -> GradCheckReport:
    """Compare analytic gradients of ``fn()`` with central differences.

    ``params`` is a ParameterStore or a mapping name -> Tensor. Each
    coordinate is perturbed by +-eps; a coordinate is excluded when either
    perturbation changes the branch pattern of a ReLU/abs/clip (or any other
    recorded discrete choice) relative to the unperturbed pass. Relative
    error is |a - n| / max(|a|, |n|, atol).
    """
    items = list(params.tensors.items()) if hasattr(params, "tensors") else list(params.items())
    items = [(n, t) for n, t in items if t.requires_grad and (names is None or n in names)]
    for _, t in items:
        t.grad = np.zeros_like(t.data)
    with ag.record_kinks() as base:
        loss = fn()
    base = list(base)
    ag.backward(loss)
    analytic = {n: np.array(t.grad, dtype=np.float64) for n, t in items}

    worst = None
    max_err = 0.0
    checked = excluded = 0
    per_param = {}
    with ag.no_grad():
        for name, t in items:
            flat = t.data.reshape(-1)
            g_flat = analytic[name].reshape(-1)
            p_err = 0.0
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                with ag.record_kinks() as sig_p:
                    fp = float(fn().data)
                flat[i] = orig - eps
                with ag.record_kinks() as sig_m:
                    fm = float(fn().data)
                flat[i] = orig
                if sig_p != base or sig_m != base:
                    excluded += 1
                    continue
                num = (fp - fm) / (2.0 * eps)
                a = g_flat[i]
                err = abs(a - num) / max(abs(a), abs(num), atol)
                checked += 1
                p_err = max(p_err, err)
                if worst is None or err > max_err:
                    max_err = err
                    worst = (name, np.unravel_index(i, t.shape))
            per_param[name] = p_err
    return GradCheckReport(max_err, worst, checked, excluded, per_param)
