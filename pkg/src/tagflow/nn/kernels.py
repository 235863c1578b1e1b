"""Fused elementwise update kernels.

The Adam and EMA updates are memory-bound; the numpy formulations walk
each parameter tensor a dozen times. These numba kernels do one fused
pass per tensor. Elementwise with no cross-element reductions, so they
are deterministic, including under the parallel scheduler.
"""

from __future__ import annotations

import math

import numba
import numpy as np


@numba.njit(cache=True, parallel=True)
def adam_update(value, grad, m, v, lr, beta1, beta2, eps, c1, c2):  # pragma: no cover
    for i in numba.prange(value.size):
        g = grad[i]
        mi = beta1 * m[i] + (1.0 - beta1) * g
        vi = beta2 * v[i] + (1.0 - beta2) * g * g
        m[i] = mi
        v[i] = vi
        value[i] -= lr * (mi / c1) / (math.sqrt(vi / c2) + eps)


@numba.njit(cache=True, parallel=True)
def ema_shadow_update(shadow, value, decay):  # pragma: no cover
    for i in numba.prange(shadow.size):
        shadow[i] = decay * shadow[i] + (1.0 - decay) * value[i]


def flat(tensor: np.ndarray) -> np.ndarray:
    view = tensor.reshape(-1)
    if view.base is not tensor and view.base is not getattr(tensor, "base", None):
        raise ValueError("parameter tensor must be contiguous")
    return view
