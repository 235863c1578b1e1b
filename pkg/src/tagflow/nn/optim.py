"""Adam, EMA shadow updates, and the warmup + cosine decay schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tagflow.errors import NonFiniteGradient
from tagflow.nn import kernels
from tagflow.nn.mlp import Grads, PolicyParams


@dataclass(frozen=True)
class LrSchedule:
    """Linear warmup to `peak`, then cosine decay to `final` at `total`."""

    warmup: int = 500
    total: int = 20_000
    peak: float = 1e-3
    final: float = 1e-4

    def __post_init__(self):
        if not (0 < self.warmup < self.total):
            raise ValueError("require 0 < warmup < total")
        if not (0 < self.final <= self.peak):
            raise ValueError("require 0 < final <= peak")


# schedule matching the reference large-model recipe; kept selectable so the
# harness can reproduce its lr curve exactly
PAPER_SCHEDULE = LrSchedule(warmup=1_000, total=30_000, peak=2.5e-5, final=2.5e-6)

EMA_DECAY = 0.999


def lr_at(schedule: LrSchedule, step: int) -> float:
    if not 0 <= step <= schedule.total:
        raise ValueError(f"step {step} outside [0, {schedule.total}]")
    if step <= schedule.warmup:
        return schedule.peak * step / schedule.warmup
    frac = (step - schedule.warmup) / (schedule.total - schedule.warmup)
    return schedule.final + 0.5 * (schedule.peak - schedule.final) * (1.0 + math.cos(math.pi * frac))


def adam_step(
    params: PolicyParams,
    grads: Grads,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> PolicyParams:
    """Bias-corrected Adam update, in place; increments the step counter."""
    for g in grads.w + grads.b:
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient("gradient contains NaN or inf")
    t = params.step + 1
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for i in range(params.spec.n_layers):
        for value, grad, m, v in (
            (params.weights[i], grads.w[i], params.m_w[i], params.v_w[i]),
            (params.biases[i], grads.b[i], params.m_b[i], params.v_b[i]),
        ):
            kernels.adam_update(
                kernels.flat(value),
                np.ascontiguousarray(grad).reshape(-1),
                kernels.flat(m),
                kernels.flat(v),
                lr,
                beta1,
                beta2,
                eps,
                c1,
                c2,
            )
    params.step = t
    return params


def ema_update(params: PolicyParams, decay: float = EMA_DECAY) -> PolicyParams:
    """shadow <- decay * shadow + (1 - decay) * weights, elementwise."""
    for shadow, value in zip(params.ema_weights + params.ema_biases, params.weights + params.biases):
        kernels.ema_shadow_update(kernels.flat(shadow), kernels.flat(value), decay)
    return params
