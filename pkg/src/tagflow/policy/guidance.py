"""Dual-branch guided velocity and Euler ODE sampling.

The guided velocity contrasts the same network under the original
observation and under a target-agnostic one:

    v_guided = v_uncond + w * (v_cond - v_uncond)

w = 1 short-circuits to the conditional branch bitwise. Sampling starts
from Gaussian noise at tau = 1 and Euler-integrates to tau = 0 on a
uniform grid; action bounds are applied only after the final step so the
linear flow geometry is preserved mid-integration.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from tagflow.core.rng import RngStream
from tagflow.core.types import Observation
from tagflow.counterfact.baselines import BaselineKind
from tagflow.errors import NonFiniteState
from tagflow.nn.mlp import PolicyParams, forward
from tagflow.policy.encode import EncodeSpec, encode

# (obs, noisy chunk, tau) -> velocity, both chunk-shaped (H, 3)
VelocityFn = Callable[[Observation, np.ndarray, float], np.ndarray]


class ReplanMode(Enum):
    FULL_CHUNK = "chunk"
    FIRST_ACTION = "first"


@dataclass(frozen=True)
class InferConfig:
    w: float = 1.25
    steps: int = 10
    uncond: BaselineKind = BaselineKind.BACKGROUND
    replan: ReplanMode = ReplanMode.FULL_CHUNK
    realtime_jitter: float = 0.0
    use_ema: bool = True

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("need at least one integration step")
        if not np.isfinite(self.w):
            raise ValueError("guidance scale must be finite")


def make_velocity_fn(params: PolicyParams, spec: EncodeSpec, *, use_ema: bool = True) -> VelocityFn:
    """Wrap trained parameters as a velocity field over (obs, chunk, tau)."""

    def velocity(obs: Observation, chunk: np.ndarray, tau: float) -> np.ndarray:
        row = encode(spec, obs, chunk, tau)
        return forward(params, row, use_ema=use_ema).reshape(spec.horizon, 3)

    return velocity


def tag_velocity(
    model: VelocityFn,
    chunk: np.ndarray,
    tau: float,
    obs_cond: Observation,
    obs_uncond: Observation,
    w: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Guided velocity and the raw residual (v_cond - v_uncond).

    Exactly two model evaluations. The caller guarantees obs_uncond
    differs from obs_cond only in the global image.
    """
    v_cond = model(obs_cond, chunk, tau)
    v_uncond = model(obs_uncond, chunk, tau)
    residual = v_cond - v_uncond
    if w == 1.0:
        return v_cond, residual
    return v_uncond + w * residual, residual


def integrate(
    model: VelocityFn,
    obs_cond: Observation,
    obs_uncond: Observation,
    cfg: InferConfig,
    rng: RngStream,
    *,
    horizon: int = 8,
    a_max: float = 0.08,
) -> np.ndarray:
    """Sample an action chunk by Euler integration from tau=1 to tau=0.

    Raises NonFiniteState if any intermediate diverges (the symptom of an
    excessive guidance scale) instead of masking it.
    """
    gen = rng.generator()
    x = gen.standard_normal((horizon, 3))
    n = cfg.steps
    taus = 1.0 - np.arange(n + 1) / n
    for i in range(n):
        v, _ = tag_velocity(model, x, float(taus[i]), obs_cond, obs_uncond, cfg.w)
        x = x + (taus[i + 1] - taus[i]) * v
        if not np.all(np.isfinite(x)):
            raise NonFiniteState(f"non-finite chunk at integration step {i} (w={cfg.w})")
    x[:, :2] = np.clip(x[:, :2], -a_max, a_max)
    x[:, 2] = np.clip(x[:, 2], -1.0, 1.0)
    return x
