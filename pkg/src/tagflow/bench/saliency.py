"""Gradient saliency over the global image.

The heatmap is the channel-summed absolute gradient of the squared
velocity norm with respect to the global image, max-normalized to [0, 1].
It can be taken through the conditional branch alone or through the
guided affine combination, in which case only the conditional branch
depends on the inspected image and the residual weight w scales its
contribution.
"""

from __future__ import annotations

import numpy as np

from tagflow.core.types import Observation
from tagflow.nn.mlp import PolicyParams, backward, forward_full
from tagflow.policy.encode import EncodeSpec, encode


def _global_grad(
    params: PolicyParams,
    spec: EncodeSpec,
    obs: Observation,
    chunk: np.ndarray,
    tau: float,
    upstream: np.ndarray,
    *,
    use_ema: bool,
) -> np.ndarray:
    row = encode(spec, obs, chunk, tau)
    _, cache = forward_full(params, row, use_ema=use_ema)
    _, dx = backward(params, cache, upstream)
    return dx[spec.global_slice].reshape(spec.img)


def saliency(
    params: PolicyParams,
    spec: EncodeSpec,
    obs: Observation,
    chunk: np.ndarray,
    tau: float,
    *,
    use_ema: bool = True,
    normalize: bool = True,
) -> np.ndarray:
    """Single-branch heatmap: d||v||^2 / d(global image), |.|, channel sum."""
    row = encode(spec, obs, chunk, tau)
    v, cache = forward_full(params, row, use_ema=use_ema)
    _, dx = backward(params, cache, 2.0 * v)
    grad = dx[spec.global_slice].reshape(spec.img)
    heat = np.abs(grad).sum(axis=-1)
    return _normalized(heat) if normalize else heat


def tag_saliency(
    params: PolicyParams,
    spec: EncodeSpec,
    obs_cond: Observation,
    obs_uncond: Observation,
    chunk: np.ndarray,
    tau: float,
    w: float,
    *,
    use_ema: bool = True,
    normalize: bool = True,
) -> np.ndarray:
    """Heatmap of the guided prediction w.r.t. the conditional global image.

    v_guided = v_u + w (v_c - v_u), so the gradient through the inspected
    image is w * J_c^T (2 v_guided).
    """
    row_c = encode(spec, obs_cond, chunk, tau)
    v_c, cache_c = forward_full(params, row_c, use_ema=use_ema)
    row_u = encode(spec, obs_uncond, chunk, tau)
    v_u, _ = forward_full(params, row_u, use_ema=use_ema)
    v_tag = v_u + w * (v_c - v_u)
    _, dx = backward(params, cache_c, 2.0 * w * v_tag)
    grad = dx[spec.global_slice].reshape(spec.img)
    heat = np.abs(grad).sum(axis=-1)
    return _normalized(heat) if normalize else heat


def _normalized(heat: np.ndarray) -> np.ndarray:
    peak = heat.max()
    return heat / peak if peak > 0.0 else heat
