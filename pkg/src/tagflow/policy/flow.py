"""Flow-matching training algebra.

A clean chunk x0 and noise eps define the linear interpolant
x_tau = tau * eps + (1 - tau) * x0, whose ground-truth velocity is the
constant eps - x0. The regression target is the mean squared error of the
predicted velocity against that constant, averaged over every chunk
coordinate in the batch.
"""

from __future__ import annotations

import numpy as np

from tagflow.core.types import Observation
from tagflow.errors import NonFiniteLoss, ShapeMismatch
from tagflow.nn.mlp import Grads, PolicyParams, backward, forward_full
from tagflow.policy.encode import EncodeSpec, tau_features


def corrupt(chunk: np.ndarray, tau: float, eps: np.ndarray) -> np.ndarray:
    """Interpolant state x_tau = tau * eps + (1 - tau) * chunk."""
    chunk = np.asarray(chunk, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if chunk.shape != eps.shape:
        raise ShapeMismatch(f"chunk {chunk.shape} vs noise {eps.shape}")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    return tau * eps + (1.0 - tau) * chunk


def target_velocity(chunk: np.ndarray, eps: np.ndarray) -> np.ndarray:
    """Ground-truth velocity eps - chunk; independent of tau."""
    chunk = np.asarray(chunk, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if chunk.shape != eps.shape:
        raise ShapeMismatch(f"chunk {chunk.shape} vs noise {eps.shape}")
    return eps - chunk


def fm_loss(
    params: PolicyParams,
    spec: EncodeSpec,
    batch: list[tuple[Observation, np.ndarray]],
    gen: np.random.Generator,
) -> tuple[float, Grads]:
    """Monte-Carlo flow-matching loss and its parameter gradients.

    Per sample, tau ~ U[0, 1] and eps ~ N(0, I) are drawn from `gen`; the
    loss is the MSE over all chunk coordinates of the batch.
    """
    if not batch:
        raise ValueError("batch must be nonempty")
    b = len(batch)
    taus = gen.random(b)
    noises = gen.standard_normal((b, spec.horizon, 3))

    # assembled column-block-wise; identical values to per-row encode()
    for obs, chunk in batch:
        if obs.global_img.shape != spec.img or obs.wrist_img.shape != spec.wrist:
            raise ShapeMismatch("observation does not match the encode layout")
        if np.shape(chunk) != (spec.horizon, 3):
            raise ShapeMismatch(f"chunk {np.shape(chunk)} vs ({spec.horizon}, 3)")
    chunks = np.stack([np.asarray(chunk, dtype=float).ravel() for _, chunk in batch])
    noise_flat = noises.reshape(b, -1)
    x_tau = taus[:, None] * noise_flat + (1.0 - taus)[:, None] * chunks
    rows = np.concatenate(
        [
            np.stack([obs.global_img.ravel() for obs, _ in batch]),
            np.stack([obs.wrist_img.ravel() for obs, _ in batch]),
            np.stack([obs.proprio for obs, _ in batch]),
            np.stack([obs.instruction for obs, _ in batch]),
            x_tau,
            np.stack([tau_features(t) for t in taus]),
        ],
        axis=1,
    )
    targets = noise_flat - chunks
    pred, cache = forward_full(params, rows)
    resid = pred - targets
    loss = float(np.mean(resid**2))
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"flow-matching loss is {loss}")
    grads, _ = backward(params, cache, 2.0 * resid / resid.size, need_input_grad=False)
    return loss, grads
