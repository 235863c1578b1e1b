"""Fully-connected network with exact reverse-mode gradients.

Weights are float64 numpy arrays; forward accepts a single vector or a
batch of row vectors. The backward pass returns parameter gradients plus
the gradient with respect to the input, which doubles as the saliency
hook. Everything is checked against central finite differences in the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from tagflow.core.rng import RngStream
from tagflow.errors import ShapeMismatch

_ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths input -> hidden... -> output plus one activation name
    per hidden layer (a single string applies to all hidden layers)."""

    widths: tuple[int, ...]
    activations: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.widths) < 2 or any(w <= 0 for w in self.widths):
            raise ValueError(f"need >= 2 positive widths, got {self.widths}")
        n_hidden = len(self.widths) - 2
        acts = self.activations or ("relu",) * n_hidden
        if isinstance(acts, str):
            acts = (acts,) * n_hidden
        if len(acts) == 1 and n_hidden > 1:
            acts = acts * n_hidden
        if len(acts) != n_hidden:
            raise ValueError(f"{n_hidden} hidden layers but {len(acts)} activations")
        bad = [a for a in acts if a not in _ACTIVATIONS]
        if bad:
            raise ValueError(f"unknown activations {bad}; choose from {_ACTIVATIONS}")
        object.__setattr__(self, "activations", tuple(acts))

    @property
    def n_layers(self) -> int:
        return len(self.widths) - 1


@dataclass
class PolicyParams:
    """Trainable state: weights, EMA shadow, Adam moments, step counter.

    `input_scale`, when set, is a fixed (non-trained) per-feature scaling
    applied before the first layer. It re-parametrizes the same affine
    map, but under Adam's per-coordinate steps it keeps wide feature
    blocks (images) from dominating each unit's effective bias movement.
    """

    spec: MlpSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    ema_weights: list[np.ndarray]
    ema_biases: list[np.ndarray]
    m_w: list[np.ndarray] = field(default_factory=list)
    v_w: list[np.ndarray] = field(default_factory=list)
    m_b: list[np.ndarray] = field(default_factory=list)
    v_b: list[np.ndarray] = field(default_factory=list)
    step: int = 0
    input_scale: np.ndarray | None = None

    def clone_ema_snapshot(self) -> "PolicyParams":
        """Immutable-by-convention copy holding the EMA weights as weights."""
        ema_w = [w.copy() for w in self.ema_weights]
        ema_b = [b.copy() for b in self.ema_biases]
        scale = None if self.input_scale is None else self.input_scale.copy()
        return PolicyParams(self.spec, ema_w, ema_b, ema_w, ema_b, step=self.step, input_scale=scale)


@dataclass
class Grads:
    w: list[np.ndarray]
    b: list[np.ndarray]


def block_input_scale(input_blocks: tuple[int, ...]) -> np.ndarray:
    """1/sqrt(block width) per feature: equal per-block variance pre-layer."""
    return np.concatenate([np.full(dim, 1.0 / np.sqrt(dim)) for dim in input_blocks])


def init_params(
    spec: MlpSpec,
    rng: RngStream,
    *,
    input_blocks: tuple[int, ...] | None = None,
    zero_final: bool = False,
) -> PolicyParams:
    """He-style init; the EMA shadow starts equal to the weights.

    `input_blocks` partitions the input into feature groups (images,
    proprio, action, time). When given, a fixed 1/sqrt(width) scaling per
    block is installed and the first layer is drawn at std sqrt(2/n_blocks),
    so each block contributes comparable variance no matter how wide it is.
    `zero_final` starts the output layer at zero so the initial prediction
    is the zero field.
    """
    gen = rng.generator()
    weights, biases = [], []
    scale = None
    for layer, (din, dout) in enumerate(zip(spec.widths[:-1], spec.widths[1:])):
        if layer == 0 and input_blocks is not None:
            if sum(input_blocks) != din:
                raise ShapeMismatch(f"input blocks {input_blocks} do not sum to {din}")
            scale = block_input_scale(tuple(input_blocks))
            w = gen.standard_normal((dout, din)) * np.sqrt(2.0 / len(input_blocks))
        else:
            w = gen.standard_normal((dout, din)) * np.sqrt(2.0 / din)
        weights.append(w)
        biases.append(np.zeros(dout))
    if zero_final:
        weights[-1][:] = 0.0
    params = PolicyParams(
        spec,
        weights,
        biases,
        [w.copy() for w in weights],
        [b.copy() for b in biases],
        input_scale=scale,
    )
    params.m_w = [np.zeros_like(w) for w in weights]
    params.v_w = [np.zeros_like(w) for w in weights]
    params.m_b = [np.zeros_like(b) for b in biases]
    params.v_b = [np.zeros_like(b) for b in biases]
    return params


def clip_gradients(grads: Grads, max_norm: float) -> Grads:
    """Scale all gradients so their global L2 norm is at most max_norm."""
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.w + grads.b))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.w + grads.b:
            g *= scale
    return grads


def _check_input(params: PolicyParams, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.spec.widths[0]:
        raise ShapeMismatch(f"input width {x.shape} incompatible with {params.spec.widths[0]}")
    return x, single


def _act(name: str, z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) if name == "relu" else np.tanh(z)


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    return (z > 0.0).astype(float) if name == "relu" else 1.0 - a * a


def forward(params: PolicyParams, x: np.ndarray, *, use_ema: bool = False) -> np.ndarray:
    """Affine + activation composition; the final layer is linear."""
    y, _ = forward_full(params, x, use_ema=use_ema)
    return y


def forward_full(params: PolicyParams, x: np.ndarray, *, use_ema: bool = False):
    """Forward pass that also returns the caches backward needs."""
    x, single = _check_input(params, x)
    if params.input_scale is not None:
        x = x * params.input_scale
    ws = params.ema_weights if use_ema else params.weights
    bs = params.ema_biases if use_ema else params.biases
    acts = [x]
    pre = []
    h = x
    for layer in range(params.spec.n_layers):
        z = h @ ws[layer].T + bs[layer]
        pre.append(z)
        if layer < params.spec.n_layers - 1:
            h = _act(params.spec.activations[layer], z)
        else:
            h = z
        acts.append(h)
    out = h[0] if single else h
    return out, (acts, pre, single, use_ema)


def backward(params: PolicyParams, cache, upstream: np.ndarray, *, need_input_grad: bool = True):
    """Exact gradients of the forward pass.

    `upstream` is dLoss/dOutput with the same shape as the output. Returns
    (Grads, dLoss/dInput); the input gradient is None when not requested
    (it costs one extra matmul that training does not need).
    """
    acts, pre, single, use_ema = cache
    ws = params.ema_weights if use_ema else params.weights
    g = np.asarray(upstream, dtype=float)
    if single:
        g = g[None, :]
    if g.shape != acts[-1].shape:
        raise ShapeMismatch(f"upstream {g.shape} does not match output {acts[-1].shape}")

    gw: list[np.ndarray] = [None] * params.spec.n_layers
    gb: list[np.ndarray] = [None] * params.spec.n_layers
    for layer in range(params.spec.n_layers - 1, -1, -1):
        gw[layer] = g.T @ acts[layer]
        gb[layer] = g.sum(axis=0)
        if layer == 0 and not need_input_grad:
            return Grads(gw, gb), None
        g = g @ ws[layer]
        if layer > 0:
            g = g * _act_grad(params.spec.activations[layer - 1], pre[layer - 1], acts[layer])
    if params.input_scale is not None:
        g = g * params.input_scale  # chain back to the unscaled features
    dx = g[0] if single else g
    return Grads(gw, gb), dx
