"""Policy training loop with counterfactual calibration.

Each step samples a batch of (observation, chunk) pairs, substitutes the
global image with its target-agnostic counterpart at rate p_cf (the wrist
view always passes through), and applies one Adam step under the warmup +
cosine schedule followed by an EMA update. The loop is fully deterministic
given its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tagflow.core.rng import RngStream
from tagflow.core.types import Episode, Observation
from tagflow.counterfact.baselines import BaselineKind, baseline_image, substitute_training_obs
from tagflow.nn.mlp import MlpSpec, PolicyParams, clip_gradients, init_params
from tagflow.nn.optim import LrSchedule, adam_step, ema_update, lr_at
from tagflow.policy.encode import EncodeSpec
from tagflow.policy.flow import fm_loss


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for the training loop.

    Initialization balances the first layer per feature block and zeros
    the output layer; gradients are clipped to a global norm (0 disables).
    """

    p_cf: float = 0.1
    batch: int = 32
    steps: int = 20_000
    schedule: LrSchedule = field(default_factory=LrSchedule)
    substitution: BaselineKind = BaselineKind.ERASE
    hidden: tuple[int, ...] = (256, 256)
    activation: str = "relu"
    clip_norm: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_cf <= 1.0:
            raise ValueError("p_cf must lie in [0, 1]")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if self.clip_norm < 0.0:
            raise ValueError("clip_norm must be >= 0 (0 disables)")


def flatten_pairs(episodes: list[Episode]) -> list[tuple[Observation, np.ndarray]]:
    return [(s.obs, s.chunk) for ep in episodes for s in ep.steps]


def substitution_sources(
    episodes: list[Episode],
    kind: BaselineKind,
    erased: list[list[np.ndarray]] | None,
    *,
    img_size: int = 32,
) -> list[np.ndarray]:
    """Per-pair counterfactual global image for the chosen substitution kind.

    ERASE consumes the pipeline's per-frame output; BACKGROUND and BLACK
    are synthesized from each episode's own scenes.
    """
    sources: list[np.ndarray] = []
    if kind is BaselineKind.ERASE:
        if erased is None or len(erased) != len(episodes):
            raise ValueError("erased frames required for erase-kind substitution")
        for ep, frames in zip(episodes, erased):
            if len(frames) != len(ep.steps):
                raise ValueError(f"episode {ep.seed}: {len(frames)} frames for {len(ep.steps)} steps")
            sources.extend(frames)
    elif kind is BaselineKind.BLACK:
        for ep in episodes:
            black = np.zeros_like(ep.steps[0].obs.global_img)
            sources.extend([black] * len(ep.steps))
    elif kind is BaselineKind.BACKGROUND:
        for ep in episodes:
            bg = baseline_image(ep.scenes[0], BaselineKind.BACKGROUND, img_size=img_size)
            sources.extend([bg] * len(ep.steps))
    else:
        raise ValueError(f"{kind} is an inference-time baseline, not a training substitution")
    return sources


def train(
    episodes: list[Episode],
    erased: list[list[np.ndarray]] | None,
    cfg: TrainConfig,
    spec: EncodeSpec,
) -> tuple[PolicyParams, list[tuple[int, float, float]]]:
    """Train a velocity network; returns (params, loss curve rows).

    Curve rows are (step, loss, lr) sampled every 50 steps and at the
    final step.
    """
    if not episodes:
        raise ValueError("dataset is empty")
    pairs = flatten_pairs(episodes)
    sources = substitution_sources(episodes, cfg.substitution, erased, img_size=spec.img[0])

    root = RngStream(cfg.seed)
    mlp = MlpSpec((spec.input_dim, *cfg.hidden, spec.horizon * 3), (cfg.activation,))
    params = init_params(mlp, root.fork("init"), input_blocks=spec.block_dims, zero_final=True)
    gen = root.fork("steps").generator()

    curve: list[tuple[int, float, float]] = []
    n = len(pairs)
    for s in range(cfg.steps):
        idx = gen.integers(0, n, size=cfg.batch)
        batch = []
        for i in idx:
            obs, chunk = pairs[i]
            obs = substitute_training_obs(obs, sources[i], gen, cfg.p_cf)
            batch.append((obs, chunk))
        loss, grads = fm_loss(params, spec, batch, gen)
        if cfg.clip_norm > 0.0:
            clip_gradients(grads, cfg.clip_norm)
        adam_step(params, grads, lr_at(cfg.schedule, min(s, cfg.schedule.total)))
        ema_update(params)
        if s % 50 == 0 or s == cfg.steps - 1:
            curve.append((s, loss, lr_at(cfg.schedule, min(s, cfg.schedule.total))))
    return params, curve
