"""Target-agnostic baseline images and training-time substitution.

Static kinds (erase / background / black) are computed once from the
episode's initial scene and reused for every frame, which is what keeps
the unconditional branch temporally stable. Realtime kinds are recomputed
per frame and exist to measure how that stability matters.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from tagflow.core.types import Episode, Observation
from tagflow.sim.render import RenderMode, View, object_pixel_mask, render
from tagflow.sim.scene import Scene, drop_target


class BaselineKind(Enum):
    ERASE = "erase"
    BACKGROUND = "background"
    BLACK = "black"
    REALTIME_MASK_GRAY = "rt_mask_gray"
    REALTIME_MASK_BLACK = "rt_mask_black"
    REALTIME_ERASE = "rt_erase"


_STATIC = {BaselineKind.ERASE, BaselineKind.BACKGROUND, BaselineKind.BLACK}


def is_static(kind: BaselineKind) -> bool:
    return kind in _STATIC


def baseline_image(scene: Scene, kind: BaselineKind, *, img_size: int = 32) -> np.ndarray:
    """Target-agnostic global image for one scene."""
    if kind is BaselineKind.BLACK:
        return np.zeros((img_size, img_size, 3))
    if kind is BaselineKind.BACKGROUND:
        return render(scene, View.GLOBAL, RenderMode.BACKGROUND_ONLY, img_size=img_size)
    if kind in (BaselineKind.ERASE, BaselineKind.REALTIME_ERASE):
        return render(drop_target(scene), View.GLOBAL, RenderMode.FULL, img_size=img_size)
    img = render(scene, View.GLOBAL, RenderMode.FULL, img_size=img_size).copy()
    cover = object_pixel_mask(scene, scene.target_index, img_size=img_size)
    img[cover] = 0.5 if kind is BaselineKind.REALTIME_MASK_GRAY else 0.0
    return img


def make_baseline(episode: Episode, kind: BaselineKind, *, img_size: int = 32) -> list[np.ndarray]:
    """Per-recorded-frame baseline images for an episode.

    Static kinds return the initial-scene image repeated; realtime kinds
    re-derive the image from the scene at each recorded step.
    """
    if is_static(kind):
        img = baseline_image(episode.scenes[0], kind, img_size=img_size)
        return [img] * len(episode.steps)
    return [
        baseline_image(episode.scenes[s.t], kind, img_size=img_size) for s in episode.steps
    ]


def substitute_training_obs(
    obs: Observation, erased_global: np.ndarray, gen: np.random.Generator, p_cf: float
) -> Observation:
    """With probability p_cf swap in the counterfactual global image.

    The wrist view, proprioception, and instruction always pass through
    untouched; one uniform draw is consumed either way.
    """
    if not 0.0 <= p_cf <= 1.0:
        raise ValueError(f"p_cf must be in [0, 1], got {p_cf}")
    if gen.random() < p_cf:
        return obs.with_global(erased_global)
    return obs
