"""Feature layout for the velocity network.

The input vector is the fixed concatenation
[flatten(global), flatten(wrist), proprio, instruction one-hot,
 flatten(noisy chunk), tau features] with tau embedded as
[tau, sin(2 pi tau), cos(2 pi tau)].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tagflow.core.dataset import DatasetManifest
from tagflow.core.types import Observation
from tagflow.errors import ShapeMismatch

TAU_FEATURES = 3


@dataclass(frozen=True)
class EncodeSpec:
    img: tuple[int, int, int] = (32, 32, 3)
    wrist: tuple[int, int, int] = (12, 12, 3)
    classes: int = 4
    horizon: int = 8

    @property
    def input_dim(self) -> int:
        return (
            int(np.prod(self.img))
            + int(np.prod(self.wrist))
            + 3
            + self.classes
            + self.horizon * 3
            + TAU_FEATURES
        )

    @property
    def global_slice(self) -> slice:
        return slice(0, int(np.prod(self.img)))

    @property
    def block_dims(self) -> tuple[int, ...]:
        """Widths of the concatenated feature groups, in layout order."""
        return (
            int(np.prod(self.img)),
            int(np.prod(self.wrist)),
            3,
            self.classes,
            self.horizon * 3,
            TAU_FEATURES,
        )

    @staticmethod
    def from_manifest(manifest: DatasetManifest) -> "EncodeSpec":
        return EncodeSpec(manifest.img, manifest.wrist, manifest.classes, manifest.horizon)

    def to_manifest(self) -> DatasetManifest:
        return DatasetManifest(self.img, self.wrist, self.horizon, self.classes)


def tau_features(tau: float) -> np.ndarray:
    return np.array([tau, math.sin(2.0 * math.pi * tau), math.cos(2.0 * math.pi * tau)])


def encode(spec: EncodeSpec, obs: Observation, chunk: np.ndarray, tau: float) -> np.ndarray:
    """One network input row for (observation, noisy chunk, tau)."""
    if obs.global_img.shape != spec.img:
        raise ShapeMismatch(f"global image {obs.global_img.shape}, expected {spec.img}")
    if obs.wrist_img.shape != spec.wrist:
        raise ShapeMismatch(f"wrist image {obs.wrist_img.shape}, expected {spec.wrist}")
    if obs.instruction.shape != (spec.classes,):
        raise ShapeMismatch(f"instruction {obs.instruction.shape}, expected ({spec.classes},)")
    chunk = np.asarray(chunk, dtype=float)
    if chunk.shape != (spec.horizon, 3):
        raise ShapeMismatch(f"chunk {chunk.shape}, expected ({spec.horizon}, 3)")
    return np.concatenate(
        [
            obs.global_img.ravel(),
            obs.wrist_img.ravel(),
            obs.proprio,
            obs.instruction,
            chunk.ravel(),
            tau_features(tau),
        ]
    )
