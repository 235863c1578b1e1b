"""Domain value types shared by the simulator, policy, and harness.

Images are plain float64 arrays of shape (H, W, 3) with values in [0, 1];
action chunks and velocities are (H, 3) arrays of (dx, dy, grip). All types
here are treated as immutable values after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional

import numpy as np

if TYPE_CHECKING:
    from tagflow.sim.scene import Scene


@dataclass(frozen=True, eq=False)
class Observation:
    """One policy input: both camera views, proprioception, and the
    instruction as a one-hot over object classes."""

    global_img: np.ndarray
    wrist_img: np.ndarray
    proprio: np.ndarray
    instruction: np.ndarray

    def with_global(self, img: np.ndarray) -> "Observation":
        """Copy with the global image swapped; wrist view stays untouched."""
        return Observation(img, self.wrist_img, self.proprio, self.instruction)


class OutcomeKind(Enum):
    SUCCESS = "success"
    NEAR_MISS = "near_miss"
    WRONG_OBJECT = "wrong_object"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class Outcome:
    """Terminal category plus the completed-stage fraction (process score)."""

    kind: OutcomeKind
    ps: float


@dataclass(frozen=True, eq=False)
class Step:
    """One recorded decision point: the observation, the planned H-step
    action chunk, and the scene-trace index it was taken at."""

    obs: Observation
    chunk: np.ndarray
    t: int


@dataclass(eq=False)
class Episode:
    seed: int
    instruction: int
    scenes: list["Scene"]
    steps: list[Step]
    outcome: Optional[Outcome] = None


def as_chunk(values, horizon: int) -> np.ndarray:
    chunk = np.asarray(values, dtype=float)
    if chunk.shape != (horizon, 3):
        raise ValueError(f"chunk must have shape ({horizon}, 3), got {chunk.shape}")
    return chunk


def observations_equal(a: Observation, b: Observation) -> bool:
    return (
        np.array_equal(a.global_img, b.global_img)
        and np.array_equal(a.wrist_img, b.wrist_img)
        and np.array_equal(a.proprio, b.proprio)
        and np.array_equal(a.instruction, b.instruction)
    )


def episodes_equal(a: Episode, b: Episode) -> bool:
    """Exact structural equality, used by serialization round-trip checks."""
    if (a.seed, a.instruction, a.outcome) != (b.seed, b.instruction, b.outcome):
        return False
    if a.scenes != b.scenes or len(a.steps) != len(b.steps):
        return False
    return all(
        s.t == o.t and np.array_equal(s.chunk, o.chunk) and observations_equal(s.obs, o.obs)
        for s, o in zip(a.steps, b.steps)
    )
