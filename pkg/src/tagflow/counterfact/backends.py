"""Erasure-pipeline backend interfaces and their oracle implementations.

The production pipeline slots a vision-language parser, an open-vocabulary
detector, a video tracker, a video inpainter, and a quality inspector into
these five roles. Here each role is derived from simulator ground truth
with configurable error injection, which exercises every branch of the
pipeline state machine deterministically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Protocol

import numpy as np

from tagflow.core.rng import RngStream
from tagflow.core.types import Episode
from tagflow.counterfact.cache import InstructionCache
from tagflow.counterfact.geometry import BBox, mask_from_boxes
from tagflow.sim.render import RenderMode, View, object_pixel_mask, render
from tagflow.sim.scene import Scene, drop_target


class Verdict(Enum):
    OK = "ok"
    INCOMPLETE = "incomplete"
    DESTRUCTION = "destruction"


class TargetParser(Protocol):
    def parse(self, instruction: str, frames: list[np.ndarray]) -> str: ...


class Detector(Protocol):
    def detect(
        self, frame: np.ndarray, frame_index: int, descriptor: str, threshold: float
    ) -> list[BBox]: ...


class Tracker(Protocol):
    def track(self, frames: list[np.ndarray], boxes: list[list[BBox]]) -> list[np.ndarray]: ...


class Inpainter(Protocol):
    def inpaint(
        self, frame: np.ndarray, frame_index: int, mask: np.ndarray, steps: int
    ) -> np.ndarray: ...


class Verifier(Protocol):
    def verify(self, frames: list[np.ndarray], sample_indices: list[int]) -> Verdict: ...


@dataclass
class PipelineBackends:
    parser: TargetParser
    detector: Detector
    tracker: Tracker
    inpainter: Inpainter
    verifier: Verifier
    cache: Optional[InstructionCache] = None


def instruction_text(cls: int) -> str:
    return f"pick up the class-{cls} disc and place it in the goal region"


class OracleParser:
    """Maps the instruction straight to a class descriptor; counts calls so
    tests can assert the cache short-circuits repeats."""

    def __init__(self):
        self.calls = 0

    def parse(self, instruction: str, frames: list[np.ndarray]) -> str:
        self.calls += 1
        match = re.search(r"class-(\d+)", instruction)
        if match is None:
            raise ValueError(f"cannot parse instruction {instruction!r}")
        return f"class-{match.group(1)} disc"


class OracleDetector:
    """Emits the target's true pixel bounding box with optional error
    injection: missed detections, corner jitter, or a frame-sized box."""

    def __init__(
        self,
        scenes: list[Scene],
        img_size: int,
        rng: RngStream,
        *,
        miss_rate: float = 0.0,
        jitter_px: int = 0,
        oversize_rate: float = 0.0,
        confidence: float = 0.9,
    ):
        self._scenes = scenes
        self._img = img_size
        self._gen = rng.generator()
        self.miss_rate = miss_rate
        self.jitter_px = jitter_px
        self.oversize_rate = oversize_rate
        self.confidence = confidence

    def detect(
        self, frame: np.ndarray, frame_index: int, descriptor: str, threshold: float
    ) -> list[BBox]:
        n = self._img
        if self.oversize_rate > 0.0 and self._gen.random() < self.oversize_rate:
            return [BBox(0, 0, n, n, min(0.99, max(threshold, self.confidence)))]
        if self.miss_rate > 0.0 and self._gen.random() < self.miss_rate:
            return []
        if self.confidence < threshold:
            return []
        scene = self._scenes[frame_index]
        obj = scene.target
        x0 = int(np.floor((obj.x - obj.radius) * n))
        y0 = int(np.floor((obj.y - obj.radius) * n))
        x1 = int(np.ceil((obj.x + obj.radius) * n))
        y1 = int(np.ceil((obj.y + obj.radius) * n))
        if self.jitter_px > 0:
            j = self._gen.integers(-self.jitter_px, self.jitter_px + 1, size=4)
            x0, y0, x1, y1 = x0 + int(j[0]), y0 + int(j[1]), x1 + int(j[2]), y1 + int(j[3])
        x0, y0 = max(0, x0), max(0, y0)
        x1, y1 = min(n, max(x1, x0 + 1)), min(n, max(y1, y0 + 1))
        return [BBox(x0, y0, x1, y1, self.confidence)]


class OracleTracker:
    """Ground-truth disc coverage intersected with the seed boxes, the way
    a box-prompted segmenter would behave."""

    def __init__(self, scenes: list[Scene], img_size: int):
        self._scenes = scenes
        self._img = img_size

    def track(self, frames: list[np.ndarray], boxes: list[list[BBox]]) -> list[np.ndarray]:
        masks = []
        for i, frame_boxes in enumerate(boxes):
            scene = self._scenes[i]
            cover = object_pixel_mask(scene, scene.target_index, img_size=self._img)
            region = mask_from_boxes(frame_boxes, self._img, self._img)
            masks.append(cover & region)
        return masks


class OracleInpainter:
    """Fills masked pixels from the frame's target-removed render, i.e. a
    perfect hallucination of what sits behind the target."""

    def __init__(self, scenes: list[Scene], img_size: int):
        self._scenes = scenes
        self._img = img_size

    def inpaint(self, frame: np.ndarray, frame_index: int, mask: np.ndarray, steps: int) -> np.ndarray:
        fill = render(
            drop_target(self._scenes[frame_index]), View.GLOBAL, RenderMode.FULL, img_size=self._img
        )
        out = frame.copy()
        # converges in one pass; the loop mirrors the denoising-step knob
        for _ in range(steps):
            out[mask] = fill[mask]
        return out


class OracleVerifier:
    """Compares sampled frames against the ground-truth erased render.

    Residual error inside the target's original footprint reads as an
    incomplete erasure; error elsewhere reads as destruction of scene
    content.
    """

    def __init__(self, scenes: list[Scene], img_size: int, tol: float = 1e-4):
        self._scenes = scenes
        self._img = img_size
        self.tol = tol

    def verify(self, frames: list[np.ndarray], sample_indices: list[int]) -> Verdict:
        worst = Verdict.OK
        for i in sample_indices:
            scene = self._scenes[i]
            truth = render(drop_target(scene), View.GLOBAL, RenderMode.FULL, img_size=self._img)
            footprint = object_pixel_mask(scene, scene.target_index, img_size=self._img)
            err = (frames[i] - truth) ** 2
            inside = float(err[footprint].mean()) if footprint.any() else 0.0
            outside = float(err[~footprint].mean()) if (~footprint).any() else 0.0
            if inside > self.tol:
                return Verdict.INCOMPLETE
            if outside > self.tol:
                worst = Verdict.DESTRUCTION
        return worst


def episode_frame_scenes(episode: Episode) -> list[Scene]:
    """Scene snapshot aligned with each recorded frame of the episode."""
    return [episode.scenes[s.t] for s in episode.steps]


def make_oracle_backends(
    episode: Episode,
    rng: RngStream,
    *,
    img_size: int = 32,
    cache: Optional[InstructionCache] = None,
    miss_rate: float = 0.0,
    jitter_px: int = 0,
    oversize_rate: float = 0.0,
    verify_tol: float = 1e-4,
    parser: Optional[OracleParser] = None,
) -> PipelineBackends:
    """Bundle of ground-truth backends bound to one episode."""
    scenes = episode_frame_scenes(episode)
    return PipelineBackends(
        parser=parser or OracleParser(),
        detector=OracleDetector(
            scenes,
            img_size,
            rng.fork("detector"),
            miss_rate=miss_rate,
            jitter_px=jitter_px,
            oversize_rate=oversize_rate,
        ),
        tracker=OracleTracker(scenes, img_size),
        inpainter=OracleInpainter(scenes, img_size),
        verifier=OracleVerifier(scenes, img_size, tol=verify_tol),
        cache=cache,
    )
