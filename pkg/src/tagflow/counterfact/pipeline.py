"""Counterfactual erasure pipeline as a retryable state machine.

Each attempt r detects at threshold 0.35 + 0.05 * r, rejects oversized
detections (union area above 15% of the frame), tracks, dilates with a
5x5 kernel, inpaints over 10 steps, and verifies sampled frames. Any
failure triggers a retry with a tighter threshold, capped at 3 retries;
episodes that exhaust the cap are discarded and never reach training.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from tagflow.core.types import Episode
from tagflow.counterfact.backends import PipelineBackends, Verdict, instruction_text
from tagflow.counterfact.geometry import area_fraction, dilate, sample_latter_half
from tagflow.errors import BackendFailure


@dataclass(frozen=True)
class PipelineConfig:
    initial_threshold: float = 0.35
    threshold_increment: float = 0.05
    max_retries: int = 3
    area_limit: float = 0.15
    dilation_kernel: int = 5
    inpaint_steps: int = 10
    verify_frames: int = 3

    def __post_init__(self):
        if not 0.0 < self.area_limit < 1.0:
            raise ValueError("area limit must lie in (0, 1)")
        if min(self.initial_threshold, self.threshold_increment, self.inpaint_steps) <= 0:
            raise ValueError("thresholds and inpaint steps must be positive")
        if self.max_retries < 0 or self.verify_frames < 1:
            raise ValueError("bad retry or verification count")

    def threshold_at(self, attempt: int) -> float:
        return self.initial_threshold + self.threshold_increment * attempt


class PipelineStatus(Enum):
    ACCEPTED = "accepted"
    DISCARDED = "discarded"


@dataclass
class AttemptRecord:
    threshold: float
    boxes: list[dict]
    area_fraction: float
    verdict: str


@dataclass
class PipelineRecord:
    episode_seed: int
    instruction: str
    status: PipelineStatus = PipelineStatus.DISCARDED
    attempts: list[AttemptRecord] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "episode": self.episode_seed,
            "instruction": self.instruction,
            "status": self.status.value,
            "attempts": [
                {
                    "threshold": round(a.threshold, 6),
                    "boxes": a.boxes,
                    "area_fraction": a.area_fraction,
                    "verdict": a.verdict,
                }
                for a in self.attempts
            ],
        }


def _call(stage: str, attempt: int, fn, *args):
    try:
        return fn(*args)
    except Exception as exc:  # noqa: BLE001 - wrapped with context for the caller
        raise BackendFailure(stage, attempt, exc) from exc


def run_pipeline(
    episode: Episode, backends: PipelineBackends, cfg: PipelineConfig
) -> tuple[Optional[list[np.ndarray]], PipelineRecord]:
    """Erase the target from every recorded frame of an episode.

    Returns (erased frames, record) on acceptance and (None, record) when
    the episode is discarded after exhausting retries. The target
    descriptor is resolved through the instruction cache when one is
    attached, so the parser runs once per distinct instruction.
    """
    frames = [s.obs.global_img for s in episode.steps]
    if not frames:
        raise ValueError("episode has no recorded frames")
    height, width = frames[0].shape[:2]
    sample_idx = (
        sample_latter_half(len(frames), cfg.verify_frames) if len(frames) > 1 else [0]
    )
    instruction = instruction_text(episode.instruction)
    record = PipelineRecord(episode_seed=episode.seed, instruction=instruction)

    descriptor = backends.cache.get(instruction) if backends.cache is not None else None
    if descriptor is None:
        descriptor = _call(
            "parser", 0, backends.parser.parse, instruction, [frames[i] for i in sample_idx]
        )
        if backends.cache is not None:
            backends.cache.put(instruction, descriptor)

    for attempt in range(1 + cfg.max_retries):
        threshold = cfg.threshold_at(attempt)
        boxes = [
            _call("detector", attempt, backends.detector.detect, f, i, descriptor, threshold)
            for i, f in enumerate(frames)
        ]
        worst_area = max(area_fraction(b, width, height) for b in boxes)
        box_log = [
            {"frame": i, "box": [bb.x0, bb.y0, bb.x1, bb.y1], "conf": bb.confidence}
            for i, frame_boxes in enumerate(boxes)
            for bb in frame_boxes
        ]
        if worst_area > cfg.area_limit:
            record.attempts.append(AttemptRecord(threshold, box_log, worst_area, "oversized"))
            continue

        masks = _call("tracker", attempt, backends.tracker.track, frames, boxes)
        masks = [dilate(m, cfg.dilation_kernel) for m in masks]
        erased = [
            _call("inpainter", attempt, backends.inpainter.inpaint, f, i, masks[i], cfg.inpaint_steps)
            for i, f in enumerate(frames)
        ]
        verdict = _call("verifier", attempt, backends.verifier.verify, erased, sample_idx)
        record.attempts.append(AttemptRecord(threshold, box_log, worst_area, verdict.value))
        if verdict is Verdict.OK:
            record.status = PipelineStatus.ACCEPTED
            return erased, record

    record.status = PipelineStatus.DISCARDED
    return None, record
