"""Deterministic 2D clutter-manipulation environment."""

from tagflow.sim.collect import DataConfig, collect_demonstrations, run_expert_episode
from tagflow.sim.expert import ExpertConfig, expert_chunk
from tagflow.sim.outcome import classify_outcome, delivery_event
from tagflow.sim.render import RenderMode, View, class_color, object_pixel_mask, observe, render
from tagflow.sim.scene import (
    Scene,
    SceneConfig,
    SceneObject,
    drop_target,
    generate_scene,
    scene_from_json,
    scene_to_json,
    step,
)

__all__ = [
    "DataConfig",
    "ExpertConfig",
    "RenderMode",
    "Scene",
    "SceneConfig",
    "SceneObject",
    "View",
    "class_color",
    "classify_outcome",
    "collect_demonstrations",
    "delivery_event",
    "drop_target",
    "expert_chunk",
    "generate_scene",
    "object_pixel_mask",
    "observe",
    "render",
    "run_expert_episode",
    "scene_from_json",
    "scene_to_json",
    "step",
]
