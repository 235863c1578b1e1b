"""Scripted pick-and-place expert used as the demonstration source.

The expert is a proportional controller unrolled over the chunk horizon
by simulating the scene forward internally: approach the target while the
gripper is empty, carry to the goal region once holding, release inside.
Per-step Gaussian jitter is clipped at three standard deviations so the
|delta| <= 3 sigma bound holds unconditionally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tagflow.core.rng import RngStream
from tagflow.sim.outcome import delivery_event
from tagflow.sim.scene import Scene, step


@dataclass(frozen=True)
class ExpertConfig:
    gain: float = 0.9
    noise: float = 0.01
    horizon: int = 8
    a_max: float = 0.08
    r_grasp: float = 0.06


def expert_chunk(scene: Scene, cfg: ExpertConfig, rng: RngStream) -> np.ndarray:
    """Plan the next `horizon` actions from this scene."""
    gen = rng.generator()
    jitter = np.clip(gen.standard_normal((cfg.horizon, 2)), -3.0, 3.0) * cfg.noise
    actions = np.zeros((cfg.horizon, 3))
    sim = scene
    done = False
    for h in range(cfg.horizon):
        if done:
            actions[h] = (0.0, 0.0, -1.0)
            continue
        if sim.held == sim.target_index:
            sx, sy = sim.goal_x, sim.goal_y
        else:
            sx, sy = sim.target.x, sim.target.y
        d = math.hypot(sx - sim.gripper_x, sy - sim.gripper_y)
        dx = cfg.gain * (sx - sim.gripper_x) + jitter[h, 0]
        dy = cfg.gain * (sy - sim.gripper_y) + jitter[h, 1]
        if sim.held == sim.target_index:
            grip = -1.0 if d <= cfg.r_grasp else 1.0
        else:
            grip = 1.0 if d <= cfg.r_grasp else -1.0
        actions[h] = (dx, dy, grip)
        nxt = step(sim, actions[h], a_max=cfg.a_max, r_grasp=cfg.r_grasp)
        if delivery_event(sim, nxt):
            done = True
        sim = nxt
    actions[:, :2] = np.clip(actions[:, :2], -cfg.a_max, cfg.a_max)
    return actions
