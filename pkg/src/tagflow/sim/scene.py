"""Scene state, procedural generation, and single-step dynamics.

The workspace is the unit square. Objects are discs; the gripper is a
point effector that can attach at most one object. Stepping is a pure
function from an old scene to a new one, so episodes with private rng
streams may run concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from tagflow.core.rng import RngStream
from tagflow.errors import PlacementFailure

_PLACEMENT_BUDGET = 10_000


@dataclass(frozen=True)
class SceneConfig:
    """Geometry and appearance knobs for scene generation and stepping."""

    classes: int = 4
    distractors: int = 3
    confusable_rate: float = 0.5
    object_radius: float = 0.05
    grasp_radius: float = 0.06
    goal_radius: float = 0.12
    a_max: float = 0.08
    margin: float = 0.1
    backgrounds: int = 8
    img_size: int = 32
    wrist_size: int = 12


@dataclass(frozen=True)
class SceneObject:
    """A manipulable disc. `marker` flags the one confusable distractor,
    which shares the target's class (hence color) but carries a single
    distinguishing pixel when rendered."""

    cls: int
    x: float
    y: float
    radius: float
    marker: bool = False


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]
    target_index: int
    gripper_x: float
    gripper_y: float
    grip_closed: bool
    held: Optional[int]
    goal_x: float
    goal_y: float
    goal_radius: float
    background_id: int
    t: int = 0

    @property
    def target(self) -> SceneObject:
        return self.objects[self.target_index]


def _dist(ax: float, ay: float, bx: float, by: float) -> float:
    return math.hypot(ax - bx, ay - by)


def generate_scene(rng: RngStream, cfg: SceneConfig) -> Scene:
    """Sample a non-overlapping scene: one target plus cfg.distractors.

    With probability cfg.confusable_rate one distractor is given the
    target's class and a marker pixel. The target never starts inside the
    goal region. Raises PlacementFailure if rejection sampling exceeds
    its attempt budget.
    """
    if cfg.classes < 2:
        raise ValueError("need at least 2 object classes")
    if cfg.distractors < 0:
        raise ValueError("distractor count must be >= 0")
    gen = rng.generator()
    attempts = 0

    def draw_point(lo: float, hi: float) -> tuple[float, float]:
        nonlocal attempts
        attempts += 1
        if attempts > _PLACEMENT_BUDGET:
            raise PlacementFailure(f"gave up after {_PLACEMENT_BUDGET} placement attempts")
        p = lo + gen.random(2) * (hi - lo)
        return float(p[0]), float(p[1])

    background_id = int(gen.integers(0, cfg.backgrounds))
    target_cls = int(gen.integers(0, cfg.classes))
    lo, hi = cfg.margin, 1.0 - cfg.margin
    goal_x, goal_y = draw_point(lo, hi)

    r = cfg.object_radius
    positions: list[tuple[float, float]] = []
    for i in range(1 + cfg.distractors):
        while True:
            x, y = draw_point(lo, hi)
            if any(_dist(x, y, px, py) <= 2 * r + 0.01 for px, py in positions):
                continue
            # the target must start outside the goal region
            if i == 0 and _dist(x, y, goal_x, goal_y) <= cfg.goal_radius + r:
                continue
            positions.append((x, y))
            break

    # distractor classes avoid the target's class so the instruction stays
    # unambiguous; the confusable twin reintroduces the target class on purpose
    objects = [SceneObject(target_cls, positions[0][0], positions[0][1], r)]
    for i in range(cfg.distractors):
        cls = int(gen.integers(0, cfg.classes - 1))
        if cls >= target_cls:
            cls += 1
        objects.append(SceneObject(cls, positions[1 + i][0], positions[1 + i][1], r))

    if cfg.distractors > 0 and gen.random() < cfg.confusable_rate:
        j = 1 + int(gen.integers(0, cfg.distractors))
        objects[j] = replace(objects[j], cls=target_cls, marker=True)

    gx, gy = draw_point(lo, hi)
    return Scene(
        objects=tuple(objects),
        target_index=0,
        gripper_x=gx,
        gripper_y=gy,
        grip_closed=False,
        held=None,
        goal_x=goal_x,
        goal_y=goal_y,
        goal_radius=cfg.goal_radius,
        background_id=background_id,
        t=0,
    )


def step(scene: Scene, action: np.ndarray, *, a_max: float = 0.08, r_grasp: float = 0.06) -> Scene:
    """Advance one tick: move by the clamped delta, then apply the grip command.

    grip > 0 closes (attaching the nearest object within r_grasp, ties to
    the lowest index), grip <= 0 opens and detaches in place. A held object
    tracks the gripper exactly.
    """
    action = np.asarray(action, dtype=float)
    if action.shape != (3,) or not np.all(np.isfinite(action)):
        raise ValueError(f"action must be a finite 3-vector, got {action!r}")

    dx = float(np.clip(action[0], -a_max, a_max))
    dy = float(np.clip(action[1], -a_max, a_max))
    gx = min(max(scene.gripper_x + dx, 0.0), 1.0)
    gy = min(max(scene.gripper_y + dy, 0.0), 1.0)

    objects = list(scene.objects)
    held = scene.held
    if held is not None:
        objects[held] = replace(objects[held], x=gx, y=gy)

    close = float(action[2]) > 0.0
    if close and not scene.grip_closed:
        # nearest object within reach; index order breaks ties low
        best: Optional[int] = None
        best_d = float("inf")
        for i, obj in enumerate(objects):
            d = _dist(gx, gy, obj.x, obj.y)
            if d <= r_grasp and d < best_d:
                best, best_d = i, d
        held = best
        if held is not None:
            objects[held] = replace(objects[held], x=gx, y=gy)
    elif not close:
        held = None

    return replace(
        scene,
        objects=tuple(objects),
        gripper_x=gx,
        gripper_y=gy,
        grip_closed=close,
        held=held,
        t=scene.t + 1,
    )


def drop_target(scene: Scene) -> Scene:
    """The same scene with the target object removed (indices shift down)."""
    objects = tuple(o for i, o in enumerate(scene.objects) if i != scene.target_index)
    held = scene.held
    if held is not None:
        if held == scene.target_index:
            held = None
        elif held > scene.target_index:
            held -= 1
    return replace(scene, objects=objects, target_index=-1, held=held)


def scene_to_json(scene: Scene) -> dict:
    """Plain-dict form of a scene, exact under JSON round trip."""
    return {
        "objects": [
            {"cls": o.cls, "x": o.x, "y": o.y, "r": o.radius, "marker": o.marker}
            for o in scene.objects
        ],
        "target": scene.target_index,
        "gripper": [scene.gripper_x, scene.gripper_y],
        "closed": scene.grip_closed,
        "held": scene.held,
        "goal": [scene.goal_x, scene.goal_y, scene.goal_radius],
        "bg": scene.background_id,
        "t": scene.t,
    }


def scene_from_json(data: dict) -> Scene:
    return Scene(
        objects=tuple(
            SceneObject(o["cls"], o["x"], o["y"], o["r"], o["marker"]) for o in data["objects"]
        ),
        target_index=data["target"],
        gripper_x=data["gripper"][0],
        gripper_y=data["gripper"][1],
        grip_closed=data["closed"],
        held=data["held"],
        goal_x=data["goal"][0],
        goal_y=data["goal"][1],
        goal_radius=data["goal"][2],
        background_id=data["bg"],
        t=data["t"],
    )
