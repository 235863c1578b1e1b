"""Episode outcome taxonomy: success, near-miss, wrong-object, timeout.

The first grip-close event decides the failure category. Closing on a
distractor is a wrong-object execution even when the target was also in
reach; closing on nothing inside the near-miss band (r_grasp, 2 r_grasp]
of the target is a near-miss. The process score counts completed stages
out of {approached target, grasped correct object, delivered to goal}.
"""

from __future__ import annotations

import math

from tagflow.core.types import Episode, Outcome, OutcomeKind
from tagflow.sim.scene import Scene


def delivery_event(prev: Scene, cur: Scene) -> bool:
    """True when this transition released the target inside the goal region."""
    if prev.held != prev.target_index or cur.held is not None or not prev.grip_closed:
        return False
    if cur.grip_closed:
        return False
    obj = cur.objects[cur.target_index]
    return math.hypot(obj.x - cur.goal_x, obj.y - cur.goal_y) <= cur.goal_radius


def _target_distance(scene: Scene) -> float:
    obj = scene.target
    return math.hypot(scene.gripper_x - obj.x, scene.gripper_y - obj.y)


def classify_outcome(
    episode: Episode, *, r_grasp: float = 0.06, near_miss_factor: float = 2.0
) -> Outcome:
    """Classify a finished episode from its scene trace."""
    scenes = episode.scenes
    if not scenes:
        raise ValueError("cannot classify an empty trace")

    first_close = None  # trace index of the scene right after the first close
    delivered = False
    grasped_target = False
    for k in range(1, len(scenes)):
        prev, cur = scenes[k - 1], scenes[k]
        if first_close is None and cur.grip_closed and not prev.grip_closed:
            first_close = k
        if cur.held == cur.target_index:
            grasped_target = True
        if delivery_event(prev, cur):
            delivered = True
            break

    # the approach stage only counts up to the first close, so passing near
    # the target while carrying the wrong object does not score
    cutoff = first_close if first_close is not None else len(scenes) - 1
    approached = any(
        _target_distance(scenes[k]) <= near_miss_factor * r_grasp for k in range(cutoff + 1)
    )
    ps = (int(approached) + int(grasped_target) + int(delivered)) / 3.0

    if first_close is None:
        return Outcome(OutcomeKind.TIMEOUT, ps)

    attached = scenes[first_close].held
    target_index = scenes[first_close].target_index
    if attached is not None and attached != target_index:
        return Outcome(OutcomeKind.WRONG_OBJECT, ps)
    if attached is None:
        d = _target_distance(scenes[first_close])
        if r_grasp < d <= near_miss_factor * r_grasp:
            return Outcome(OutcomeKind.NEAR_MISS, ps)
        return Outcome(OutcomeKind.TIMEOUT, ps)

    # first close attached the target
    if delivered:
        return Outcome(OutcomeKind.SUCCESS, 1.0)
    return Outcome(OutcomeKind.TIMEOUT, ps)
