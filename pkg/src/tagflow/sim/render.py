"""Deterministic rasterizer for all observation variants.

Everything is sampled at pixel centers with no anti-aliasing, so renders
are bit-reproducible and the target-erased render of a scene equals the
full render of the same scene with the target dropped, pixel for pixel.
Pixel values are rounded to 6 decimals to keep serialized datasets small.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from tagflow.core.types import Observation
from tagflow.sim.scene import Scene, drop_target

# saturated object palette; backgrounds stay below 0.4 so objects pop
_PALETTE = np.array(
    [
        [0.90, 0.15, 0.15],
        [0.15, 0.75, 0.20],
        [0.20, 0.30, 0.95],
        [0.95, 0.85, 0.10],
        [0.10, 0.85, 0.85],
        [0.85, 0.15, 0.85],
        [0.95, 0.55, 0.10],
        [0.55, 0.20, 0.75],
    ]
)
_MARKER_COLOR = np.array([0.05, 0.05, 0.05])
_GRIPPER_OPEN = np.array([1.0, 1.0, 1.0])
_GRIPPER_CLOSED = np.array([0.72, 0.72, 0.72])
_GOAL_COLOR = np.array([0.05, 0.40, 0.12])

_TINTS = np.array(
    [
        [1.00, 0.92, 0.84],
        [0.86, 1.00, 0.92],
        [0.88, 0.92, 1.00],
        [1.00, 1.00, 0.86],
        [0.90, 1.00, 1.00],
        [1.00, 0.88, 1.00],
        [0.95, 0.95, 0.95],
        [1.00, 0.96, 0.90],
    ]
)


class View(Enum):
    GLOBAL = "global"
    WRIST = "wrist"


class RenderMode(Enum):
    FULL = "full"
    TARGET_ERASED = "target_erased"
    BACKGROUND_ONLY = "background_only"
    BLACK = "black"


def class_color(cls: int) -> np.ndarray:
    return _PALETTE[cls % len(_PALETTE)]


def _texture(bg_id: int, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Procedural background value at workspace points, in [0.14, 0.36]."""
    b = bg_id % 8
    if b == 0:
        v = 0.16 + 0.08 * (np.floor(py * 12) % 2)
    elif b == 1:
        v = 0.16 + 0.08 * (np.floor(px * 12) % 2)
    elif b == 2:
        v = 0.14 + 0.08 * ((np.floor(px * 8) + np.floor(py * 8)) % 2)
    elif b == 3:
        v = 0.16 + 0.08 * (np.floor((px + py) * 10) % 2)
    elif b == 4:
        d = np.hypot(px - 0.5, py - 0.5)
        v = 0.16 + 0.08 * (np.floor(d * 14) % 2)
    elif b == 5:
        dots = ((np.floor(px * 16) % 4 == 0) & (np.floor(py * 16) % 4 == 0)).astype(float)
        v = 0.17 + 0.1 * dots
    elif b == 6:
        v = 0.14 + 0.14 * px
    else:
        v = np.full_like(px, 0.2)
    return v[..., None] * _TINTS[b]


def _view_grid(scene: Scene, view: View, img_size: int, wrist_size: int):
    """Pixel-center workspace coordinates for a view, plus its origin."""
    pitch = 1.0 / img_size
    if view is View.GLOBAL:
        n, ox, oy = img_size, 0.5 * pitch, 0.5 * pitch
    else:
        n = wrist_size
        ox = scene.gripper_x - (n / 2 - 0.5) * pitch
        oy = scene.gripper_y - (n / 2 - 0.5) * pitch
    xs = ox + np.arange(n) * pitch
    ys = oy + np.arange(n) * pitch
    return np.meshgrid(xs, ys), (ox, oy, pitch, n)


def _point_pixel(x: float, y: float, origin) -> tuple[int, int] | None:
    """Row/col of the pixel containing a workspace point, None if outside."""
    ox, oy, pitch, n = origin
    col = int(np.floor((x - ox) / pitch + 0.5))
    row = int(np.floor((y - oy) / pitch + 0.5))
    if 0 <= row < n and 0 <= col < n:
        return row, col
    return None


def render(
    scene: Scene,
    view: View = View.GLOBAL,
    mode: RenderMode = RenderMode.FULL,
    *,
    img_size: int = 32,
    wrist_size: int = 12,
) -> np.ndarray:
    """Rasterize one observation image for (scene, view, mode).

    FULL draws texture, goal region, objects, and gripper; TARGET_ERASED
    drops only the target; BACKGROUND_ONLY keeps texture and goal region;
    BLACK is all zeros. The wrist view is a same-pitch window centered on
    the gripper, black outside the workspace.
    """
    n = img_size if view is View.GLOBAL else wrist_size
    if mode is RenderMode.BLACK:
        return np.zeros((n, n, 3))

    (pxg, pyg), origin = _view_grid(scene, view, img_size, wrist_size)
    img = _texture(scene.background_id, pxg, pyg)

    goal = np.hypot(pxg - scene.goal_x, pyg - scene.goal_y) <= scene.goal_radius
    img[goal] = 0.6 * img[goal] + 0.4 * _GOAL_COLOR

    if mode is not RenderMode.BACKGROUND_ONLY:
        for i, obj in enumerate(scene.objects):
            if mode is RenderMode.TARGET_ERASED and i == scene.target_index:
                continue
            disc = (pxg - obj.x) ** 2 + (pyg - obj.y) ** 2 <= obj.radius**2
            img[disc] = class_color(obj.cls)
            if obj.marker:
                at = _point_pixel(obj.x, obj.y, origin)
                if at is not None:
                    img[at[0], at[1]] = _MARKER_COLOR
        at = _point_pixel(scene.gripper_x, scene.gripper_y, origin)
        if at is not None:
            color = _GRIPPER_CLOSED if scene.grip_closed else _GRIPPER_OPEN
            r, c = at
            for rr, cc in ((r, c), (r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= rr < n and 0 <= cc < n:
                    img[rr, cc] = color

    outside = (pxg < 0.0) | (pxg > 1.0) | (pyg < 0.0) | (pyg > 1.0)
    img[outside] = 0.0
    return np.round(img, 6)


def object_pixel_mask(
    scene: Scene, index: int, *, view: View = View.GLOBAL, img_size: int = 32, wrist_size: int = 12
) -> np.ndarray:
    """Boolean grid of the pixels covered by one object's disc."""
    obj = scene.objects[index]
    (pxg, pyg), _ = _view_grid(scene, view, img_size, wrist_size)
    return (pxg - obj.x) ** 2 + (pyg - obj.y) ** 2 <= obj.radius**2


def observe(scene: Scene, classes: int, *, img_size: int = 32, wrist_size: int = 12) -> Observation:
    """Full-mode observation of a scene: both camera views, proprio, one-hot."""
    one_hot = np.zeros(classes)
    one_hot[scene.target.cls] = 1.0
    return Observation(
        global_img=render(scene, View.GLOBAL, RenderMode.FULL, img_size=img_size, wrist_size=wrist_size),
        wrist_img=render(scene, View.WRIST, RenderMode.FULL, img_size=img_size, wrist_size=wrist_size),
        proprio=np.array([scene.gripper_x, scene.gripper_y, 1.0 if scene.grip_closed else 0.0]),
        instruction=one_hot,
    )
