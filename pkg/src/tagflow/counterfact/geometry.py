"""Pixel-space geometry used by the erasure pipeline.

Boxes are integer pixel rectangles [x0, x1) x [y0, y1); masks are boolean
(H, W) grids. Union area is computed by coordinate-compression sweep, an
independent path from the rasterizing oracle the tests compare against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tagflow.errors import DegenerateEpisode


@dataclass(frozen=True)
class BBox:
    x0: int
    y0: int
    x1: int
    y1: int
    confidence: float = 1.0

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate box {self}")
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError(f"negative box corner {self}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    def clipped(self, width: int, height: int) -> "BBox":
        return BBox(
            max(self.x0, 0),
            max(self.y0, 0),
            min(self.x1, width),
            min(self.y1, height),
            self.confidence,
        )


def dilate(mask: np.ndarray, kernel: int = 5) -> np.ndarray:
    """Morphological dilation with a square kernel (odd side length).

    A bit is set in the output iff some input bit lies within Chebyshev
    radius (kernel - 1) // 2.
    """
    if kernel % 2 != 1 or kernel < 1:
        raise ValueError(f"kernel side must be odd and positive, got {kernel}")
    mask = np.asarray(mask, dtype=bool)
    r = (kernel - 1) // 2
    if r == 0 or not mask.any():
        return mask.copy()
    h, w = mask.shape
    padded = np.zeros((h + 2 * r, w + 2 * r), dtype=bool)
    padded[r : r + h, r : r + w] = mask
    out = np.zeros_like(mask)
    for di in range(kernel):
        for dj in range(kernel):
            out |= padded[di : di + h, dj : dj + w]
    return out


def mask_from_boxes(boxes: list[BBox], width: int, height: int) -> np.ndarray:
    grid = np.zeros((height, width), dtype=bool)
    for box in boxes:
        b = box.clipped(width, height)
        grid[b.y0 : b.y1, b.x0 : b.x1] = True
    return grid


def area_fraction(boxes: list[BBox], width: int, height: int) -> float:
    """Union area of the boxes divided by the frame area.

    Overlaps are counted once: a vertical sweep over compressed x
    coordinates accumulates covered y-length per slab.
    """
    clipped = [b.clipped(width, height) for b in boxes if b.x0 < width and b.y0 < height]
    clipped = [b for b in clipped if b.x0 < b.x1 and b.y0 < b.y1]
    if not clipped:
        return 0.0
    xs = sorted({b.x0 for b in clipped} | {b.x1 for b in clipped})
    area = 0
    for left, right in zip(xs[:-1], xs[1:]):
        spans = sorted((b.y0, b.y1) for b in clipped if b.x0 <= left and b.x1 >= right)
        covered = 0
        cur_lo, cur_hi = None, None
        for lo, hi in spans:
            if cur_hi is None or lo > cur_hi:
                if cur_hi is not None:
                    covered += cur_hi - cur_lo
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        if cur_hi is not None:
            covered += cur_hi - cur_lo
        area += covered * (right - left)
    return area / (width * height)


def sample_latter_half(n_frames: int, k: int) -> list[int]:
    """k evenly spaced frame indices drawn from the latter half.

    All indices are >= ceil(n_frames / 2); duplicates collapse when k
    exceeds the available range.
    """
    if n_frames < 2:
        raise DegenerateEpisode(f"need >= 2 frames, got {n_frames}")
    if k < 1:
        raise ValueError("k must be >= 1")
    lo = (n_frames + 1) // 2
    hi = n_frames - 1
    if k == 1:
        return [hi]
    raw = [lo + round(i * (hi - lo) / (k - 1)) for i in range(k)]
    return sorted(set(int(i) for i in raw))
