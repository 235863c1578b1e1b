"""Hand-emitted SVG charts: no plotting dependency, diff-able output."""

from __future__ import annotations

import os

import numpy as np

from tagflow.errors import IoFailure

_W, _H = 480, 320
_ML, _MR, _MT, _MB = 56, 16, 28, 44


def _write(path, body: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(body)
    except OSError as exc:
        raise IoFailure(f"cannot write svg to {path}: {exc}") from exc


def line_chart(
    points: list[tuple[float, float]],
    path,
    *,
    title: str,
    xlabel: str,
    ylabel: str,
    log_x: bool = False,
) -> None:
    """Polyline chart of (x, y) points with start/end axis labels."""
    if not points:
        raise ValueError("no points to chart")
    xs = np.array([p[0] for p in points], dtype=float)
    ys = np.array([p[1] for p in points], dtype=float)
    tx = np.log10(xs) if log_x else xs
    x_lo, x_hi = float(tx.min()), float(tx.max())
    y_lo, y_hi = 0.0, max(1e-9, float(ys.max()) * 1.05)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def px(v: float) -> float:
        return _ML + (v - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)

    def py(v: float) -> float:
        return _H - _MB - (v - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    pts = " ".join(f"{px(v):.2f},{py(ys[i]):.2f}" for i, v in enumerate(tx))
    marks = "".join(
        f'<circle cx="{px(v):.2f}" cy="{py(ys[i]):.2f}" r="3" fill="#205080"/>'
        for i, v in enumerate(tx)
    )
    labels = "".join(
        f'<text x="{px(v):.2f}" y="{_H - _MB + 16}" font-size="10" text-anchor="middle">'
        f"{points[i][0]:g}</text>"
        for i, v in enumerate(tx)
    )
    body = f"""<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">
<rect width="{_W}" height="{_H}" fill="white"/>
<text x="{_W / 2}" y="18" font-size="13" text-anchor="middle">{title}</text>
<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>
<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>
<text x="{_W / 2}" y="{_H - 8}" font-size="11" text-anchor="middle">{xlabel}</text>
<text x="14" y="{_H / 2}" font-size="11" text-anchor="middle" transform="rotate(-90 14 {_H / 2})">{ylabel}</text>
<text x="{_ML - 6}" y="{py(y_lo) + 4:.2f}" font-size="10" text-anchor="end">{y_lo:g}</text>
<text x="{_ML - 6}" y="{py(y_hi) + 4:.2f}" font-size="10" text-anchor="end">{y_hi:.2f}</text>
<polyline points="{pts}" fill="none" stroke="#205080" stroke-width="2"/>
{marks}
{labels}
</svg>
"""
    _write(path, body)


def heatmap(grid: np.ndarray, path, *, title: str, cell: int = 12) -> None:
    """Grayscale grid rendering of a [0, 1] heatmap."""
    grid = np.asarray(grid, dtype=float)
    h, w = grid.shape
    width, height = w * cell + 2, h * cell + 26
    rects = []
    for i in range(h):
        for j in range(w):
            level = int(round(255 * (1.0 - min(max(grid[i, j], 0.0), 1.0))))
            rects.append(
                f'<rect x="{1 + j * cell}" y="{25 + i * cell}" width="{cell}" height="{cell}" '
                f'fill="rgb({level},{level},{level})"/>'
            )
    body = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        f'<text x="{width / 2}" y="16" font-size="12" text-anchor="middle">{title}</text>\n'
        + "\n".join(rects)
        + "\n</svg>\n"
    )
    _write(path, body)
