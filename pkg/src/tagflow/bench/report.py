"""Per-cell evaluation rows, CSV/markdown export, and the z-test helper."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

from tagflow.core.types import OutcomeKind
from tagflow.errors import IoFailure

COLUMNS = (
    "train_kind",
    "eval_kind",
    "w",
    "N",
    "episodes",
    "SR",
    "near_miss",
    "wrong_object",
    "timeout",
    "mean_ps",
    "seed",
    "config_hash",
)


@dataclass(frozen=True)
class ReportRow:
    train_kind: str
    eval_kind: str
    w: float
    n_steps: int
    episodes: int
    sr: float
    near_miss: float
    wrong_object: float
    timeout: float
    mean_ps: float
    seed: int
    config_hash: str

    def values(self) -> tuple:
        return (
            self.train_kind,
            self.eval_kind,
            _fmt(self.w),
            self.n_steps,
            self.episodes,
            _fmt(self.sr),
            _fmt(self.near_miss),
            _fmt(self.wrong_object),
            _fmt(self.timeout),
            _fmt(self.mean_ps),
            self.seed,
            self.config_hash,
        )


def _fmt(value: float) -> str:
    return format(float(value), ".6g")


def row_from_outcomes(
    outcomes, *, train_kind: str, eval_kind: str, w: float, n_steps: int, seed: int, config_hash: str
) -> ReportRow:
    """Aggregate a cell's episode outcomes into one row; rates partition 1."""
    n = len(outcomes)
    if n == 0:
        raise ValueError("cell has no episodes")
    count = {kind: 0 for kind in OutcomeKind}
    ps_total = 0.0
    for outcome in outcomes:
        count[outcome.kind] += 1
        ps_total += outcome.ps
    return ReportRow(
        train_kind=train_kind,
        eval_kind=eval_kind,
        w=w,
        n_steps=n_steps,
        episodes=n,
        sr=count[OutcomeKind.SUCCESS] / n,
        near_miss=count[OutcomeKind.NEAR_MISS] / n,
        wrong_object=count[OutcomeKind.WRONG_OBJECT] / n,
        timeout=count[OutcomeKind.TIMEOUT] / n,
        mean_ps=ps_total / n,
        seed=seed,
        config_hash=config_hash,
    )


def export_report(rows: list[ReportRow], path, highlight: ReportRow | None = None) -> None:
    """Write rows as CSV at `path` plus a markdown table beside it.

    Column order is stable; re-exporting identical rows is byte identical.
    `highlight` bolds one row in the markdown rendering.
    """
    if not rows:
        raise ValueError("no rows to export")
    path = os.fspath(path)
    md_path = os.path.splitext(path)[0] + ".md"
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(COLUMNS) + "\n")
            for row in rows:
                fh.write(",".join(str(v) for v in row.values()) + "\n")
        with open(md_path, "w", encoding="utf-8") as fh:
            fh.write("| " + " | ".join(COLUMNS) + " |\n")
            fh.write("|" + "---|" * len(COLUMNS) + "\n")
            for row in rows:
                cells = [str(v) for v in row.values()]
                if highlight is not None and row == highlight:
                    cells = [f"**{c}**" for c in cells]
                fh.write("| " + " | ".join(cells) + " |\n")
    except OSError as exc:
        raise IoFailure(f"cannot export report to {path}: {exc}") from exc


def two_proportion_z(p1: float, n1: int, p2: float, n2: int) -> float:
    """Pooled two-proportion z statistic for p1 - p2."""
    pooled = (p1 * n1 + p2 * n2) / (n1 + n2)
    var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)
    if var <= 0.0:
        return 0.0
    return (p1 - p2) / math.sqrt(var)
