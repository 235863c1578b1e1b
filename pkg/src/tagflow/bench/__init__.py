"""Experiment harness: configs, campaigns, reports, charts, CLI."""

from tagflow.bench.campaigns import (
    DatasetBuild,
    TrendReport,
    build_dataset,
    eval_cell,
    run_grid,
    run_realtime,
    run_sweep,
    run_trend,
    train_policy,
)
from tagflow.bench.config import (
    EvalConfig,
    ExperimentConfig,
    build_config,
    config_hash,
    load_config,
    parse_config_text,
)
from tagflow.bench.report import COLUMNS, ReportRow, export_report, row_from_outcomes, two_proportion_z
from tagflow.bench.saliency import saliency, tag_saliency

__all__ = [
    "COLUMNS",
    "DatasetBuild",
    "EvalConfig",
    "ExperimentConfig",
    "ReportRow",
    "TrendReport",
    "build_config",
    "build_dataset",
    "config_hash",
    "eval_cell",
    "export_report",
    "load_config",
    "parse_config_text",
    "row_from_outcomes",
    "run_grid",
    "run_realtime",
    "run_sweep",
    "run_trend",
    "saliency",
    "tag_saliency",
    "train_policy",
    "two_proportion_z",
]
