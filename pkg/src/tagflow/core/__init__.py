"""Shared domain types, rng streams, and dataset serialization."""

from tagflow.core.dataset import DatasetManifest, load_dataset, save_dataset
from tagflow.core.rng import RngStream, rng_fork
from tagflow.core.types import (
    Episode,
    Observation,
    Outcome,
    OutcomeKind,
    Step,
    episodes_equal,
    observations_equal,
)

__all__ = [
    "DatasetManifest",
    "Episode",
    "Observation",
    "Outcome",
    "OutcomeKind",
    "RngStream",
    "Step",
    "episodes_equal",
    "load_dataset",
    "observations_equal",
    "rng_fork",
    "save_dataset",
]
