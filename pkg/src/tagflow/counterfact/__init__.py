"""Target-agnostic baselines and the counterfactual erasure pipeline."""

from tagflow.counterfact.backends import (
    OracleDetector,
    OracleInpainter,
    OracleParser,
    OracleTracker,
    OracleVerifier,
    PipelineBackends,
    Verdict,
    instruction_text,
    make_oracle_backends,
)
from tagflow.counterfact.baselines import (
    BaselineKind,
    baseline_image,
    is_static,
    make_baseline,
    substitute_training_obs,
)
from tagflow.counterfact.cache import InstructionCache
from tagflow.counterfact.geometry import (
    BBox,
    area_fraction,
    dilate,
    mask_from_boxes,
    sample_latter_half,
)
from tagflow.counterfact.pipeline import (
    AttemptRecord,
    PipelineConfig,
    PipelineRecord,
    PipelineStatus,
    run_pipeline,
)

__all__ = [
    "AttemptRecord",
    "BBox",
    "BaselineKind",
    "InstructionCache",
    "OracleDetector",
    "OracleInpainter",
    "OracleParser",
    "OracleTracker",
    "OracleVerifier",
    "PipelineBackends",
    "PipelineConfig",
    "PipelineRecord",
    "PipelineStatus",
    "Verdict",
    "area_fraction",
    "baseline_image",
    "dilate",
    "instruction_text",
    "is_static",
    "make_baseline",
    "make_oracle_backends",
    "mask_from_boxes",
    "run_pipeline",
    "sample_latter_half",
    "substitute_training_obs",
]
