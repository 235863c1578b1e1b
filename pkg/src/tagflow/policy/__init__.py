"""Flow-matching objective, guided inference, and closed-loop rollout."""

from tagflow.policy.encode import EncodeSpec, encode, tau_features
from tagflow.policy.flow import corrupt, fm_loss, target_velocity
from tagflow.policy.guidance import (
    InferConfig,
    ReplanMode,
    VelocityFn,
    integrate,
    make_velocity_fn,
    tag_velocity,
)
from tagflow.policy.rollout import rollout
from tagflow.policy.training import TrainConfig, flatten_pairs, substitution_sources, train

__all__ = [
    "EncodeSpec",
    "InferConfig",
    "ReplanMode",
    "TrainConfig",
    "VelocityFn",
    "corrupt",
    "encode",
    "flatten_pairs",
    "fm_loss",
    "integrate",
    "make_velocity_fn",
    "rollout",
    "substitution_sources",
    "tag_velocity",
    "target_velocity",
    "tau_features",
    "train",
]
