"""Trainable MLP, optimizer, schedule, and checkpointing."""

from tagflow.nn.checkpoint import load_checkpoint, save_checkpoint
from tagflow.nn.mlp import Grads, MlpSpec, PolicyParams, backward, forward, forward_full, init_params
from tagflow.nn.optim import EMA_DECAY, PAPER_SCHEDULE, LrSchedule, adam_step, ema_update, lr_at

__all__ = [
    "EMA_DECAY",
    "Grads",
    "LrSchedule",
    "MlpSpec",
    "PAPER_SCHEDULE",
    "PolicyParams",
    "adam_step",
    "backward",
    "ema_update",
    "forward",
    "forward_full",
    "init_params",
    "load_checkpoint",
    "lr_at",
    "save_checkpoint",
]
