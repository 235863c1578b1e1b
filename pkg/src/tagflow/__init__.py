"""Flow-matching visuomotor policy with target-agnostic guidance,
benchmarked on a deterministic desk-scale clutter simulator."""

__version__ = "0.1.0"
