"""Adaptive online incremental learning for evolving data streams."""

from .drift import DriftController
from .evaluation import RunSettings, ogd_baseline, prequential_run
from .learner import ModelState, NoiseConfig, forward, train_step

__all__ = [
    "DriftController",
    "ModelState",
    "NoiseConfig",
    "RunSettings",
    "forward",
    "ogd_baseline",
    "prequential_run",
    "train_step",
]
