"""Gaze time-series classification with class-aware and imbalance-aware objectives.

A self-contained float64 implementation: two-layer 1D-convolutional embedding
network, multi-similarity metric loss mixed with inverse-frequency weighted
cross-entropy, Adam training, a synthetic fixation/saccade data generator,
and finite-difference verification of every hand-derived gradient.
"""

from .data import Dataset, Sample
from .layers import Mode
from .losses import ClassWeights, MsHyper
from .model import ModelConfig, ModelParams, Variant, build_model, forward, predict, train
from .numerics import Rng, Tensor, derive_seed, finite_diff_grad
from .optim import AdamHyper
from .synthgaze import GenConfig, generate

__all__ = [
    "AdamHyper",
    "ClassWeights",
    "Dataset",
    "GenConfig",
    "Mode",
    "ModelConfig",
    "ModelParams",
    "MsHyper",
    "Rng",
    "Sample",
    "Tensor",
    "Variant",
    "build_model",
    "derive_seed",
    "finite_diff_grad",
    "forward",
    "generate",
    "predict",
    "train",
]
