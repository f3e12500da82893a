"""Training objectives: multi-similarity loss, weighted cross-entropy, and their mix.

The multi-similarity term pulls same-class embeddings together and pushes
different-class embeddings apart over an in-batch cosine similarity matrix;
the weighted cross-entropy term scales each sample's log-loss by an
inverse-frequency class weight. Both return analytic gradients with respect
to their direct input alongside the scalar value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .numerics import Tensor

# Rows with norm below this are treated as living on a fixed-norm chart so the
# similarity (and its gradient) stay defined for zero embeddings.
_NORM_GUARD = 1e-12


@dataclass
class MsHyper:
    """Multi-similarity hyperparameters: positive scale, negative scale, margin."""

    alpha: float = 2.0
    beta: float = 50.0
    lambda_margin: float = 0.5

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ConfigError(
                f"alpha and beta must be positive, got {self.alpha}, {self.beta}"
            )


@dataclass
class ClassWeights:
    w: Tensor  # [C], all entries > 0

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 1 or np.any(self.w <= 0):
            raise ConfigError("class weights must be a 1-D vector of positive values")


@dataclass
class LossValue:
    value: float
    grad: Tensor = field(repr=False)  # w.r.t. the loss's direct input


def cosine_similarity_matrix(E: Tensor) -> Tensor:
    """Pairwise cosine similarities of embedding rows: [B,D] -> [B,B]."""
    norms = np.maximum(np.linalg.norm(E, axis=1), _NORM_GUARD)
    En = E / norms[:, None]
    return En @ En.T


def cosine_similarity_backward(E: Tensor, grad_S: Tensor) -> Tensor:
    """Gradient of sum(grad_S * S) with respect to the embedding rows."""
    norms = np.linalg.norm(E, axis=1)
    guarded = np.maximum(norms, _NORM_GUARD)
    En = E / guarded[:, None]
    g_hat = (grad_S + grad_S.T) @ En  # S is bilinear in the normalized rows
    # Through row normalization: project out the radial component, except for
    # rows under the guard, where the map E -> E / guard is plain scaling.
    radial = (g_hat * En).sum(axis=1, keepdims=True)
    grad_E = (g_hat - radial * En) / guarded[:, None]
    under = norms <= _NORM_GUARD
    if np.any(under):
        grad_E[under] = g_hat[under] / _NORM_GUARD
    return grad_E


def ms_loss(S: Tensor, labels: Tensor, h: MsHyper) -> LossValue:
    """Multi-similarity loss over a similarity matrix, with gradient w.r.t. S.

    For each anchor i, positives are same-label indices excluding i and
    negatives are different-label indices:

        L = mean_i [ (1/alpha) * log(1 + sum_{k in P_i} exp(-alpha (S_ik - m)))
                   + (1/beta)  * log(1 + sum_{k in N_i} exp( beta  (S_ik - m))) ]

    with m = h.lambda_margin. Empty sets contribute log(1) = 0, so a
    single-sample batch has zero loss. All ordered pairs participate; there is
    no hard-pair mining.
    """
    B = S.shape[0]
    if S.shape != (B, B):
        raise ShapeError(f"similarity matrix must be square, got {list(S.shape)}")
    labels = np.asarray(labels)
    if labels.shape != (B,):
        raise ShapeError(f"labels must have shape [{B}], got {list(labels.shape)}")

    same = labels[:, None] == labels[None, :]
    pos_mask = same & ~np.eye(B, dtype=bool)
    neg_mask = ~same

    exp_pos = np.where(pos_mask, np.exp(-h.alpha * (S - h.lambda_margin)), 0.0)
    exp_neg = np.where(neg_mask, np.exp(h.beta * (S - h.lambda_margin)), 0.0)
    pos_sum = exp_pos.sum(axis=1)
    neg_sum = exp_neg.sum(axis=1)
    value = float(np.mean(np.log1p(pos_sum) / h.alpha + np.log1p(neg_sum) / h.beta))

    grad = -exp_pos / (1.0 + pos_sum)[:, None] + exp_neg / (1.0 + neg_sum)[:, None]
    grad /= B
    return LossValue(value, grad)


def weighted_ce(logits: Tensor, labels: Tensor, w: ClassWeights) -> LossValue:
    """Class-weighted cross-entropy, batch-averaged, with gradient w.r.t. logits.

    L = (1/B) * sum_i w[y_i] * (-log p_{i,y_i}) with p = softmax(logits),
    evaluated through log-sum-exp so no probability is ever materialized
    inside a log. The gradient row is w[y_i] * (p_i - onehot(y_i)) / B.
    """
    B, C = logits.shape
    labels = np.asarray(labels)
    if labels.shape != (B,):
        raise ShapeError(f"labels must have shape [{B}], got {list(labels.shape)}")
    if np.any(labels < 0) or np.any(labels >= C):
        raise ShapeError(f"labels must lie in [0, {C}), got {labels.tolist()}")
    if w.w.shape != (C,):
        raise ShapeError(f"expected {C} class weights, got {w.w.shape[0]}")

    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1))  # log-sum-exp after the shift
    log_p_true = shifted[np.arange(B), labels] - lse
    sample_w = w.w[labels]
    value = float(np.mean(sample_w * -log_p_true))

    probs = np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)
    grad = probs.copy()
    grad[np.arange(B), labels] -= 1.0
    grad *= sample_w[:, None] / B
    return LossValue(value, grad)


def total_loss(l_car: float, l_ia: float, lambda_mix: float) -> float:
    """Convex mix of the class-aware and imbalance-aware terms."""
    if not 0.0 <= lambda_mix <= 1.0:
        raise ConfigError(f"lambda_mix must lie in [0, 1], got {lambda_mix}")
    return lambda_mix * l_car + (1.0 - lambda_mix) * l_ia
