"""The DSTS network: two conv/batch-norm/ReLU blocks, temporal max-pool embedding,
linear classifier head, and the training loop over the mixed objective.

The class-aware branch computes a multi-similarity loss over in-batch cosine
similarities of the embeddings; the imbalance-aware branch is a
weighted-cross-entropy on the logits. Their gradients are mixed with
lambda_mix and backpropagated through the shared trunk by hand. Ablation
variant I forces lambda_mix to 0 (the similarity branch is never evaluated);
variant II forces the class weights to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import layers
from .data import Dataset, balanced_batches, class_weights, resample_to_length
from .errors import ConfigError, DegenerateInputError, ShapeError
from .layers import (
    BatchNormParams,
    ConvParams,
    LinearParams,
    Mode,
    batchnorm1d,
    batchnorm1d_backward,
    conv1d,
    conv1d_backward,
    global_maxpool_time,
    global_maxpool_time_backward,
    linear,
    linear_backward,
    relu,
    relu_backward,
    softmax,
)
from .losses import (
    ClassWeights,
    MsHyper,
    cosine_similarity_backward,
    cosine_similarity_matrix,
    ms_loss,
    total_loss,
    weighted_ce,
)
from .numerics import Rng, Tensor, derive_seed
from .optim import AdamHyper, adam_step, init_adam


class Variant(Enum):
    FULL = "full"
    I = "I"
    II = "II"


@dataclass
class ModelConfig:
    d: int = 4
    channels: tuple[int, int] = (32, 64)
    kernels: tuple[int, int] = (5, 3)
    num_classes: int = 2
    lambda_mix: float = 0.25
    ms: MsHyper = field(default_factory=MsHyper)
    adam: AdamHyper = field(default_factory=AdamHyper)
    batch_p: int = 2
    batch_k: int = 8
    epochs: int = 100
    t_target: int = 128
    seed: int = 0

    def __post_init__(self):
        if len(self.channels) != 2 or len(self.kernels) != 2:
            raise ConfigError("the embedding network has exactly two conv layers")
        if any(c < 1 for c in self.channels):
            raise ConfigError(f"channel counts must be >= 1, got {list(self.channels)}")
        if any(k < 1 or k % 2 == 0 for k in self.kernels):
            raise ConfigError(f"kernel sizes must be odd positive, got {list(self.kernels)}")
        if not 0.0 <= self.lambda_mix <= 1.0:
            raise ConfigError(f"lambda_mix must lie in [0, 1], got {self.lambda_mix}")
        if self.d < 1 or self.num_classes < 2 or self.epochs < 1 or self.t_target < 1:
            raise ConfigError("d, num_classes, epochs, t_target out of range")
        if self.batch_p < 1 or self.batch_k < 2:
            raise ConfigError("batch spec requires p >= 1 and k >= 2")


@dataclass
class ModelParams:
    conv1: ConvParams
    bn1: BatchNormParams
    conv2: ConvParams
    bn2: BatchNormParams
    fc: LinearParams


@dataclass
class EpochStats:
    l_car: float
    l_ia: float
    l_total: float
    train_acc: float


@dataclass
class History:
    epochs: list[EpochStats]
    class_weights: list[float]  # as used during training (ones for variant II)
    variant: str


def build_model(cfg: ModelConfig, rng: Rng) -> ModelParams:
    """Initialize parameters: conv/linear weights uniform in +-sqrt(6/fan_in),
    biases 0, batch-norm gamma 1 / beta 0 with running stats (0, 1).

    Weight draws happen in a fixed order (conv1, conv2, fc) so identical
    (config, rng) pairs yield identical parameters.
    """
    c1, c2 = cfg.channels
    k1, k2 = cfg.kernels

    def uniform_fan_in(shape, fan_in):
        bound = math.sqrt(6.0 / fan_in)
        return rng.uniform(-bound, bound, size=shape)

    conv1 = ConvParams(
        weight=uniform_fan_in((c1, cfg.d, k1), cfg.d * k1),
        bias=np.zeros(c1),
    )
    conv2 = ConvParams(
        weight=uniform_fan_in((c2, c1, k2), c1 * k2),
        bias=np.zeros(c2),
    )
    fc = LinearParams(
        weight=uniform_fan_in((cfg.num_classes, c2), c2),
        bias=np.zeros(cfg.num_classes),
    )
    bn = lambda c: BatchNormParams(
        gamma=np.ones(c),
        beta=np.zeros(c),
        running_mean=np.zeros(c),
        running_var=np.ones(c),
    )
    return ModelParams(conv1=conv1, bn1=bn(c1), conv2=conv2, bn2=bn(c2), fc=fc)


@dataclass
class Activations:
    """Intermediate values of one forward pass, kept for the backward pass."""

    x: Tensor
    z1: Tensor       # conv1 output (batch-norm input)
    bn1_y: Tensor
    r1: Tensor       # relu output / conv2 input
    z2: Tensor
    bn2_y: Tensor
    r2: Tensor
    e: Tensor        # embedding [B, c2]
    logits: Tensor
    probs: Tensor
    bn1_running: tuple[Tensor, Tensor]
    bn2_running: tuple[Tensor, Tensor]


def forward_full(p: ModelParams, x: Tensor, mode: Mode) -> Activations:
    z1 = conv1d(x, p.conv1)
    bn1 = batchnorm1d(z1, p.bn1, mode)
    r1 = relu(bn1.y)
    z2 = conv1d(r1, p.conv2)
    bn2 = batchnorm1d(z2, p.bn2, mode)
    r2 = relu(bn2.y)
    e = global_maxpool_time(r2)
    logits = linear(e, p.fc)
    probs = softmax(logits)
    return Activations(
        x=x, z1=z1, bn1_y=bn1.y, r1=r1, z2=z2, bn2_y=bn2.y, r2=r2,
        e=e, logits=logits, probs=probs,
        bn1_running=(bn1.running_mean, bn1.running_var),
        bn2_running=(bn2.running_mean, bn2.running_var),
    )


def forward(p: ModelParams, x: Tensor, mode: Mode) -> tuple[Tensor, Tensor, Tensor]:
    """Run the network on [B,d,T]; returns (embedding, logits, probs)."""
    acts = forward_full(p, x, mode)
    return acts.e, acts.logits, acts.probs


def backward_trunk(
    p: ModelParams,
    acts: Activations,
    grad_logits: Tensor,
    grad_e_extra: Tensor | None = None,
) -> dict[str, Tensor]:
    """Backpropagate (grad_logits, optional embedding gradient) to all parameters.

    Batch-norm backward recomputes TRAIN-mode batch statistics from the
    stored layer inputs, matching how the forward computed them.
    """
    grad_e, gw_fc, gb_fc = linear_backward(acts.e, p.fc, grad_logits)
    if grad_e_extra is not None:
        grad_e = grad_e + grad_e_extra
    gr2 = global_maxpool_time_backward(acts.r2, grad_e)
    g_bn2y = relu_backward(acts.bn2_y, gr2)
    gz2, g_gamma2, g_beta2 = batchnorm1d_backward(acts.z2, p.bn2, g_bn2y)
    gr1, gw2, gb2 = conv1d_backward(acts.r1, p.conv2, gz2)
    g_bn1y = relu_backward(acts.bn1_y, gr1)
    gz1, g_gamma1, g_beta1 = batchnorm1d_backward(acts.z1, p.bn1, g_bn1y)
    _, gw1, gb1 = conv1d_backward(acts.x, p.conv1, gz1)
    return {
        "conv1.weight": gw1, "conv1.bias": gb1,
        "bn1.gamma": g_gamma1, "bn1.beta": g_beta1,
        "conv2.weight": gw2, "conv2.bias": gb2,
        "bn2.gamma": g_gamma2, "bn2.beta": g_beta2,
        "fc.weight": gw_fc, "fc.bias": gb_fc,
    }


def learnable_dict(p: ModelParams) -> dict[str, Tensor]:
    return {
        "conv1.weight": p.conv1.weight, "conv1.bias": p.conv1.bias,
        "bn1.gamma": p.bn1.gamma, "bn1.beta": p.bn1.beta,
        "conv2.weight": p.conv2.weight, "conv2.bias": p.conv2.bias,
        "bn2.gamma": p.bn2.gamma, "bn2.beta": p.bn2.beta,
        "fc.weight": p.fc.weight, "fc.bias": p.fc.bias,
    }


def running_dict(p: ModelParams) -> dict[str, Tensor]:
    return {
        "bn1.running_mean": p.bn1.running_mean, "bn1.running_var": p.bn1.running_var,
        "bn2.running_mean": p.bn2.running_mean, "bn2.running_var": p.bn2.running_var,
    }


def rebuild_params(
    learn: dict[str, Tensor],
    running: dict[str, Tensor],
    momentum: float = 0.1,
    epsilon: float = 1e-5,
) -> ModelParams:
    return ModelParams(
        conv1=ConvParams(weight=learn["conv1.weight"], bias=learn["conv1.bias"]),
        bn1=BatchNormParams(
            gamma=learn["bn1.gamma"], beta=learn["bn1.beta"],
            running_mean=running["bn1.running_mean"], running_var=running["bn1.running_var"],
            momentum=momentum, epsilon=epsilon,
        ),
        conv2=ConvParams(weight=learn["conv2.weight"], bias=learn["conv2.bias"]),
        bn2=BatchNormParams(
            gamma=learn["bn2.gamma"], beta=learn["bn2.beta"],
            running_mean=running["bn2.running_mean"], running_var=running["bn2.running_var"],
            momentum=momentum, epsilon=epsilon,
        ),
        fc=LinearParams(weight=learn["fc.weight"], bias=learn["fc.bias"]),
    )


def stack_inputs(ds: Dataset, t_target: int) -> tuple[Tensor, np.ndarray]:
    """Resample every sample to t_target and stack to [N, d, T] plus labels."""
    xs = [resample_to_length(s.seq, t_target).T for s in ds.samples]
    return np.stack(xs, axis=0), ds.labels()


def batch_loss_and_grads(
    p: ModelParams,
    xb: Tensor,
    yb: np.ndarray,
    weights: ClassWeights,
    ms: MsHyper,
    lam: float,
) -> tuple[float, float, float, dict[str, Tensor], Activations]:
    """TRAIN-mode forward + mixed backward on one batch.

    Returns (l_car, l_ia, l_total, parameter gradients, activations). The
    similarity branch is skipped entirely when lam == 0; its loss is then
    reported as 0.
    """
    acts = forward_full(p, xb, Mode.TRAIN)
    ce = weighted_ce(acts.logits, yb, weights)
    if lam > 0.0:
        S = cosine_similarity_matrix(acts.e)
        car = ms_loss(S, yb, ms)
        grad_e_extra = cosine_similarity_backward(acts.e, lam * car.grad)
        l_car = car.value
    else:
        grad_e_extra = None
        l_car = 0.0
    l_total = total_loss(l_car, ce.value, lam)
    grads = backward_trunk(p, acts, (1.0 - lam) * ce.grad, grad_e_extra)
    return l_car, ce.value, l_total, grads, acts


def train(cfg: ModelConfig, dataset: Dataset, variant: Variant = Variant.FULL):
    """Train on balanced P x K batches; returns (params, history).

    Deterministic given (cfg.seed, dataset): initialization draws from the
    seed's stream 0 and each epoch's batch sampler from stream epoch+1.
    train_acc is measured on the TRAIN-mode batch outputs seen during the
    epoch.
    """
    if dataset.d != cfg.d:
        raise ShapeError(f"dataset has {dataset.d} features but config expects {cfg.d}")
    if min(dataset.class_counts) == 0:
        raise DegenerateInputError(
            "training requires at least one sample of every class "
            f"(counts: {dataset.class_counts})"
        )

    x_all, y_all = stack_inputs(dataset, cfg.t_target)
    if variant is Variant.II:
        weights = ClassWeights(np.ones(cfg.num_classes))
    else:
        weights = class_weights(y_all)
    lam = 0.0 if variant is Variant.I else cfg.lambda_mix

    params = build_model(cfg, Rng(derive_seed(cfg.seed, 0)))
    state = init_adam(learnable_dict(params))
    epochs: list[EpochStats] = []
    for epoch in range(cfg.epochs):
        batches = balanced_batches(dataset, cfg.batch_p, cfg.batch_k, derive_seed(cfg.seed, epoch + 1))
        sums = np.zeros(3)
        correct = 0
        total = 0
        for batch in batches:
            xb = x_all[batch]
            yb = y_all[batch]
            l_car, l_ia, l_total, grads, acts = batch_loss_and_grads(
                params, xb, yb, weights, cfg.ms, lam
            )
            new_learn, state = adam_step(learnable_dict(params), grads, state, cfg.adam)
            params = rebuild_params(
                new_learn,
                {
                    "bn1.running_mean": acts.bn1_running[0],
                    "bn1.running_var": acts.bn1_running[1],
                    "bn2.running_mean": acts.bn2_running[0],
                    "bn2.running_var": acts.bn2_running[1],
                },
                momentum=params.bn1.momentum,
                epsilon=params.bn1.epsilon,
            )
            sums += (l_car, l_ia, l_total)
            correct += int(np.sum(np.argmax(acts.probs, axis=1) == yb))
            total += len(yb)
        n = len(batches)
        epochs.append(EpochStats(
            l_car=float(sums[0] / n), l_ia=float(sums[1] / n), l_total=float(sums[2] / n),
            train_acc=correct / total,
        ))
    history = History(
        epochs=epochs,
        class_weights=[float(w) for w in weights.w],
        variant=variant.value,
    )
    return params, history


def predict(p: ModelParams, x: Tensor) -> np.ndarray:
    """EVAL-mode class predictions; ties break toward the lower class index."""
    _, _, probs = forward(p, x, Mode.EVAL)
    return np.argmax(probs, axis=1)


def evaluate(p: ModelParams, ds: Dataset, t_target: int) -> tuple[np.ndarray, np.ndarray]:
    """Predict every sample of ds; returns (y_true, y_pred)."""
    x, y = stack_inputs(ds, t_target)
    return y, predict(p, x)
