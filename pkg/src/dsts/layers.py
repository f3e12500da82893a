"""Network layers: 1D convolution, batch norm, ReLU, temporal max-pool, linear, softmax.

Every forward has a backward companion that returns the gradient with respect
to the input and each parameter, given the upstream gradient. Backwards are
pure functions of (input, params, upstream): anything they need (batch
statistics, argmax positions) is recomputed, so no cache objects travel with
the forward results. All passes are verified against central finite
differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, DegenerateInputError, ShapeError
from .numerics import Tensor


class Mode(Enum):
    TRAIN = "train"
    EVAL = "eval"


@dataclass
class ConvParams:
    weight: Tensor  # [C_out, C_in, k], k odd
    bias: Tensor    # [C_out]


@dataclass
class BatchNormParams:
    gamma: Tensor         # [C]
    beta: Tensor          # [C]
    running_mean: Tensor  # [C]
    running_var: Tensor   # [C], >= 0 elementwise
    momentum: float = 0.1
    epsilon: float = 1e-5


@dataclass
class LinearParams:
    weight: Tensor  # [C_out, C_in]
    bias: Tensor    # [C_out]


class BnForward(NamedTuple):
    y: Tensor
    running_mean: Tensor  # updated in TRAIN mode, unchanged in EVAL
    running_var: Tensor


def _check_kernel(p: ConvParams) -> int:
    k = p.weight.shape[2]
    if k % 2 == 0:
        raise ConfigError(f"convolution kernel size must be odd, got {k}")
    return k


def _im2col(x: Tensor, k: int) -> Tensor:
    """Stack zero-padded length-k windows: [B,C,T] -> [B*T, C*k]."""
    B, C, T = x.shape
    pad = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    windows = sliding_window_view(xp, k, axis=2)          # [B, C, T, k]
    return windows.transpose(0, 2, 1, 3).reshape(B * T, C * k)


def conv1d(x: Tensor, p: ConvParams) -> Tensor:
    """Same-padded stride-1 cross-correlation: [B,C_in,T] -> [B,C_out,T]."""
    k = _check_kernel(p)
    if x.ndim != 3:
        raise ShapeError(f"conv1d expects [B,C,T] input, got shape {list(x.shape)}")
    B, C_in, T = x.shape
    C_out, C_w, _ = p.weight.shape
    if C_in != C_w:
        raise ShapeError(f"conv1d channel mismatch: input has {C_in}, weight expects {C_w}")
    cols = _im2col(x, k)                                  # [B*T, C_in*k]
    y = cols @ p.weight.reshape(C_out, C_in * k).T        # [B*T, C_out]
    return y.reshape(B, T, C_out).transpose(0, 2, 1) + p.bias[None, :, None]


def conv1d_backward(x: Tensor, p: ConvParams, grad_y: Tensor):
    """Gradients of conv1d: returns (grad_x, grad_weight, grad_bias)."""
    k = _check_kernel(p)
    B, C_in, T = x.shape
    C_out = p.weight.shape[0]
    pad = (k - 1) // 2

    grad_bias = grad_y.sum(axis=(0, 2))

    cols = _im2col(x, k)                                  # [B*T, C_in*k]
    gy_rows = grad_y.transpose(0, 2, 1).reshape(B * T, C_out)
    grad_weight = (gy_rows.T @ cols).reshape(C_out, C_in, k)

    # grad_x is the correlation of the padded upstream with the time-flipped
    # kernel, contracted over output channels (transposed convolution).
    gy_cols = _im2col(grad_y, k)                          # [B*T, C_out*k]
    w_flip = p.weight[:, :, ::-1].transpose(0, 2, 1)      # [C_out, k, C_in]
    grad_x = (gy_cols @ w_flip.reshape(C_out * k, C_in)).reshape(B, T, C_in).transpose(0, 2, 1)
    return grad_x, grad_weight, grad_bias


def batchnorm1d(x: Tensor, p: BatchNormParams, mode: Mode) -> BnForward:
    """Per-channel normalization over the batch and time axes.

    TRAIN uses biased batch statistics and returns running stats updated as
    running <- (1 - momentum) * running + momentum * batch_stat; EVAL
    normalizes with the stored running statistics and returns them unchanged.
    """
    B, C, T = x.shape
    if mode is Mode.TRAIN:
        if B * T < 2:
            raise DegenerateInputError(
                f"batch norm needs at least 2 values per channel in TRAIN mode, got {B * T}"
            )
        mean = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))  # biased
        new_mean = (1.0 - p.momentum) * p.running_mean + p.momentum * mean
        new_var = (1.0 - p.momentum) * p.running_var + p.momentum * var
    else:
        mean, var = p.running_mean, p.running_var
        new_mean, new_var = p.running_mean, p.running_var
    xhat = (x - mean[None, :, None]) / np.sqrt(var + p.epsilon)[None, :, None]
    y = p.gamma[None, :, None] * xhat + p.beta[None, :, None]
    return BnForward(y, new_mean, new_var)


def batchnorm1d_backward(x: Tensor, p: BatchNormParams, grad_y: Tensor):
    """TRAIN-mode gradients; batch statistics are recomputed from x.

    Accounts for the dependence of the batch mean and variance on the input:
    dx = (gamma / (N * sigma)) * (N*gy - sum(gy) - xhat * sum(gy * xhat)).
    """
    B, C, T = x.shape
    N = B * T
    mean = x.mean(axis=(0, 2))
    var = x.var(axis=(0, 2))
    inv_sigma = 1.0 / np.sqrt(var + p.epsilon)
    xhat = (x - mean[None, :, None]) * inv_sigma[None, :, None]

    grad_beta = grad_y.sum(axis=(0, 2))
    grad_gamma = (grad_y * xhat).sum(axis=(0, 2))
    gy_sum = grad_y.sum(axis=(0, 2))[None, :, None]
    gyx_sum = (grad_y * xhat).sum(axis=(0, 2))[None, :, None]
    grad_x = (p.gamma * inv_sigma)[None, :, None] / N * (N * grad_y - gy_sum - xhat * gyx_sum)
    return grad_x, grad_gamma, grad_beta


def relu(x: Tensor) -> Tensor:
    return np.maximum(x, 0.0)


def relu_backward(x: Tensor, grad_y: Tensor) -> Tensor:
    # subgradient at exactly 0 is defined as 0
    return grad_y * (x > 0.0)


def global_maxpool_time(z: Tensor) -> Tensor:
    """Maximum over the time axis: [B,C,T] -> [B,C]."""
    if z.shape[2] < 1:
        raise DegenerateInputError("cannot max-pool over an empty time axis")
    return z.max(axis=2)


def global_maxpool_time_backward(z: Tensor, grad_e: Tensor) -> Tensor:
    """Routes each channel's gradient to the earliest maximal time index."""
    B, C, T = z.shape
    idx = z.argmax(axis=2)  # first maximum wins ties
    grad_z = np.zeros_like(z)
    b_ix, c_ix = np.meshgrid(np.arange(B), np.arange(C), indexing="ij")
    grad_z[b_ix, c_ix, idx] = grad_e
    return grad_z


def linear(e: Tensor, p: LinearParams) -> Tensor:
    """Affine classifier head: logits = e @ weight.T + bias."""
    if e.ndim != 2 or e.shape[1] != p.weight.shape[1]:
        raise ShapeError(
            f"linear expects [B,{p.weight.shape[1]}] input, got shape {list(e.shape)}"
        )
    return e @ p.weight.T + p.bias[None, :]


def linear_backward(e: Tensor, p: LinearParams, grad_logits: Tensor):
    """Returns (grad_e, grad_weight, grad_bias)."""
    grad_e = grad_logits @ p.weight
    grad_weight = grad_logits.T @ e
    grad_bias = grad_logits.sum(axis=0)
    return grad_e, grad_weight, grad_bias


def softmax(logits: Tensor) -> Tensor:
    """Row-wise exp-normalization with max subtraction for stability."""
    if not np.all(np.isfinite(logits)):
        raise DegenerateInputError("softmax requires finite logits")
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)
