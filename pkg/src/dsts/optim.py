"""Adam optimizer over a flat name -> tensor parameter set."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .numerics import Tensor


@dataclass
class AdamHyper:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr < 0 or not (0 <= self.beta1 < 1) or not (0 <= self.beta2 < 1) or self.eps <= 0:
            raise ConfigError(f"invalid Adam hyperparameters: {self}")


@dataclass
class AdamState:
    m: dict[str, Tensor] = field(default_factory=dict)
    v: dict[str, Tensor] = field(default_factory=dict)
    t: int = 0


def init_adam(params: dict[str, Tensor]) -> AdamState:
    return AdamState(
        m={name: np.zeros_like(p) for name, p in params.items()},
        v={name: np.zeros_like(p) for name, p in params.items()},
        t=0,
    )


def adam_step(
    params: dict[str, Tensor],
    grads: dict[str, Tensor],
    state: AdamState,
    h: AdamHyper,
) -> tuple[dict[str, Tensor], AdamState]:
    """One bias-corrected Adam update; returns new params and new state.

    State transitions are value-in/value-out: the input params and state are
    left untouched.
    """
    if set(params) != set(grads) or set(params) != set(state.m):
        raise ShapeError(
            f"parameter/gradient/state names differ: {sorted(params)} vs "
            f"{sorted(grads)} vs {sorted(state.m)}"
        )
    t = state.t + 1
    new_params: dict[str, Tensor] = {}
    new_m: dict[str, Tensor] = {}
    new_v: dict[str, Tensor] = {}
    bc1 = 1.0 - h.beta1**t
    bc2 = 1.0 - h.beta2**t
    for name, theta in params.items():
        g = grads[name]
        if g.shape != theta.shape:
            raise ShapeError(
                f"gradient shape {list(g.shape)} does not match parameter "
                f"{name!r} shape {list(theta.shape)}"
            )
        m = h.beta1 * state.m[name] + (1.0 - h.beta1) * g
        v = h.beta2 * state.v[name] + (1.0 - h.beta2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        new_params[name] = theta - h.lr * m_hat / (np.sqrt(v_hat) + h.eps)
        new_m[name] = m
        new_v[name] = v
    return new_params, AdamState(m=new_m, v=new_v, t=t)
