"""Finite-difference verification of every hand-derived backward pass.

Each check builds a scalar objective around one layer or loss, evaluates the
analytic gradient, and compares it against central differences from
:func:`dsts.numerics.finite_diff_grad`. Errors are measured relative to the
largest gradient component, max|ga - gn| / (max(|ga|, |gn|)_inf + 1e-8):
per-element ratios are meaningless for entries whose true effect on the loss
sits below float64 resolution (the multi-similarity loss has such far-tail
entries in every realistic batch).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

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
)
from .losses import (
    ClassWeights,
    MsHyper,
    cosine_similarity_backward,
    cosine_similarity_matrix,
    ms_loss,
    weighted_ce,
)
from .model import (
    ModelConfig,
    Variant,
    batch_loss_and_grads,
    build_model,
    forward_full,
    learnable_dict,
    rebuild_params,
    running_dict,
)
from .losses import total_loss
from .numerics import Rng, Tensor, derive_seed, finite_diff_grad

DEFAULT_TOL = 1e-5
DEFAULT_TOL_E2E = 1e-4
FD_STEP = 1e-5


@dataclass
class CheckResult:
    name: str
    seed: int
    max_err: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_err < self.tol


def rel_err(analytic: Tensor, numeric: Tensor) -> float:
    """Max deviation relative to the largest gradient component (guarded)."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.max(np.abs(analytic), initial=0.0), np.max(np.abs(numeric), initial=0.0))
    return float(np.max(np.abs(analytic - numeric), initial=0.0) / (scale + 1e-8))


def _away_from_zero(x: Tensor, margin: float = 1e-2) -> Tensor:
    # keep kinked activations (relu) away from their non-differentiable point
    return x + np.sign(x) * margin


def _layer_checks(seed: int, tol: float) -> list[CheckResult]:
    rng = Rng(derive_seed(seed, 101))
    B, C_in, T, C_out, k = 4, 3, 16, 5, 3
    results = []

    def check(name, analytic, f, x0):
        numeric = finite_diff_grad(f, np.array(x0, dtype=np.float64), FD_STEP)
        results.append(CheckResult(name, seed, rel_err(analytic, numeric), tol))

    # conv1d
    x = rng.normal(size=(B, C_in, T))
    cp = ConvParams(weight=rng.normal(size=(C_out, C_in, k)), bias=rng.normal(size=C_out))
    up = rng.normal(size=(B, C_out, T))  # fixed upstream weighting
    gx, gw, gb = conv1d_backward(x, cp, up)
    check("conv1d.dx", gx, lambda v: float((conv1d(v, cp) * up).sum()), x)
    check("conv1d.dweight", gw,
          lambda v: float((conv1d(x, ConvParams(v, cp.bias)) * up).sum()), cp.weight)
    check("conv1d.dbias", gb,
          lambda v: float((conv1d(x, ConvParams(cp.weight, v)) * up).sum()), cp.bias)

    # batch norm (TRAIN statistics)
    bp = BatchNormParams(
        gamma=rng.normal(1.0, 0.2, size=C_in),
        beta=rng.normal(size=C_in),
        running_mean=np.zeros(C_in),
        running_var=np.ones(C_in),
    )
    up_bn = rng.normal(size=(B, C_in, T))
    gx, gg, gbeta = batchnorm1d_backward(x, bp, up_bn)
    check("batchnorm1d.dx", gx,
          lambda v: float((batchnorm1d(v, bp, Mode.TRAIN).y * up_bn).sum()), x)
    check("batchnorm1d.dgamma", gg,
          lambda v: float((batchnorm1d(
              x, BatchNormParams(v, bp.beta, bp.running_mean, bp.running_var), Mode.TRAIN
          ).y * up_bn).sum()), bp.gamma)
    check("batchnorm1d.dbeta", gbeta,
          lambda v: float((batchnorm1d(
              x, BatchNormParams(bp.gamma, v, bp.running_mean, bp.running_var), Mode.TRAIN
          ).y * up_bn).sum()), bp.beta)

    # relu
    xr = _away_from_zero(rng.normal(size=(B, C_in, T)))
    up_r = rng.normal(size=xr.shape)
    check("relu.dx", relu_backward(xr, up_r),
          lambda v: float((relu(v) * up_r).sum()), xr)

    # global temporal max pool
    up_p = rng.normal(size=(B, C_in))
    check("global_maxpool_time.dx", global_maxpool_time_backward(x, up_p),
          lambda v: float((global_maxpool_time(v) * up_p).sum()), x)

    # linear head
    e = rng.normal(size=(B, C_out))
    lp = LinearParams(weight=rng.normal(size=(2, C_out)), bias=rng.normal(size=2))
    up_l = rng.normal(size=(B, 2))
    ge, gw, gb = linear_backward(e, lp, up_l)
    check("linear.de", ge, lambda v: float((linear(v, lp) * up_l).sum()), e)
    check("linear.dweight", gw,
          lambda v: float((linear(e, LinearParams(v, lp.bias)) * up_l).sum()), lp.weight)
    check("linear.dbias", gb,
          lambda v: float((linear(e, LinearParams(lp.weight, v)) * up_l).sum()), lp.bias)

    # softmax through cross-entropy (unit weights)
    labels = np.array(rng.integers(0, 2, size=B))
    logits = rng.normal(size=(B, 2))
    ones = ClassWeights(np.ones(2))
    check("softmax_ce.dlogits", weighted_ce(logits, labels, ones).grad,
          lambda v: weighted_ce(v, labels, ones).value, logits)
    return results


def _loss_checks(seed: int, tol: float) -> list[CheckResult]:
    rng = Rng(derive_seed(seed, 202))
    results = []
    B, D = 6, 5
    labels = np.array(rng.integers(0, 2, size=B))
    if len(set(labels.tolist())) < 2:  # ensure mixed labels
        labels[0] = 1 - labels[0]
    E = rng.normal(size=(B, D))
    h = MsHyper()

    S = cosine_similarity_matrix(E)
    numeric = finite_diff_grad(lambda v: ms_loss(v, labels, h).value, S.copy(), FD_STEP)
    results.append(CheckResult("ms_loss.dS", seed, rel_err(ms_loss(S, labels, h).grad, numeric), tol))

    up = rng.normal(size=(B, B))
    gE = cosine_similarity_backward(E, up)
    numeric = finite_diff_grad(
        lambda v: float((cosine_similarity_matrix(v) * up).sum()), E.copy(), FD_STEP
    )
    results.append(CheckResult("cosine_similarity.dE", seed, rel_err(gE, numeric), tol))

    logits = rng.normal(size=(B, 2))
    w = ClassWeights(rng.uniform(0.5, 2.0, size=2))
    numeric = finite_diff_grad(lambda v: weighted_ce(v, labels, w).value, logits.copy(), FD_STEP)
    results.append(CheckResult(
        "weighted_ce.dlogits", seed, rel_err(weighted_ce(logits, labels, w).grad, numeric), tol
    ))
    return results


def _end_to_end_check(seed: int, tol: float) -> list[CheckResult]:
    """FD check of the mixed objective w.r.t. every parameter tensor.

    The TRAIN-mode forward recomputes batch statistics inside every perturbed
    evaluation, so the batch-norm backward's mean/variance terms are exercised.
    """
    cfg = ModelConfig(
        d=3, channels=(4, 6), kernels=(3, 3), t_target=16,
        batch_k=4, epochs=1, seed=seed,
    )
    rng = Rng(derive_seed(seed, 303))
    B, T = 8, 16
    x = rng.normal(size=(B, cfg.d, T))
    labels = np.array([0, 1] * (B // 2))
    weights = ClassWeights(np.array([1.4, 0.7]))
    params = build_model(cfg, Rng(derive_seed(seed, 304)))
    lam = cfg.lambda_mix

    _, _, _, grads, _ = batch_loss_and_grads(params, x, labels, weights, cfg.ms, lam)

    learn = learnable_dict(params)
    run = running_dict(params)

    def objective(learn_now: dict[str, Tensor]) -> float:
        p = rebuild_params(learn_now, run)
        acts = forward_full(p, x, Mode.TRAIN)
        ce = weighted_ce(acts.logits, labels, weights)
        car = ms_loss(cosine_similarity_matrix(acts.e), labels, cfg.ms)
        return total_loss(car.value, ce.value, lam)

    numerics: dict[str, Tensor] = {}
    for name in learn:
        def f(v, _name=name):
            trial = dict(learn)
            trial[_name] = v
            return objective(trial)

        numerics[name] = finite_diff_grad(f, learn[name].copy(), FD_STEP)

    # The objective's gradient is one vector over all parameters, so deviations
    # are measured against its overall scale. (A conv bias feeding a TRAIN-mode
    # batch norm has exactly zero influence - the mean subtraction cancels any
    # constant channel shift - leaving both gradients as pure float noise that
    # a per-tensor ratio would amplify; the isolated conv1d.dbias check covers
    # that path with real gradients.)
    scale = max(
        max(np.max(np.abs(g)) for g in grads.values()),
        max(np.max(np.abs(g)) for g in numerics.values()),
    )
    results = []
    for name in learn:
        err = float(np.max(np.abs(grads[name] - numerics[name])) / (scale + 1e-8))
        results.append(CheckResult(f"end_to_end.{name}", seed, err, tol))
    return results


def run_all(
    seeds=range(10),
    tol: float = DEFAULT_TOL,
    tol_e2e: float = DEFAULT_TOL_E2E,
) -> list[CheckResult]:
    """Every layer, loss, and end-to-end check over the given seeds."""
    results: list[CheckResult] = []
    for seed in seeds:
        results.extend(_layer_checks(seed, tol))
        results.extend(_loss_checks(seed, tol))
        results.extend(_end_to_end_check(seed, tol_e2e))
    return results


def summarize(results: list[CheckResult]) -> list[str]:
    """One line per check name: worst error across seeds and verdict."""
    worst: dict[str, CheckResult] = {}
    for r in results:
        if r.name not in worst or r.max_err > worst[r.name].max_err:
            worst[r.name] = r
    lines = []
    for name in sorted(worst):
        r = worst[name]
        verdict = "PASS" if all(x.passed for x in results if x.name == name) else "FAIL"
        lines.append(f"{name}: max_rel_err={r.max_err:.3e} tol={r.tol:.0e} {verdict}")
    return lines
