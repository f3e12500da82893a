"""Synthetic benchmark grid: generalization, ablation ordering, null separation.

Runs the full model and both ablation variants over a grid of separation
levels and seeds on freshly generated gaze data, then summarizes three
verdicts: test accuracy and minority-recall behavior at the target
separation, mean accuracy ranks of the variants across the grid, and the
model's behavior when the classes are indistinguishable (separation 0).

Each (separation, seed) cell generates one dataset that all variants share,
with the model initialized from the same seed, so variant comparisons are
paired.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .data import apply_standardization, fit_standardization, stratified_split
from .metrics import confusion, scores
from .model import ModelConfig, Variant, evaluate, train
from .synthgaze import GenConfig, generate

VARIANTS = (Variant.FULL, Variant.I, Variant.II)


def _bench_model() -> ModelConfig:
    # sized for desk-scale grids: ~50 training runs in a few minutes
    return ModelConfig(channels=(16, 32), kernels=(5, 3), epochs=10)


@dataclass
class BenchConfig:
    seeds: int = 5
    n_samples: int = 1000
    imbalance: float = 0.7
    separations: tuple[float, ...] = (0.5, 0.65, 0.8)
    target_separation: float = 0.8  # column used for the generalization verdict
    null_separation: float = 0.0
    test_frac: float = 0.2
    acc_threshold: float = 0.9
    null_tolerance: float = 0.05
    gen_t_target: int = 128  # generated length; the model may resample shorter
    model: ModelConfig = field(default_factory=_bench_model)


def _run_cell(cfg: BenchConfig, separation: float, seed: int, variants) -> dict[str, dict]:
    gen = GenConfig(
        n_samples=cfg.n_samples,
        imbalance=cfg.imbalance,
        separation=separation,
        t_target=cfg.gen_t_target,
        seed=seed,
    )
    ds = generate(gen)
    train_ds, test_ds = stratified_split(ds, cfg.test_frac, seed)
    st = fit_standardization(train_ds)
    train_std = apply_standardization(train_ds, st)
    test_std = apply_standardization(test_ds, st)
    model_cfg = dataclasses.replace(cfg.model, seed=seed)
    out: dict[str, dict] = {}
    for variant in variants:
        params, _ = train(model_cfg, train_std, variant)
        y_true, y_pred = evaluate(params, test_std, model_cfg.t_target)
        rep = scores(confusion(y_true, y_pred))
        out[variant.value] = {
            "acc": rep.acc,
            "f1": rep.f1,
            "td_recall": rep.per_class_recall[0],
        }
    return out


def _average_ranks(accs: dict[str, float]) -> dict[str, float]:
    """Competition ranks (1 = best accuracy); ties share their average rank."""
    ordered = sorted(accs.items(), key=lambda kv: -kv[1])
    ranks: dict[str, float] = {}
    i = 0
    while i < len(ordered):
        j = i
        while j + 1 < len(ordered) and ordered[j + 1][1] == ordered[i][1]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[ordered[k][0]] = avg
        i = j + 1
    return ranks


def _mean(xs) -> float:
    xs = list(xs)
    return sum(xs) / len(xs)


def run_bench(cfg: BenchConfig | None = None, progress=None) -> dict:
    """Execute the grid and return the full JSON-ready report."""
    cfg = cfg or BenchConfig()
    seeds = list(range(cfg.seeds))

    grid: dict[float, list[dict[str, dict]]] = {}
    for s in cfg.separations:
        cells = []
        for seed in seeds:
            cell = _run_cell(cfg, s, seed, VARIANTS)
            cells.append(cell)
            if progress:
                progress(f"separation={s} seed={seed} " + " ".join(
                    f"{v}:acc={cell[v]['acc']:.3f}" for v in cell
                ))
        grid[s] = cells

    null_cells = []
    for seed in seeds:
        cell = _run_cell(cfg, cfg.null_separation, seed, (Variant.FULL,))
        null_cells.append(cell)
        if progress:
            progress(f"separation={cfg.null_separation} seed={seed} "
                     f"full:acc={cell['full']['acc']:.3f}")

    # generalization verdict at the target separation
    target_cells = grid[cfg.target_separation]
    mean_acc_full = _mean(c["full"]["acc"] for c in target_cells)
    mean_td_full = _mean(c["full"]["td_recall"] for c in target_cells)
    mean_td_ii = _mean(c["II"]["td_recall"] for c in target_cells)
    generalization = {
        "separation": cfg.target_separation,
        "per_seed": [
            {"seed": seed, **{v.value: target_cells[i][v.value] for v in VARIANTS}}
            for i, seed in enumerate(seeds)
        ],
        "mean_acc_full": mean_acc_full,
        "mean_td_recall_full": mean_td_full,
        "mean_td_recall_ii": mean_td_ii,
        "acc_threshold": cfg.acc_threshold,
        "pass_acc": mean_acc_full >= cfg.acc_threshold,
        "pass_td_recall": mean_td_full > mean_td_ii,
    }

    # ablation ordering across the whole grid
    rank_sums = {v.value: 0.0 for v in VARIANTS}
    n_cells = 0
    for s in cfg.separations:
        for cell in grid[s]:
            ranks = _average_ranks({v: cell[v]["acc"] for v in rank_sums})
            for v, r in ranks.items():
                rank_sums[v] += r
            n_cells += 1
    mean_rank = {v: rank_sums[v] / n_cells for v in rank_sums}
    ablation = {
        "per_config": {
            str(s): {
                v.value: [cell[v.value]["acc"] for cell in grid[s]] for v in VARIANTS
            }
            for s in cfg.separations
        },
        "mean_rank": mean_rank,
        "pass": mean_rank["full"] <= mean_rank["I"] and mean_rank["full"] <= mean_rank["II"],
    }

    # null-separation verdict: accuracy should hug the majority rate
    majority = max(cfg.imbalance, 1.0 - cfg.imbalance)
    null_accs = [c["full"]["acc"] for c in null_cells]
    mean_null = _mean(null_accs)
    null_separation = {
        "per_seed_acc": null_accs,
        "mean_acc": mean_null,
        "majority_rate": majority,
        "tolerance": cfg.null_tolerance,
        "pass": abs(mean_null - majority) <= cfg.null_tolerance,
    }

    return {
        "config": {
            "seeds": cfg.seeds,
            "n_samples": cfg.n_samples,
            "imbalance": cfg.imbalance,
            "separations": list(cfg.separations),
            "target_separation": cfg.target_separation,
            "null_separation": cfg.null_separation,
            "test_frac": cfg.test_frac,
            "acc_threshold": cfg.acc_threshold,
            "null_tolerance": cfg.null_tolerance,
            "model": {
                "channels": list(cfg.model.channels),
                "kernels": list(cfg.model.kernels),
                "epochs": cfg.model.epochs,
                "t_target": cfg.model.t_target,
                "lambda_mix": cfg.model.lambda_mix,
                "batch_p": cfg.model.batch_p,
                "batch_k": cfg.model.batch_k,
            },
        },
        "generalization": generalization,
        "ablation": ablation,
        "null_separation": null_separation,
        "passed": (
            generalization["pass_acc"]
            and generalization["pass_td_recall"]
            and ablation["pass"]
            and null_separation["pass"]
        ),
    }
