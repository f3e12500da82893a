"""Synthetic fixation/saccade gaze sequences with controllable class separation.

Each sample alternates fixations (a held target with small Gaussian jitter)
and 2-step linear saccades between targets. Two class-conditional knobs are
scaled by the separation parameter s: TD samples favor a "social" region of
interest while ASD samples avoid it, and ASD fixations last longer on
average. At s=0 both knobs collapse to their common midpoint, so the class
distributions are identical; at s=1 they reach their configured extremes.

Per-step features: x, y (clipped to the unit square), speed (Euclidean
displacement from the previous step), and a fixation flag (1 during
fixations, 0 during saccades).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, Sample
from .errors import ConfigError
from .numerics import Rng, Tensor, derive_seed

FEATURE_COUNT = 4  # x, y, speed, fixation_flag


@dataclass
class GenConfig:
    n_samples: int = 1000
    imbalance: float = 0.7      # fraction labeled ASD
    separation: float = 0.8     # s in [0, 1]
    t_target: int = 128
    social_center: tuple[float, float] = (0.3, 0.3)
    social_radius: float = 0.12
    nonsocial_center: tuple[float, float] = (0.7, 0.7)
    nonsocial_radius: float = 0.2
    fix_dur_mean_td: float = 12.0   # steps, reached at s=1
    fix_dur_mean_asd: float = 18.0
    fix_dur_sigma: float = 0.3      # lognormal shape
    jitter_sigma: float = 0.005
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 0 or self.t_target < 1:
            raise ConfigError(f"invalid sample count or length: {self.n_samples}, {self.t_target}")
        if not (0.0 <= self.imbalance <= 1.0 and 0.0 <= self.separation <= 1.0):
            raise ConfigError("imbalance and separation must lie in [0, 1]")
        if min(self.fix_dur_mean_td, self.fix_dur_mean_asd) < 1.0:
            raise ConfigError("fixation duration means must be at least 1 step")
        if self.fix_dur_sigma < 0 or self.jitter_sigma < 0:
            raise ConfigError("sigmas must be non-negative")
        for cx, cy, r in (
            (*self.social_center, self.social_radius),
            (*self.nonsocial_center, self.nonsocial_radius),
        ):
            if r <= 0 or cx - r < 0 or cx + r > 1 or cy - r < 0 or cy + r > 1:
                raise ConfigError(f"ROI disc ({cx}, {cy}, r={r}) must lie inside the unit square")


def _social_prob(label: int, s: float) -> float:
    # TD favors the social region, ASD avoids it; both meet at 0.5 when s=0.
    return 0.5 + 0.3 * s if label == 0 else 0.5 - 0.3 * s


def _duration_mean(cfg: GenConfig, label: int) -> float:
    # Class means interpolate toward their midpoint as s shrinks so s=0 yields
    # identical class-conditional distributions.
    mid = 0.5 * (cfg.fix_dur_mean_td + cfg.fix_dur_mean_asd)
    target = cfg.fix_dur_mean_td if label == 0 else cfg.fix_dur_mean_asd
    return mid + (target - mid) * cfg.separation


def _disc_point(rng: Rng, center: tuple[float, float], radius: float) -> np.ndarray:
    r = radius * math.sqrt(float(rng.uniform(0.0, 1.0)))
    theta = 2.0 * math.pi * float(rng.uniform(0.0, 1.0))
    return np.array([center[0] + r * math.cos(theta), center[1] + r * math.sin(theta)])


def _sample_sequence(cfg: GenConfig, label: int, rng: Rng) -> Tensor:
    """One [t_target, 4] sequence; consumes rng in a fixed draw order."""
    p_social = _social_prob(label, cfg.separation)
    dur_mean = _duration_mean(cfg, label)
    # lognormal location giving E[duration] = dur_mean for shape fix_dur_sigma
    mu = math.log(dur_mean) - 0.5 * cfg.fix_dur_sigma**2

    positions: list[np.ndarray] = []
    flags: list[float] = []
    prev_target: np.ndarray | None = None
    while len(positions) < cfg.t_target:
        if float(rng.uniform(0.0, 1.0)) < p_social:
            target = _disc_point(rng, cfg.social_center, cfg.social_radius)
        else:
            target = _disc_point(rng, cfg.nonsocial_center, cfg.nonsocial_radius)
        duration = max(1, int(round(math.exp(float(rng.normal(mu, cfg.fix_dur_sigma))))))
        if prev_target is not None:
            # 2-step linear saccade from the previous fixation to the new one
            for frac in (1.0 / 3.0, 2.0 / 3.0):
                positions.append(prev_target + frac * (target - prev_target))
                flags.append(0.0)
        jitter = rng.normal(0.0, cfg.jitter_sigma, size=(duration, 2))
        for step in range(duration):
            positions.append(target + jitter[step])
            flags.append(1.0)
        prev_target = target

    pos = np.clip(np.array(positions[: cfg.t_target]), 0.0, 1.0)
    flg = np.array(flags[: cfg.t_target])
    speed = np.zeros(cfg.t_target)
    if cfg.t_target > 1:
        speed[1:] = np.linalg.norm(np.diff(pos, axis=0), axis=1)
    return np.column_stack([pos[:, 0], pos[:, 1], speed, flg])


def generate(cfg: GenConfig) -> Dataset:
    """Generate a labeled synthetic dataset; bit-identical for identical configs.

    The first round(n_samples * imbalance) sample indices are labeled ASD and
    the rest TD; each sample draws from its own seed stream derived from
    (cfg.seed, index), so the output is independent of generation order.
    """
    n_asd = int(math.floor(cfg.n_samples * cfg.imbalance + 0.5))
    samples = []
    for i in range(cfg.n_samples):
        label = 1 if i < n_asd else 0
        rng = Rng(derive_seed(cfg.seed, i))
        seq = _sample_sequence(cfg, label, rng)
        samples.append(Sample(id=f"s{i:05d}", seq=seq, label=label))
    return Dataset.from_samples(samples, d=FEATURE_COUNT)


def social_dwell_fraction(seq: Tensor, cfg: GenConfig) -> float:
    """Fraction of steps whose gaze point lies inside the social ROI."""
    dx = seq[:, 0] - cfg.social_center[0]
    dy = seq[:, 1] - cfg.social_center[1]
    return float(np.mean(dx * dx + dy * dy <= cfg.social_radius**2))
