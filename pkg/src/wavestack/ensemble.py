"""Bagging over independently seeded models and elementwise forecast
aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import model as md
from . import training as tr
from .errors import ShapeMismatch

AGGREGATIONS = ("median", "mean")


@dataclass(frozen=True)
class EnsembleConfig:
    size: int = 5
    aggregation: str = "median"
    bootstrap: bool = False  # resample training windows with replacement
    base_seed: int = 0

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("ensemble size must be >= 1")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation: {self.aggregation}")

    def member_seeds(self):
        return [self.base_seed + 1000 * i for i in range(self.size)]


@dataclass(frozen=True)
class EnsembleForecast:
    member_forecasts: list
    aggregated: np.ndarray


def bootstrap_windows(windows: tr.WindowSet,
                      rng: np.random.Generator) -> tr.WindowSet:
    """Sample the window set with replacement, preserving set size."""
    n = len(windows)
    idx = rng.integers(0, n, size=n)
    return tr.WindowSet(
        inputs=[windows.inputs[i] for i in idx],
        targets=[windows.targets[i] for i in idx],
        offsets=[windows.offsets[i] for i in idx])


def train_ensemble(model_cfg: md.ModelConfig, train_windows: tr.WindowSet,
                   val_windows: tr.WindowSet, train_cfg: tr.TrainConfig,
                   ens_cfg: EnsembleConfig) -> list:
    """Train `size` independent members; returns a list of
    (seed, TrainResult) pairs."""
    members = []
    for seed in ens_cfg.member_seeds():
        member_model_cfg = md.ModelConfig(
            **{**_cfg_dict(model_cfg), "seed": seed})
        member_train_cfg = tr.TrainConfig(
            **{**_cfg_dict(train_cfg), "seed": seed})
        windows = train_windows
        if ens_cfg.bootstrap:
            windows = bootstrap_windows(
                train_windows, np.random.default_rng(seed))
        try:
            result = tr.train(member_model_cfg, windows, val_windows,
                              member_train_cfg)
        except Exception as exc:
            raise type(exc)(
                f"ensemble member with seed {seed} failed: {exc}") from exc
        members.append((seed, result))
    return members


def _cfg_dict(cfg):
    from dataclasses import asdict
    return asdict(cfg)


def aggregate(member_forecasts, method: str = "median") -> np.ndarray:
    """Elementwise median or mean of equal-length member forecasts."""
    if method not in AGGREGATIONS:
        raise ValueError(f"unknown aggregation: {method}")
    forecasts = [np.asarray(f, dtype=np.float64) for f in member_forecasts]
    if not forecasts:
        raise ValueError("need at least one member forecast")
    shape = forecasts[0].shape
    if any(f.shape != shape for f in forecasts):
        raise ShapeMismatch("member forecasts have differing lengths")
    stacked = np.stack(forecasts)
    if method == "median":
        return np.median(stacked, axis=0)
    return np.mean(stacked, axis=0)


def ensemble_forecast(x, members, model_cfg: md.ModelConfig,
                      method: Optional[str] = None,
                      ens_cfg: Optional[EnsembleConfig] = None
                      ) -> EnsembleForecast:
    """Run every member on one input window and aggregate."""
    from .autodiff import Tape
    method = method or (ens_cfg.aggregation if ens_cfg else "median")
    forecasts = []
    for seed, result in members:
        cfg = md.ModelConfig(**{**_cfg_dict(model_cfg), "seed": seed})
        bundle = md.model_forward(x, result.params, cfg, Tape())
        forecasts.append(bundle.global_forecast)
    return EnsembleForecast(member_forecasts=forecasts,
                            aggregated=aggregate(forecasts, method))
