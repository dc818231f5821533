"""Wavelet-infused doubly-residual forecasting architecture.

Each stack blends a wavelet sub-series into the running residual, applies
an optional multi-resolution convolution, and runs a chain of basis
expansion blocks.  Stack forecasts sum to the global forecast; stack
backcasts drive the inter-stack residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, Tensor
from .errors import (
    InputTooShort,
    MissingPredecessor,
    MissingPyramidLevel,
    NonFiniteInput,
    ShapeMismatch,
)
from .wavelet import FilterKind, WaveletPyramid, mdwd

CONV_VARIANTS = ("none", "dcn", "cnn", "maxpool", "avgpool")


@dataclass(frozen=True)
class ModelConfig:
    n_stacks: int = 4
    blocks_per_stack: int = 5
    alpha: float = 0.4
    lookback: int = 720
    horizon: int = 24
    hidden_depth: int = 3
    hidden_width: int = 16
    conv_variant: str = "dcn"  # one of CONV_VARIANTS, shared by stacks
    kernel_sizes: Optional[tuple] = None  # per stack; default schedule below
    dilations: tuple = (1, 2, 4)
    wavelet_kind: str = "haar"
    theta_backcast_dim: Optional[int] = None  # default: conv output length
    theta_forecast_dim: Optional[int] = None  # default: horizon
    dropout_rate: float = 0.1
    freeze_conv: bool = False
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.n_stacks < 1:
            raise ValueError("n_stacks must be >= 1")
        if self.alpha > 0.0 and self.n_stacks < 2:
            raise ValueError("wavelet infusion requires at least 2 stacks")
        if self.conv_variant not in CONV_VARIANTS:
            raise ValueError(f"unknown conv variant: {self.conv_variant}")
        if self.kernel_sizes is None:
            ks = tuple(max(3, 2 * (self.n_stacks - i) + 1)
                       for i in range(1, self.n_stacks + 1))
            object.__setattr__(self, "kernel_sizes", ks)
        else:
            object.__setattr__(self, "kernel_sizes",
                               tuple(self.kernel_sizes))
        if len(self.kernel_sizes) != self.n_stacks:
            raise ValueError("need one kernel size per stack")
        if any(a < b for a, b in zip(self.kernel_sizes,
                                     self.kernel_sizes[1:])):
            raise ValueError("kernel sizes must be monotonically nonincreasing")
        if self.n_stacks >= 2 and self.lookback < 2 ** (self.n_stacks - 1):
            raise ValueError("lookback too short for n_stacks-1 wavelet levels")
        object.__setattr__(self, "dilations", tuple(self.dilations))
        FilterKind(self.wavelet_kind)  # validates

    @property
    def wavelet_levels(self):
        return self.n_stacks - 1

    def conv_output_length(self, stack: int) -> int:
        """Length of the block input for 1-based stack index."""
        t = self.lookback
        k = self.kernel_sizes[stack - 1]
        if self.conv_variant == "none":
            return t
        if self.conv_variant == "dcn":
            out = t - (k - 1) * sum(self.dilations)
        elif self.conv_variant == "cnn":
            out = t - (k - 1) * len(self.dilations)
        else:  # pooling
            out = t // k
        if out < 1:
            raise InputTooShort(
                f"stack {stack}: conv variant {self.conv_variant} consumes "
                f"the whole lookback window")
        return out

    def theta_b_dim(self, stack: int) -> int:
        return self.theta_backcast_dim or self.conv_output_length(stack)

    def theta_f_dim(self) -> int:
        return self.theta_forecast_dim or self.horizon


@dataclass(frozen=True)
class ForecastBundle:
    """Interpretability artifact: the global forecast plus every stack's
    contribution and input signal."""

    global_forecast: np.ndarray
    per_stack_forecast: list
    per_stack_backcast: list  # zero-padded to lookback length
    stack_inputs: list  # post-infusion, pre-convolution
    infused_signals: list  # wavelet branch blended into each stack
    forecast_node: Tensor = field(repr=False, compare=False)


def _block_names(i, k, cfg: ModelConfig):
    prefix = f"s{i}.b{k}"
    names = []
    for d in range(cfg.hidden_depth):
        names.append(f"{prefix}.trunk{d}")
    names += [f"{prefix}.head_b", f"{prefix}.head_f",
              f"{prefix}.proj_b", f"{prefix}.proj_f"]
    return names


def _conv_kernel_names(i, cfg: ModelConfig):
    if cfg.conv_variant not in ("dcn", "cnn"):
        return []
    return [f"s{i}.conv{j}.kernel" for j in range(len(cfg.dilations))]


def init_params(cfg: ModelConfig, seed: Optional[int] = None) -> dict:
    """Deterministic parameter initialization: Xavier-uniform affine
    weights, zero biases, delta-initialized convolution kernels."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    params = {}
    for i in range(1, cfg.n_stacks + 1):
        k = cfg.kernel_sizes[i - 1]
        for name in _conv_kernel_names(i, cfg):
            delta = np.zeros(k)
            delta[0] = 1.0
            params[name] = delta
        in_dim = cfg.conv_output_length(i)
        tb, tf = cfg.theta_b_dim(i), cfg.theta_f_dim()
        w = cfg.hidden_width
        for kb in range(1, cfg.blocks_per_stack + 1):
            prefix = f"s{i}.b{kb}"
            dims = [in_dim] + [w] * cfg.hidden_depth
            for d in range(cfg.hidden_depth):
                params[f"{prefix}.trunk{d}.W"] = ad.xavier_init(
                    (dims[d + 1], dims[d]), rng)
                params[f"{prefix}.trunk{d}.b"] = np.zeros(dims[d + 1])
            for name, out in ((f"{prefix}.head_b", tb),
                              (f"{prefix}.head_f", tf)):
                params[f"{name}.W"] = ad.xavier_init((out, w), rng)
                params[f"{name}.b"] = np.zeros(out)
            params[f"{prefix}.proj_b.W"] = ad.xavier_init((in_dim, tb), rng)
            params[f"{prefix}.proj_b.b"] = np.zeros(in_dim)
            params[f"{prefix}.proj_f.W"] = ad.xavier_init((cfg.horizon, tf), rng)
            params[f"{prefix}.proj_f.b"] = np.zeros(cfg.horizon)
    return params


def infuse(i: int, x: Tensor, prev_input: Optional[Tensor],
           prev_backcast: Optional[Tensor],
           pyramid: Optional[WaveletPyramid], alpha: float,
           tape: Tape) -> Tensor:
    """Convex blend of the stack's wavelet branch with the inter-stack
    residual.  Stack 1 blends the coarsest approximation with the raw
    input; later stacks blend increasingly fine detail branches with the
    previous stack's residual."""
    branch = _wavelet_branch(i, pyramid, alpha)
    if i == 1:
        return ad.blend(branch, x, alpha, tape)
    if prev_input is None or prev_backcast is None:
        raise MissingPredecessor(
            f"stack {i} requires the previous stack's input and backcast")
    residual = ad.sub(prev_input, prev_backcast, tape)
    return ad.blend(branch, residual, alpha, tape)


def _wavelet_branch(i, pyramid, alpha):
    if alpha == 0.0:
        if pyramid is None:
            return None
    elif pyramid is None:
        raise MissingPyramidLevel("wavelet infusion requires a pyramid")
    if pyramid is None:
        return None
    n = pyramid.levels + 1  # number of stacks
    if i == 1:
        return pyramid.approx[n - 2]
    level = n - i + 1
    if not 1 <= level <= pyramid.levels:
        raise MissingPyramidLevel(f"no detail branch at level {level}")
    return pyramid.detail[level - 1]


def stack_conv(i: int, x_in: Tensor, cfg: ModelConfig, leaves: dict,
               tape: Tape) -> Tensor:
    """Apply the configured multi-resolution operator for stack i."""
    variant = cfg.conv_variant
    k = cfg.kernel_sizes[i - 1]
    if variant == "none":
        return x_in
    if variant in ("dcn", "cnn"):
        out = x_in
        for j, d in enumerate(cfg.dilations):
            dilation = d if variant == "dcn" else 1
            out = ad.dilated_conv1d(out, leaves[f"s{i}.conv{j}.kernel"],
                                    dilation, tape)
        return out
    if variant == "maxpool":
        return ad.maxpool1d(x_in, k, tape)
    return ad.avgpool1d(x_in, k, tape)


def block_forward(x_block_in: Tensor, i: int, k: int, cfg: ModelConfig,
                  leaves: dict, tape: Tape,
                  rng: Optional[np.random.Generator] = None,
                  training: bool = False):
    """One basis-expansion block: trunk MLP, two coefficient heads, two
    linear projections.  Returns (backcast, forecast)."""
    prefix = f"s{i}.b{k}"
    h = x_block_in
    for d in range(cfg.hidden_depth):
        h = ad.affine(h, leaves[f"{prefix}.trunk{d}.W"],
                      leaves[f"{prefix}.trunk{d}.b"], tape)
        h = ad.relu(h, tape)
        if training and cfg.dropout_rate > 0.0:
            h = ad.dropout(h, cfg.dropout_rate, rng, tape, training)
    theta_b = ad.affine(h, leaves[f"{prefix}.head_b.W"],
                        leaves[f"{prefix}.head_b.b"], tape)
    theta_f = ad.affine(h, leaves[f"{prefix}.head_f.W"],
                        leaves[f"{prefix}.head_f.b"], tape)
    backcast = ad.affine(theta_b, leaves[f"{prefix}.proj_b.W"],
                         leaves[f"{prefix}.proj_b.b"], tape)
    forecast = ad.affine(theta_f, leaves[f"{prefix}.proj_f.W"],
                         leaves[f"{prefix}.proj_f.b"], tape)
    return backcast, forecast


def stack_forward(i: int, x_conv: Tensor, cfg: ModelConfig, leaves: dict,
                  tape: Tape, rng=None, training=False):
    """Chain blocks with backcast residuals; sum block backcasts and
    forecasts into the stack outputs."""
    block_in = x_conv
    sum_backcast = None
    sum_forecast = None
    for k in range(1, cfg.blocks_per_stack + 1):
        backcast, forecast = block_forward(
            block_in, i, k, cfg, leaves, tape, rng, training)
        sum_backcast = backcast if sum_backcast is None else \
            ad.add(sum_backcast, backcast, tape)
        sum_forecast = forecast if sum_forecast is None else \
            ad.add(sum_forecast, forecast, tape)
        if k < cfg.blocks_per_stack:
            block_in = ad.sub(block_in, backcast, tape)
    return sum_backcast, sum_forecast


def make_leaves(params: dict, tape: Tape) -> dict:
    return {name: tape.leaf(value) for name, value in params.items()}


def _run_stacks(x_leaf: Tensor, cfg: ModelConfig, leaves: dict, tape: Tape,
                pyramid: Optional[WaveletPyramid], rng, training):
    t = cfg.lookback
    prev_input = None
    prev_backcast = None
    global_forecast = None
    stack_forecasts, stack_backcasts, stack_inputs, infused = [], [], [], []
    for i in range(1, cfg.n_stacks + 1):
        if pyramid is None and cfg.alpha == 0.0:
            # wavelet module detached: plain doubly-residual wiring
            if i == 1:
                x_in = x_leaf
            else:
                x_in = ad.sub(prev_input, prev_backcast, tape)
            infused.append(None)
        else:
            x_in = infuse(i, x_leaf, prev_input, prev_backcast,
                          pyramid, cfg.alpha, tape)
            infused.append(_wavelet_branch(i, pyramid, cfg.alpha))
        x_conv = stack_conv(i, x_in, cfg, leaves, tape)
        backcast, forecast = stack_forward(
            i, x_conv, cfg, leaves, tape, rng, training)
        backcast_t = ad.pad_left(backcast, t - backcast.value.shape[0], tape)
        global_forecast = forecast if global_forecast is None else \
            ad.add(global_forecast, forecast, tape)
        stack_forecasts.append(forecast.value)
        stack_backcasts.append(backcast_t.value)
        stack_inputs.append(x_in.value)
        prev_input, prev_backcast = x_in, backcast_t
    return ForecastBundle(
        global_forecast=global_forecast.value,
        per_stack_forecast=stack_forecasts,
        per_stack_backcast=stack_backcasts,
        stack_inputs=stack_inputs,
        infused_signals=infused,
        forecast_node=global_forecast,
    )


def model_forward(x, params: dict, cfg: ModelConfig, tape: Tape,
                  rng: Optional[np.random.Generator] = None,
                  training: bool = False) -> ForecastBundle:
    """Full forward pass: decompose, then iterate infuse -> conv ->
    stack over all stacks."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cfg.lookback,):
        raise ShapeMismatch(
            f"expected input of length {cfg.lookback}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("model input contains NaN or Inf")
    pyramid = None
    if cfg.n_stacks >= 2:
        pyramid = mdwd(x, cfg.wavelet_levels, cfg.wavelet_kind)
    leaves = make_leaves(params, tape)
    x_leaf = tape.leaf(x)
    return _run_stacks(x_leaf, cfg, leaves, tape, pyramid, rng, training)


def reference_forward(x, params: dict, cfg: ModelConfig, tape: Tape,
                      rng=None, training=False) -> ForecastBundle:
    """Doubly-residual forward pass with the wavelet module detached:
    the comparison baseline for the alpha -> 0 degeneracy."""
    if cfg.alpha != 0.0:
        cfg = replace(cfg, alpha=0.0)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cfg.lookback,):
        raise ShapeMismatch(
            f"expected input of length {cfg.lookback}, got {x.shape}")
    leaves = make_leaves(params, tape)
    x_leaf = tape.leaf(x)
    return _run_stacks(x_leaf, cfg, leaves, tape, None, rng, training)


def forward_loss(x, target, params: dict, cfg: ModelConfig, tape: Tape,
                 rng=None, training=False):
    """MSE loss of the global forecast against a horizon target; returns
    (loss tensor, leaves) so callers can read gradients after backward."""
    leaves = make_leaves(params, tape)
    x = np.asarray(x, dtype=np.float64)
    pyramid = mdwd(x, cfg.wavelet_levels, cfg.wavelet_kind) \
        if cfg.n_stacks >= 2 else None
    x_leaf = tape.leaf(x)
    bundle = _run_stacks(x_leaf, cfg, leaves, tape, pyramid, rng, training)
    loss = ad.mse_loss(bundle.forecast_node, target, tape)
    return loss, leaves
