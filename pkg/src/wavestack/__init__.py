"""Wavelet-infused doubly-residual time-series forecasting."""

from . import autodiff, config, dataio, ensemble, model, training, wavelet
from .autodiff import Tape, Tensor
from .dataio import (
    Component,
    Dataset,
    Scaler,
    SyntheticSpec,
    multi_frequency_benchmark,
    synthesize,
)
from .ensemble import EnsembleConfig, EnsembleForecast
from .model import ForecastBundle, ModelConfig, model_forward
from .training import TrainConfig, TrainResult, WindowSet, make_windows, train
from .wavelet import (
    Branch,
    FilterKind,
    FilterPair,
    HaarProjection,
    WaveletPyramid,
    filter_bank,
    mdwd,
    reconstruct_branch,
)

__version__ = "0.1.0"

__all__ = [
    "Branch", "Component", "Dataset", "EnsembleConfig", "EnsembleForecast",
    "FilterKind", "FilterPair", "ForecastBundle", "HaarProjection",
    "ModelConfig", "Scaler", "SyntheticSpec", "Tape", "Tensor",
    "TrainConfig", "TrainResult", "WaveletPyramid", "WindowSet",
    "autodiff", "config", "dataio", "ensemble", "filter_bank",
    "make_windows", "mdwd", "model", "model_forward",
    "multi_frequency_benchmark", "reconstruct_branch", "synthesize",
    "train", "training", "wavelet", "__version__",
]
