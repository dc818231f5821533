"""Multilevel discrete wavelet decomposition with full-length branch
reconstruction, plus the dyadic piecewise-constant projection used as an
approximation oracle.

The decimated transform uses periodic (circular) boundary handling by
default, which keeps perfect reconstruction and coefficient energy exact
for orthogonal filter pairs.  Symmetric extension is available behind a
flag but loses exact energy preservation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import (
    LevelOutOfRange,
    NonFiniteInput,
    ResolutionTooFine,
    SeriesTooShort,
)


class FilterKind(str, Enum):
    HAAR = "haar"
    DB2 = "db2"
    SYM4 = "sym4"


class Branch(str, Enum):
    APPROX = "approx"
    DETAIL = "detail"


_SQRT2 = math.sqrt(2.0)
_SQRT3 = math.sqrt(3.0)

# Low-pass coefficient tables.  High-pass filters are derived via the
# quadrature-mirror relation below; both are validated at construction.
_LOW_PASS = {
    FilterKind.HAAR: [1.0 / _SQRT2, 1.0 / _SQRT2],
    FilterKind.DB2: [
        (1.0 + _SQRT3) / (4.0 * _SQRT2),
        (3.0 + _SQRT3) / (4.0 * _SQRT2),
        (3.0 - _SQRT3) / (4.0 * _SQRT2),
        (1.0 - _SQRT3) / (4.0 * _SQRT2),
    ],
    FilterKind.SYM4: [
        -0.07576571478927333,
        -0.02963552764599851,
        0.49761866763201545,
        0.8037387518059161,
        0.29785779560527736,
        -0.09921954357684722,
        -0.012603967262037833,
        0.0322231006040427,
    ],
}


@dataclass(frozen=True)
class FilterPair:
    """Orthonormal low/high-pass analysis filter pair."""

    low: np.ndarray
    high: np.ndarray
    kind: FilterKind

    def __post_init__(self):
        low = np.asarray(self.low, dtype=np.float64)
        high = np.asarray(self.high, dtype=np.float64)
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)
        k = len(low)
        if len(high) != k:
            raise ValueError("low and high filters must have equal length")
        if abs(low @ low - 1.0) > 1e-12 or abs(high @ high - 1.0) > 1e-12:
            raise ValueError(f"{self.kind}: filters are not unit-energy")
        mirror = np.array([(-1.0) ** i * low[k - 1 - i] for i in range(k)])
        if np.max(np.abs(high - mirror)) > 1e-12:
            raise ValueError(f"{self.kind}: quadrature-mirror relation violated")

    def __len__(self):
        return len(self.low)


def filter_bank(kind: FilterKind | str) -> FilterPair:
    """Return the validated analysis filter pair for a supported kind."""
    kind = FilterKind(kind)
    low = np.asarray(_LOW_PASS[kind], dtype=np.float64)
    k = len(low)
    high = np.array([(-1.0) ** i * low[k - 1 - i] for i in range(k)])
    return FilterPair(low=low, high=high, kind=kind)


@dataclass(frozen=True)
class WaveletPyramid:
    """Per-level sub-series of a decomposed signal, each reconstructed to
    the original length, plus the half-rate coefficients they came from."""

    levels: int
    original: np.ndarray
    approx: list  # approx[i-1] is the level-i low branch, length T
    detail: list  # detail[i-1] is the level-i high branch, length T
    raw_low: list  # half-rate low coefficients per level
    raw_high: list  # half-rate high coefficients per level
    kind: FilterKind
    boundary: str = "periodic"
    # length of the low-coefficient sequence fed into each level, before
    # the odd-length pad (needed to undo the pad during reconstruction)
    _input_lengths: list = field(default_factory=list)


def _analysis_step(x: np.ndarray, filt: np.ndarray, boundary: str) -> np.ndarray:
    """One decimated filtering pass: y[m] = sum_k x[2m+k] * filt[k]."""
    t = len(x)
    k = len(filt)
    if boundary == "periodic":
        ext = x[np.arange(t + k - 1) % t]
    elif boundary == "symmetric":
        ext = np.pad(x, (0, k - 1), mode="symmetric")
    else:
        raise ValueError(f"unknown boundary mode: {boundary}")
    windows = np.lib.stride_tricks.sliding_window_view(ext, k)[:t]
    return (windows @ filt)[0::2]


def _synthesis_step(low: np.ndarray, high: np.ndarray, pair: FilterPair,
                    out_len: int) -> np.ndarray:
    """Adjoint of the periodic analysis step (exact inverse for
    orthonormal pairs)."""
    k = len(pair)
    x = np.zeros(out_len)
    idx = (2 * np.arange(len(low))[:, None] + np.arange(k)[None, :]) % out_len
    np.add.at(x, idx, low[:, None] * pair.low[None, :])
    np.add.at(x, idx, high[:, None] * pair.high[None, :])
    return x


def _decompose_coeffs(x, n_levels, pair, boundary):
    """Iterate the analysis step on the low branch, padding odd lengths."""
    raw_low, raw_high, input_lengths = [], [], []
    cur = x
    for _ in range(n_levels):
        input_lengths.append(len(cur))
        if len(cur) % 2 == 1:
            pad = cur[:1] if boundary == "periodic" else cur[-1:]
            cur = np.concatenate([cur, pad])
        raw_low.append(_analysis_step(cur, pair.low, boundary))
        raw_high.append(_analysis_step(cur, pair.high, boundary))
        cur = raw_low[-1]
    return raw_low, raw_high, input_lengths


def _reconstruct_from_level(coeffs, level, branch, pair, input_lengths):
    """Invert from one branch at `level` down to level 0, zeroing the
    complementary branch at every step."""
    raw_low, raw_high = coeffs
    if branch is Branch.APPROX:
        low, high = raw_low[level - 1], np.zeros_like(raw_high[level - 1])
    else:
        low, high = np.zeros_like(raw_low[level - 1]), raw_high[level - 1]
    for lvl in range(level, 0, -1):
        n_in = input_lengths[lvl - 1]
        padded_len = n_in + (n_in % 2)
        cur = _synthesis_step(low, high, pair, padded_len)[:n_in]
        if lvl > 1:
            low, high = cur, np.zeros(len(raw_high[lvl - 2]))
    return cur


def mdwd(x, n_levels: int, kind: FilterKind | str = FilterKind.HAAR,
         boundary: str = "periodic") -> WaveletPyramid:
    """Multilevel decimated decomposition with every branch reconstructed
    back to the original length."""
    x = np.asarray(x, dtype=np.float64)
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    if len(x) < 2 ** n_levels:
        raise SeriesTooShort(
            f"series of length {len(x)} cannot support {n_levels} levels")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("series contains NaN or Inf")
    pair = filter_bank(kind)
    raw_low, raw_high, input_lengths = _decompose_coeffs(
        x, n_levels, pair, boundary)
    coeffs = (raw_low, raw_high)
    approx = [
        _reconstruct_from_level(coeffs, lvl, Branch.APPROX, pair, input_lengths)
        for lvl in range(1, n_levels + 1)
    ]
    detail = [
        _reconstruct_from_level(coeffs, lvl, Branch.DETAIL, pair, input_lengths)
        for lvl in range(1, n_levels + 1)
    ]
    return WaveletPyramid(
        levels=n_levels, original=x, approx=approx, detail=detail,
        raw_low=raw_low, raw_high=raw_high, kind=pair.kind,
        boundary=boundary, _input_lengths=input_lengths)


def reconstruct_branch(pyramid: WaveletPyramid, level: int,
                       branch: Branch | str) -> np.ndarray:
    """Full-length reconstruction of a single branch of the pyramid."""
    branch = Branch(branch)
    if not 1 <= level <= pyramid.levels:
        raise LevelOutOfRange(
            f"level {level} outside 1..{pyramid.levels}")
    store = pyramid.approx if branch is Branch.APPROX else pyramid.detail
    return store[level - 1].copy()


@dataclass(frozen=True)
class HaarProjection:
    """L2 projection of a sampled function onto dyadic piecewise
    constants on [0, 1]."""

    resolution_w: int
    knots: np.ndarray  # 2^w + 1 interval boundaries
    theta: np.ndarray  # 2^w interval means


def haar_project(f_samples, w: int) -> HaarProjection:
    """Project uniform-grid samples of f on [0,1] onto 2^w indicator
    functions; each coefficient is the sample mean over its interval."""
    f = np.asarray(f_samples, dtype=np.float64)
    if w < 0:
        raise ValueError("w must be >= 0")
    n_cells = 2 ** w
    if n_cells > len(f):
        raise ResolutionTooFine(
            f"2^{w} cells exceed {len(f)} samples")
    theta = np.array([chunk.mean() for chunk in np.array_split(f, n_cells)])
    knots = np.linspace(0.0, 1.0, n_cells + 1)
    return HaarProjection(resolution_w=w, knots=knots, theta=theta)


def haar_project_values(proj: HaarProjection, n_samples: int) -> np.ndarray:
    """Evaluate the projection back on a uniform grid of n_samples."""
    reps = [len(c) for c in np.array_split(np.empty(n_samples), 2 ** proj.resolution_w)]
    return np.repeat(proj.theta, reps)


def haar_l1_error(f_samples, proj: HaarProjection) -> float:
    """Riemann estimate of the L1 distance between f and its projection."""
    f = np.asarray(f_samples, dtype=np.float64)
    return float(np.mean(np.abs(f - haar_project_values(proj, len(f)))))
