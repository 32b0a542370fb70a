"""Stateful sparsity estimation over a frame stream.

Workflow: fit an in-control baseline (mean frame plus entrywise noise
variance) on an opening window, then score later frames by subtracting the
baseline mean and applying the corrected index to the residual. Two paths
are provided: per-frame corrected readings (the noise variance is handled by
the bias correction) and window-averaged raw readings (averaging w residuals
divides the effective noise variance by w instead).

Frame positions are plain 0-based sequence indices throughout; callers with
their own frame numbering pass ``t_offset`` so emitted readings carry labels
in that numbering.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, MixedSignWarning
from .indices import (
    SignalMoments,
    as_image_matrix,
    hoyer_from_stats,
    moments_from_stats,
    noise_bias,
)
from .kernels import matrix_stats

# Positive/negative mass ratios inside this band mean the residual is not
# meaningfully one-sided, so the index value is not trustworthy.
_MIXED_SIGN_BAND = (0.25, 4.0)


@dataclass(frozen=True, eq=False)
class BaselineModel:
    """Frozen in-control baseline: mean frame, noise variance, window length."""

    mu0_hat: np.ndarray
    sigma2_hat: float
    w0: int

    def __post_init__(self):
        mu = as_image_matrix(self.mu0_hat)
        mu.setflags(write=False)
        object.__setattr__(self, "mu0_hat", mu)
        if not math.isfinite(self.sigma2_hat) or self.sigma2_hat < 0.0:
            raise ValueError(f"sigma2_hat must be finite and >= 0, got {self.sigma2_hat!r}")
        if self.w0 < 2:
            raise ValueError(f"w0 must be >= 2, got {self.w0!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.mu0_hat.shape


@dataclass(frozen=True)
class SparsityReading:
    """Per-frame output: raw index, predicted bias, corrected value, moments.

    ``g`` and ``g_unclamped`` are derived in the constructor, so
    g == clamp(h_raw - bias, 0, 1) holds for every instance.
    """

    t: int
    h_raw: float
    bias: float
    moments: SignalMoments
    g: float = field(init=False)
    g_unclamped: float = field(init=False)

    def __post_init__(self):
        unclamped = self.h_raw - self.bias
        object.__setattr__(self, "g_unclamped", unclamped)
        object.__setattr__(self, "g", min(max(unclamped, 0.0), 1.0))


def _frame_block(frames, count: int | None = None) -> np.ndarray:
    """Coerce a frame sequence (or 3-D array) to a (m, p1, p2) float64 block."""
    if isinstance(frames, np.ndarray) and frames.ndim == 3:
        block = np.ascontiguousarray(frames, dtype=np.float64)
        if block.shape[1] < 1 or block.shape[2] < 1:
            raise DimensionError(f"frames of shape {block.shape[1:]} are empty")
        if not np.isfinite(block).all():
            raise ValueError("frame entries must all be finite")
    else:
        mats = [as_image_matrix(f) for f in frames]
        if not mats:
            raise DimensionError("empty frame sequence")
        shape = mats[0].shape
        for k, m in enumerate(mats):
            if m.shape != shape:
                raise DimensionError(
                    f"frame {k} has shape {m.shape}, expected {shape}"
                )
        block = np.stack(mats)
    if count is not None:
        if count > block.shape[0]:
            raise ValueError(f"requested {count} frames, only {block.shape[0]} available")
        block = block[:count]
    if block.shape[0] < 1:
        raise DimensionError("empty frame sequence")
    return block


def _check_shape(m: np.ndarray, baseline: BaselineModel):
    if m.shape != baseline.shape:
        raise DimensionError(
            f"frame shape {m.shape} does not match baseline shape {baseline.shape}"
        )


def _warn_if_mixed_sign(total: float, positive: float):
    negative = positive - total
    if positive > 0.0 and negative > 0.0:
        lo, hi = _MIXED_SIGN_BAND
        if lo <= positive / negative <= hi:
            warnings.warn(
                "residual has comparable positive and negative mass; the "
                "sparsity index assumes a same-sign shift and may read near 1 "
                "regardless of density",
                MixedSignWarning,
                stacklevel=3,
            )


def fit_baseline(frames, w0: int | None = None) -> BaselineModel:
    """Fit the in-control baseline on the first ``w0`` frames.

    The mean frame is the entrywise average. The noise variance pools the
    squared residuals of all w0*p1*p2 entries; each pixel's residuals sum to
    zero by construction, so the pooled sum of squares is already centered,
    and the w0/(w0-1) factor undoes the deflation from subtracting the
    estimated rather than true mean, making the estimator unbiased.
    """
    block = _frame_block(frames, w0)
    m = block.shape[0]
    if m < 2:
        raise ValueError(f"baseline needs at least 2 frames, got {m}")
    mu = block.mean(axis=0)
    resid = block - mu
    ssq = math.fsum(matrix_stats(resid[k])[1] for k in range(m))
    pooled = ssq / (resid.size - 1)
    return BaselineModel(mu0_hat=mu, sigma2_hat=pooled * m / (m - 1.0), w0=m)


def residual(x, baseline: BaselineModel) -> np.ndarray:
    """Frame minus the baseline mean."""
    m = as_image_matrix(x)
    _check_shape(m, baseline)
    return m - baseline.mu0_hat


def windowed_index(frames, baseline: BaselineModel, w: int | None = None) -> float:
    """Raw index of the average of ``w`` residual frames.

    No bias correction is applied; averaging w independent frames already
    divides the effective noise variance by w, so the raw index converges to
    the shift's index as the window grows. For a corrected single read of a
    window average use ``windowed_reading``.
    """
    block = _frame_block(frames, w)
    _check_shape(block[0], baseline)
    avg_resid = block.mean(axis=0) - baseline.mu0_hat
    if avg_resid.size < 2:
        raise DimensionError("index needs at least 2 entries per frame")
    s, ss, pos = matrix_stats(avg_resid)
    _warn_if_mixed_sign(s, pos)
    return hoyer_from_stats(s, ss, avg_resid.size)


def _reading_from_residual(
    r: np.ndarray, sigma2_hat: float, mode: str, t: int
) -> SparsityReading:
    if r.size < 2:
        raise DimensionError("index needs at least 2 entries per frame")
    s, ss, pos = matrix_stats(r)
    _warn_if_mixed_sign(s, pos)
    h_raw = hoyer_from_stats(s, ss, r.size)
    moments = moments_from_stats(s, ss, r.size, sigma2_hat, mode)
    return SparsityReading(t=t, h_raw=h_raw, bias=noise_bias(moments), moments=moments)


def corrected_reading(
    x, baseline: BaselineModel, mode: str = "debias", t: int = 0
) -> SparsityReading:
    """Corrected index of a single frame against the baseline.

    Forms the residual, reads the raw index, estimates the shift moments
    with the baseline's noise variance, and subtracts the predicted bias.
    With sigma2_hat == 0 this reduces exactly to the raw index.
    """
    return _reading_from_residual(residual(x, baseline), baseline.sigma2_hat, mode, t)


def windowed_reading(
    frames, baseline: BaselineModel, mode: str = "debias", t: int = 0, w: int | None = None
) -> SparsityReading:
    """Corrected reading of a ``w``-frame residual average.

    The average of w independent noise frames has entry variance sigma2/w,
    so that is the variance fed to the moment estimate and bias correction.
    """
    block = _frame_block(frames, w)
    _check_shape(block[0], baseline)
    avg_resid = block.mean(axis=0) - baseline.mu0_hat
    return _reading_from_residual(
        avg_resid, baseline.sigma2_hat / block.shape[0], mode, t
    )


def monitor_series(
    frames: Sequence,
    baseline: BaselineModel,
    tau_range: Iterable[int],
    mode: str = "debias",
    t_offset: int = 0,
) -> list[SparsityReading]:
    """Corrected readings at each frame position in ``tau_range``, in order.

    Positions are 0-based indices into ``frames``; each reading's ``t`` is
    the position plus ``t_offset``. Deterministic given the inputs; an empty
    range yields an empty list.
    """
    n = len(frames)
    readings = []
    for tau in tau_range:
        if not 0 <= tau < n:
            raise IndexError(f"frame position {tau} out of range [0, {n})")
        readings.append(
            corrected_reading(frames[tau], baseline, mode=mode, t=tau + t_offset)
        )
    return readings
