"""Sparsity indices for matrix-shaped frames and the noise-bias correction.

The central quantity is a ratio-form sparsity index mapping a p1 x p2 matrix
to [0, 1]: 1 means at most one nonzero entry, 0 means all entries equal.
Additive zero-mean noise inflates the index; ``noise_bias`` gives the
large-matrix limit of that inflation from three scalar summaries of the
shift (mean magnitude, mean square, noise variance), and ``corrected_hoyer``
subtracts it. All functions here are pure and safe to call from any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .kernels import matrix_stats

MOMENT_MODES = ("literal", "debias")

# Relative slack for the mean-square >= squared-mean check; covers the few
# ulps the compensated totals can drift from exact arithmetic.
_CS_SLACK = 1e-9


def as_image_matrix(x, *, min_entries: int = 1, check_finite: bool = True) -> np.ndarray:
    """Validate and coerce input to a C-contiguous float64 2-D array.

    Raises DimensionError for wrong rank or too few entries, ValueError for
    non-finite entries.
    """
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got {a.ndim} dimension(s)")
    if a.shape[0] < 1 or a.shape[1] < 1 or a.size < min_entries:
        raise DimensionError(
            f"matrix of shape {a.shape} is too small (need at least {min_entries} entries)"
        )
    if check_finite and not np.isfinite(a).all():
        raise ValueError("matrix entries must all be finite")
    return np.ascontiguousarray(a)


@dataclass(frozen=True)
class SignalMoments:
    """Scalar summaries of a shift buried in noise.

    a_bar is the magnitude of the average entry, a2_bar the average squared
    entry, sigma2 the variance of the additive noise. a2_bar must be
    positive and can never fall below a_bar**2.
    """

    a_bar: float
    a2_bar: float
    sigma2: float

    def __post_init__(self):
        for name in ("a_bar", "a2_bar", "sigma2"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.a_bar < 0.0:
            raise ValueError(f"a_bar must be >= 0, got {self.a_bar!r}")
        if self.a2_bar <= 0.0:
            raise ValueError(f"a2_bar must be > 0, got {self.a2_bar!r}")
        if self.sigma2 < 0.0:
            raise ValueError(f"sigma2 must be >= 0, got {self.sigma2!r}")
        if self.a_bar * self.a_bar > self.a2_bar * (1.0 + _CS_SLACK):
            raise ValueError(
                f"inconsistent moments: a_bar**2 = {self.a_bar ** 2!r} exceeds "
                f"a2_bar = {self.a2_bar!r}"
            )


def hoyer_from_stats(s: float, ss: float, n: int, *, clip: bool = True) -> float:
    """Index value from a precomputed entry sum and sum of squares.

    Lets callers that already ran the accumulation kernel (for moment
    estimation, say) derive the index without a second pass; identical
    arithmetic to ``hoyer_index``.
    """
    if ss == 0.0:
        return 1.0
    root_n = math.sqrt(n)
    h = (root_n - abs(s) / math.sqrt(ss)) / (root_n - 1.0)
    if clip:
        return min(max(h, 0.0), 1.0)
    return h


def hoyer_index(x, *, clip: bool = True) -> float:
    """Sparsity of a matrix on a 0-to-1 scale.

    Computed as (sqrt(n) - |sum| / frobenius) / (sqrt(n) - 1) over the n
    entries. A constant matrix scores 0, a single-nonzero matrix scores 1,
    and the all-zero matrix scores 1 by convention (a blank frame carries no
    shift, which is as sparse as it gets). Scale- and sign-invariant.

    With ``clip=False`` the raw ratio is returned; it can exceed 1 by
    O(1/sqrt(n)) when positive and negative entries nearly cancel, which is
    what diagnostics of pure-noise behaviour need to see.
    """
    m = as_image_matrix(x, min_entries=2)
    s, ss, _ = matrix_stats(m)
    return hoyer_from_stats(s, ss, m.size, clip=clip)


def gini_index(x) -> float:
    """Gini sparsity of the absolute entries; slow reference cross-check.

    Sorted-magnitude weighted form: 1 - 2 * sum_k m_(k) * (n - k + 0.5) / (n * ||m||_1)
    with magnitudes sorted ascending. 0 for constant-magnitude matrices,
    1 - 1/n for a single nonzero, 1 for the all-zero matrix by the same
    blank-frame convention as ``hoyer_index``. Scale-invariant.
    """
    m = as_image_matrix(x, min_entries=2)
    mags = np.sort(np.abs(m), axis=None)
    total = float(np.sum(mags))
    if total == 0.0:
        return 1.0
    n = mags.size
    weights = n - np.arange(1.0, n + 1.0) + 0.5
    return 1.0 - 2.0 * float(np.dot(mags, weights)) / (n * total)


def noise_bias(moments: SignalMoments) -> float:
    """Asymptotic inflation of the index caused by additive zero-mean noise.

    Equals a_bar * sigma2 / (sqrt(a2_bar * (a2_bar + sigma2)) *
    (sqrt(a2_bar) + sqrt(a2_bar + sigma2))), evaluated here in the
    rationalized form a_bar * (1/sqrt(a2_bar) - 1/sqrt(a2_bar + sigma2))
    which is algebraically identical and stable for tiny a2_bar. The value
    is non-decreasing in sigma2, zero at sigma2 = 0 or a_bar = 0, and
    bounded by a_bar / sqrt(a2_bar) (approached as sigma2 -> infinity).
    """
    return moments.a_bar * (
        1.0 / math.sqrt(moments.a2_bar)
        - 1.0 / math.sqrt(moments.a2_bar + moments.sigma2)
    )


def corrected_hoyer(h_raw: float, moments: SignalMoments) -> float:
    """Noise-corrected index: h_raw minus the predicted bias, clamped to [0, 1].

    Estimation error can push the difference outside the unit interval where
    a sparsity score has no meaning, hence the clamp; callers that need the
    unclamped value subtract ``noise_bias`` themselves (the stream layer
    reports both).
    """
    if not (0.0 <= h_raw <= 1.0):
        raise ValueError(f"h_raw must lie in [0, 1], got {h_raw!r}")
    return min(max(h_raw - noise_bias(moments), 0.0), 1.0)


def moment_floor(sigma2_hat: float) -> float:
    """Positivity floor for the mean-square estimate: 1e-12 of the noise
    variance, or 1e-300 absolute when that would underflow."""
    return max(1e-12 * sigma2_hat, 1e-300)


def moments_from_stats(
    s: float, ss: float, n: int, sigma2_hat: float, mode: str = "debias"
) -> SignalMoments:
    """Moment estimates from a precomputed entry sum and sum of squares."""
    if mode not in MOMENT_MODES:
        raise ValueError(f"mode must be one of {MOMENT_MODES}, got {mode!r}")
    if not math.isfinite(sigma2_hat) or sigma2_hat < 0.0:
        raise ValueError(f"sigma2_hat must be finite and >= 0, got {sigma2_hat!r}")
    a_bar = abs(s) / n
    raw_square = ss / n
    floor = moment_floor(sigma2_hat)
    if mode == "literal":
        a2_bar = max(raw_square, floor)
    else:
        a2_bar = max(raw_square - sigma2_hat, a_bar * a_bar, floor)
    return SignalMoments(a_bar=a_bar, a2_bar=a2_bar, sigma2=sigma2_hat)


def estimate_moments(r, sigma2_hat: float, mode: str = "debias") -> SignalMoments:
    """Plug-in moment estimates from a residual matrix.

    a_bar is |sum| / n in both modes. The mean square ``a2_bar`` is where the
    modes differ: ``literal`` uses ||R||_F^2 / n directly, which for a noisy
    residual estimates the shift's mean square plus sigma2 and therefore
    understates the correction at high noise; ``debias`` (the default)
    subtracts sigma2_hat, floored by a_bar**2 (a mean square can never fall
    below the squared mean) and by a small positivity floor so a blank
    residual stays well defined.
    """
    m = as_image_matrix(r)
    s, ss, _ = matrix_stats(m)
    return moments_from_stats(s, ss, m.size, sigma2_hat, mode)
