"""Wavelet coherence between two channels.

Coherence is computed in the bounded magnitude-squared form

    |S[Wx Wy*]|^2 / (S[|Wx|^2] S[|Wy|^2])

where S smooths along time with a scale-proportional Gaussian and then
across neighbouring scales with a boxcar. ``form="printed"`` evaluates the
unsquared numerator instead, which is not bounded by one; it exists only
for side-by-side comparison.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DegenerateWindow, LengthMismatch, ShapeMismatch
from .wavelet import WaveletParams, cwt_coefficients, scale_to_period

DENOM_FLOOR = 1e-30


@dataclass(frozen=True)
class SmoothingParams:
    time_sigma_factor: float = 0.6
    scale_boxcar: int = 3
    truncate: float = 4.0
    enabled: bool = True

    def __post_init__(self):
        if not self.time_sigma_factor > 0:
            raise ConfigError("time_sigma_factor must be positive")
        if self.scale_boxcar < 1 or self.scale_boxcar % 2 == 0:
            raise ConfigError("scale_boxcar must be an odd positive integer")

    @classmethod
    def identity(cls) -> "SmoothingParams":
        return cls(enabled=False)


@dataclass(frozen=True)
class CoherenceMap:
    values: np.ndarray  # (n_scales, window_len)
    scales: np.ndarray
    degenerate: bool = False

    def mean(self) -> float:
        return float(np.mean(self.values))


def cross_wavelet(wx, wy) -> np.ndarray:
    wx = np.asarray(wx)
    wy = np.asarray(wy)
    if wx.shape != wy.shape:
        raise ShapeMismatch(f"cross_wavelet shapes differ: {wx.shape} vs {wy.shape}")
    # expanded by hand so that cross_wavelet(w, w) has an exactly zero imaginary part
    ar, ai, br, bi = wx.real, wx.imag, wy.real, wy.imag
    return (ar * br + ai * bi) + 1j * (ai * br - ar * bi)


def gaussian_kernel(sigma: float, truncate: float = 4.0) -> np.ndarray:
    radius = max(1, int(np.ceil(truncate * sigma)))
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (k / sigma) ** 2)
    return g / g.sum()


def _row_operator(kernel: np.ndarray, length: int) -> np.ndarray:
    """Matrix form of a same-size convolution with symmetric (reflect) padding."""
    r = kernel.size // 2
    idx = np.pad(np.arange(length), r, mode="symmetric")
    op = np.zeros((length, length))
    for b in range(length):
        np.add.at(op[b], idx[b : b + kernel.size], kernel)
    return op


@lru_cache(maxsize=64)
def _smoothing_operator(scales: tuple, length: int, params: SmoothingParams) -> np.ndarray:
    n_scales = len(scales)
    time_ops = np.stack(
        [_row_operator(gaussian_kernel(params.time_sigma_factor * a, params.truncate), length) for a in scales]
    )
    box = np.full(params.scale_boxcar, 1.0 / params.scale_boxcar)
    scale_op = _row_operator(box, n_scales)
    # full[s, b, s2, t] = scale_op[s, s2] * time_ops[s2, b, t]
    full = np.einsum("ij,jbt->ibjt", scale_op, time_ops).reshape(n_scales * length, n_scales * length)
    full.setflags(write=False)
    return full


def smooth(grid, scales, params: SmoothingParams | None = None) -> np.ndarray:
    """Smooth a (..., n_scales, time) grid along time, then across scales."""
    params = params or SmoothingParams()
    g = np.asarray(grid)
    if not params.enabled:
        return g.copy()
    scales = tuple(float(a) for a in np.asarray(scales).ravel())
    n_scales, length = g.shape[-2:]
    if len(scales) != n_scales:
        raise ShapeMismatch("grid rows and scale grid disagree")
    op = _smoothing_operator(scales, length, params)
    flat = g.reshape(*g.shape[:-2], n_scales * length)
    return (flat @ op.T).reshape(g.shape)


def coherence_from_coeffs(wx, wy, scales, smoothing: SmoothingParams | None = None, form: str = "standard"):
    """Coherence values and a per-map degeneracy flag from precomputed coefficients."""
    smoothing = smoothing or SmoothingParams()
    num = smooth(cross_wavelet(wx, wy), scales, smoothing)
    px = smooth(np.abs(wx) ** 2, scales, smoothing).real
    py = smooth(np.abs(wy) ** 2, scales, smoothing).real
    denom = px * py
    small = denom < DENOM_FLOOR
    safe = np.where(small, 1.0, denom)
    if form == "standard":
        vals = np.clip(np.abs(num) ** 2 / safe, 0.0, 1.0)
    elif form == "printed":
        vals = np.abs(num) / safe
    else:
        raise ConfigError(f"unknown coherence form {form!r}")
    vals = np.where(small, 0.0, vals)
    flags = small.reshape(*small.shape[:-2], -1).any(axis=-1)
    return vals, flags


def _check_window(w, name):
    if not np.any(w):
        raise DegenerateWindow(f"{name} window is identically zero")


def wcoh(x_window, y_window, wavelet_params: WaveletParams | None = None,
         smoothing: SmoothingParams | None = None, form: str = "standard") -> CoherenceMap:
    wavelet_params = wavelet_params or WaveletParams()
    x = np.asarray(x_window, dtype=np.float64)
    y = np.asarray(y_window, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch("wcoh needs two 1-D windows of equal length")
    if x.size < 2:
        raise ShapeMismatch("wcoh needs windows of at least two samples")
    _check_window(x, "x")
    _check_window(y, "y")
    scales = wavelet_params.scales(x.size)
    wx = cwt_coefficients(x, wavelet_params, scales)
    wy = cwt_coefficients(y, wavelet_params, scales)
    vals, flag = coherence_from_coeffs(wx, wy, scales, smoothing, form)
    return CoherenceMap(vals, scales, bool(flag))


def wcoh_batch(x_windows, y_windows, wavelet_params: WaveletParams | None = None,
               smoothing: SmoothingParams | None = None, form: str = "standard"):
    """Coherence for (n, window_len) batches; returns (values (n, S, L), flags (n,)).

    All-zero windows are not an error here; they come back flagged with zeros.
    """
    wavelet_params = wavelet_params or WaveletParams()
    x = np.asarray(x_windows, dtype=np.float64)
    y = np.asarray(y_windows, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch("wcoh_batch needs equally shaped window batches")
    scales = wavelet_params.scales(x.shape[-1])
    wx = cwt_coefficients(x, wavelet_params, scales)
    wy = cwt_coefficients(y, wavelet_params, scales)
    return coherence_from_coeffs(wx, wy, scales, smoothing, form)


def mean_coherence(values, scales=None, band=None, omega0: float = 6.0) -> np.ndarray:
    """Mean over the map cells, optionally restricted to a pseudo-period band (lo, hi)."""
    v = np.asarray(values)
    if band is None:
        return v.mean(axis=(-2, -1))
    periods = scale_to_period(scales, omega0)
    rows = (periods >= band[0]) & (periods <= band[1])
    if not rows.any():
        raise ConfigError(f"no scale falls in band {band}")
    return v[..., rows, :].mean(axis=(-2, -1))
