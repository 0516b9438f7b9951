"""Morlet continuous wavelet transform of short windows.

Windows are short (12 samples by default), so the transform is evaluated
by direct summation against a precomputed (scale, shift, time) kernel
rather than through FFT convolution. Samples outside the window count as
zero; there is no cone-of-influence masking.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigError, NonFiniteInput, ShapeMismatch

MORLET_NORM = np.pi ** -0.25


@dataclass(frozen=True)
class WaveletParams:
    omega0: float = 6.0
    n_scales: int = 16
    scale_min: float | None = None
    scale_max: float | None = None

    def __post_init__(self):
        if self.omega0 < 5:
            raise ConfigError("omega0 must be >= 5 for the Morlet admissibility approximation")
        if self.n_scales < 2:
            raise ConfigError("n_scales must be >= 2")
        if (self.scale_min is None) != (self.scale_max is None):
            raise ConfigError("give both scale_min and scale_max, or neither")
        if self.scale_min is not None and not 0 < self.scale_min < self.scale_max:
            raise ConfigError("need 0 < scale_min < scale_max")

    def scales(self, window_len: int) -> np.ndarray:
        if self.scale_min is None:
            return default_scale_grid(window_len, self.n_scales, self.omega0)
        return np.geomspace(self.scale_min, self.scale_max, self.n_scales)


@dataclass(frozen=True)
class Scalogram:
    magnitudes: np.ndarray  # (n_scales, window_len)
    scales: np.ndarray
    complex_coeffs: np.ndarray

    @property
    def shape(self):
        return self.magnitudes.shape


def morlet_sample(t, params: WaveletParams | None = None):
    """Morlet mother wavelet, unconjugated. Accepts scalars or arrays."""
    omega0 = params.omega0 if params is not None else 6.0
    t = np.asarray(t, dtype=np.float64)
    out = MORLET_NORM * np.exp(1j * omega0 * t) * np.exp(-0.5 * t * t)
    return complex(out) if out.ndim == 0 else out


def fourier_factor(omega0: float = 6.0) -> float:
    """Pseudo-period per unit scale for the Morlet wavelet."""
    return 4.0 * np.pi / (omega0 + np.sqrt(2.0 + omega0**2))


def scale_to_period(scales, omega0: float = 6.0):
    return np.asarray(scales) * fourier_factor(omega0)


def period_to_scale(periods, omega0: float = 6.0):
    return np.asarray(periods) / fourier_factor(omega0)


def default_scale_grid(window_len: int, n_scales: int, omega0: float = 6.0) -> np.ndarray:
    """Geometric scales whose pseudo-periods run from 2 samples to ``window_len``."""
    if window_len < 2 or n_scales < 2:
        raise ConfigError("default_scale_grid needs window_len >= 2 and n_scales >= 2")
    if window_len == 2:
        raise ConfigError("window_len must exceed the minimum pseudo-period of 2 samples")
    return period_to_scale(np.geomspace(2.0, float(window_len), n_scales), omega0)


@lru_cache(maxsize=64)
def _kernel_cached(scales: tuple, window_len: int, omega0: float) -> np.ndarray:
    a = np.asarray(scales)[:, None, None]
    b = np.arange(window_len)[None, :, None]
    t = np.arange(window_len)[None, None, :]
    u = (t - b) / a
    kern = np.conj(MORLET_NORM * np.exp(1j * omega0 * u) * np.exp(-0.5 * u * u)) / np.sqrt(a)
    kern.setflags(write=False)
    return kern


def cwt_kernel(scales, window_len: int, omega0: float = 6.0) -> np.ndarray:
    """(n_scales, shift, time) matrix K with W[s, b] = sum_t K[s, b, t] x[t]."""
    return _kernel_cached(tuple(float(s) for s in np.asarray(scales).ravel()), int(window_len), float(omega0))


def cwt_coefficients(windows, params: WaveletParams | None = None, scales=None) -> np.ndarray:
    """Complex coefficients for a batch of windows.

    ``windows`` is (..., window_len); the result is (..., n_scales, window_len).
    """
    params = params or WaveletParams()
    x = np.asarray(windows, dtype=np.float64)
    if x.shape[-1] < 2:
        raise ShapeMismatch("cwt needs windows of at least two samples")
    if scales is None:
        scales = params.scales(x.shape[-1])
    kern = cwt_kernel(scales, x.shape[-1], params.omega0)
    return np.einsum("sbt,...t->...sb", kern, x)


def cwt(window, params: WaveletParams | None = None) -> Scalogram:
    params = params or WaveletParams()
    x = np.asarray(window, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ShapeMismatch("cwt expects a 1-D window of at least two samples")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("cwt input contains non-finite samples")
    scales = params.scales(x.size)
    coeffs = cwt_coefficients(x, params, scales)
    return Scalogram(np.abs(coeffs), scales, coeffs)
