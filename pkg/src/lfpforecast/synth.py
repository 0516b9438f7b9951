"""Seedable dual-channel signals with controlled cross-channel coupling.

Three regimes:

* ``COUPLED``     - a shared band-limited rhythm mixed into both channels,
                    tuned to a target linear correlation.
* ``NONLINEAR``   - channel 2 carries the quadrature (90 degree shifted)
                    copy of channel 1's rhythm plus a quadratic term, so
                    linear correlation is near zero while the same band
                    stays coherent.
* ``INDEPENDENT`` - two unrelated AR(2) processes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, hilbert, lfilter, sosfiltfilt

from .errors import ConfigError
from .signal import TimeSeries

BURN_IN = 500


class Regime(str, enum.Enum):
    COUPLED = "COUPLED"
    NONLINEAR = "NONLINEAR"
    INDEPENDENT = "INDEPENDENT"


@dataclass(frozen=True)
class RegimeConfig:
    regime: Regime = Regime.COUPLED
    n_samples: int = 20000
    seed: int = 0
    target_corr: float = 0.40
    band: tuple = (0.05, 0.10)
    noise_level: float = 0.1
    private_freq: float = 0.2
    private_radius: float = 0.8
    sample_rate: float = 1.0

    def __post_init__(self):
        try:
            object.__setattr__(self, "regime", Regime(str(getattr(self.regime, "value", self.regime)).upper()))
        except ValueError:
            raise ConfigError(f"unknown regime {self.regime!r}") from None
        object.__setattr__(self, "band", tuple(float(b) for b in self.band))
        if self.n_samples < 500:
            raise ConfigError("n_samples must be >= 500")
        if not abs(self.target_corr) < 1:
            raise ConfigError("|target_corr| must be < 1")
        lo, hi = self.band
        if not 0 < lo < hi < 0.5:
            raise ConfigError("band must satisfy 0 < low < high < 0.5 cycles/sample")
        if not self.noise_level > 0:
            raise ConfigError("noise_level must be positive")
        if not 0 < self.private_radius < 1 or not 0 < self.private_freq < 0.5:
            raise ConfigError("private AR(2) pole must sit inside the unit circle at 0 < f < 0.5")


def calibrate_mixing(target_corr: float) -> float:
    """Shared-component weight giving ``target_corr`` between two channels.

    With unit-variance shared and private parts, each channel is
    ``|w| s + sqrt(1 - w^2) p`` (the second with ``w s``), so the
    correlation is ``|w| w``.
    """
    if not abs(target_corr) < 1:
        raise ConfigError("|target_corr| must be < 1")
    return float(np.sign(target_corr) * np.sqrt(abs(target_corr)))


def _unit(x):
    x = x - x.mean()
    return x / x.std()


def band_oscillator(rng, n, band):
    sos = butter(4, band, btype="bandpass", fs=1.0, output="sos")
    raw = rng.standard_normal(n + 2 * BURN_IN)
    return _unit(sosfiltfilt(sos, raw)[BURN_IN : BURN_IN + n])


def ar2_noise(rng, n, freq, radius, noise_level):
    a1 = 2.0 * radius * np.cos(2.0 * np.pi * freq)
    a2 = -radius * radius
    drive = rng.standard_normal(n + BURN_IN)
    x = lfilter([1.0], [1.0, -a1, -a2], drive)[BURN_IN:]
    return _unit(_unit(x) + noise_level * rng.standard_normal(n))


def generate(cfg: RegimeConfig) -> tuple[TimeSeries, TimeSeries]:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_samples
    p1 = ar2_noise(rng, n, cfg.private_freq, cfg.private_radius, cfg.noise_level)
    p2 = ar2_noise(rng, n, cfg.private_freq, cfg.private_radius, cfg.noise_level)
    if cfg.regime is Regime.INDEPENDENT:
        x, y = p1, p2
    elif cfg.regime is Regime.COUPLED:
        s = band_oscillator(rng, n, cfg.band)
        w = calibrate_mixing(cfg.target_corr)
        v = np.sqrt(1.0 - w * w)
        x = abs(w) * s + v * p1
        y = w * s + v * p2
    else:
        s = band_oscillator(rng, n, cfg.band)
        quad = _unit(np.imag(hilbert(s)))
        sq = _unit(s * s)
        x = np.sqrt(0.6) * s + np.sqrt(0.4) * p1
        y = np.sqrt(0.5) * quad + np.sqrt(0.1) * sq + np.sqrt(0.4) * p2
    return (
        TimeSeries(x, cfg.sample_rate, "hip"),
        TimeSeries(y, cfg.sample_rate, "nac"),
    )
