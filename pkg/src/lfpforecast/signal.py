"""Series containers, the sliding-window sampler, normalization and metrics."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    DegenerateSeries,
    LengthMismatch,
    NonFiniteInput,
    SeriesTooShort,
)


def _frozen_array(values, dtype=np.float64) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    sample_rate: float = 1.0
    label: str = ""

    def __post_init__(self):
        arr = _frozen_array(self.values)
        if arr.ndim != 1 or arr.size == 0:
            raise DegenerateSeries("a TimeSeries needs a non-empty 1-D value array")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput(f"series '{self.label}' contains non-finite samples")
        if not (self.sample_rate > 0 and np.isfinite(self.sample_rate)):
            raise ConfigError("sample_rate must be a positive finite number")
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return (
            self.label == other.label
            and self.sample_rate == other.sample_rate
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True)
class WindowConfig:
    window_len: int = 12
    stride: int = 1
    horizon: int = 1

    def __post_init__(self):
        if self.window_len < 2 or self.stride < 1 or self.horizon < 1:
            raise ConfigError(
                f"invalid window config: window_len={self.window_len}, "
                f"stride={self.stride}, horizon={self.horizon}"
            )

    @property
    def overlap(self) -> int:
        return self.window_len - self.stride

    @property
    def span(self) -> int:
        """Number of raw samples touched by one (input, target) pair."""
        return self.window_len + self.horizon


@dataclass(frozen=True)
class WindowedDataset:
    """Aligned (window, next-sample) pairs.

    ``inputs`` has shape (n, channels, window_len), ``targets`` (n, channels)
    and ``start_indices`` (n,) holds the source index of each window's first
    sample.
    """

    inputs: np.ndarray
    targets: np.ndarray
    start_indices: np.ndarray
    config: WindowConfig = field(default_factory=WindowConfig)
    labels: tuple = ()

    def __post_init__(self):
        inputs = _frozen_array(self.inputs)
        targets = _frozen_array(self.targets)
        starts = _frozen_array(self.start_indices, dtype=np.int64)
        if not (len(inputs) == len(targets) == len(starts)):
            raise LengthMismatch("inputs, targets and start_indices differ in length")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "start_indices", starts)

    def __len__(self):
        return len(self.start_indices)

    @property
    def n_channels(self) -> int:
        return self.inputs.shape[1]

    @property
    def target_indices(self) -> np.ndarray:
        return self.start_indices + self.config.window_len + self.config.horizon - 1

    @property
    def span_ends(self) -> np.ndarray:
        """Last raw index touched by each sample (its target index)."""
        return self.target_indices

    def subset(self, idx) -> "WindowedDataset":
        idx = np.asarray(idx)
        return WindowedDataset(
            self.inputs[idx], self.targets[idx], self.start_indices[idx], self.config, self.labels
        )

    def channel(self, c: int) -> "WindowedDataset":
        return WindowedDataset(
            self.inputs[:, c : c + 1],
            self.targets[:, c : c + 1],
            self.start_indices,
            self.config,
            self.labels[c : c + 1],
        )


def _as_channels(series) -> list[TimeSeries]:
    if isinstance(series, TimeSeries):
        return [series]
    chans = list(series)
    if not 1 <= len(chans) <= 2:
        raise ConfigError("expected one or two channels")
    return [s if isinstance(s, TimeSeries) else TimeSeries(s) for s in chans]


def make_windows(series, cfg: WindowConfig | None = None) -> WindowedDataset:
    """Slide a window over one or two equally long channels in lockstep."""
    cfg = cfg or WindowConfig()
    chans = _as_channels(series)
    n = len(chans[0])
    if any(len(c) != n for c in chans):
        raise LengthMismatch("channels differ in length")
    if n < cfg.window_len + cfg.horizon:
        raise SeriesTooShort(
            f"series of length {n} is shorter than window_len + horizon = {cfg.span}"
        )
    data = np.stack([c.values for c in chans])  # (C, N)
    starts = np.arange(0, n - cfg.span + 1, cfg.stride)
    views = np.lib.stride_tricks.sliding_window_view(data, cfg.window_len, axis=1)
    inputs = views[:, starts, :].transpose(1, 0, 2)
    targets = data[:, starts + cfg.window_len + cfg.horizon - 1].T
    return WindowedDataset(inputs, targets, starts, cfg, tuple(c.label for c in chans))


# -- normalization -------------------------------------------------------------

@dataclass(frozen=True)
class NormStats:
    mean: float
    std: float


def _check_finite(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("non-finite values")
    return v


def zscore_fit(train_values) -> NormStats:
    v = _check_finite(train_values).ravel()
    if v.size < 2:
        raise DegenerateSeries("need at least two values to fit normalization")
    mean = float(v.mean())
    std = float(v.std())  # population (1/N)
    if std == 0.0:
        raise DegenerateSeries("constant input has zero variance")
    return NormStats(mean, std)


def zscore_apply(values, stats: NormStats) -> np.ndarray:
    return (_check_finite(values) - stats.mean) / stats.std


def zscore_invert(values, stats: NormStats) -> np.ndarray:
    return _check_finite(values) * stats.std + stats.mean


# -- metrics -------------------------------------------------------------------

def pearson_corr(x, y) -> float:
    x = _check_finite(x).ravel()
    y = _check_finite(y).ravel()
    if x.size != y.size:
        raise LengthMismatch("pearson_corr needs equal lengths")
    if x.size < 2:
        raise DegenerateSeries("pearson_corr needs at least two samples")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt(xc @ xc)
    sy = np.sqrt(yc @ yc)
    if sx == 0 or sy == 0:
        raise DegenerateSeries("pearson_corr is undefined for a constant input")
    return float(np.clip((xc @ yc) / (sx * sy), -1.0, 1.0))


def mse(predictions, targets) -> float:
    p = _check_finite(predictions).ravel()
    t = _check_finite(targets).ravel()
    if p.size != t.size:
        raise LengthMismatch("predictions and targets differ in length")
    return float(np.mean((p - t) ** 2))


def r_squared(predictions, targets) -> float:
    p = _check_finite(predictions).ravel()
    t = _check_finite(targets).ravel()
    if p.size != t.size:
        raise LengthMismatch("predictions and targets differ in length")
    if t.size < 2:
        raise DegenerateSeries("r_squared needs at least two targets")
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot == 0.0:
        raise DegenerateSeries("r_squared is undefined for constant targets")
    ss_res = float(np.sum((p - t) ** 2))
    return 1.0 - ss_res / ss_tot


# -- CSV ingestion -------------------------------------------------------------

def read_csv(path) -> list[TimeSeries]:
    """Load ``t,hip,nac`` or ``t,value`` files into TimeSeries channels."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DegenerateSeries(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    if len(header) not in (2, 3) or header[0].lower() != "t":
        raise ConfigError(f"{path}: expected header 't,hip,nac' or 't,value', got {header}")
    try:
        table = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    except ValueError as exc:
        raise ConfigError(f"{path}: unparsable number ({exc})") from None
    if table.ndim != 2 or table.shape[1] != len(header):
        raise ConfigError(f"{path}: ragged rows")
    t = table[:, 0]
    dt = np.diff(t)
    if np.any(dt <= 0):
        raise ConfigError(f"{path}: time column must be strictly increasing")
    # 12 significant digits strips the rounding noise that printed time stamps carry
    rate = float(f"{1.0 / float(np.median(dt)):.12g}") if dt.size else 1.0
    return [TimeSeries(table[:, j + 1], rate, header[j + 1]) for j in range(len(header) - 1)]


def write_csv(path, channels: Sequence[TimeSeries]) -> None:
    path = Path(path)
    chans = list(channels)
    n = len(chans[0])
    if any(len(c) != n for c in chans):
        raise LengthMismatch("channels differ in length")
    names = [c.label or f"ch{i}" for i, c in enumerate(chans)]
    if len(chans) == 1 and not chans[0].label:
        names = ["value"]
    rate = chans[0].sample_rate
    with path.open("w", newline="") as fh:
        fh.write(",".join(["t", *names]) + "\n")
        for i in range(n):
            fh.write(",".join([repr(i / rate), *(repr(float(c.values[i])) for c in chans)]) + "\n")
