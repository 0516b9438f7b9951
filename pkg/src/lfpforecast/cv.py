"""Purged contiguous-block cross-validation.

The raw timeline is cut into ``k`` contiguous blocks. For each fold, test
windows are those lying entirely inside the held-out block; training
windows are those whose span stays at least ``purge_gap`` samples clear of
it on both sides. Stride-1 windows overlap heavily, so random folds would
leak nearly every test target into training.
"""
from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FoldTooSmall, SingleChannelData
from .models import ModelSpec
from .signal import WindowConfig, WindowedDataset, make_windows, r_squared, mse
from .training import TrainConfig, train


@dataclass(frozen=True)
class Fold:
    index: int
    test_block: tuple  # [start, stop) in raw sample indices
    train_idx: np.ndarray
    test_idx: np.ndarray


def fold_blocks(n_samples: int, k: int) -> list[tuple[int, int]]:
    if k < 2:
        raise ConfigError("need k >= 2 folds")
    edges = np.linspace(0, n_samples, k + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def purged_folds(dataset: WindowedDataset, n_samples: int, k: int = 10, purge_gap: int | None = None,
                 min_test_windows: int = 50) -> list[Fold]:
    cfg = dataset.config
    gap = cfg.span if purge_gap is None else purge_gap
    if gap < 0:
        raise ConfigError("purge_gap must be non-negative")
    starts = dataset.start_indices
    ends = dataset.span_ends
    folds = []
    for j, (a, b) in enumerate(fold_blocks(n_samples, k)):
        test = np.flatnonzero((starts >= a) & (ends < b))
        trainable = (ends < a - gap) | (starts >= b + gap)
        tr = np.flatnonzero(trainable)
        if test.size < min_test_windows:
            raise FoldTooSmall(f"fold {j} keeps {test.size} test windows (< {min_test_windows})")
        if tr.size == 0:
            raise FoldTooSmall(f"fold {j} has no training windows left after purging")
        folds.append(Fold(j, (a, b), tr, test))
    return folds


def audit_folds(dataset: WindowedDataset, folds, purge_gap: int) -> int:
    """Count training samples whose inputs or target fall within ``purge_gap`` of a test block.

    Brute-force index scan, independent of how the folds were constructed.
    """
    length = dataset.config.window_len
    violations = 0
    for fold in folds:
        a, b = fold.test_block
        guarded = set(range(a - purge_gap, b + purge_gap))
        for i in fold.train_idx:
            t = int(dataset.start_indices[i])
            touched = list(range(t, t + length)) + [int(dataset.target_indices[i])]
            if any(idx in guarded for idx in touched):
                violations += 1
        test_set = set(int(i) for i in fold.test_idx)
        if test_set & set(int(i) for i in fold.train_idx):
            violations += 1
    return violations


@dataclass
class CVReport:
    model: str
    channels: list
    folds: list = field(default_factory=list)  # per fold: block, sizes, r2/mse per channel
    config: dict = field(default_factory=dict)
    timings: list = field(default_factory=list)  # wall-clock seconds per fold; kept out of to_dict()

    def r2(self, channel) -> np.ndarray:
        return np.array([f["r2"][str(channel)] for f in self.folds])

    def mean_r2(self, channel) -> float:
        return float(np.mean(self.r2(channel)))

    def std_r2(self, channel) -> float:
        return float(np.std(self.r2(channel)))

    @property
    def k(self) -> int:
        return len(self.folds)

    def to_dict(self, include_timings=False) -> dict:
        d = {
            "model": self.model,
            "channels": list(self.channels),
            "k": self.k,
            "config": self.config,
            "folds": self.folds,
            "aggregate": {
                str(c): {"mean_r2": self.mean_r2(c), "std_r2": self.std_r2(c)} for c in self.channels
            },
        }
        if include_timings:
            d["timings_s"] = list(self.timings)
        return d

    def to_json(self, include_timings=False) -> str:
        return json.dumps(self.to_dict(include_timings), indent=2, sort_keys=True)


def _fold_seed(seed, fold, channel):
    return int(np.random.SeedSequence([seed, fold, channel]).generate_state(1)[0])


def _run_fold(spec: ModelSpec, dataset: WindowedDataset, fold: Fold, cfg: TrainConfig, channels):
    t0 = time.perf_counter()
    train_ds = dataset.subset(fold.train_idx)
    test_ds = dataset.subset(fold.test_idx)
    r2s, mses = {}, {}
    jobs = [tuple(channels)] if spec.joint else [(c,) for c in channels]
    histories = {}
    for group in jobs:
        seed = _fold_seed(cfg.seed, fold.index, group[0])
        model = spec.build(channel=group[0], seed=seed)
        fold_cfg = TrainConfig(**{**cfg.to_dict(), "seed": seed})
        train(model, train_ds, fold_cfg)
        preds = model.predict(test_ds.inputs)
        for j, c in enumerate(model.channels):
            target = test_ds.targets[:, c]
            r2s[str(c)] = r_squared(preds[:, j], target)
            mses[str(c)] = mse(preds[:, j], target)
        if model.history["train_loss"]:
            histories[str(group[0])] = len(model.history["train_loss"])
    record = {
        "fold": fold.index,
        "test_block": list(fold.test_block),
        "n_train": int(fold.train_idx.size),
        "n_test": int(fold.test_idx.size),
        "r2": r2s,
        "mse": mses,
    }
    if histories:
        record["epochs"] = histories
    return record, time.perf_counter() - t0


def cross_validate(spec: ModelSpec, series, k: int = 10, purge_gap: int | None = None,
                   cfg: TrainConfig | None = None, window: WindowConfig | None = None,
                   jobs: int = 1, min_test_windows: int = 50) -> CVReport:
    """Fit and score ``spec`` on every purged fold; ``series`` is one or two TimeSeries."""
    cfg = cfg or TrainConfig()
    window = window or WindowConfig(window_len=spec.window_len)
    chans = [series] if hasattr(series, "values") else list(series)
    if spec.joint and len(chans) < 2:
        raise SingleChannelData(f"{spec.kind.value} needs two channels")
    dataset = make_windows(chans, window)
    n = len(chans[0])
    gap = window.span if purge_gap is None else purge_gap
    folds = purged_folds(dataset, n, k, gap, min_test_windows)
    channels = list(range(len(chans)))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_fold, [spec] * k, [dataset] * k, folds, [cfg] * k, [channels] * k))
    else:
        results = [_run_fold(spec, dataset, f, cfg, channels) for f in folds]
    report = CVReport(
        model=spec.kind.value,
        channels=channels,
        folds=[r for r, _ in results],
        timings=[t for _, t in results],
        config={
            "model": spec.to_dict(),
            "train": cfg.to_dict(),
            "window": {"window_len": window.window_len, "stride": window.stride, "horizon": window.horizon},
            "k": k,
            "purge_gap": gap,
            "n_samples": n,
        },
    )
    return report
