"""Mini-batch Adam training with early stopping, and evaluation."""
from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConfigError, NonFiniteError, NonFiniteLoss
from .models import ArchitectureConfig, ForecastModel, ModelSpec, NeuralForecaster
from .nn.optim import Adam
from .nn.tensor import add, mse_loss, mul
from .signal import WindowedDataset, mse, r_squared

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 200
    early_stop_patience: int = 10
    validation_fraction: float = 0.1
    reconstruction_weight: float = 0.1
    dropout_rate: float = 0.2
    weight_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("batch_size and max_epochs must be >= 1")
        if self.early_stop_patience < 1:
            raise ConfigError("early_stop_patience must be >= 1")
        if not 0 <= self.validation_fraction < 1:
            raise ConfigError("validation_fraction must lie in [0, 1)")
        if self.reconstruction_weight < 0 or self.weight_decay < 0:
            raise ConfigError("reconstruction_weight and weight_decay must be non-negative")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigError("dropout_rate must lie in [0, 1)")

    def to_dict(self):
        return asdict(self)


class EarlyStopper:
    """Tracks the best validation loss.

    A value no larger than the best so far counts as an improvement. Training
    stops once more than ``patience`` consecutive epochs fail to improve.
    """

    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.best_epoch = -1
        self.bad_epochs = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        """Record one epoch; returns True when training should stop."""
        if val_loss <= self.best:
            self.best = val_loss
            self.best_epoch = epoch
            self.bad_epochs = 0
            return False
        self.bad_epochs += 1
        return self.bad_epochs > self.patience


def split_validation(dataset: WindowedDataset, fraction: float):
    """Contiguous tail of the training windows for validation.

    Training windows whose span reaches into the validation block are dropped.
    """
    n = len(dataset)
    n_val = int(round(n * fraction))
    if fraction == 0 or n_val < 1 or n - n_val < 1:
        return dataset, None
    val_idx = np.arange(n - n_val, n)
    first_val_start = dataset.start_indices[val_idx[0]]
    train_idx = np.arange(0, n - n_val)
    train_idx = train_idx[dataset.span_ends[train_idx] < first_val_start]
    if train_idx.size == 0:
        return dataset, None
    return dataset.subset(train_idx), dataset.subset(val_idx)


def _batch_loss(model: NeuralForecaster, feats, targets, cfg, training, rng):
    pred, recon = model.net.forward(
        feats,
        training=training,
        rng=rng,
        dropout_rate=cfg.dropout_rate,
        recon_weight=cfg.reconstruction_weight,
    )
    pred_loss = mse_loss(pred, targets)
    total = pred_loss if recon is None else add(pred_loss, mul(recon, cfg.reconstruction_weight))
    return total, pred_loss


def _val_loss(model, feats, targets, cfg, batch_size=512) -> float:
    total, n = 0.0, len(feats)
    for start in range(0, n, batch_size):
        pred, _ = model.net.forward(feats[start : start + batch_size])
        total += float(np.sum((pred.data - targets[start : start + batch_size]) ** 2))
    return total / (n * targets.shape[1])


def train(model: ForecastModel, dataset: WindowedDataset, cfg: TrainConfig | None = None) -> ForecastModel:
    cfg = cfg or TrainConfig()
    if len(dataset) == 0:
        raise ConfigError("cannot train on an empty dataset")
    if not isinstance(model, NeuralForecaster):
        return model.fit(dataset, cfg)

    train_ds, val_ds = split_validation(dataset, cfg.validation_fraction)
    model.fit_normalization(train_ds)
    x_tr = model.features(train_ds.inputs)
    y_tr = model.normalized_targets(train_ds.targets)
    if val_ds is not None:
        x_val, y_val = model.features(val_ds.inputs), model.normalized_targets(val_ds.targets)

    params = model.net.parameters()
    opt = Adam(params, lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, model.seed, 7]))
    stopper = EarlyStopper(cfg.early_stop_patience)
    best_state = model.net.state_dict()
    history = {"train_loss": [], "val_loss": []}

    for epoch in range(cfg.max_epochs):
        order = rng.permutation(len(x_tr))
        run, count = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            opt.zero_grad()
            try:
                loss, pred_loss = _batch_loss(model, x_tr[idx], y_tr[idx], cfg, True, rng)
                if not np.isfinite(loss.data).all():
                    raise NonFiniteLoss(f"epoch {epoch + 1}: loss is {loss.item()}")
                loss.backward(params)
            except NonFiniteError as exc:
                raise NonFiniteLoss(f"epoch {epoch + 1}, batch at {start}: {exc}") from exc
            opt.step()
            run += float(pred_loss.data) * len(idx)
            count += len(idx)
        history["train_loss"].append(run / count)
        val = _val_loss(model, x_val, y_val, cfg) if val_ds is not None else history["train_loss"][-1]
        if not np.isfinite(val):
            raise NonFiniteLoss(f"epoch {epoch + 1}: validation loss is {val}")
        history["val_loss"].append(val)
        stop = stopper.update(epoch, val)
        if stopper.best_epoch == epoch:
            best_state = model.net.state_dict()
        log.debug("epoch %d train %.5g val %.5g", epoch + 1, history["train_loss"][-1], val)
        if stop:
            break

    model.net.load_state_dict(best_state)
    model.history = history
    model.best_epoch = stopper.best_epoch + 1
    return model


def evaluate(model: ForecastModel, dataset: WindowedDataset) -> dict:
    """Per-channel R^2 and MSE in original units."""
    preds = model.predict(dataset.inputs)
    out = {}
    for j, c in enumerate(model.channels):
        target = dataset.targets[:, c]
        out[c] = {"r2": r_squared(preds[:, j], target), "mse": mse(preds[:, j], target)}
    return out


DEFAULT_GRID = {"learning_rate": (1e-2, 1e-3, 1e-4), "encoder_filters": ((16, 8), (8, 4))}


def grid_search(spec: ModelSpec, dataset: WindowedDataset, cfg: TrainConfig, grid=None, channel=0, seed=0):
    """Pick learning rate and filter counts by best validation loss.

    Returns (best_spec, best_cfg, table) where table lists every grid point.
    """
    grid = grid or DEFAULT_GRID
    keys = sorted(grid)
    table = []
    best = None
    for values in itertools.product(*(grid[k] for k in keys)):
        point = dict(zip(keys, values))
        arch_kw = spec.arch.to_dict()
        if "encoder_filters" in point:
            arch_kw["encoder_filters"] = point["encoder_filters"]
        if "mlp_hidden" in point:
            arch_kw["mlp_hidden"] = point["mlp_hidden"]
        cand_spec = replace(spec, arch=ArchitectureConfig(**arch_kw))
        cand_cfg = replace(cfg, learning_rate=point.get("learning_rate", cfg.learning_rate))
        model = cand_spec.build(channel, seed)
        train(model, dataset, cand_cfg)
        score = min(model.history["val_loss"])
        table.append({**{k: (list(v) if isinstance(v, tuple) else v) for k, v in point.items()}, "val_loss": score})
        if best is None or score < best[0]:
            best = (score, cand_spec, cand_cfg)
    return best[1], best[2], table
