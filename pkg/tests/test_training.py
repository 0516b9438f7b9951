import numpy as np
import pytest

from lfpforecast import training
from lfpforecast.errors import ConfigError, NonFiniteLoss
from lfpforecast.models import ArchitectureConfig, InputMode, ModelSpec, build_baseline_lstm
from lfpforecast.signal import TimeSeries, make_windows
from lfpforecast.training import EarlyStopper, TrainConfig, grid_search, split_validation, train
from lfpforecast.wavelet import WaveletParams


def sine_dataset(n=600, period=10, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    x = np.sin(2 * np.pi * np.arange(n) / period) + noise * rng.normal(size=n)
    return make_windows(TimeSeries(x))


def test_train_config_validation():
    for bad in ({"learning_rate": 0}, {"early_stop_patience": 0}, {"dropout_rate": 1.0},
                {"validation_fraction": 1.0}, {"batch_size": 0}):
        with pytest.raises(ConfigError):
            TrainConfig(**bad)


def test_stopper_monotone_never_triggers():
    s = EarlyStopper(2)
    assert not any(s.update(e, 10.0 - e) for e in range(50))
    assert s.best_epoch == 49


def test_stopper_patience_one_trace():
    s = EarlyStopper(1)
    assert [s.update(e, v) for e, v in enumerate([1.0, 2.0, 3.0, 4.0])][:3] == [False, False, True]
    assert s.best_epoch == 0


def test_stopper_ties_count_as_improvement():
    s = EarlyStopper(1)
    for e, v in enumerate([2.0, 1.0, 1.0, 1.0]):
        assert not s.update(e, v)
    assert s.best_epoch == 3


def test_split_validation_is_contiguous_tail_and_purged():
    ds = sine_dataset(300)
    tr, val = split_validation(ds, 0.1)
    assert len(val) == round(0.1 * len(ds))
    assert val.start_indices[0] == ds.start_indices[len(ds) - len(val)]
    assert tr.span_ends.max() < val.start_indices.min()
    same, none = split_validation(ds, 0.0)
    assert none is None and same is ds


def test_runs_max_epochs_when_validation_keeps_improving(monkeypatch):
    losses = iter(np.linspace(1.0, 0.1, 6))
    monkeypatch.setattr(training, "_val_loss", lambda *a, **k: next(losses))
    m = build_baseline_lstm(hidden_size=4)
    train(m, sine_dataset(200), TrainConfig(max_epochs=6, early_stop_patience=1))
    assert len(m.history["val_loss"]) == 6 and m.best_epoch == 6


def test_patience_one_stops_at_epoch_three_and_restores_epoch_one(monkeypatch):
    snapshots = []
    seq = iter([1.0, 2.0, 3.0, 4.0, 5.0])
    model = build_baseline_lstm(hidden_size=4)

    def fake_val(*args, **kwargs):
        snapshots.append(model.net.state_dict())
        return next(seq)

    monkeypatch.setattr(training, "_val_loss", fake_val)
    train(model, sine_dataset(200), TrainConfig(max_epochs=20, early_stop_patience=1))
    assert len(model.history["train_loss"]) == len(model.history["val_loss"]) == 3
    assert model.best_epoch == 1
    final = model.net.state_dict()
    assert all(np.array_equal(final[k], snapshots[0][k]) for k in final)
    assert not all(np.array_equal(final[k], snapshots[2][k]) for k in final)


def test_training_loss_drops_tenfold():
    m = build_baseline_lstm(hidden_size=16, seed=1)
    train(m, sine_dataset(800), TrainConfig(learning_rate=1e-2, max_epochs=15, dropout_rate=0.0))
    hist = m.history["train_loss"]
    assert hist[0] / hist[m.best_epoch - 1] >= 10


def test_training_is_deterministic():
    def run():
        m = build_baseline_lstm(hidden_size=4, seed=2)
        train(m, sine_dataset(300, noise=0.2), TrainConfig(max_epochs=3))
        return m.history, m.net.state_dict()

    (h1, s1), (h2, s2) = run(), run()
    assert h1 == h2
    assert all(np.array_equal(s1[k], s2[k]) for k in s1)


def test_wclsa_reconstruction_term_trains():
    spec = ModelSpec("WCLSA", arch=ArchitectureConfig(encoder_filters=(2,), mlp_hidden=4,
                                                      input_mode=InputMode.SCALOGRAM_SINGLE),
                     wavelet=WaveletParams(n_scales=3))
    m = spec.build()
    train(m, sine_dataset(200), TrainConfig(max_epochs=2, reconstruction_weight=0.5))
    assert len(m.history["train_loss"]) == 2
    assert all(np.isfinite(m.history["val_loss"]))


def test_divergence_raises_non_finite_loss():
    m = build_baseline_lstm(hidden_size=4)
    ds = sine_dataset(200)
    m.net.out.W.data[...] = 1e300
    with pytest.raises(NonFiniteLoss):
        train(m, ds, TrainConfig(max_epochs=1))


def test_empty_dataset_rejected():
    ds = sine_dataset(200)
    with pytest.raises(ConfigError):
        train(build_baseline_lstm(), ds.subset(np.array([], dtype=int)))


def test_grid_search_reports_every_point():
    spec = ModelSpec("LSTM", arch=ArchitectureConfig(lstm_hidden=3))
    grid = {"learning_rate": (1e-2, 1e-3)}
    best_spec, best_cfg, table = grid_search(spec, sine_dataset(200), TrainConfig(max_epochs=2), grid)
    assert len(table) == 2
    assert best_cfg.learning_rate in (1e-2, 1e-3)
    assert min(row["val_loss"] for row in table) == pytest.approx(
        next(r["val_loss"] for r in table if r["learning_rate"] == best_cfg.learning_rate))
