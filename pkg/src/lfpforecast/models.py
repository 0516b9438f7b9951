"""Forecasters sharing one fit/predict surface.

Linear models (AR, VAR) are fitted in closed form on the training windows.
Neural models (baseline LSTM, WCLSA, WCOH-CLSA) wrap a ``Module`` plus the
per-channel normalization fitted on the training split; ``predict`` always
returns values in the original units.
"""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field

import numpy as np

from .coherence import SmoothingParams, coherence_from_coeffs
from .errors import ConfigError, SingleChannelData
from .linear import fit_ar_windows, fit_var_windows, predict_ar_batch, predict_var_batch
from .nn.layers import ConvLSTMCell, Dense, LSTMCell, Module
from .nn.tensor import Tensor, add, concat, conv2d, dropout, mse_loss, relu, reshape, stack
from .signal import NormStats, WindowedDataset, zscore_apply, zscore_fit, zscore_invert
from .wavelet import WaveletParams, cwt_coefficients


class ModelKind(str, enum.Enum):
    AR_WRAP = "AR"
    VAR_WRAP = "VAR"
    LSTM_BASELINE = "LSTM"
    WCLSA = "WCLSA"
    WCOH_CLSA = "WCOH_CLSA"
    MEAN = "MEAN"

    @classmethod
    def parse(cls, name) -> "ModelKind":
        key = str(getattr(name, "value", name)).upper().replace("-", "_").replace(" ", "_")
        aliases = {"WCOH": "WCOH_CLSA", "WCOHCLSA": "WCOH_CLSA", "LSTM_BASELINE": "LSTM", "AR_WRAP": "AR", "VAR_WRAP": "VAR"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown model kind {name!r}") from None

    @property
    def joint(self) -> bool:
        return self in (ModelKind.VAR_WRAP, ModelKind.WCOH_CLSA)


class InputMode(str, enum.Enum):
    SCALOGRAM_SINGLE = "SCALOGRAM_SINGLE"
    COHERENCE_ONLY = "COHERENCE_ONLY"
    COHERENCE_PLUS_SCALOGRAMS = "COHERENCE_PLUS_SCALOGRAMS"


@dataclass(frozen=True)
class ArchitectureConfig:
    encoder_filters: tuple = (16, 8)
    kernel: tuple = (3, 1)
    mlp_hidden: int = 64
    input_mode: InputMode = InputMode.COHERENCE_PLUS_SCALOGRAMS
    # "complex" feeds real and imaginary CWT parts, "magnitude" feeds |W| only
    scalogram_features: str = "complex"
    lstm_hidden: int = 32

    def __post_init__(self):
        object.__setattr__(self, "encoder_filters", tuple(int(f) for f in self.encoder_filters))
        object.__setattr__(self, "kernel", tuple(int(k) for k in self.kernel))
        object.__setattr__(self, "input_mode", InputMode(getattr(self.input_mode, "value", self.input_mode)))
        if not self.encoder_filters or min(self.encoder_filters) < 1:
            raise ConfigError("encoder_filters must be a non-empty list of positive counts")
        if len(self.kernel) != 2 or any(k < 1 or k % 2 == 0 for k in self.kernel):
            raise ConfigError("kernel dimensions must be odd positive integers")
        if self.mlp_hidden < 1 or self.lstm_hidden < 1:
            raise ConfigError("hidden sizes must be >= 1")
        if self.scalogram_features not in ("complex", "magnitude"):
            raise ConfigError("scalogram_features must be 'complex' or 'magnitude'")

    def to_dict(self):
        d = asdict(self)
        d["input_mode"] = self.input_mode.value
        d["encoder_filters"] = list(self.encoder_filters)
        d["kernel"] = list(self.kernel)
        return d


# -- neural networks -------------------------------------------------------------------

class MLPHead(Module):
    def __init__(self, in_features, hidden, rng):
        super().__init__()
        self.hidden = self.add_child("hidden", Dense(in_features, hidden, rng))
        self.out = self.add_child("out", Dense(hidden, 1, rng))

    def __call__(self, x, rate=0.0, rng=None, training=False):
        h = dropout(relu(self.hidden(x)), rate, rng, training)
        return self.out(h)


class BaselineLSTMNet(Module):
    """Raw window -> LSTM unrolled over samples -> dense -> one value."""

    def __init__(self, window_len, hidden_size, rng):
        super().__init__()
        self.window_len = window_len
        self.cell = self.add_child("lstm", LSTMCell(1, hidden_size, rng))
        self.out = self.add_child("dense", Dense(hidden_size, 1, rng))

    n_heads = 1

    def forward(self, x, training=False, rng=None, dropout_rate=0.0, recon_weight=0.0):
        # x: (B, L, 1)
        batch = x.shape[0]
        h, c = self.cell.zero_state(batch)
        fused = self.cell.fused()
        for t in range(x.shape[1]):
            h, c = self.cell.step(Tensor(x[:, t, :]), h, c, fused)
        return self.out(h), None


class CLSANet(Module):
    """ConvLSTM stacked autoencoder with MLP regression heads.

    Input is a (B, T, S, 1, C) sequence of scale-axis slices. The encoder
    stack is unrolled over T; its final hidden state is the latent code. A
    mirrored decoder, fed the latent at every step, reconstructs the input
    slices and contributes an auxiliary loss.
    """

    def __init__(self, n_scales, in_channels, arch: ArchitectureConfig, n_heads, rng):
        super().__init__()
        self.n_scales = n_scales
        self.in_channels = in_channels
        self.n_heads = n_heads
        spatial = (n_scales, 1)
        filters = arch.encoder_filters
        self.encoder = []
        prev = in_channels
        for j, f in enumerate(filters):
            self.encoder.append(self.add_child(f"enc{j}", ConvLSTMCell(prev, f, arch.kernel, spatial, rng)))
            prev = f
        self.decoder = []
        for j, f in enumerate(reversed(filters)):
            self.decoder.append(self.add_child(f"dec{j}", ConvLSTMCell(prev, f, arch.kernel, spatial, rng)))
            prev = f
        self.recon_kernel = self.add_param(
            "recon.W", rng.uniform(-1, 1, (1, 1, prev, in_channels)) * np.sqrt(6.0 / (prev + in_channels))
        )
        self.recon_bias = self.add_param("recon.b", np.zeros(in_channels))
        self.latent_size = n_scales * filters[-1]
        self.heads = [self.add_child(f"head{k}", MLPHead(self.latent_size, arch.mlp_hidden, rng)) for k in range(n_heads)]

    def encode(self, x):
        batch, steps = x.shape[0], x.shape[1]
        seq = [Tensor(x[:, t]) for t in range(steps)]
        for cell in self.encoder:
            fused = cell.fused()
            h, c = cell.zero_state(batch)
            outs = []
            for xt in seq:
                h, c = cell.step(xt, h, c, fused)
                outs.append(h)
            seq = outs
        return seq[-1]

    def decode(self, latent, steps):
        batch = latent.shape[0]
        seq = [latent] * steps
        for cell in self.decoder:
            fused = cell.fused()
            h, c = cell.zero_state(batch)
            outs = []
            for xt in seq:
                h, c = cell.step(xt, h, c, fused)
                outs.append(h)
            seq = outs
        return [add(conv2d(h, self.recon_kernel), self.recon_bias) for h in seq]

    def forward(self, x, training=False, rng=None, dropout_rate=0.0, recon_weight=0.0):
        latent = self.encode(x)
        flat = reshape(latent, (latent.shape[0], self.latent_size))
        preds = [head(flat, dropout_rate, rng, training) for head in self.heads]
        pred = preds[0] if len(preds) == 1 else concat(preds, axis=-1)
        recon = None
        if recon_weight > 0:
            rec = self.decode(latent, x.shape[1])
            recon = mse_loss(stack(rec, axis=1), x)
        return pred, recon


# -- forecaster wrappers ----------------------------------------------------------------

class ForecastModel:
    """Common surface: ``fit(train_ds, cfg)`` and ``predict(inputs) -> (n, len(channels))``."""

    kind: ModelKind

    def __init__(self, channels):
        self.channels = tuple(channels)
        self.history = {"train_loss": [], "val_loss": []}

    # ``inputs`` is raw (n, C_all, L); returns predictions for self.channels
    def predict(self, inputs) -> np.ndarray:
        raise NotImplementedError

    def fit(self, dataset: WindowedDataset, cfg=None):
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind.value, "channels": list(self.channels)}


class MeanForecaster(ForecastModel):
    kind = ModelKind.MEAN

    def fit(self, dataset, cfg=None):
        self.means = dataset.targets[:, list(self.channels)].mean(axis=0)
        return self

    def predict(self, inputs):
        return np.tile(self.means, (len(inputs), 1))


class ARForecaster(ForecastModel):
    kind = ModelKind.AR_WRAP

    def __init__(self, channel, order=12):
        super().__init__((channel,))
        self.order = order
        self.model = None

    def fit(self, dataset, cfg=None):
        c = self.channels[0]
        self.model = fit_ar_windows(dataset.inputs[:, c], dataset.targets[:, c], self.order)
        return self

    def predict(self, inputs):
        return predict_ar_batch(self.model, np.asarray(inputs)[:, self.channels[0]])[:, None]

    def describe(self):
        return {**super().describe(), "order": self.order}


class VARForecaster(ForecastModel):
    kind = ModelKind.VAR_WRAP

    def __init__(self, channels=(0, 1), order=12):
        super().__init__(channels)
        self.order = order
        self.model = None

    def fit(self, dataset, cfg=None):
        if dataset.n_channels < 2:
            raise SingleChannelData("VAR needs two channels")
        ch = list(self.channels)
        self.model = fit_var_windows(dataset.inputs[:, ch], dataset.targets[:, ch], self.order)
        return self

    def predict(self, inputs):
        return predict_var_batch(self.model, np.asarray(inputs)[:, list(self.channels)])

    def describe(self):
        return {**super().describe(), "order": self.order}


class NeuralForecaster(ForecastModel):
    """A trained network plus the preprocessing that feeds it."""

    def __init__(self, kind, channels, window_len, arch: ArchitectureConfig, wavelet: WaveletParams,
                 smoothing: SmoothingParams, seed=0):
        super().__init__(channels)
        self.kind = kind
        self.window_len = window_len
        self.arch = arch
        self.wavelet = wavelet
        self.smoothing = smoothing
        self.seed = seed
        self.norm: list[NormStats] | None = None
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0FFEE]))
        if kind is ModelKind.LSTM_BASELINE:
            self.net = BaselineLSTMNet(window_len, arch.lstm_hidden, rng)
        else:
            self.net = CLSANet(wavelet.n_scales, self.n_input_channels, arch, len(channels), rng)

    @property
    def n_input_channels(self) -> int:
        per = 2 if self.arch.scalogram_features == "complex" else 1
        if self.kind is ModelKind.WCLSA:
            return per
        if self.kind is ModelKind.WCOH_CLSA:
            if self.arch.input_mode is InputMode.COHERENCE_ONLY:
                return 1
            return 2 * per + 1
        return 1

    # -- preprocessing ------------------------------------------------------------
    def fit_normalization(self, dataset: WindowedDataset):
        self.norm = []
        for c in self.channels:
            vals = np.concatenate([dataset.inputs[:, c].ravel(), dataset.targets[:, c]])
            self.norm.append(zscore_fit(vals))

    def _normalized_windows(self, inputs):
        x = np.asarray(inputs, dtype=np.float64)[:, list(self.channels)]
        return np.stack([zscore_apply(x[:, j], s) for j, s in enumerate(self.norm)], axis=1)

    def normalized_targets(self, targets):
        t = np.asarray(targets, dtype=np.float64)[:, list(self.channels)]
        return np.stack([zscore_apply(t[:, j], s) for j, s in enumerate(self.norm)], axis=1)

    def _scalogram_channels(self, coeffs):
        if self.arch.scalogram_features == "complex":
            return [coeffs.real, coeffs.imag]
        return [np.abs(coeffs)]

    def features(self, inputs) -> np.ndarray:
        """Network input for raw (n, C, L) windows.

        LSTM: (n, L, 1). ConvLSTM models: (n, L, n_scales, 1, channels).
        """
        x = self._normalized_windows(inputs)
        if self.kind is ModelKind.LSTM_BASELINE:
            return x[:, 0, :, None]
        scales = self.wavelet.scales(self.window_len)
        coeffs = cwt_coefficients(x, self.wavelet, scales)  # (n, C, S, L)
        if self.kind is ModelKind.WCLSA:
            chans = self._scalogram_channels(coeffs[:, 0])
        else:
            coh, _ = coherence_from_coeffs(coeffs[:, 0], coeffs[:, 1], scales, self.smoothing)
            if self.arch.input_mode is InputMode.COHERENCE_ONLY:
                chans = [coh]
            else:
                chans = self._scalogram_channels(coeffs[:, 0]) + self._scalogram_channels(coeffs[:, 1]) + [coh]
        grid = np.stack(chans, axis=-1)  # (n, S, L, C)
        return np.ascontiguousarray(grid.transpose(0, 2, 1, 3)[:, :, :, None, :])

    # -- inference ------------------------------------------------------------------
    def predict_normalized(self, feats, batch_size=512) -> np.ndarray:
        out = []
        for start in range(0, len(feats), batch_size):
            pred, _ = self.net.forward(feats[start : start + batch_size])
            out.append(pred.data)
        return np.concatenate(out, axis=0) if out else np.zeros((0, len(self.channels)))

    def predict(self, inputs) -> np.ndarray:
        if self.norm is None:
            raise ConfigError("model has no normalization stats; fit it first")
        z = self.predict_normalized(self.features(inputs))
        return np.stack([zscore_invert(z[:, j], s) for j, s in enumerate(self.norm)], axis=1)

    def fit(self, dataset, cfg=None):
        from .training import TrainConfig, train

        return train(self, dataset, cfg or TrainConfig())

    def describe(self):
        return {
            **super().describe(),
            "window_len": self.window_len,
            "seed": self.seed,
            "architecture": self.arch.to_dict(),
            "wavelet": asdict(self.wavelet),
            "smoothing": asdict(self.smoothing),
            "norm": [asdict(s) for s in self.norm] if self.norm else None,
        }


# -- builders -------------------------------------------------------------------------------

def build_baseline_lstm(window_len=12, hidden_size=32, channel=0, seed=0) -> NeuralForecaster:
    if window_len < 2:
        raise ConfigError("window_len must be >= 2")
    arch = ArchitectureConfig(lstm_hidden=hidden_size, input_mode=InputMode.SCALOGRAM_SINGLE)
    return NeuralForecaster(ModelKind.LSTM_BASELINE, (channel,), window_len, arch, WaveletParams(), SmoothingParams(), seed)


def build_wclsa(arch: ArchitectureConfig | None = None, wavelet_params: WaveletParams | None = None,
                window_len=12, channel=0, seed=0) -> NeuralForecaster:
    arch = arch or ArchitectureConfig(input_mode=InputMode.SCALOGRAM_SINGLE)
    if arch.input_mode is not InputMode.SCALOGRAM_SINGLE:
        arch = ArchitectureConfig(**{**arch.to_dict(), "input_mode": InputMode.SCALOGRAM_SINGLE})
    return NeuralForecaster(ModelKind.WCLSA, (channel,), window_len, arch, wavelet_params or WaveletParams(),
                            SmoothingParams(), seed)


def build_wcoh_clsa(arch: ArchitectureConfig | None = None, wavelet_params: WaveletParams | None = None,
                    smoothing: SmoothingParams | None = None, window_len=12, seed=0) -> NeuralForecaster:
    arch = arch or ArchitectureConfig()
    if arch.input_mode is InputMode.SCALOGRAM_SINGLE:
        raise ConfigError("WCOH-CLSA needs COHERENCE_ONLY or COHERENCE_PLUS_SCALOGRAMS input")
    return NeuralForecaster(ModelKind.WCOH_CLSA, (0, 1), window_len, arch, wavelet_params or WaveletParams(),
                            smoothing or SmoothingParams(), seed)


@dataclass(frozen=True)
class ModelSpec:
    """Everything needed to build a fresh forecaster for one CV fold."""

    kind: ModelKind
    window_len: int = 12
    ar_order: int = 12
    arch: ArchitectureConfig = field(default_factory=ArchitectureConfig)
    wavelet: WaveletParams = field(default_factory=WaveletParams)
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind.parse(self.kind))

    @property
    def joint(self) -> bool:
        return self.kind.joint

    def build(self, channel=0, seed=0) -> ForecastModel:
        k = self.kind
        if k is ModelKind.AR_WRAP:
            return ARForecaster(channel, self.ar_order)
        if k is ModelKind.VAR_WRAP:
            return VARForecaster((0, 1), self.ar_order)
        if k is ModelKind.MEAN:
            return MeanForecaster((channel,))
        if k is ModelKind.LSTM_BASELINE:
            return build_baseline_lstm(self.window_len, self.arch.lstm_hidden, channel, seed)
        if k is ModelKind.WCLSA:
            return build_wclsa(self.arch, self.wavelet, self.window_len, channel, seed)
        return build_wcoh_clsa(self.arch, self.wavelet, self.smoothing, self.window_len, seed)

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "window_len": self.window_len,
            "ar_order": self.ar_order,
            "architecture": self.arch.to_dict(),
            "wavelet": asdict(self.wavelet),
            "smoothing": asdict(self.smoothing),
        }
