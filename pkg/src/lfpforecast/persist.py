"""Save and reload fitted forecasters.

A neural model is two files: ``checkpoint.bin`` holds the parameters and
``model.json`` records what is needed to rebuild the network and its
normalization. Linear models are a single ``model.json``.
"""
from __future__ import annotations

import json
from pathlib import Path

from .coherence import SmoothingParams
from .errors import ConfigError
from .linear import model_from_json, model_to_json
from .models import ARForecaster, ArchitectureConfig, ModelKind, NeuralForecaster, VARForecaster
from .nn import checkpoint
from .signal import NormStats
from .wavelet import WaveletParams

CHECKPOINT = "checkpoint.bin"
SIDECAR = "model.json"


def save_model(model, directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    if isinstance(model, NeuralForecaster):
        if model.norm is None:
            raise ConfigError("refusing to save an unfitted neural model")
        checkpoint.save(d / CHECKPOINT, model.net.state_dict())
        (d / SIDECAR).write_text(json.dumps(model.describe(), indent=2, sort_keys=True))
        return [d / CHECKPOINT, d / SIDECAR]
    if isinstance(model, (ARForecaster, VARForecaster)):
        doc = {**model.describe(), "linear": json.loads(model_to_json(model.model))}
        (d / SIDECAR).write_text(json.dumps(doc, indent=2, sort_keys=True))
        return [d / SIDECAR]
    raise ConfigError(f"cannot persist {type(model).__name__}")


def load_model(directory):
    d = Path(directory)
    if not (d / SIDECAR).exists():
        raise ConfigError(f"{d} holds no {SIDECAR}")
    doc = json.loads((d / SIDECAR).read_text())
    kind = ModelKind.parse(doc["kind"])
    if kind is ModelKind.AR_WRAP:
        m = ARForecaster(doc["channels"][0], doc["order"])
        m.model = model_from_json(json.dumps(doc["linear"]))
        return m
    if kind is ModelKind.VAR_WRAP:
        m = VARForecaster(tuple(doc["channels"]), doc["order"])
        m.model = model_from_json(json.dumps(doc["linear"]))
        return m
    model = NeuralForecaster(
        kind,
        tuple(doc["channels"]),
        doc["window_len"],
        ArchitectureConfig(**doc["architecture"]),
        WaveletParams(**doc["wavelet"]),
        SmoothingParams(**doc["smoothing"]),
        doc["seed"],
    )
    model.net.load_state_dict(checkpoint.load(d / CHECKPOINT))
    model.norm = [NormStats(**s) for s in doc["norm"]]
    return model
