"""Experiment configuration: one JSON document plus command-line overrides."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .coherence import SmoothingParams
from .errors import ConfigError
from .models import ArchitectureConfig, ModelKind, ModelSpec
from .signal import WindowConfig
from .synth import Regime, RegimeConfig
from .training import TrainConfig
from .wavelet import WaveletParams

ALL_MODELS = ("AR", "VAR", "LSTM", "WCLSA", "WCOH_CLSA")


@dataclass(frozen=True)
class CVSettings:
    k: int = 10
    purge_gap: int | None = None
    min_test_windows: int = 50

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError("cv.k must be >= 2")


@dataclass(frozen=True)
class ExperimentConfig:
    csv: str | None = None
    synthetic: RegimeConfig = field(default_factory=RegimeConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    wavelet: WaveletParams = field(default_factory=WaveletParams)
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)
    model: str = "WCLSA"
    models: tuple = ALL_MODELS
    regimes: tuple = tuple(r.value for r in Regime)
    ar_order: int = 12
    architecture: ArchitectureConfig = field(default_factory=ArchitectureConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    cv: CVSettings = field(default_factory=CVSettings)
    test_fraction: float = 0.2
    analyze_windows: tuple = (0,)
    output_dir: str = "out"
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(ModelKind.parse(m).value for m in self.models))
        object.__setattr__(self, "model", ModelKind.parse(self.model).value)
        object.__setattr__(self, "regimes", tuple(Regime(str(r).upper()).value for r in self.regimes))
        object.__setattr__(self, "analyze_windows", tuple(int(i) for i in self.analyze_windows))
        if not 0 < self.test_fraction < 1:
            raise ConfigError("test_fraction must lie in (0, 1)")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.window.horizon != 1:
            raise ConfigError("only one-step-ahead prediction (horizon = 1) is supported")

    def model_spec(self, kind=None) -> ModelSpec:
        return ModelSpec(
            kind or self.model,
            window_len=self.window.window_len,
            ar_order=self.ar_order,
            arch=self.architecture,
            wavelet=self.wavelet,
            smoothing=self.smoothing,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["synthetic"]["regime"] = self.synthetic.regime.value
        d["synthetic"]["band"] = list(self.synthetic.band)
        d["architecture"] = self.architecture.to_dict()
        d["models"] = list(self.models)
        d["regimes"] = list(self.regimes)
        d["analyze_windows"] = list(self.analyze_windows)
        return d

    def result_dict(self) -> dict:
        """Settings that can change results; excludes where output goes and how many workers run."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("jobs")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


_SECTIONS = {
    "synthetic": RegimeConfig,
    "window": WindowConfig,
    "wavelet": WaveletParams,
    "smoothing": SmoothingParams,
    "architecture": ArchitectureConfig,
    "train": TrainConfig,
    "cv": CVSettings,
}


def _build(cls, doc, where):
    if not isinstance(doc, dict):
        raise ConfigError(f"section '{where}' must be an object")
    names = {f.name for f in fields(cls)}
    unknown = set(doc) - names
    if unknown:
        raise ConfigError(f"unknown keys in '{where}': {sorted(unknown)}")
    try:
        return cls(**doc)
    except TypeError as exc:
        raise ConfigError(f"bad section '{where}': {exc}") from None


def from_dict(doc: dict) -> ExperimentConfig:
    doc = dict(doc)
    kwargs = {}
    for key, cls in _SECTIONS.items():
        if key in doc:
            kwargs[key] = _build(cls, doc.pop(key), key)
    top = {f.name for f in fields(ExperimentConfig)} - set(_SECTIONS)
    unknown = set(doc) - top
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    for key in ("models", "regimes", "analyze_windows"):
        if key in doc:
            doc[key] = tuple(doc[key])
    kwargs.update(doc)
    return ExperimentConfig(**kwargs)


def load(path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {p} does not exist")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON ({exc})") from None
    return from_dict(doc)


def apply_overrides(cfg: ExperimentConfig, *, seed=None, out=None, model=None, regime=None,
                    k_folds=None, jobs=None) -> ExperimentConfig:
    """Command-line flags win over the file, which wins over defaults."""
    if seed is not None:
        cfg = replace(cfg, synthetic=replace(cfg.synthetic, seed=seed), train=replace(cfg.train, seed=seed))
    if out is not None:
        cfg = replace(cfg, output_dir=str(out))
    if model is not None:
        kinds = [m.strip() for m in model.split(",") if m.strip()]
        cfg = replace(cfg, model=kinds[0], models=tuple(kinds))
    if regime is not None:
        regs = [r.strip() for r in regime.split(",") if r.strip()]
        cfg = replace(cfg, synthetic=replace(cfg.synthetic, regime=regs[0]), regimes=tuple(regs))
    if k_folds is not None:
        cfg = replace(cfg, cv=replace(cfg.cv, k=k_folds))
    if jobs is not None:
        cfg = replace(cfg, jobs=jobs)
    return cfg
