"""Dual-channel LFP forecasting toolkit."""
from .coherence import CoherenceMap, SmoothingParams, wcoh, wcoh_batch
from .cv import CVReport, audit_folds, cross_validate, purged_folds
from .errors import ConfigError, DegenerateDataError, LFPError
from .linear import fit_ar, fit_var, select_order
from .models import ArchitectureConfig, InputMode, ModelKind, ModelSpec, build_baseline_lstm, build_wclsa, build_wcoh_clsa
from .signal import TimeSeries, WindowConfig, make_windows, pearson_corr, r_squared, read_csv, write_csv
from .synth import Regime, RegimeConfig, generate
from .training import TrainConfig, evaluate, train
from .wavelet import Scalogram, WaveletParams, cwt

__version__ = "0.1.0"
