"""Autoregressive baselines: univariate AR and multichannel VAR fitted by OLS.

All fits go through a QR factorization of the lagged design matrix; the
normal equations are never formed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigError, InsufficientHistory, LengthMismatch, SeriesTooShort, SingularDesign

RANK_TOL = 1e-10


@dataclass(frozen=True)
class ARModel:
    order: int
    intercept: float
    coeffs: np.ndarray  # coeffs[k - 1] multiplies y[t - k]
    noise_variance: float

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64)
        if c.shape != (self.order,) or not np.all(np.isfinite(c)):
            raise ConfigError("AR coefficients must be a finite vector of length order")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True)
class VARModel:
    order: int
    intercepts: np.ndarray  # (K,)
    coef_matrices: np.ndarray  # (p, K, K); [k-1, i, j] maps channel j at lag k into channel i
    residual_cov: np.ndarray  # (K, K)

    def __post_init__(self):
        a = np.array(self.intercepts, dtype=np.float64)
        b = np.array(self.coef_matrices, dtype=np.float64)
        s = np.array(self.residual_cov, dtype=np.float64)
        k = a.size
        if b.shape != (self.order, k, k) or s.shape != (k, k):
            raise ConfigError("VAR parameter shapes are inconsistent")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(s))):
            raise ConfigError("VAR parameters must be finite")
        for arr in (a, b, s):
            arr.setflags(write=False)
        object.__setattr__(self, "intercepts", a)
        object.__setattr__(self, "coef_matrices", b)
        object.__setattr__(self, "residual_cov", s)

    @property
    def n_channels(self) -> int:
        return self.intercepts.size


# -- design matrices ---------------------------------------------------------------

def lag_design(data, p: int, start: int | None = None):
    """Regression rows for targets t = start..N-1.

    ``data`` is (K, N). Columns of X are [1, y[t-1] (K values), ..., y[t-p]].
    Returns (X, Y) with Y of shape (rows, K).
    """
    d = np.atleast_2d(np.asarray(data, dtype=np.float64))
    k, n = d.shape
    start = p if start is None else start
    if start < p:
        raise ConfigError("design start must be at least the lag order")
    rows = n - start
    if rows <= 0:
        raise SeriesTooShort("no rows left for the lagged design")
    cols = [np.ones(rows)]
    for lag in range(1, p + 1):
        cols.extend(d[:, start - lag : n - lag])
    return np.column_stack(cols), d[:, start:].T.copy()


def window_design(windows, p: int):
    """Design rows from (n, K, L) windows using the last ``p`` samples of each window."""
    w = np.asarray(windows, dtype=np.float64)
    if w.ndim == 2:
        w = w[:, None, :]
    n, k, length = w.shape
    if p > length:
        raise InsufficientHistory(f"lag order {p} exceeds window length {length}")
    cols = [np.ones((n, 1))]
    for lag in range(1, p + 1):
        cols.append(w[:, :, length - lag])
    return np.hstack(cols)


def ols(x, y):
    """Least squares via QR; returns (coefficients, residuals)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] <= x.shape[1]:
        raise SingularDesign(f"design has {x.shape[0]} rows for {x.shape[1]} parameters")
    q, r = np.linalg.qr(x, mode="reduced")
    diag = np.abs(np.diag(r))
    if diag.min() <= RANK_TOL * diag.max():
        raise SingularDesign("lagged design matrix is rank deficient")
    beta = solve_triangular(r, q.T @ y)
    return beta, y - x @ beta


# -- AR ---------------------------------------------------------------------------

def _ar_from_beta(beta, resid, p) -> ARModel:
    beta = np.ravel(beta)
    return ARModel(p, float(beta[0]), beta[1:], float(np.mean(resid**2)))


def fit_ar(series, p: int) -> ARModel:
    x = np.asarray(getattr(series, "values", series), dtype=np.float64).ravel()
    if p < 1:
        raise ConfigError("AR order must be >= 1")
    if x.size < 2 * p + 2:
        raise SeriesTooShort(f"AR({p}) needs at least {2 * p + 2} samples")
    design, target = lag_design(x, p)
    beta, resid = ols(design, target[:, 0])
    return _ar_from_beta(beta, resid, p)


def fit_ar_windows(windows, targets, p: int) -> ARModel:
    design = window_design(windows, p)
    beta, resid = ols(design, np.ravel(targets))
    return _ar_from_beta(beta, resid, p)


def predict_ar(model: ARModel, history) -> float:
    h = np.asarray(history, dtype=np.float64).ravel()
    if h.size < model.order:
        raise InsufficientHistory(f"AR({model.order}) needs {model.order} past samples, got {h.size}")
    lags = h[::-1][: model.order]  # lags[k-1] = y[t-k]
    return float(model.intercept + model.coeffs @ lags)


def predict_ar_batch(model: ARModel, windows) -> np.ndarray:
    return window_design(windows, model.order) @ np.concatenate([[model.intercept], model.coeffs])


# -- VAR ---------------------------------------------------------------------------

def _var_from_beta(beta, resid, p, k) -> VARModel:
    intercepts = beta[0]
    # beta rows 1 + (lag-1)*k + j, column i  ->  B[lag-1, i, j]
    mats = beta[1:].reshape(p, k, k).transpose(0, 2, 1)
    cov = resid.T @ resid / resid.shape[0]
    return VARModel(p, intercepts, mats, (cov + cov.T) / 2)


def _stack_pair(pair) -> np.ndarray:
    if isinstance(pair, np.ndarray) and pair.ndim == 2:
        return pair.astype(np.float64)
    chans = [np.asarray(getattr(c, "values", c), dtype=np.float64).ravel() for c in pair]
    if len({c.size for c in chans}) != 1:
        raise LengthMismatch("VAR channels differ in length")
    return np.stack(chans)


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, (list, tuple)):
        return _stack_pair(data)
    return np.atleast_2d(np.asarray(getattr(data, "values", data), dtype=np.float64))


def fit_var(pair, p: int) -> VARModel:
    d = _stack_pair(pair)
    if p < 1:
        raise ConfigError("VAR order must be >= 1")
    if d.shape[1] < 2 * p + 10:
        raise SeriesTooShort(f"VAR({p}) needs at least {2 * p + 10} samples")
    design, target = lag_design(d, p)
    beta, resid = ols(design, target)
    return _var_from_beta(beta, resid, p, d.shape[0])


def fit_var_windows(windows, targets, p: int) -> VARModel:
    design = window_design(windows, p)
    t = np.asarray(targets, dtype=np.float64)
    beta, resid = ols(design, t)
    return _var_from_beta(beta, resid, p, t.shape[1])


def _var_beta(model: VARModel) -> np.ndarray:
    k = model.n_channels
    mats = model.coef_matrices.transpose(0, 2, 1).reshape(model.order * k, k)
    return np.vstack([model.intercepts[None, :], mats])


def predict_var(model: VARModel, history) -> np.ndarray:
    h = np.atleast_2d(np.asarray(history, dtype=np.float64))
    if h.shape[0] != model.n_channels:
        raise LengthMismatch(f"history has {h.shape[0]} channels, model expects {model.n_channels}")
    if h.shape[1] < model.order:
        raise InsufficientHistory(f"VAR({model.order}) needs {model.order} past samples per channel")
    out = model.intercepts.copy()
    for lag in range(1, model.order + 1):
        out = out + model.coef_matrices[lag - 1] @ h[:, -lag]
    return out


def predict_var_batch(model: VARModel, windows) -> np.ndarray:
    return window_design(windows, model.order) @ _var_beta(model)


# -- order selection ---------------------------------------------------------------

def information_criteria(data, p_max: int, criterion: str = "aic") -> dict[int, float]:
    """Criterion value for every p in 1..p_max, all on the rows valid at p_max."""
    crit = criterion.lower()
    if crit not in ("aic", "bic"):
        raise ConfigError(f"criterion must be AIC or BIC, got {criterion!r}")
    if p_max < 1:
        raise ConfigError("p_max must be >= 1")
    d = _as_matrix(data)
    k = d.shape[0]
    out = {}
    for p in range(1, p_max + 1):
        design, target = lag_design(d, p, start=p_max)
        _, resid = ols(design, target)
        n_eff = resid.shape[0]
        cov = resid.T @ resid / n_eff
        sign, logdet = np.linalg.slogdet(cov)
        if sign <= 0:
            raise SingularDesign("residual covariance is not positive definite")
        n_params = k * (k * p + 1)
        penalty = 2.0 * n_params if crit == "aic" else n_params * np.log(n_eff)
        out[p] = float(n_eff * logdet + penalty)
    return out


def argmin_order(values: dict[int, float]) -> int:
    """Order with the smallest criterion; ties go to the smaller order."""
    best = None
    for p in sorted(values):
        if best is None or values[p] < values[best]:
            best = p
    return best


def select_order(data, p_max: int, criterion: str = "aic") -> int:
    return argmin_order(information_criteria(data, p_max, criterion))


# -- persistence -------------------------------------------------------------------

def model_to_json(model) -> str:
    if isinstance(model, ARModel):
        doc = {
            "kind": "AR",
            "order": model.order,
            "intercept": model.intercept,
            "coeffs": model.coeffs.tolist(),
            "noise_variance": model.noise_variance,
        }
    elif isinstance(model, VARModel):
        doc = {
            "kind": "VAR",
            "order": model.order,
            "intercepts": model.intercepts.tolist(),
            "coef_matrices": model.coef_matrices.tolist(),
            "residual_cov": model.residual_cov.tolist(),
        }
    else:
        raise ConfigError(f"cannot serialize {type(model).__name__}")
    return json.dumps(doc, indent=2)


def model_from_json(text: str):
    doc = json.loads(text)
    if doc.get("kind") == "AR":
        return ARModel(doc["order"], doc["intercept"], doc["coeffs"], doc["noise_variance"])
    if doc.get("kind") == "VAR":
        return VARModel(doc["order"], doc["intercepts"], doc["coef_matrices"], doc["residual_cov"])
    raise ConfigError(f"unknown linear model kind {doc.get('kind')!r}")
