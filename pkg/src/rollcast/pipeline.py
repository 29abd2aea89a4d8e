"""Decomposition-prediction hybrid forecaster.

The series is decomposed once (EMD or CEEMDAN), every component is split
chronologically, min-max scaled with its own training range, windowed into
lag rows and given its own SVR. Forecasts of the components are mapped
back to physical units and summed.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import decomp, pso, svr
from .decomp import CeemdanConfig, IMFDecomposition, SiftConfig
from .pso import SwarmConfig
from .svr import SVRHyperparams, SVRModel
from .wavesim import TimeSeries

logger = logging.getLogger(__name__)

CEEMDAN_PSO_SVM = "ceemdan_pso_svm"
EMD_PSO_SVM = "emd_pso_svm"
CEEMDAN_SVM = "ceemdan_svm"
METHODS = (CEEMDAN_PSO_SVM, EMD_PSO_SVM, CEEMDAN_SVM)

DEFAULT_TRAIN_COUNT = 661
BASELINE_HYPERPARAMS = SVRHyperparams(penalty=2.0**4, kernel_width=1.0, tube=0.01)


class DegenerateRangeError(ValueError):
    """Normalization of a constant series."""


class UndefinedSampleWarning(RuntimeWarning):
    """A percentage metric skipped samples where it is undefined."""


def canonical_method(name: str) -> str:
    m = name.strip().lower().replace("-", "_")
    if m not in METHODS:
        raise ValueError(f"unknown method {name!r}; expected one of {', '.join(METHODS)}")
    return m


def uses_ceemdan(method: str) -> bool:
    return method in (CEEMDAN_PSO_SVM, CEEMDAN_SVM)


def uses_pso(method: str) -> bool:
    return method in (CEEMDAN_PSO_SVM, EMD_PSO_SVM)


# ---------------------------------------------------------------- framing

@dataclass(frozen=True)
class WindowSpec:
    embedding: int = 10
    horizon: int = 1

    def __post_init__(self):
        if self.embedding < 1 or self.horizon < 1:
            raise ValueError("embedding and horizon must be >= 1")

    @property
    def span(self) -> int:
        """Samples needed before the first target: embedding + horizon - 1."""
        return self.embedding + self.horizon - 1


@dataclass(frozen=True)
class NormalizationParams:
    min: float
    max: float

    def __post_init__(self):
        if not self.max > self.min:
            raise DegenerateRangeError(f"max ({self.max}) must exceed min ({self.min})")

    def apply(self, values):
        return (np.asarray(values, dtype=float) - self.min) / (self.max - self.min)

    def invert(self, values):
        return np.asarray(values, dtype=float) * (self.max - self.min) + self.min


def normalization_params(values) -> NormalizationParams:
    v = np.asarray(values, dtype=float)
    return NormalizationParams(float(v.min()), float(v.max()))


def normalize(series: TimeSeries) -> tuple[TimeSeries, NormalizationParams]:
    """Min-max scale to [0, 1]."""
    if len(series) < 2:
        raise ValueError("normalize needs at least 2 samples")
    params = normalization_params(series.values)
    return TimeSeries(params.apply(series.values), series.dt, series.seed), params


def denormalize(series: TimeSeries, params: NormalizationParams) -> TimeSeries:
    return TimeSeries(params.invert(series.values), series.dt, series.seed)


def window_arrays(values: np.ndarray, spec: WindowSpec) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(values, dtype=float)
    count = v.size - spec.embedding - spec.horizon + 1
    if count < 1:
        raise ValueError(f"series of length {v.size} is too short for embedding "
                         f"{spec.embedding} and horizon {spec.horizon}")
    rows = np.lib.stride_tricks.sliding_window_view(v, spec.embedding)[:count].copy()
    targets = v[spec.span:spec.span + count].copy()
    return rows, targets


def make_windows(series: TimeSeries, spec: WindowSpec) -> tuple[np.ndarray, np.ndarray]:
    """Lag rows ``values[j:j+embedding]`` with target ``values[j+embedding+horizon-1]``."""
    return window_arrays(series.values, spec)


def split_train_test(series: TimeSeries, train_count: int = DEFAULT_TRAIN_COUNT
                     ) -> tuple[TimeSeries, TimeSeries]:
    if not 1 <= train_count < len(series):
        raise ValueError(f"train_count must be in [1, {len(series) - 1}], got {train_count}")
    v = series.values
    return (TimeSeries(v[:train_count], series.dt, series.seed),
            TimeSeries(v[train_count:], series.dt, series.seed))


# ---------------------------------------------------------------- metrics

@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mape: float  # percent
    mse: float
    rmse: float
    smape: float  # percent
    mape_excluded: int = 0
    smape_excluded: int = 0

    def as_row(self) -> tuple[float, float, float, float, float]:
        return self.mae, self.mape, self.mse, self.rmse, self.smape


def metrics(actual, predicted) -> MetricsReport:
    """MAE, MAPE (%), MSE, RMSE and SMAPE (%).

    Samples with |y| < 1e-12 are left out of MAPE, and samples with
    |y| + |y_hat| < 1e-12 out of SMAPE; both counts are reported and a
    :class:`UndefinedSampleWarning` is emitted.
    """
    y = np.asarray(getattr(actual, "values", actual), dtype=float)
    yh = np.asarray(getattr(predicted, "values", predicted), dtype=float)
    if y.shape != yh.shape or y.ndim != 1 or y.size < 1:
        raise ValueError("actual and predicted must be 1-D with equal nonzero length")
    err = y - yh
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err**2))
    rmse = float(np.sqrt(mse))

    ok = np.abs(y) >= 1e-12
    mape = float(100.0 * np.mean(np.abs(err[ok] / y[ok]))) if ok.any() else float("nan")
    denom = (np.abs(yh) + np.abs(y)) / 2.0
    ok_s = denom >= 0.5e-12
    smape = float(100.0 * np.mean(np.abs(err[ok_s]) / denom[ok_s])) if ok_s.any() else float("nan")
    n_mape, n_smape = int(y.size - ok.sum()), int(y.size - ok_s.sum())
    if n_mape:
        warnings.warn(f"MAPE undefined at {n_mape} sample(s) with zero actual value",
                      UndefinedSampleWarning, stacklevel=2)
    if n_smape:
        warnings.warn(f"SMAPE undefined at {n_smape} sample(s) with |y| + |y_hat| = 0",
                      UndefinedSampleWarning, stacklevel=2)
    return MetricsReport(mae, mape, mse, rmse, smape, n_mape, n_smape)


# ---------------------------------------------------------------- hybrid model

@dataclass(frozen=True)
class DecompositionSettings:
    sift: SiftConfig = field(default_factory=SiftConfig)
    noise_scale: float = 0.005
    ensemble_size: int = 100

    def ceemdan_config(self, seed: int) -> CeemdanConfig:
        return CeemdanConfig(self.noise_scale, self.ensemble_size, seed, self.sift)


def decompose(series: TimeSeries, method: str, settings: DecompositionSettings,
              seed: int) -> IMFDecomposition:
    if uses_ceemdan(method):
        return decomp.ceemdan(series, settings.ceemdan_config(seed))
    return decomp.emd(series, settings.sift)


@dataclass(frozen=True)
class ComponentModel:
    """Per-component record. ``svr_model`` is None for a constant bypass."""

    norm: Optional[NormalizationParams]
    svr_model: Optional[SVRModel]
    hyperparams: SVRHyperparams
    tuned: bool
    constant: Optional[float] = None
    cv_fitness: Optional[float] = None

    @property
    def is_constant(self) -> bool:
        return self.svr_model is None


@dataclass
class HybridModel:
    method: str
    window: WindowSpec
    train_count: int
    components: list[ComponentModel]
    decomposition: IMFDecomposition
    settings: DecompositionSettings
    seed: int
    tube: float = 0.01
    folds: int = 3

    @property
    def n_components(self) -> int:
        return len(self.components)

    def components_for(self, series: TimeSeries) -> np.ndarray:
        """Component matrix for ``series``: the stored snapshot when the series
        is the one the model was built from, else a fresh decomposition."""
        comps = self.decomposition.components()
        if comps.shape[1] == len(series) and np.max(np.abs(comps.sum(axis=0) - series.values)) <= 1e-9:
            return comps
        fresh = decompose(series, self.method, self.settings, self.seed).components()
        if fresh.shape[0] != self.n_components:
            raise ValueError(f"series decomposes into {fresh.shape[0]} components but the "
                             f"model has {self.n_components}")
        return fresh


Optimizer = Callable[[SwarmConfig, Callable], pso.SwarmResult]


def fit_component(values: np.ndarray, train_count: int, index: int, method: str,
                  window: WindowSpec, swarm: SwarmConfig, tube: float, folds: int,
                  baseline: SVRHyperparams, optimizer: Optimizer = pso.optimize,
                  tol: float = svr.TOLERANCE, max_iter: int = svr.MAX_ITER) -> ComponentModel:
    """Train the model for one component using only ``values[:train_count]``."""
    train = np.asarray(values[:train_count], dtype=float)
    lo, hi = float(train.min()), float(train.max())
    if not hi > lo:
        hp = replace(baseline, tube=tube)
        return ComponentModel(None, None, hp, False, constant=lo)
    norm = NormalizationParams(lo, hi)
    rows, targets = window_arrays(norm.apply(train), window)
    best = None
    if uses_pso(method):
        fitness = pso.CrossValidatedFitness(rows, targets, folds, tube, tol, max_iter)
        result = optimizer(replace(swarm, stream_key=(index,)), fitness)
        C, sigma = pso.decode(result.best_position)
        hp = SVRHyperparams(C, sigma, tube)
        best = result.best_fitness
        logger.info("component %d: C=%.4g sigma=%.4g cv-rmse=%.4g", index, C, sigma, best)
    else:
        hp = replace(baseline, tube=tube)
    model = svr.train(rows, targets, hp, tol, max_iter)
    return ComponentModel(norm, model, hp, uses_pso(method), cv_fitness=best)


def train_hybrid(series: TimeSeries, method: str = CEEMDAN_PSO_SVM,
                 window: WindowSpec = WindowSpec(), swarm: SwarmConfig = SwarmConfig(),
                 settings: DecompositionSettings = DecompositionSettings(),
                 train_count: int = DEFAULT_TRAIN_COUNT, seed: int = 0, tube: float = 0.01,
                 folds: int = 3, baseline: SVRHyperparams = BASELINE_HYPERPARAMS,
                 decomposition: Optional[IMFDecomposition] = None,
                 optimizer: Optimizer = pso.optimize, tol: float = svr.TOLERANCE,
                 max_iter: int = svr.MAX_ITER) -> HybridModel:
    """Decompose the whole series, then fit one regressor per component on
    the first ``train_count`` samples."""
    method = canonical_method(method)
    if not window.span < train_count < len(series):
        raise ValueError(f"train_count {train_count} must exceed the window span "
                         f"{window.span} and be below the series length {len(series)}")
    if decomposition is None:
        decomposition = decompose(series, method, settings, seed)
    comps = decomposition.components()
    swarm = replace(swarm, seed=seed)
    records = [fit_component(c, train_count, k, method, window, swarm, tube, folds, baseline,
                             optimizer, tol, max_iter)
               for k, c in enumerate(comps)]
    return HybridModel(method, window, train_count, records, decomposition, settings, seed,
                       tube, folds)


def forecast_components(model: HybridModel, series: TimeSeries,
                        eval_range: Optional[tuple[int, int]] = None) -> np.ndarray:
    """Per-component one-step forecasts in physical units, shape (components, targets).

    Each target t is predicted from the true component values
    ``[t - horizon - embedding + 1, t - horizon]``.
    """
    n = len(series)
    start, stop = eval_range if eval_range is not None else (model.train_count, n)
    if not model.window.span <= start < stop <= n:
        raise ValueError(f"eval range [{start}, {stop}) must lie within "
                         f"[{model.window.span}, {n}]")
    comps = model.components_for(series)
    first = start - model.window.span
    out = np.empty((model.n_components, stop - start))
    for k, (rec, values) in enumerate(zip(model.components, comps)):
        if rec.is_constant:
            out[k] = rec.constant
            continue
        rows, _ = window_arrays(rec.norm.apply(values[first:stop]), model.window)
        out[k] = rec.norm.invert(svr.predict_many(rec.svr_model, rows))
    return out


def forecast(model: HybridModel, series: TimeSeries,
             eval_range: Optional[tuple[int, int]] = None) -> TimeSeries:
    """Sum of the component forecasts over ``eval_range`` (default: the test split)."""
    return TimeSeries(forecast_components(model, series, eval_range).sum(axis=0), series.dt,
                      series.seed)


# ---------------------------------------------------------------- comparison

@dataclass
class MethodRun:
    method: str
    model: HybridModel
    actual: np.ndarray
    predicted: np.ndarray
    times: np.ndarray
    report: MetricsReport


@dataclass
class Comparison:
    runs: dict[str, MethodRun]

    @property
    def reports(self) -> dict[str, MetricsReport]:
        return {m: r.report for m, r in self.runs.items()}

    def improvements(self, ours: str = CEEMDAN_PSO_SVM) -> dict[str, float]:
        """Relative MAE gain of ``ours`` over each other method, as a fraction."""
        return {m: mae_improvement(self.runs[ours].report.mae, r.report.mae)
                for m, r in self.runs.items() if m != ours}


def mae_improvement(mae_ours: float, mae_other: float) -> float:
    return (mae_other - mae_ours) / mae_other


def evaluate_method(series: TimeSeries, method: str, train_count: int = DEFAULT_TRAIN_COUNT,
                    decomposition: Optional[IMFDecomposition] = None, **kwargs) -> MethodRun:
    model = train_hybrid(series, method, train_count=train_count,
                         decomposition=decomposition, **kwargs)
    pred = forecast(model, series).values
    actual = series.values[train_count:]
    times = series.times[train_count:]
    return MethodRun(model.method, model, actual, pred, times, metrics(actual, pred))


def compare(series: TimeSeries, window: WindowSpec = WindowSpec(),
            swarm: SwarmConfig = SwarmConfig(),
            settings: DecompositionSettings = DecompositionSettings(), seed: int = 0,
            train_count: int = DEFAULT_TRAIN_COUNT, tube: float = 0.01, folds: int = 3,
            baseline: SVRHyperparams = BASELINE_HYPERPARAMS,
            methods=METHODS, tol: float = svr.TOLERANCE,
            max_iter: int = svr.MAX_ITER) -> Comparison:
    """Train and score every method on the same split and seed."""
    methods = [canonical_method(m) for m in methods]
    cached: dict[str, IMFDecomposition] = {}
    runs = {}
    for m in methods:
        kind = decomp.CEEMDAN if uses_ceemdan(m) else decomp.EMD
        if kind not in cached:
            cached[kind] = decompose(series, m, settings, seed)
        runs[m] = evaluate_method(series, m, train_count, cached[kind], window=window,
                                  swarm=swarm, settings=settings, seed=seed, tube=tube,
                                  folds=folds, baseline=baseline, tol=tol, max_iter=max_iter)
        logger.info("%s: MAE %.5g", m, runs[m].report.mae)
    return Comparison(runs)
