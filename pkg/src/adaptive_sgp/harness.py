"""Prequential experiment driver: synthetic data generation, lag embedding,
streaming evaluation of every model kind, and metrics.

Each incoming sample is predicted before it is used for any update; the
first T samples only initialize the batch model and are excluded from the
metrics.
"""

import time
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import adaptive, agp, agp_vsi, fast_agp, vsgp, wvsgp
from .adaptive import AdaptiveState
from .errors import EmptyRecords, InvalidLambda, MapeUndefined, TooShort

MODEL_KINDS = ("fast_agp", "agp", "agp_vsi", "w_vsgp")


def named_rng(seed: int, name: str) -> np.random.Generator:
    """Independent, reproducible generator for one named consumer."""
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    )


def derive_seed(seed: int, name: str) -> int:
    return int(np.random.SeedSequence(
        [int(seed), zlib.crc32(name.encode())]).generate_state(1)[0])


@dataclass
class ExperimentConfig:
    model_kind: str = "agp"
    window_t: int = 100
    capacity_m: int = 10
    lam: float | str = "auto"          # "auto" => 0.1 ** (1/T)
    r_th: float = 1e-4
    init_iters: int = 200
    inner_iters: int = 50
    lr: float = 0.05
    seed: int = 0
    jitter: float = 1e-6
    literal_ci: bool = False           # audit flag: CI bound without sqrt

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS + ("persistence",):
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if self.capacity_m > self.window_t:
            raise ValueError("capacity_m must not exceed window_t")
        lam = self.resolved_lambda()
        if not 0.0 < lam <= 1.0:
            raise InvalidLambda(f"lambda {lam} outside (0, 1]")

    def resolved_lambda(self) -> float:
        if self.lam == "auto":
            return float(0.1 ** (1.0 / self.window_t))
        return float(self.lam)


@dataclass
class StreamRecord:
    step: int
    x: np.ndarray
    y_true: float
    pred_mean: float
    pred_var: float
    noise_var: float
    k_inducing: int
    elapsed_us: int


@dataclass
class MetricSummary:
    mse: float
    ci95_coverage: Optional[float]
    mape: Optional[float]
    total_time_us: int
    n_steps: int


def threshold_tot(state: AdaptiveState) -> float:
    """Inducing-addition threshold: weighted kernel-diagonal sum over the
    configured window length."""
    return state.w_ksum / state.window_t


def synth_toy(seed: int, grid: bool = False):
    """Non-stationary sinusoid: 500 samples on [0, 5].

    The first 300 samples (t in [0, 3]) follow sin(4t) with amplitude rising
    linearly from 0.5 to 2; the remaining 200 (t in (3, 5]) follow 2 sin(8t).
    Additive Gaussian noise with standard deviation 0.2 throughout.
    """
    rng = named_rng(seed, "data")
    if grid:
        t1 = np.linspace(0.0, 3.0, 300, endpoint=False)
        t2 = np.linspace(3.0, 5.0, 200, endpoint=False) + 2.0 / 200
    else:
        t1 = np.sort(rng.uniform(0.0, 3.0, 300))
        t2 = np.sort(rng.uniform(3.0, 5.0, 200))
    times = np.concatenate([t1, t2])
    targets = toy_signal(times) + rng.normal(0.0, 0.2, times.shape[0])
    return times, targets


def toy_signal(times: np.ndarray) -> np.ndarray:
    """Noise-free version of the toy target."""
    times = np.asarray(times, dtype=float)
    low = times <= 3.0
    amp = np.where(low, 0.5 + 1.5 * times / 3.0, 2.0)
    phase = np.where(low, 4.0 * times, 8.0 * times)
    return amp * np.sin(phase)


def lag_embed(series, lags: int, horizon: int):
    """Turn a scalar series into (X, y) with ``lags`` consecutive values as
    input and the value ``horizon`` steps past the last lag as target."""
    series = np.asarray(series, dtype=float).ravel()
    if horizon < 1:
        raise TooShort("horizon must be >= 1")
    n = series.shape[0]
    if n <= lags + horizon:
        raise TooShort(f"series of length {n} too short for lags={lags}, horizon={horizon}")
    rows = n - lags - horizon + 1
    X = np.stack([series[i:i + lags] for i in range(rows)])
    y = series[lags - 1 + horizon: lags - 1 + horizon + rows]
    return X, y


def _stream_fast_agp(config, state, X, y, records):
    for i in range(X.shape[0]):
        t0 = time.perf_counter_ns()
        _, pred = fast_agp.fast_agp_step(state, X[i], y[i], config.r_th)
        records.append(_record(i, X[i], y[i], pred, state, t0))


def _stream_agp(config, state, X, y, records):
    opt = agp.adam_params(lr=config.lr)
    for i in range(X.shape[0]):
        t0 = time.perf_counter_ns()
        _, _, pred = agp.agp_step(state, opt, X[i], y[i], config.r_th)
        records.append(_record(i, X[i], y[i], pred, state, t0))


def _stream_agp_vsi(config, state, model, X, y, records):
    q = agp_vsi.q_from_moments(model.q_mean, model.q_cov, config.jitter)
    opt = agp.adam_params(lr=config.lr)
    for i in range(X.shape[0]):
        t0 = time.perf_counter_ns()
        _, _, _, pred = agp_vsi.agp_vsi_step(state, q, opt, X[i], y[i],
                                             config.inner_iters)
        records.append(_record(i, X[i], y[i], pred, state, t0))


def _stream_wvsgp(config, model, wx, wy, X, y, records):
    opt = agp.adam_params(lr=config.lr)
    for i in range(X.shape[0]):
        t0 = time.perf_counter_ns()
        model, opt, wx, wy, pred = wvsgp.wvsgp_step(model, opt, wx, wy,
                                                    X[i], y[i],
                                                    config.inner_iters)
        rec = StreamRecord(step=i, x=X[i].copy(), y_true=float(y[i]),
                           pred_mean=pred.mean, pred_var=pred.var,
                           noise_var=float(np.exp(model.log_noise)),
                           k_inducing=model.inducing.shape[0],
                           elapsed_us=(time.perf_counter_ns() - t0) // 1000)
        records.append(rec)


def _record(i, x, y_true, pred, state, t0) -> StreamRecord:
    return StreamRecord(step=i, x=np.atleast_1d(np.asarray(x, dtype=float)).copy(),
                        y_true=float(y_true),
                        pred_mean=pred.mean, pred_var=pred.var,
                        noise_var=state.noise_var,
                        k_inducing=state.k_inducing,
                        elapsed_us=(time.perf_counter_ns() - t0) // 1000)


def run_experiment(config: ExperimentConfig, X_all, y_all):
    """Batch-initialize on the first T samples, stream the rest, score.

    Returns ``(records, summary)``.
    """
    X_all = np.asarray(X_all, dtype=float)
    if X_all.ndim == 1:
        X_all = X_all[:, None]
    y_all = np.asarray(y_all, dtype=float).ravel()
    T = config.window_t
    if y_all.shape[0] < T + 1:
        raise TooShort(f"need at least T+1={T + 1} samples, got {y_all.shape[0]}")

    model = vsgp.fit_batch(X_all[:T], y_all[:T], config.capacity_m,
                           config.init_iters,
                           seed=derive_seed(config.seed, "inducing"),
                           lr=config.lr, jitter=config.jitter)
    X_str, y_str = X_all[T:], y_all[T:]
    records: list[StreamRecord] = []
    lam = config.resolved_lambda()

    if config.model_kind == "w_vsgp":
        _stream_wvsgp(config, model, X_all[:T].copy(), y_all[:T].copy(),
                      X_str, y_str, records)
    else:
        state = adaptive.from_batch(model, X_all[:T], y_all[:T], lam,
                                    T, config.capacity_m)
        if config.model_kind == "fast_agp":
            _stream_fast_agp(config, state, X_str, y_str, records)
        elif config.model_kind == "agp":
            _stream_agp(config, state, X_str, y_str, records)
        elif config.model_kind == "agp_vsi":
            _stream_agp_vsi(config, state, model, X_str, y_str, records)
        else:
            raise ValueError(f"unsupported model kind {config.model_kind!r}")

    return records, summarize(records, literal_ci=config.literal_ci)


def mse(records) -> float:
    if not records:
        raise EmptyRecords("no records")
    errs = np.array([r.y_true - r.pred_mean for r in records])
    return float(np.mean(errs**2))


def mape(records) -> float:
    if not records:
        raise EmptyRecords("no records")
    y = np.array([r.y_true for r in records])
    if np.any(np.abs(y) <= 1e-9):
        raise MapeUndefined("some |y_true| below 1e-9")
    m = np.array([r.pred_mean for r in records])
    return float(np.mean(np.abs((y - m) / y)) * 100.0)


def ci95_coverage(records, literal: bool = False) -> float:
    """Percentage of samples whose error falls inside the 95% band.

    The band is 2*sqrt(pred_var + noise_var); ``literal=True`` uses the
    unsquare-rooted variance sum instead (audit flag)."""
    if not records:
        raise EmptyRecords("no records")
    err = np.abs(np.array([r.y_true - r.pred_mean for r in records]))
    tot = np.array([r.pred_var + r.noise_var for r in records])
    bound = 2.0 * tot if literal else 2.0 * np.sqrt(tot)
    return float(np.mean(err < bound) * 100.0)


def summarize(records, with_coverage: bool = True,
              literal_ci: bool = False) -> MetricSummary:
    try:
        mape_val = mape(records)
    except MapeUndefined:
        mape_val = None
    cov = None
    if with_coverage:
        cov = ci95_coverage(records, literal=literal_ci)
    return MetricSummary(
        mse=mse(records),
        ci95_coverage=cov,
        mape=mape_val,
        total_time_us=int(sum(r.elapsed_us for r in records)),
        n_steps=len(records),
    )


def persistence_baseline(series, horizon: int = 1):
    """Predict each value by the value ``horizon`` steps earlier."""
    series = np.asarray(series, dtype=float).ravel()
    if series.shape[0] <= horizon:
        raise TooShort("series shorter than horizon")
    records = []
    for i in range(horizon, series.shape[0]):
        records.append(StreamRecord(
            step=i - horizon, x=np.array([float(i)]),
            y_true=float(series[i]), pred_mean=float(series[i - horizon]),
            pred_var=float("nan"), noise_var=float("nan"),
            k_inducing=0, elapsed_us=0))
    return records


def transition_mse(records, lo: float = 3.2, hi: float = 3.4) -> float:
    """MSE restricted to records whose (1-D) input lies in [lo, hi]."""
    sel = [r for r in records if lo <= float(r.x[0]) <= hi]
    if not sel:
        raise EmptyRecords(f"no records with input in [{lo}, {hi}]")
    return mse(sel)
