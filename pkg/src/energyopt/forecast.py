"""Base forecasters, the inverse-error weighted ensemble, rolling-origin
backtesting and bottom-up hierarchical aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import timedelta
from typing import Mapping, Protocol, Sequence

import numpy as np

from .timeseries import AccuracyReport, DataError, TimeSeries, score_arrays

DEFAULT_EPSILON = 1e-6


class ForecastModel(Protocol):
    name: str

    def fit(self, history: TimeSeries, exogenous: Mapping[str, TimeSeries] | None = None) -> "ForecastModel":
        ...

    def predict(self, horizon: int) -> TimeSeries:
        ...


def _future(history: TimeSeries, values: np.ndarray) -> TimeSeries:
    return TimeSeries(history.end, history.resolution, values, history.unit)


def _observed(history: TimeSeries) -> np.ndarray:
    vals = history.values
    if len(vals) == 0:
        raise DataError("history is empty")
    if np.isnan(vals).all():
        raise DataError("history has no observed values")
    return vals


class EmaModel:
    """Exponential moving average; the level starts at the first observation."""

    def __init__(self, alpha: float = 0.3) -> None:
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {alpha}")
        self.alpha = alpha
        self.name = f"ema({alpha:g})"
        self._history: TimeSeries | None = None
        self.level = math.nan

    def fit(self, history, exogenous=None):
        vals = _observed(history)
        level = math.nan
        for y in vals:
            if math.isnan(y):
                continue
            level = y if math.isnan(level) else self.alpha * y + (1.0 - self.alpha) * level
        self.level = level
        self._history = history
        return self

    def predict(self, horizon: int) -> TimeSeries:
        if self._history is None:
            raise RuntimeError("fit before predict")
        return _future(self._history, np.full(horizon, self.level))


class SeasonalNaiveModel:
    """Repeat the last observed season."""

    def __init__(self, season_length: int) -> None:
        if season_length < 1:
            raise ValueError("season_length must be >= 1")
        self.season_length = season_length
        self.name = f"seasonal_naive({season_length})"
        self._history: TimeSeries | None = None

    def fit(self, history, exogenous=None):
        _observed(history)
        if len(history) < self.season_length:
            raise DataError(
                f"seasonal naive needs {self.season_length} steps of history, got {len(history)}"
            )
        self._history = history
        return self

    def predict(self, horizon: int) -> TimeSeries:
        if self._history is None:
            raise RuntimeError("fit before predict")
        last = self._history.values[-self.season_length:]
        reps = -(-horizon // self.season_length)
        return _future(self._history, np.tile(last, reps)[:horizon])


class LinearArModel:
    """OLS autoregression on lagged values plus optional exogenous regressors,
    predicted recursively.

    Exogenous series must start with the history and extend at least
    ``horizon`` steps beyond it at prediction time.
    """

    def __init__(self, lags: int = 1, intercept: bool = True) -> None:
        if lags < 1:
            raise ValueError("lags must be >= 1")
        self.lags = lags
        self.intercept = intercept
        self.name = f"linear_ar({lags})"
        self.coef_: np.ndarray | None = None
        self.stderr_: np.ndarray | None = None
        self.columns_: list[str] = []
        self._history: TimeSeries | None = None
        self._exog: dict[str, np.ndarray] = {}

    def _design(self, y: np.ndarray, exog: dict[str, np.ndarray], rows: range) -> np.ndarray:
        cols = []
        if self.intercept:
            cols.append(np.ones(len(rows)))
        idx = np.fromiter(rows, dtype=int)
        for k in range(1, self.lags + 1):
            cols.append(y[idx - k])
        for name in exog:
            cols.append(exog[name][idx])
        return np.column_stack(cols)

    def fit(self, history, exogenous=None):
        y = _observed(history)
        if np.isnan(y).any():
            raise DataError("linear AR needs a gap-free history; fill gaps first")
        exog: dict[str, np.ndarray] = {}
        for name, s in (exogenous or {}).items():
            if s.start != history.start or s.resolution != history.resolution:
                raise DataError(f"exogenous series {name!r} is not aligned with the history")
            if len(s) < len(history):
                raise DataError(f"exogenous series {name!r} is shorter than the history")
            if np.isnan(s.values[: len(history)]).any():
                raise DataError(f"exogenous series {name!r} has missing values")
            exog[name] = np.asarray(s.values, float)
        n_params = self.lags + len(exog) + int(self.intercept)
        if len(y) <= n_params + 1 or len(y) <= self.lags + len(exog) + 1:
            raise DataError(
                f"history of {len(y)} steps is too short for {self.lags} lags and {len(exog)} regressors"
            )
        names = (["intercept"] if self.intercept else []) + [
            f"lag{k}" for k in range(1, self.lags + 1)
        ] + list(exog)
        X = self._design(y, exog, range(self.lags, len(y)))
        target = y[self.lags:]
        _check_rank(X, names)
        coef, *_ = np.linalg.lstsq(X, target, rcond=None)
        resid = target - X @ coef
        dof = max(len(target) - X.shape[1], 1)
        sigma2 = float(resid @ resid) / dof
        cov = sigma2 * np.linalg.inv(X.T @ X)
        self.coef_ = coef
        self.stderr_ = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        self.columns_ = names
        self._history = history
        self._exog = exog
        return self

    def coefficients(self) -> dict[str, float]:
        if self.coef_ is None:
            raise RuntimeError("fit first")
        return dict(zip(self.columns_, map(float, self.coef_)))

    def predict(self, horizon: int) -> TimeSeries:
        if self._history is None or self.coef_ is None:
            raise RuntimeError("fit before predict")
        n = len(self._history)
        for name, x in self._exog.items():
            if len(x) < n + horizon:
                raise DataError(f"exogenous series {name!r} does not cover the forecast horizon")
        buf = np.concatenate([self._history.values, np.zeros(horizon)])
        for h in range(horizon):
            t = n + h
            row = [1.0] if self.intercept else []
            row += [buf[t - k] for k in range(1, self.lags + 1)]
            row += [self._exog[name][t] for name in self._exog]
            buf[t] = float(np.dot(row, self.coef_))
        return _future(self._history, buf[n:])


def _check_rank(X: np.ndarray, names: list[str]) -> None:
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        bad = [names[j] for j in np.flatnonzero(norms == 0)]
        raise DataError(f"rank-deficient design matrix: all-zero column(s) {bad}")
    Xs = X / norms
    full = np.linalg.matrix_rank(Xs, tol=1e-10 * max(Xs.shape))
    if full == X.shape[1]:
        return
    collinear = []
    rank = 0
    for j in range(X.shape[1]):
        r = np.linalg.matrix_rank(Xs[:, : j + 1], tol=1e-10 * max(Xs.shape))
        if r == rank:
            collinear.append(names[j])
        rank = r
    raise DataError(
        f"rank-deficient design matrix: column(s) {collinear} are collinear with earlier columns"
    )


def ema_forecast(history: TimeSeries, alpha: float, horizon: int) -> TimeSeries:
    return EmaModel(alpha).fit(history).predict(horizon)


def seasonal_naive_forecast(history: TimeSeries, season_length: int, horizon: int) -> TimeSeries:
    return SeasonalNaiveModel(season_length).fit(history).predict(horizon)


def linear_ar_forecast(
    history: TimeSeries,
    lags: int,
    exogenous: Mapping[str, TimeSeries] | None,
    horizon: int,
) -> TimeSeries:
    return LinearArModel(lags).fit(history, exogenous).predict(horizon)


@dataclass(frozen=True)
class EnsembleWeights:
    names: tuple[str, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.names) != len(self.weights) or not self.names:
            raise ValueError("weights and model names must be non-empty and of equal length")
        w = np.asarray(self.weights, float)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        if abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {math.fsum(self.weights)!r}, not 1")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.weights))

    @classmethod
    def uniform(cls, names: Sequence[str]) -> "EnsembleWeights":
        return cls(tuple(names), tuple([1.0 / len(names)] * len(names)))


def update_weights(
    recent_errors: Mapping[str, float], epsilon: float = DEFAULT_EPSILON
) -> EnsembleWeights:
    """Inverse-error weights ``(e_m + eps)^-1 / sum_k (e_k + eps)^-1``.

    Models with no recent error (NaN) get the mean of the others' error, so a
    newly added model starts neutral rather than dominant.
    """
    if not recent_errors:
        raise ValueError("no models to weight")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    names = tuple(recent_errors)
    e = np.array([recent_errors[n] for n in names], float)
    if np.any(e < 0):
        raise ValueError("errors must be non-negative")
    if np.isnan(e).all():
        return EnsembleWeights.uniform(names)
    e = np.where(np.isnan(e), np.nanmean(e), e)
    inv = 1.0 / (e + epsilon)
    w = inv / inv.sum()
    # put the rounding residue on the largest weight so the sum is 1 to the ulp
    k = int(np.argmax(w))
    w[k] = 1.0 - math.fsum(np.delete(w, k))
    return EnsembleWeights(names, tuple(float(v) for v in w))


def combine(forecasts: Sequence[TimeSeries], weights: EnsembleWeights) -> TimeSeries:
    """Pointwise weighted sum of member forecasts."""
    if len(forecasts) != len(weights.weights):
        raise ValueError(f"{len(forecasts)} forecasts but {len(weights.weights)} weights")
    first = forecasts[0]
    for f in forecasts[1:]:
        if len(f) != len(first):
            raise DataError("member forecasts have different horizons")
    F = np.vstack([f.values for f in forecasts])
    w = np.asarray(weights.weights)
    out = w @ F
    # the exact weighted mean lies in the members' hull; clip rounding spill-over
    out = np.clip(out, F.min(axis=0), F.max(axis=0))
    return first.with_values(out)


def ensemble_forecast(
    models: Sequence[ForecastModel], weights: EnsembleWeights, horizon: int
) -> TimeSeries:
    return combine([m.predict(horizon) for m in models], weights)


@dataclass
class BacktestResult:
    report: AccuracyReport
    member_reports: dict[str, AccuracyReport]
    origins: list[int]
    weights: list[EnsembleWeights]
    forecast: TimeSeries
    member_forecasts: dict[str, TimeSeries]
    actual: TimeSeries

    def to_dict(self) -> dict:
        return {
            "report": self.report.to_dict(),
            "member_reports": {k: v.to_dict() for k, v in self.member_reports.items()},
            "weight_trajectory": [
                {"origin": o, "weights": w.as_dict()} for o, w in zip(self.origins, self.weights)
            ],
        }


def default_window(resolution: timedelta, days: float = 7.0) -> int:
    return int(round(timedelta(days=days) / resolution))


def backtest(
    models: ForecastModel | Sequence[ForecastModel],
    history: TimeSeries,
    window: int,
    horizon: int,
    *,
    initial: int | None = None,
    exogenous: Mapping[str, TimeSeries] | None = None,
    epsilon: float = DEFAULT_EPSILON,
) -> BacktestResult:
    """Rolling-origin evaluation of a weighted ensemble.

    Origins start at ``initial`` (default ``window``) and advance by
    ``horizon``. At each origin every member is refitted on data strictly
    before it, and the ensemble weights come from each member's MAE over the
    ``window`` most recent already-realised steps of its own earlier
    out-of-sample forecasts. The first fold uses uniform weights.
    """
    pool = [models] if hasattr(models, "predict") else list(models)
    if not pool:
        raise ValueError("empty model pool")
    names = [m.name for m in pool]
    if len(set(names)) != len(names):
        raise ValueError("model names must be unique")
    n = len(history)
    if window < 1 or horizon < 1:
        raise ValueError("window and horizon must be positive")
    if window > n:
        raise DataError(f"window {window} is larger than the history ({n} steps)")
    start = window if initial is None else initial
    if start < 1 or start + horizon > n:
        raise DataError("history too short for a single backtest fold")

    y = history.values
    M = len(pool)
    member_pred = np.full((M, n), np.nan)
    ens_pred = np.full(n, np.nan)
    origins: list[int] = []
    traj: list[EnsembleWeights] = []

    o = start
    while o + horizon <= n:
        lo = max(0, o - window)
        errs = {}
        for m, name in enumerate(names):
            e = np.abs(member_pred[m, lo:o] - y[lo:o])
            errs[name] = float(np.nanmean(e)) if np.isfinite(e).any() else math.nan
        w = update_weights(errs, epsilon)
        past = history.slice(0, o)
        # exogenous inputs are weather forecasts: known over the horizon, not targets
        fc = [m.fit(past, exogenous).predict(horizon) for m in pool]
        for m in range(M):
            member_pred[m, o:o + horizon] = fc[m].values
        ens_pred[o:o + horizon] = combine(fc, w).values
        origins.append(o)
        traj.append(w)
        o += horizon

    end = origins[-1] + horizon
    sl = slice(start, end)
    actual = history.slice(start, end)
    report = score_arrays(y[sl], ens_pred[sl])
    member_reports = {name: score_arrays(y[sl], member_pred[m, sl]) for m, name in enumerate(names)}
    return BacktestResult(
        report=report,
        member_reports=member_reports,
        origins=origins,
        weights=traj,
        forecast=actual.with_values(ens_pred[sl]),
        member_forecasts={name: actual.with_values(member_pred[m, sl]) for m, name in enumerate(names)},
        actual=actual,
    )


LEVELS = ("meter", "contract", "sector", "district", "portfolio")
ROOT = "portfolio"


@dataclass(frozen=True)
class Hierarchy:
    """Parent maps per level: ``parents["contract"]`` maps meter -> contract,
    ``parents["sector"]`` maps contract -> sector, and so on up to the single
    portfolio root."""

    parents: Mapping[str, Mapping[str, str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for level in LEVELS[1:]:
            if level not in self.parents:
                raise DataError(f"hierarchy lacks level {level!r}")
        roots = set(self.parents[ROOT].values())
        if len(roots) != 1:
            raise DataError(f"hierarchy must have one portfolio root, found {sorted(roots)}")
        for below, level in zip(LEVELS[1:], LEVELS[2:]):
            missing = set(self.parents[below].values()) - set(self.parents[level])
            if missing:
                raise DataError(f"{below} node(s) {sorted(missing)} have no {level} parent")

    @property
    def meters(self) -> list[str]:
        return sorted(self.parents["contract"])

    def nodes(self, level: str) -> list[str]:
        if level == "meter":
            return self.meters
        return sorted(set(self.parents[level].values()))

    def children(self, level: str) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for child, parent in self.parents[level].items():
            out.setdefault(parent, []).append(child)
        return {k: sorted(v) for k, v in sorted(out.items())}

    @classmethod
    def from_labels(cls, labels: Mapping[str, Mapping[str, str]]) -> "Hierarchy":
        """Build from per-meter ``{"contract", "sector", "district"}`` tags."""
        parents: dict[str, dict[str, str]] = {lvl: {} for lvl in LEVELS[1:]}
        for meter, tags in labels.items():
            chain = [meter] + [tags[lvl] for lvl in ("contract", "sector", "district")] + [ROOT]
            for level, child, parent in zip(LEVELS[1:], chain, chain[1:]):
                prev = parents[level].setdefault(child, parent)
                if prev != parent:
                    raise DataError(
                        f"{LEVELS[LEVELS.index(level) - 1]} {child!r} maps to both {prev!r} and {parent!r}"
                    )
        return cls(parents)


def _fsum_rows(stack: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(col) for col in stack.T])


def aggregate_bottom_up(
    forecasts: Mapping[str, TimeSeries], hierarchy: Hierarchy, level: str
) -> dict[str, TimeSeries]:
    """Sum meter forecasts up the hierarchy to ``level``.

    Each level is built from the level directly below with a correctly
    rounded sum, so every parent equals the sum of its children exactly.
    """
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    for meter in forecasts:
        if meter not in hierarchy.parents["contract"]:
            raise DataError(f"meter {meter!r} is not in the hierarchy")
    for meter in hierarchy.meters:
        if meter not in forecasts:
            raise DataError(f"no forecast for meter {meter!r}")
    current = {m: forecasts[m] for m in hierarchy.meters}
    first = next(iter(current.values()))
    for s in current.values():
        if not s.aligned_with(first):
            raise DataError("meter forecasts are not aligned")
    if level == "meter":
        return current
    for lvl in LEVELS[1:]:
        nxt = {}
        for parent, kids in hierarchy.children(lvl).items():
            nxt[parent] = first.with_values(_fsum_rows(np.vstack([current[k].values for k in kids])))
        current = nxt
        if lvl == level:
            break
    return current


def aggregate_all_levels(
    forecasts: Mapping[str, TimeSeries], hierarchy: Hierarchy
) -> dict[str, dict[str, TimeSeries]]:
    return {lvl: aggregate_bottom_up(forecasts, hierarchy, lvl) for lvl in LEVELS}
