"""Time-series data model, CSV ingestion, resampling, gap filling, anomaly
flagging, meter filtering and the shared accuracy metrics."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class DataError(ValueError):
    """Bad or inconsistent input data."""


# Units that accumulate over an interval; everything else is treated as a rate
# or state and is averaged / held when resampling.
EXTENSIVE_UNITS = frozenset(
    {"Wh", "kWh", "MWh", "GWh", "kWh_gas", "m3", "g", "gCO2", "kg", "kgCO2", "£", "GBP"}
)

_MISSING = {"", "nan", "NaN", "NA", "null", "None"}


def parse_timestamp(text: str) -> datetime:
    """ISO 8601 to an aware UTC datetime; naive stamps are taken as UTC."""
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled series; value ``k`` belongs to ``start + k * resolution``.

    Missing entries are NaN. ``values`` is stored read-only.
    """

    start: datetime
    resolution: timedelta
    values: np.ndarray
    unit: str = ""

    def __post_init__(self) -> None:
        if self.resolution <= timedelta(0):
            raise DataError("resolution must be positive")
        start = self.start
        if start.tzinfo is None:
            start = start.replace(tzinfo=timezone.utc)
        object.__setattr__(self, "start", start.astimezone(timezone.utc))
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 1:
            raise DataError("values must be one-dimensional")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def hours(self) -> float:
        """Resolution in hours (the Δt used by the energy models)."""
        return self.resolution / timedelta(hours=1)

    @property
    def end(self) -> datetime:
        """Timestamp one step past the last value."""
        return self.start + len(self) * self.resolution

    def times(self) -> list[datetime]:
        return [self.start + k * self.resolution for k in range(len(self))]

    def with_values(self, values: Iterable[float], unit: str | None = None) -> "TimeSeries":
        return TimeSeries(self.start, self.resolution, np.asarray(values, float),
                          self.unit if unit is None else unit)

    def slice(self, i: int, j: int) -> "TimeSeries":
        return TimeSeries(self.start + i * self.resolution, self.resolution,
                          self.values[i:j], self.unit)

    def index_of(self, ts: datetime) -> int:
        offset = ts.astimezone(timezone.utc) - self.start
        k, rem = divmod(offset, self.resolution)
        if rem:
            raise DataError(f"{ts} is not on the series grid")
        return int(k)

    def aligned_with(self, other: "TimeSeries") -> bool:
        return (self.start == other.start and self.resolution == other.resolution
                and len(self) == len(other))

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)


def require_aligned(*series: TimeSeries) -> None:
    first = series[0]
    for s in series[1:]:
        if not first.aligned_with(s):
            raise DataError(
                f"series are not aligned: ({first.start}, {first.resolution}, n={len(first)}) vs "
                f"({s.start}, {s.resolution}, n={len(s)})"
            )


@dataclass(frozen=True)
class MeterRecord:
    meter_id: str
    series: TimeSeries
    labels: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class CsvSchema:
    """Column layout of an input CSV.

    ``value_columns=None`` takes every column other than the timestamp.
    ``labels`` maps a meter id (column name) to its contract/sector/district tags.
    """

    timestamp_column: str = "timestamp"
    value_columns: Sequence[str] | None = None
    unit: str = "kWh"
    labels: Mapping[str, Mapping[str, str]] = field(default_factory=dict)


def ingest_csv(path: str | Path, schema: CsvSchema = CsvSchema()) -> list[MeterRecord]:
    """Read a header-first CSV of ISO 8601 UTC timestamps and value columns."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if schema.timestamp_column not in header:
            raise DataError(f"{path}: header lacks timestamp column {schema.timestamp_column!r}")
        ts_col = header.index(schema.timestamp_column)
        columns = list(schema.value_columns) if schema.value_columns is not None else [
            h for h in header if h != schema.timestamp_column
        ]
        if not columns:
            raise DataError(f"{path}: no value columns")
        if len(set(columns)) != len(columns):
            raise DataError(f"{path}: duplicate meter ids in header")
        for col in columns:
            if col not in header:
                raise DataError(f"{path}: header lacks value column {col!r}")
        col_idx = [header.index(c) for c in columns]

        rows: list[tuple[datetime, list[float]]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
            try:
                ts = parse_timestamp(row[ts_col])
            except ValueError:
                raise DataError(f"{path}: row {lineno}: unparseable timestamp {row[ts_col]!r}") from None
            vals = []
            for c, j in zip(columns, col_idx):
                cell = row[j].strip()
                if cell in _MISSING:
                    vals.append(math.nan)
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: row {lineno}: unparseable value {cell!r} in column {c!r}"
                    ) from None
            rows.append((ts, vals))

    if not rows:
        raise DataError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    stamps = [r[0] for r in rows]
    for a, b in zip(stamps, stamps[1:]):
        if a == b:
            raise DataError(f"{path}: duplicate timestamp {format_timestamp(a)}")
    if len(stamps) == 1:
        raise DataError(f"{path}: a single row does not define a resolution")
    step = stamps[1] - stamps[0]
    for a, b in zip(stamps, stamps[1:]):
        if b - a != step:
            raise DataError(
                f"{path}: non-uniform spacing at {format_timestamp(a)} -> {format_timestamp(b)}; "
                "insert empty rows for missing steps or resample the file first"
            )
    data = np.array([r[1] for r in rows], dtype=float)
    return [
        MeterRecord(col, TimeSeries(stamps[0], step, data[:, k], schema.unit),
                    dict(schema.labels.get(col, {})))
        for k, col in enumerate(columns)
    ]


def read_series(path: str | Path, column: str, unit: str = "") -> TimeSeries:
    rec = ingest_csv(path, CsvSchema(value_columns=[column], unit=unit))
    return rec[0].series


def csv_text(series: Mapping[str, TimeSeries], float_format: str = "{:.6f}") -> str:
    """Aligned series as CSV text ``timestamp,<name>...``; NaN cells are left empty."""
    items = list(series.items())
    if not items:
        raise DataError("nothing to write")
    require_aligned(*[s for _, s in items])
    first = items[0][1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["timestamp", *[k for k, _ in items]])
    for k, ts in enumerate(first.times()):
        row = [format_timestamp(ts)]
        for _, s in items:
            v = s.values[k]
            row.append("" if math.isnan(v) else float_format.format(v))
        w.writerow(row)
    return buf.getvalue()


def write_csv(path: str | Path, series: Mapping[str, TimeSeries], float_format: str = "{:.6f}") -> None:
    Path(path).write_text(csv_text(series, float_format))


def resample(s: TimeSeries, target: timedelta) -> TimeSeries:
    """Change resolution by an integer factor.

    Extensive units (energy, mass, money) are summed when coarsening and split
    evenly when refining; everything else is averaged or held.
    """
    if target <= timedelta(0):
        raise DataError("target resolution must be positive")
    extensive = s.unit in EXTENSIVE_UNITS
    if target == s.resolution:
        return s
    if target > s.resolution:
        k, rem = divmod(target, s.resolution)
        if rem:
            raise DataError(f"{target} is not a multiple of {s.resolution}")
        if len(s) % k:
            raise DataError(f"series length {len(s)} is not a multiple of the factor {k}")
        groups = s.values.reshape(-1, k)
        vals = groups.sum(axis=1) if extensive else groups.mean(axis=1)
    else:
        k, rem = divmod(s.resolution, target)
        if rem:
            raise DataError(f"{target} does not divide {s.resolution}")
        vals = np.repeat(s.values / k if extensive else s.values, k)
    return TimeSeries(s.start, target, vals, s.unit)


def fill_gaps(s: TimeSeries, max_gap: int) -> tuple[TimeSeries, list[tuple[int, int]]]:
    """Linearly interpolate interior missing runs of length <= ``max_gap``.

    Returns the filled series and the ``(start_index, length)`` of every run
    left missing (too long, or touching either end of the series).
    """
    vals = s.values.copy()
    miss = np.isnan(vals)
    if miss.all():
        raise DataError("series has no observed values")
    unfilled: list[tuple[int, int]] = []
    n = len(vals)
    i = 0
    while i < n:
        if not miss[i]:
            i += 1
            continue
        j = i
        while j < n and miss[j]:
            j += 1
        length = j - i
        if i == 0 or j == n or length > max_gap:
            unfilled.append((i, length))
        else:
            left, right = vals[i - 1], vals[j]
            frac = np.arange(1, length + 1) / (length + 1)
            vals[i:j] = left + (right - left) * frac
        i = j
    return s.with_values(vals), unfilled


def detect_anomalies(s: TimeSeries, z_threshold: float, window: int = 49) -> list[int]:
    """Indices whose robust z-score against a centred rolling median exceeds the threshold.

    The scale is 1.4826 * MAD over the same window. Where the MAD is zero any
    non-zero deviation counts as anomalous.
    """
    vals = s.values
    if np.count_nonzero(~np.isnan(vals)) < 10:
        raise DataError("anomaly detection needs at least 10 observed values")
    if window < 3:
        raise DataError("window must be at least 3")
    if math.isinf(z_threshold) and z_threshold > 0:
        return []
    half = window // 2
    padded = np.concatenate([np.full(half, np.nan), vals, np.full(half, np.nan)])
    win = sliding_window_view(padded, 2 * half + 1)
    med = np.nanmedian(win, axis=1)
    mad = np.nanmedian(np.abs(win - med[:, None]), axis=1)
    dev = np.abs(vals - med)
    scale = 1.4826 * mad
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(scale > 0, dev / np.where(scale > 0, scale, 1.0),
                     np.where(dev > 0, np.inf, 0.0))
    flagged = (~np.isnan(vals)) & (z > z_threshold)
    return [int(i) for i in np.flatnonzero(flagged)]


def completeness(s: TimeSeries, window: tuple[datetime, datetime] | None = None) -> float:
    if window is None:
        seg = s.values
    else:
        lo, hi = window
        if lo < s.start or hi > s.end or hi <= lo:
            raise DataError("completeness window outside the data range")
        seg = s.values[s.index_of(lo):s.index_of(hi)]
    if len(seg) == 0:
        return 0.0
    return float(np.count_nonzero(~np.isnan(seg))) / len(seg)


def filter_meters(
    records: Sequence[MeterRecord],
    min_completeness: float = 0.8,
    window: tuple[datetime, datetime] | None = None,
) -> tuple[list[MeterRecord], list[MeterRecord]]:
    """Split meters into (kept, rejected); kept iff completeness >= threshold."""
    if not records:
        raise DataError("no meters to filter")
    ids = [r.meter_id for r in records]
    if len(set(ids)) != len(ids):
        raise DataError("meter ids must be unique")
    kept, rejected = [], []
    for r in records:
        (kept if completeness(r.series, window) >= min_completeness else rejected).append(r)
    return kept, rejected


@dataclass(frozen=True)
class AccuracyReport:
    """Error metrics; mape and smape are fractions (0.1 == 10 %).

    ``None`` marks an undefined metric (r2 with constant actuals, nmae with
    all-zero actuals, mape with no non-zero actuals).
    """

    mae: float
    mape: float | None
    rmse: float
    nmae: float | None
    smape: float
    r2: float | None
    n: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def score_arrays(actual: np.ndarray, predicted: np.ndarray) -> AccuracyReport:
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape:
        raise DataError(f"length mismatch: {a.shape[0]} actual vs {p.shape[0]} predicted")
    if a.size == 0:
        raise DataError("cannot score empty series")
    if np.isnan(a).any() or np.isnan(p).any():
        raise DataError("cannot score series with missing values; fill or drop them first")
    e = p - a
    mae = float(np.mean(np.abs(e)))
    rmse = float(math.sqrt(np.mean(e * e)))
    rmse = max(rmse, mae)  # guard against last-ulp rounding
    nz = a != 0
    with np.errstate(over="ignore"):
        mape = float(np.mean(np.abs(e[nz] / a[nz]))) if nz.any() else None
    mean_abs = float(np.mean(np.abs(a)))
    nmae = mae / mean_abs if mean_abs > 0 else None
    denom = np.abs(a) + np.abs(p)
    terms = np.divide(2.0 * np.abs(e), denom, out=np.zeros_like(denom), where=denom > 0)
    smape = float(np.mean(terms))
    # r2 is scale free; normalising first keeps tiny or huge series from under/overflowing.
    r2 = None
    if np.ptp(a) > 0:
        k = float(np.max(np.abs(a)))
        sst = float(np.sum((a / k - np.mean(a / k)) ** 2))
        r2 = 1.0 - float(np.sum((e / k) ** 2)) / sst if sst > 0 else None
    return AccuracyReport(mae, mape, rmse, nmae, smape, r2, int(a.size))


def score(actual: TimeSeries, predicted: TimeSeries) -> AccuracyReport:
    if len(actual) != len(predicted):
        raise DataError(f"length mismatch: {len(actual)} actual vs {len(predicted)} predicted")
    if actual.start != predicted.start or actual.resolution != predicted.resolution:
        raise DataError("actual and predicted timestamps are not aligned")
    return score_arrays(actual.values, predicted.values)


def hourly_index(s: TimeSeries) -> np.ndarray:
    """Fractional UTC hour of day for each step."""
    t0 = s.start
    base = t0.hour + t0.minute / 60 + t0.second / 3600
    return (base + np.arange(len(s)) * s.hours) % 24.0


def weekday_index(s: TimeSeries) -> np.ndarray:
    """UTC weekday (Mon=0) for each step."""
    return np.array([t.weekday() for t in s.times()], dtype=int)


def day_index(s: TimeSeries) -> np.ndarray:
    """Ordinal UTC calendar day of each step, relative to the first step's day."""
    d0 = s.start.date()
    return np.array([(t.date() - d0).days for t in s.times()], dtype=int)


def constant(start: datetime, resolution: timedelta, n: int, value: float, unit: str = "") -> TimeSeries:
    return TimeSeries(start, resolution, np.full(n, float(value)), unit)


def replace_unit(s: TimeSeries, unit: str) -> TimeSeries:
    return replace(s, unit=unit)
