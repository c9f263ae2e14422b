"""Hourly load forecasting with calendar/temperature features and
training-data integrity attacks.

The regression design is the classic multiple-linear-regression load model:
a linear trend, hour/weekday/month one-hots, all hour-by-weekday
interactions, a cubic temperature polynomial, and the polynomial's
interactions with hour and month.  Reference levels of every categorical
block are dropped, which leaves exactly 285 columns on coverage-complete
data; continuous inputs are min-max normalized with bounds computed on the
training split and reused verbatim on the test split.

Attacks multiply a seeded random subset of training loads by percentage
factors; test data is never touched, so MAPE comparisons isolate how much
the fitted coefficients were poisoned.
"""

import csv
from dataclasses import dataclass
from datetime import datetime
from typing import Optional, Tuple

import numpy as np

from .baselines import BaselineConfig, fit_lad, fit_ols
from .sarm import SarmConfig, sarm_fit
from .simgen import InvalidSpec
from .tssarm import TssarmConfig, tssarm_fit

ATTACK_KINDS = ("PosUniform", "PosGaussian", "NegUniform")
FORECAST_METHODS = ("MLR", "SARM", "TSSARM")


class ParseError(ValueError):
    """A CSV row failed to parse; .row is the 1-based line number."""

    def __init__(self, row, message):
        super().__init__(f"row {row}: {message}")
        self.row = row


class NonMonotoneTimestamps(ValueError):
    """Timestamps must be strictly increasing."""


class MissingColumn(ValueError):
    """The CSV header lacks a required column."""


class InsufficientCoverage(ValueError):
    """A categorical level or continuous spread needed by the feature
    schema is absent from the data."""


class ZeroActual(ValueError):
    """MAPE is undefined when an actual value is zero."""


@dataclass
class LoadTable:
    """Hourly records: timestamps (datetime64[s]), loads (MW), temperatures."""

    timestamps: np.ndarray
    loads: np.ndarray
    temperatures: np.ndarray

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype="datetime64[s]")
        self.loads = np.asarray(self.loads, dtype=float)
        self.temperatures = np.asarray(self.temperatures, dtype=float)
        n = self.timestamps.shape[0]
        if self.loads.shape[0] != n or self.temperatures.shape[0] != n:
            raise ValueError("timestamps, loads, temperatures must align")
        if n > 1 and not np.all(np.diff(self.timestamps).astype("int64") > 0):
            raise NonMonotoneTimestamps("timestamps must be strictly increasing")
        if np.any(self.loads <= 0):
            raise ValueError("loads must be positive")

    def __len__(self):
        return int(self.timestamps.shape[0])

    def copy(self):
        return LoadTable(self.timestamps.copy(), self.loads.copy(),
                         self.temperatures.copy())

    def restrict(self, index):
        return LoadTable(self.timestamps[index], self.loads[index],
                         self.temperatures[index])

    def years(self):
        return self.timestamps.astype("datetime64[Y]").astype(int) + 1970


@dataclass
class AttackSpec:
    """Multiplicative tampering of a fraction of load values.

    fraction_k is the percentage of rows to corrupt.  params is (a, b) for
    the uniform kinds (percent bounds) or (mu, sigma) for PosGaussian
    (percent mean and spread).  target must stay "train": the scenario is
    poisoning of the fitting data, not of the evaluation data.
    """

    kind: str
    fraction_k: float
    params: Tuple[float, float] = (20.0, 50.0)
    seed: int = 0
    target: str = "train"

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise InvalidSpec(f"unknown attack kind {self.kind!r}")
        if not 0 <= self.fraction_k <= 100:
            raise InvalidSpec(f"fraction_k must be in [0, 100], got {self.fraction_k}")
        if len(self.params) != 2:
            raise InvalidSpec("params must be a pair")
        if self.kind in ("PosUniform", "NegUniform") and self.params[0] > self.params[1]:
            raise InvalidSpec(f"uniform bounds out of order: {self.params}")
        if self.kind == "PosGaussian" and self.params[1] < 0:
            raise InvalidSpec(f"gaussian spread must be >= 0, got {self.params[1]}")


DEFAULT_POS_UNIFORM = (20.0, 50.0)
DEFAULT_POS_GAUSSIAN = (30.0, 10.0)


@dataclass
class FeatureSchema:
    """Everything needed to rebuild the training design on new data:
    retained column names, min-max bounds, and the trend epoch."""

    column_names: list
    t_bounds: Tuple[float, float]
    trend_bounds: Tuple[float, float]
    trend_epoch: np.datetime64

    @property
    def n_columns(self):
        return len(self.column_names)


def ingest_csv(path):
    """Read a load table from CSV with header timestamp,load,temperature.

    Timestamps are ISO-8601 at hour resolution (T or space separator).
    Raises ParseError with the offending 1-based row number, MissingColumn
    for header problems, NonMonotoneTimestamps for out-of-order rows.
    """
    stamps, loads, temps = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn("empty file: no header") from None
        header = [h.strip() for h in header]
        for required in ("timestamp", "load", "temperature"):
            if required not in header:
                raise MissingColumn(f"header lacks {required!r}: {header}")
        idx = {name: header.index(name) for name in ("timestamp", "load", "temperature")}
        for rownum, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise ParseError(rownum, f"expected {len(header)} fields, got {len(row)}")
            raw_ts = row[idx["timestamp"]].strip()
            try:
                ts = datetime.fromisoformat(raw_ts)
            except ValueError:
                raise ParseError(rownum, f"bad timestamp {raw_ts!r}") from None
            try:
                load = float(row[idx["load"]])
                temp = float(row[idx["temperature"]])
            except ValueError:
                raise ParseError(rownum, f"bad numeric field in {row!r}") from None
            if load <= 0:
                raise ParseError(rownum, f"load must be positive, got {load}")
            stamps.append(np.datetime64(ts, "s"))
            loads.append(load)
            temps.append(temp)
    if not stamps:
        raise MissingColumn("no data rows")
    ts = np.array(stamps, dtype="datetime64[s]")
    if ts.shape[0] > 1 and not np.all(np.diff(ts).astype("int64") > 0):
        bad = int(np.argmin(np.diff(ts).astype("int64"))) + 2
        raise NonMonotoneTimestamps(f"timestamps not strictly increasing near row {bad}")
    return LoadTable(ts, np.array(loads), np.array(temps))


def write_csv(table, path):
    """Write a LoadTable in the same format ingest_csv reads."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "load", "temperature"])
        for ts, load, temp in zip(table.timestamps, table.loads, table.temperatures):
            writer.writerow([np.datetime_as_string(ts, unit="s"),
                             repr(float(load)), repr(float(temp))])


def _calendar(ts):
    hours = ts.astype("datetime64[h]").astype("int64") % 24
    days = ts.astype("datetime64[D]").astype("int64")
    weekdays = (days + 3) % 7
    months = ts.astype("datetime64[M]").astype("int64") % 12 + 1
    return hours, weekdays, months


def build_features(table, schema=None):
    """Construct the 285-column design and the response vector.

    With schema=None the normalization bounds and trend epoch come from the
    table itself and full categorical coverage (24 hours, 7 weekdays, 12
    months) plus nonconstant temperature is required.  Passing a training
    schema reuses its bounds and epoch so train/test encodings agree.
    """
    n = len(table)
    hours, weekdays, months = _calendar(table.timestamps)
    trend = (table.timestamps - (schema.trend_epoch if schema is not None
                                 else table.timestamps[0])
             ).astype("timedelta64[s]").astype("int64") / 3600.0
    temp = table.temperatures
    if schema is None:
        if set(np.unique(hours)) != set(range(24)):
            raise InsufficientCoverage("need all 24 hours present")
        if set(np.unique(weekdays)) != set(range(7)):
            raise InsufficientCoverage("need all 7 weekdays present")
        if set(np.unique(months)) != set(range(1, 13)):
            raise InsufficientCoverage("need all 12 months present")
        t_bounds = (float(temp.min()), float(temp.max()))
        if t_bounds[0] == t_bounds[1]:
            raise InsufficientCoverage("temperature is constant")
        trend_bounds = (float(trend.min()), float(trend.max()))
        if trend_bounds[0] == trend_bounds[1]:
            raise InsufficientCoverage("need more than one timestamp")
        epoch = table.timestamps[0]
    else:
        t_bounds = schema.t_bounds
        trend_bounds = schema.trend_bounds
        epoch = schema.trend_epoch

    T = (temp - t_bounds[0]) / (t_bounds[1] - t_bounds[0])
    tr = (trend - trend_bounds[0]) / (trend_bounds[1] - trend_bounds[0])

    H = np.zeros((n, 24))
    H[np.arange(n), hours] = 1.0
    W = np.zeros((n, 7))
    W[np.arange(n), weekdays] = 1.0
    M = np.zeros((n, 12))
    M[np.arange(n), months - 1] = 1.0

    cols = [np.ones(n), tr]
    names = ["intercept", "trend"]
    for h in range(1, 24):
        cols.append(H[:, h])
        names.append(f"hour_{h:02d}")
    for w in range(1, 7):
        cols.append(W[:, w])
        names.append(f"wday_{w}")
    for m in range(2, 13):
        cols.append(M[:, m - 1])
        names.append(f"month_{m:02d}")
    for h in range(1, 24):
        for w in range(1, 7):
            cols.append(H[:, h] * W[:, w])
            names.append(f"hour_{h:02d}:wday_{w}")
    for k in (1, 2, 3):
        cols.append(T ** k)
        names.append(f"T^{k}")
    for k in (1, 2, 3):
        for h in range(1, 24):
            cols.append((T ** k) * H[:, h])
            names.append(f"T^{k}:hour_{h:02d}")
    for k in (1, 2, 3):
        for m in range(2, 13):
            cols.append((T ** k) * M[:, m - 1])
            names.append(f"T^{k}:month_{m:02d}")

    X = np.column_stack(cols)
    out_schema = schema if schema is not None else FeatureSchema(
        column_names=names, t_bounds=t_bounds, trend_bounds=trend_bounds,
        trend_epoch=epoch)
    return X, table.loads.copy(), out_schema


def apply_attack(table, spec):
    """Multiply k% of load values (seeded, without replacement) by the
    attack factors.  Returns (attacked table, sorted row indices).

    PosUniform/NegUniform draw percents from U(a, b); PosGaussian from
    N(mu, sigma**2).  Factors are floored at a tiny positive value so loads
    stay positive even under extreme negative draws.
    """
    if not isinstance(spec, AttackSpec):
        raise InvalidSpec(f"expected AttackSpec, got {type(spec).__name__}")
    n = len(table)
    k = int(round(spec.fraction_k / 100.0 * n))
    attacked = table.copy()
    rng = np.random.default_rng(spec.seed)
    rows = rng.choice(n, size=k, replace=False)
    if k:
        a, b = spec.params
        if spec.kind == "PosUniform":
            factors = 1.0 + rng.uniform(a, b, k) / 100.0
        elif spec.kind == "PosGaussian":
            factors = 1.0 + rng.normal(a, b, k) / 100.0
        else:
            factors = 1.0 - rng.uniform(a, b, k) / 100.0
        factors = np.maximum(factors, 1e-6)
        attacked.loads[rows] = attacked.loads[rows] * factors
    return attacked, np.sort(rows)


def mape(y_true, y_pred):
    """Mean absolute percentage error, in percent."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"shape mismatch: {y_true.shape} vs {y_pred.shape}")
    if np.any(y_true == 0):
        raise ZeroActual("actual values contain zero")
    return float(np.mean(np.abs(y_true - y_pred) / np.abs(y_true)) * 100.0)


@dataclass
class ForecastReport:
    """Outcome of one train/fit/evaluate pass."""

    method: str
    mape: float
    attacked: bool
    attack_kind: Optional[str]
    sigma_hat: Optional[float]
    n_features: int
    train_rows: int
    test_rows: int


def estimate_noise_sigma(X, y):
    """Robust inlier noise scale for the regularized fits.

    Fits an absolute-deviation regression (insensitive to a large fraction
    of inflated loads) and returns 1.4826 times the median absolute
    deviation of its residuals.  A plain least-squares residual scale would
    be inflated by the very corruption the robust fit is supposed to
    reject, which in turn would push the shrinkage threshold above most
    attack magnitudes.
    """
    cfg = BaselineConfig(lad_max_iter=60, lad_tol=1e-8)
    w = fit_lad(X, y, cfg)
    res = y - X @ w
    return float(1.4826 * np.median(np.abs(res - np.median(res))))


def run_forecast_experiment(train, test, attack=None, method="TSSARM",
                            delta_multiplier=6.0):
    """Attack the training loads (optionally), fit, and score on clean test.

    The feature schema (bounds, epoch, retained columns) always comes from
    the training table; the test design is built against it.  SARM/TSSARM
    use delta = delta_multiplier * sigma_hat**2 with sigma_hat from
    estimate_noise_sigma on the (possibly attacked) training data.
    """
    if method not in FORECAST_METHODS:
        raise ValueError(f"method must be one of {FORECAST_METHODS}, got {method!r}")
    if attack is not None:
        if attack.target != "train":
            raise InvalidSpec("attacks target the training split only")
        train_used, _ = apply_attack(train, attack)
    else:
        train_used = train
    X_tr, y_tr, schema = build_features(train_used)
    X_te, y_te, _ = build_features(test, schema)
    sigma_hat = None
    if method == "MLR":
        w = fit_ols(X_tr, y_tr)
    else:
        sigma_hat = estimate_noise_sigma(X_tr, y_tr)
        delta = delta_multiplier * sigma_hat ** 2
        if method == "SARM":
            w = sarm_fit(X_tr, y_tr, SarmConfig(delta=delta)).w_hat
        else:
            w = tssarm_fit(X_tr, y_tr, TssarmConfig(base=SarmConfig(delta=delta))).w_hat
    return ForecastReport(
        method=method,
        mape=mape(y_te, X_te @ w),
        attacked=attack is not None,
        attack_kind=attack.kind if attack is not None else None,
        sigma_hat=sigma_hat,
        n_features=X_tr.shape[1],
        train_rows=len(train_used),
        test_rows=len(test),
    )


def synthetic_load_table(start_year=2013, years=3, seed=11):
    """Generate hourly load/temperature data from a known ground truth.

    Temperature follows an annual plus diurnal cycle with Gaussian jitter;
    load combines a slow trend, daily and twice-daily harmonics, a weekend
    drop, an annual cycle, a quadratic-plus-cubic comfort-zone temperature
    response, and Gaussian noise.  The construction intentionally exercises
    every feature block the regression model contains.
    """
    rng = np.random.default_rng(seed)
    start = np.datetime64(f"{start_year}-01-01T00:00:00", "s")
    raw = start + np.arange(int(365.25 * years) * 24) * np.timedelta64(3600, "s")
    keep = (raw.astype("datetime64[Y]").astype(int) + 1970) < start_year + years
    ts = raw[keep]
    n = ts.shape[0]
    hours, weekdays, months = _calendar(ts)
    doy = (ts.astype("datetime64[D]") - ts.astype("datetime64[Y]")
           ).astype("int64") + 1
    temp = (11.0 - 13.0 * np.cos(2 * np.pi * (doy - 15) / 365.25)
            + 4.5 * np.sin(2 * np.pi * (hours - 9) / 24.0)
            + rng.normal(0, 2.0, n))
    hour_shape = (120.0 * np.sin(2 * np.pi * (hours - 7) / 24.0)
                  + 60.0 * np.sin(4 * np.pi * (hours - 2) / 24.0))
    weekend = np.isin(weekdays, (5, 6)) * -110.0
    month_shape = 45.0 * np.cos(2 * np.pi * (months - 1) / 12.0)
    comfort = 18.0
    load = (950.0 + 0.004 * np.arange(n) + hour_shape + weekend + month_shape
            + 2.1 * (temp - comfort) ** 2
            + 0.09 * np.maximum(temp - comfort, 0) ** 3
            + rng.normal(0, 28.0, n))
    return LoadTable(ts, load, temp)


def year_split(table, first_test_year):
    """Split a table into (train, test) at a calendar year boundary."""
    years = table.years()
    train_idx = years < first_test_year
    test_idx = years >= first_test_year
    if not np.any(train_idx) or not np.any(test_idx):
        raise ValueError(f"split year {first_test_year} leaves an empty side")
    return table.restrict(train_idx), table.restrict(test_idx)
