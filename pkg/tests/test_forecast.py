import math
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from energyopt.forecast import (
    LEVELS,
    EmaModel,
    EnsembleWeights,
    Hierarchy,
    LinearArModel,
    SeasonalNaiveModel,
    aggregate_all_levels,
    aggregate_bottom_up,
    backtest,
    combine,
    ema_forecast,
    ensemble_forecast,
    linear_ar_forecast,
    seasonal_naive_forecast,
    update_weights,
)
from energyopt.synthetic import regime_switch_series
from energyopt.timeseries import DataError, TimeSeries, score

T0 = datetime(2024, 1, 8, tzinfo=timezone.utc)
H = timedelta(hours=1)


def ts(values, unit="kWh"):
    return TimeSeries(T0, H, np.asarray(values, dtype=float), unit)


class _Oracle:
    """A model that knows the series it is evaluated on."""

    name = "oracle"

    def __init__(self, truth):
        self.truth = truth

    def fit(self, history, exogenous=None):
        self._n = len(history)
        self._h = history
        return self

    def predict(self, horizon):
        return TimeSeries(self._h.end, H, self.truth[self._n:self._n + horizon], "kWh")


# -- base models --------------------------------------------------------------

def test_ema_examples():
    np.testing.assert_array_equal(ema_forecast(ts([5, 5, 5]), 0.3, 4).values, [5] * 4)
    # level: 0 -> 0.5*10 + 0.5*0 = 5
    np.testing.assert_array_equal(ema_forecast(ts([0, 10]), 0.5, 3).values, [5, 5, 5])
    assert ema_forecast(ts([3, 1, 7]), 1.0, 2).values.tolist() == [7, 7]
    for bad in (0.0, 1.5, -0.1):
        with pytest.raises(ValueError):
            EmaModel(bad)


def test_forecast_timestamps_continue_history():
    f = ema_forecast(ts([1, 2, 3]), 0.5, 2)
    assert f.start == T0 + 3 * H and f.resolution == H and len(f) == 2


def test_seasonal_naive_examples():
    day = 10 + 5 * np.sin(2 * np.pi * np.arange(24 * 4) / 24)
    hist, future = ts(day[:72]), day[72:]
    f = seasonal_naive_forecast(hist, 24, 24)
    np.testing.assert_allclose(f.values, future[:24], atol=1e-12)
    assert seasonal_naive_forecast(ts([1, 2, 9]), 1, 3).values.tolist() == [9, 9, 9]
    with pytest.raises(DataError):
        seasonal_naive_forecast(ts([1, 2]), 3, 1)


@given(arrays(float, st.integers(5, 60), elements=st.floats(-100, 100)), st.integers(1, 5), st.integers(1, 12))
def test_seasonal_naive_is_lagged_slice(values, season, horizon):
    assume(len(values) >= season)
    f = seasonal_naive_forecast(ts(values), season, horizon).values
    n = len(values)
    for h in range(horizon):
        # y_{n+h} = y_{n+h-L}, unrolled through earlier forecasts when h >= L
        k = n + h
        while k >= n:
            k -= season
        assert f[h] == values[k]


def test_ar_recovers_doubling():
    y = 2.0 ** np.arange(12)
    m = LinearArModel(lags=1).fit(ts(y))
    assert m.coefficients()["lag1"] == pytest.approx(2.0, abs=1e-9)
    f = m.predict(3).values
    np.testing.assert_allclose(f, [2.0**12, 2.0**13, 2.0**14], rtol=1e-9)


def test_ar_rank_deficiency_names_column():
    y = ts(np.random.default_rng(0).normal(size=30))
    flat = ts(np.full(40, 3.0), "degC")
    with pytest.raises(DataError, match="temp"):
        linear_ar_forecast(y, 1, {"temp": flat}, 2)
    zeros = ts(np.zeros(40), "degC")
    with pytest.raises(DataError, match="zero"):
        linear_ar_forecast(y, 1, {"solar": zeros}, 2)


@pytest.mark.parametrize("seed", range(5))
def test_ar_on_white_noise(seed):
    y = np.random.default_rng(seed).normal(4.0, 1.0, 500)
    m = LinearArModel(lags=1).fit(ts(y))
    assert abs(m.coef_[1]) <= 3 * m.stderr_[1]
    f = m.predict(50).values
    assert f[-1] == pytest.approx(y.mean(), abs=3 / math.sqrt(len(y)) * 2)


def test_ar_uses_exogenous_regressor():
    rng = np.random.default_rng(3)
    x = rng.normal(size=60)
    y = np.zeros(50)
    for t in range(1, 50):
        y[t] = 0.5 * y[t - 1] + 2.0 * x[t]
    m = LinearArModel(lags=1).fit(ts(y), {"x": ts(x)})
    c = m.coefficients()
    assert c["lag1"] == pytest.approx(0.5, abs=1e-9)
    assert c["x"] == pytest.approx(2.0, abs=1e-9)
    f = m.predict(3).values
    expected, prev = [], y[-1]
    for t in range(50, 53):
        prev = 0.5 * prev + 2.0 * x[t]
        expected.append(prev)
    np.testing.assert_allclose(f, expected, atol=1e-8)


# -- weights and ensemble -----------------------------------------------------

def test_weight_examples():
    w = update_weights({"a": 1.0, "b": 3.0}, 1e-15)
    assert w.weights == pytest.approx((0.75, 0.25), abs=1e-12)
    w = update_weights({"a": 2.0, "b": 2.0, "c": 2.0})
    assert w.weights == pytest.approx((1 / 3,) * 3, abs=1e-15)
    w = update_weights({"a": 0.0, "b": 1.0, "c": 5.0}, 1e-6)
    assert w.as_dict()["a"] > 0.999
    with pytest.raises(ValueError):
        update_weights({})
    with pytest.raises(ValueError):
        update_weights({"a": -1.0})


@given(st.dictionaries(st.text("abcdef", min_size=1, max_size=3),
                       st.floats(0, 1e6), min_size=1, max_size=8),
       st.floats(1e-9, 1.0))
def test_weights_are_a_distribution(errors, eps):
    w = update_weights(errors, eps)
    assert all(x >= 0 for x in w.weights)
    assert abs(math.fsum(w.weights) - 1.0) <= 1e-12


@given(st.floats(0, 100), st.floats(0, 100))
def test_lower_error_gets_higher_weight(ea, eb):
    assume(abs(ea - eb) > 1e-3)
    w = update_weights({"a": ea, "b": eb}, 1e-6).as_dict()
    assert (w["a"] > w["b"]) == (ea < eb)


def test_ensemble_examples():
    hist = ts([1, 2, 3])
    m = EmaModel(0.5).fit(hist)
    one = ensemble_forecast([m], EnsembleWeights(("m",), (1.0,)), 4)
    np.testing.assert_array_equal(one.values, m.predict(4).values)
    zero, ten = ts([0, 0]), ts([10, 10])
    mid = combine([zero, ten], EnsembleWeights(("a", "b"), (0.5, 0.5)))
    np.testing.assert_array_equal(mid.values, [5, 5])
    with pytest.raises(DataError):
        combine([zero, ts([1, 2, 3])], EnsembleWeights(("a", "b"), (0.5, 0.5)))
    with pytest.raises(ValueError):
        EnsembleWeights(("a", "b"), (0.7, 0.7))


@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 30))
def test_ensemble_in_member_hull(seed, m, horizon):
    rng = np.random.default_rng(seed)
    members = [ts(rng.normal(0, 100, horizon)) for _ in range(m)]
    raw = rng.random(m)
    w = update_weights({f"m{i}": float(e) for i, e in enumerate(raw)})
    out = combine(members, w).values
    stack = np.vstack([s.values for s in members])
    assert np.all(out >= stack.min(axis=0)) and np.all(out <= stack.max(axis=0))


# -- backtest -----------------------------------------------------------------

def test_backtest_perfect_model_wins():
    y = regime_switch_series(4, days=10, switch_day=5).values
    pool = [_Oracle(y), EmaModel(0.3), SeasonalNaiveModel(24)]
    r = backtest(pool, ts(y), window=24, horizon=6)
    late = [w.as_dict()["oracle"] for w in r.weights[1:]]
    assert min(late) > 0.999
    # after the uniform first fold the ensemble tracks the oracle
    tail = slice(6, None)
    err = np.abs(r.forecast.values[tail] - r.actual.values[tail]).mean()
    assert err < 1e-3 * r.member_reports["ema(0.3)"].mae


def test_single_model_backtest_equals_scoring_the_model():
    y = ts(regime_switch_series(1, days=6, switch_day=3).values)
    r = backtest(SeasonalNaiveModel(24), y, window=24, horizon=12)
    direct = np.concatenate([
        SeasonalNaiveModel(24).fit(y.slice(0, o)).predict(12).values for o in r.origins
    ])
    assert r.report == score(r.actual, r.actual.with_values(direct))
    assert all(w.weights == (1.0,) for w in r.weights)


def test_backtest_is_causal():
    y = regime_switch_series(2, days=12, switch_day=6).values
    pool = [EmaModel(0.5), SeasonalNaiveModel(24), LinearArModel(2)]
    full = backtest(pool, ts(y), window=48, horizon=6)
    k = len(full.origins) // 2
    cut = full.origins[k] + 6
    zeroed = y.copy()
    zeroed[cut:] = 0.0
    part = backtest(pool, ts(zeroed), window=48, horizon=6)
    for a, b in zip(full.weights[:k + 1], part.weights[:k + 1]):
        assert a == b
    n = cut - full.origins[0]
    np.testing.assert_array_equal(full.forecast.values[:n], part.forecast.values[:n])


def test_weights_respond_after_regime_change():
    switch = 24 * 7
    y = regime_switch_series(0, days=14, switch_day=7)
    r = backtest([EmaModel(0.5), SeasonalNaiveModel(24)], y, window=48, horizon=6)
    sn = np.array([w.as_dict()["seasonal_naive(24)"] for w in r.weights])
    origins = np.array(r.origins)
    before = sn[(origins > 48) & (origins < switch)]
    after = sn[origins >= switch + 48]
    assert before.min() > 0.5 > after.max()
    # the first fold after the change still uses pre-change errors only
    first_after = sn[np.searchsorted(origins, switch)]
    assert first_after > 0.5


def test_backtest_errors():
    with pytest.raises(DataError):
        backtest(EmaModel(0.5), ts(np.ones(10)), window=20, horizon=2)
    with pytest.raises(DataError):
        backtest(EmaModel(0.5), ts(np.ones(10)), window=9, horizon=2)


# -- hierarchy ----------------------------------------------------------------

def _labels(contracts):
    return {m: {"contract": c, "sector": s, "district": d} for m, (c, s, d) in contracts.items()}


def test_two_meters_one_contract():
    h = Hierarchy.from_labels(_labels({"m1": ("C1", "office", "north"), "m2": ("C1", "office", "north")}))
    out = aggregate_bottom_up({"m1": ts([1, 2]), "m2": ts([3, 4])}, h, "contract")
    assert out["C1"].values.tolist() == [4, 6]
    root = aggregate_bottom_up({"m1": ts([1, 2]), "m2": ts([3, 4])}, h, "portfolio")
    assert root["portfolio"].values.tolist() == [4, 6]


def test_hierarchy_errors():
    h = Hierarchy.from_labels(_labels({"m1": ("C1", "office", "north")}))
    with pytest.raises(DataError):
        aggregate_bottom_up({"m1": ts([1]), "zz": ts([1])}, h, "sector")
    with pytest.raises(DataError):
        aggregate_bottom_up({}, h, "sector")
    with pytest.raises(DataError):
        Hierarchy.from_labels(_labels({"m1": ("C1", "office", "north"), "m2": ("C1", "retail", "north")}))


@st.composite
def hierarchies(draw):
    n = draw(st.integers(1, 12))
    labels = {}
    for i in range(n):
        d = draw(st.sampled_from(["n", "s", "e"]))
        s = d + draw(st.sampled_from(["x", "y"]))
        c = s + draw(st.sampled_from(["1", "2"]))
        labels[f"m{i}"] = {"contract": c, "sector": s, "district": d}
    return labels


@given(hierarchies(), st.integers(0, 2**32 - 1), st.booleans())
def test_bottom_up_coherence(labels, seed, dyadic):
    rng = np.random.default_rng(seed)
    h = Hierarchy.from_labels(labels)
    if dyadic:
        # values on a 1/64 grid: every partial sum is exact, so cross-level sums must match exactly
        fc = {m: ts(rng.integers(0, 64 * 500, 8) / 64) for m in labels}
    else:
        fc = {m: ts(rng.lognormal(2, 1.5, 8)) for m in labels}
    levels = aggregate_all_levels(fc, h)
    for below, above in zip(LEVELS, LEVELS[1:]):
        for parent, kids in h.children(above).items():
            expect = [math.fsum(levels[below][k].values[t] for k in kids) for t in range(8)]
            assert levels[above][parent].values.tolist() == expect
    total = [math.fsum(fc[m].values[t] for m in fc) for t in range(8)]
    for lvl in LEVELS:
        sums = [math.fsum(s.values[t] for s in levels[lvl].values()) for t in range(8)]
        if dyadic:
            assert sums == total
        else:
            np.testing.assert_allclose(sums, total, rtol=1e-14)
