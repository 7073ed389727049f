import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from outdoorsim.weather import (DEFAULT_MATRIX, DEFAULT_ORDER, CloudLayer, PrecipitationDesc, WeatherCondition,
                                WeatherConfig, WindState, cloud_opacity, default_presets, fade_condition,
                                format_event, initial_weather, next_condition, precipitation_volume, spawn_lightning,
                                step_clouds, step_weather, step_wind, thunder_for_strike, transition_matrix,
                                weather_from_dict, weather_to_dict)


# -- wind ------------------------------------------------------------------------

def test_wind_fixed_point():
    w = WindState((3.0, -1.0), (3.0, -1.0), 20.0)
    assert step_wind(w, 5.0).velocity == (3.0, -1.0)


def test_wind_relaxation_limit():
    w = WindState((0.0, 0.0), (7.0, 2.0), 20.0)
    v = step_wind(w, 1e6).velocity
    assert abs(v[0] - 7.0) < 1e-6 and abs(v[1] - 2.0) < 1e-6
    assert step_wind(w, math.inf).velocity == (7.0, 2.0)


def test_wind_one_time_constant():
    w = WindState((0.0, 0.0), (10.0, 0.0), 20.0)
    assert abs(step_wind(w, 20.0).velocity[0] - 10.0 * (1 - math.exp(-1))) < 1e-12
    assert abs(step_wind(w, 20.0).velocity[0] - 6.321) < 5e-4


def test_wind_clamped_to_max():
    w = WindState((0.0, 0.0), (100.0, 0.0), 1.0, max_speed=30.0)
    assert step_wind(w, 50.0).speed <= 30.0 + 1e-12


def test_wind_rejects_negative_dt():
    with pytest.raises(ValueError):
        step_wind(WindState(), -1.0)


# -- clouds ----------------------------------------------------------------------

def _layers():
    return [CloudLayer(800.0, 0.3, (0.1, 0.2), 1.0, 1), CloudLayer(2000.0, 0.8, (0.0, 0.0), 0.5, 2)]


def test_clouds_zero_wind_no_advection():
    out = step_clouds(_layers(), WindState(), 10.0)
    assert [l.offset for l in out] == [l.offset for l in _layers()]


def test_clouds_linear_in_dt():
    w = WindState((4.0, -3.0), (4.0, -3.0))
    a = step_clouds(_layers(), w, 10.0)
    b = step_clouds(_layers(), w, 20.0)
    for l0, la, lb in zip(_layers(), a, b):
        da = np.subtract(la.offset, l0.offset)
        db = np.subtract(lb.offset, l0.offset)
        assert np.allclose(db, 2 * da, rtol=1e-12, atol=1e-15)
    # offset delta = wind x speed multiplier x dt x uv-per-metre
    assert np.allclose(np.subtract(a[1].offset, _layers()[1].offset), np.array([4.0, -3.0]) * 0.5 * 10.0 / 2000.0)


def test_clouds_coverage_fade_reaches_target_and_stays():
    layers = _layers()
    for _ in range(200):
        layers = step_clouds(layers, WindState(), 5.0, targets=(0.9, 0.1))
    assert [l.coverage for l in layers] == [0.9, 0.1]
    layers = step_clouds(layers, WindState(), 5.0, targets=(0.9, 0.1))
    assert [l.coverage for l in layers] == [0.9, 0.1]


def test_cloud_opacity_range_and_horizon():
    dirs = np.random.default_rng(0).normal(size=(500, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    layers = [replace(l, coverage=1.0) for l in _layers()]
    op = cloud_opacity(layers, dirs)
    assert np.all((op >= 0) & (op <= 1))
    assert np.all(op[dirs[:, 1] <= 0.02] == 0)
    assert np.all(cloud_opacity([replace(l, coverage=0.0) for l in layers], dirs) == 0)


# -- fading ----------------------------------------------------------------------

P = default_presets()


def test_fade_endpoints():
    assert fade_condition(P["clear"], P["rain"], 0.0) == P["clear"]
    assert fade_condition(P["clear"], P["rain"], 1.0) == P["rain"]
    assert fade_condition(P["clear"], P["rain"], -3.0) == P["clear"]
    assert fade_condition(P["clear"], P["rain"], 7.0) == P["rain"]


def test_fade_midpoint_intensity():
    a = WeatherCondition("a", (0.1,), PrecipitationDesc("rain", 0.2, 5.0))
    b = WeatherCondition("b", (0.5,), PrecipitationDesc("rain", 0.6, 9.0))
    m = fade_condition(a, b, 0.5)
    assert abs(m.precipitation.intensity - 0.4) < 1e-15
    assert m.precipitation.kind == "rain" and m.name == "b"


@given(st.sampled_from(sorted(P)), st.floats(0, 1))
def test_fade_self_identity(name, s):
    assert fade_condition(P[name], P[name], s) == P[name]


@given(st.sampled_from(sorted(P)), st.sampled_from(sorted(P)), st.floats(0, 1))
def test_fade_keeps_invariants(a, b, s):
    c = fade_condition(P[a], P[b], s)
    assert 0 <= c.precipitation.intensity <= 1
    assert all(0 <= x <= 1 for x in c.cloud_coverage)
    assert (c.precipitation.kind != "none") or c.precipitation.intensity == 0


def test_precipitation_invariants():
    with pytest.raises(ValueError):
        PrecipitationDesc("none", 0.5)
    with pytest.raises(ValueError):
        PrecipitationDesc("rain", 1.5)
    with pytest.raises(ValueError):
        PrecipitationDesc("sleet", 0.5)


# -- Markov generator ------------------------------------------------------------------

@pytest.mark.parametrize("snow", [False, True])
@given(h=st.floats(0, 1))
def test_transition_rows_stochastic(snow, h):
    names, m = transition_matrix(WeatherConfig(snow_enabled=snow), h)
    assert len(names) == (5 if snow else 4)
    assert np.all(m >= 0) and np.allclose(m.sum(axis=1), 1.0, atol=1e-12)


def test_humidity_zero_forces_minimum_wet_probability():
    cfg = WeatherConfig()
    names, m = transition_matrix(cfg, 0.0)
    assert m[names.index("clear"), names.index("rain")] == cfg.min_wet_probability


def test_humidity_one_reproduces_configured_matrix():
    names, m = transition_matrix(WeatherConfig(snow_enabled=True), 1.0)
    assert names == DEFAULT_ORDER
    assert np.allclose(m, DEFAULT_MATRIX, atol=1e-15)


def test_markov_frequencies_from_clear():
    cfg = WeatherConfig(snow_enabled=True)
    rng = np.random.default_rng(11)
    counts = dict.fromkeys(DEFAULT_ORDER, 0)
    n = 100_000
    for _ in range(n):
        counts[next_condition(cfg, "clear", 1.0, rng)[0]] += 1
    for j, name in enumerate(DEFAULT_ORDER):
        assert abs(counts[name] / n - DEFAULT_MATRIX[0][j]) <= 0.01


def test_fade_duration_in_range():
    cfg = WeatherConfig()
    rng = np.random.default_rng(3)
    for _ in range(200):
        _, d = next_condition(cfg, "rain", 0.5, rng)
        assert cfg.fade_range[0] <= d <= cfg.fade_range[1]


def test_config_guards():
    with pytest.raises(ValueError):
        WeatherConfig(matrix=((1.0,),))
    with pytest.raises(ValueError):
        WeatherConfig(initial="snow")


# -- lightning and thunder ------------------------------------------------------------

def test_thunder_delay_and_gain_examples():
    e = thunder_for_strike((343.0, 0.0, 0.0), (0.0, 0.0, 0.0), 10.0)
    assert e.audible_time - e.strike_time == 1.0
    assert thunder_for_strike((30.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0.0).gain == 1.0
    assert thunder_for_strike((0.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0.0).gain == 1.0
    assert thunder_for_strike((100.0, 0.0, 0.0), (0.0, 0.0, 0.0), 0.0).gain == 0.5


@given(st.floats(0, 5000), st.floats(0, 5000))
def test_nearer_strike_heard_first(d1, d2):
    a = thunder_for_strike((d1, 0.0, 0.0), (0.0, 0.0, 0.0), 1.0)
    b = thunder_for_strike((0.0, 0.0, d2), (0.0, 0.0, 0.0), 1.0)
    if d1 < d2:
        assert a.audible_time < b.audible_time
    assert a.audible_time >= a.strike_time and 0 <= a.gain <= 1


def test_no_lightning_outside_storms():
    rng = np.random.default_rng(0)
    assert spawn_lightning(P["rain"], (0, 0, 0), rng, 0.0, 3600.0) == []


def test_lightning_in_annulus_and_sorted():
    rng = np.random.default_rng(1)
    ev = spawn_lightning(P["storm"], (5.0, 0.0, -3.0), rng, 100.0, 600.0)
    assert len(ev) > 20
    times = [e.strike_time for e in ev]
    assert times == sorted(times) and 100.0 <= times[0] and times[-1] < 700.0
    for e in ev:
        r = math.hypot(e.position[0] - 5.0, e.position[2] + 3.0)
        assert 300.0 - 1e-9 <= r <= 3000.0 + 1e-9


def test_event_format():
    e = thunder_for_strike((343.0, 2.0, 0.0), (0.0, 2.0, 0.0), 1.5)
    assert format_event(e) == "1.500000 2.500000 343.000 2.000 0.000 0.145773"


def _run_hour(seed):
    cfg = WeatherConfig(initial="storm")
    rng = np.random.default_rng(seed)
    st_ = initial_weather(cfg, rng)
    events = []
    for _ in range(3600):
        events += step_weather(cfg, st_, 1.0, rng, (0.0, 10.0, 0.0))
    return events, st_


def test_event_timeline_deterministic():
    a, _ = _run_hour(5)
    b, _ = _run_hour(5)
    assert a == b and len(a) > 0
    assert [format_event(e) for e in a] == [format_event(e) for e in b]


# -- precipitation volume --------------------------------------------------------------

def test_volume_construction_and_translation():
    b = precipitation_volume((0.0, 0.0, 0.0))
    assert b.center == (0.0, 60.0, 0.0) and b.half_extent == (40.0, 40.0, 40.0)
    b2 = precipitation_volume((10.0, 0.0, 0.0))
    assert b2.center == (10.0, 60.0, 0.0) and b2.half_extent == b.half_extent


def test_volume_clamped_into_node():
    b = precipitation_volume((50.0, 0.0, 0.0), node_bounds=((-10, -10, -10), (10, 10, 10)))
    assert b.center == (10.0, 60.0, 0.0)


# -- whole simulation -------------------------------------------------------------

def test_long_run_ranges_and_tilt():
    cfg = WeatherConfig(snow_enabled=True, hold_range=(20.0, 60.0), fade_range=(5.0, 30.0))
    rng = np.random.default_rng(9)
    st_ = initial_weather(cfg, rng)
    seen = set()
    for _ in range(20_000):
        step_weather(cfg, st_, 2.0, rng)
        c = st_.condition
        seen.add(st_.target)
        assert 0 <= c.precipitation.intensity <= 1
        assert all(0 <= l.coverage <= 1 for l in st_.layers)
        assert st_.wind.speed <= cfg.max_wind + 1e-9
        p = st_.precipitation
        if p.kind != "none":
            assert abs(p.tilt - math.atan2(st_.wind.speed, p.fall_speed)) < 1e-6
    assert seen == set(DEFAULT_ORDER)


def test_state_dict_roundtrip():
    _, st_ = _run_hour(2)
    again = weather_from_dict(weather_to_dict(st_))
    assert weather_to_dict(again) == weather_to_dict(st_)
