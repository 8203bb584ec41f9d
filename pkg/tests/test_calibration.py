import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lobeq.calibration import (
    K_MAX,
    K_MIN,
    DailyObservation,
    ForecastRow,
    derive_r,
    fit_shape,
    forecast_report,
    forecast_spread,
    golden_section,
    model_variance_per_trade,
    shape_objective,
)
from lobeq.equilibrium import pareto_half_spread


@settings(max_examples=50, deadline=None)
@given(st.floats(2.01, 30.0), st.floats(1e-4, 1.0))
def test_derived_r_puts_half_spread_at_scale(k, x0):
    assert pareto_half_spread(derive_r(k), k, x0) == pytest.approx(x0, rel=1e-12)


def test_derive_r_domain():
    assert derive_r(3.0) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        derive_r(1.0)


def test_golden_section_brute_force():
    f = lambda x: (x - 3.7) ** 2 + 1
    assert golden_section(f, 0, 10, 1e-9) == pytest.approx(3.7, abs=1e-7)
    # monotone objective: minimum at an endpoint
    assert golden_section(lambda x: x, 2.0, 5.0) == 2.0


def _synthetic(k, spreads):
    half = 0.5 * sum(spreads) / len(spreads)
    v = model_variance_per_trade(k, half)
    wiggle = [1.0 + 0.02 * math.sin(i) for i in range(len(spreads))]
    return [DailyObservation(f"2018-01-{i + 1:02d}", s, v * w) for i, (s, w) in enumerate(zip(spreads, wiggle))]


def test_fit_recovers_shape():
    obs = _synthetic(3.5, [0.024, 0.026, 0.025, 0.025, 0.0248])
    res = fit_shape(obs, alpha=0.01)
    # brute-force minimum of the same objective on a fine grid
    sse = shape_objective(obs)
    grid = [K_MIN + i * (K_MAX - K_MIN) / 200_000 for i in range(200_001)]
    brute = min(grid, key=sse)
    assert res.k == pytest.approx(brute, abs=2e-4)
    assert res.k == pytest.approx(3.5, rel=0.02)
    assert res.r == pytest.approx((res.k - 1) / res.k)
    assert res.phi_bar == pytest.approx(0.02496)
    assert res.mu == pytest.approx((0.02496 - 0.01) / 2)
    assert res.x0 == pytest.approx(res.mu + 0.005)
    assert not res.at_boundary
    assert res.n_obs == 5


def test_fit_flags_boundary():
    # variance far below anything the model produces: k runs to the upper bound
    obs = [DailyObservation("d1", 0.02, 1e-12)]
    res = fit_shape(obs, alpha=0.01)
    assert res.at_boundary
    assert res.k == pytest.approx(K_MAX, abs=1e-5)


def test_fit_errors():
    with pytest.raises(ValueError, match="at least one"):
        fit_shape([], 0.01)
    with pytest.raises(ValueError, match="does not exceed the tick"):
        fit_shape([DailyObservation("d", 0.005, 1e-5)], 0.01)
    with pytest.raises(ValueError, match="spread must be positive"):
        DailyObservation("d", -1.0, 1e-5)
    with pytest.raises(ValueError, match="variance"):
        DailyObservation("d", 0.01, 0.0)


def test_forecast_examples():
    assert round(forecast_spread(0.01892, 0.01, 0.02), 3) == 0.029
    assert round(forecast_spread(0.08985, 0.05, 0.1), 3) == 0.140
    with pytest.raises(ValueError):
        forecast_spread(0.01, 0.01, 0.02)
    with pytest.raises(ValueError):
        forecast_spread(0.02, 0.01, 0.0)


ticks = st.floats(1e-4, 1.0)


@settings(max_examples=100, deadline=None)
@given(ticks, ticks, ticks, st.floats(1e-4, 10.0))
def test_forecast_additive_in_tick_changes(a, b, c, extra):
    phi = a + extra
    two_step = forecast_spread(forecast_spread(phi, a, b), b, c)
    assert two_step == pytest.approx(forecast_spread(phi, a, c), rel=1e-12, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(ticks, ticks, st.floats(1e-4, 10.0))
def test_forecast_keeps_intrinsic_spread(a, b, extra):
    phi = a + extra
    assert forecast_spread(phi, a, b) - b == pytest.approx(phi - a, rel=1e-12, abs=1e-15)


def test_report_skips_invalid_rows():
    report = forecast_report([
        ForecastRow("ok", 0.019, 0.01, 0.02, 0.031),
        ForecastRow("bad", 0.005, 0.01, 0.02, 0.02),
        (0.03, 0.01, 0.02, 0.04),
        ("named", 0.03, 0.01, 0.02, -1.0),
    ])
    assert [ln.name for ln in report.valid] == ["ok", "row3"]
    assert [ln.name for ln in report.skipped] == ["bad", "named"]
    assert report.valid[1].forecast == pytest.approx(0.04)
    assert report.mean_relative_error == pytest.approx(abs(0.029 - 0.031) / 0.031 / 2)
    assert report.naive_mean_relative_error == pytest.approx((0.012 / 0.031 + 0.25) / 2)
    with pytest.raises(ValueError):
        forecast_report([(1, 2)])
