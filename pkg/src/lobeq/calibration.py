"""Pareto shape fit from daily variance per trade, and tick-change forecasts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

K_MIN, K_MAX = 2.001, 20.0
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DailyObservation:
    date: str
    spread: float
    variance_per_trade: float

    def __post_init__(self) -> None:
        if not self.spread > 0:
            raise ValueError(f"{self.date}: spread must be positive, got {self.spread!r}")
        if not self.variance_per_trade > 0:
            raise ValueError(f"{self.date}: variance per trade must be positive, got {self.variance_per_trade!r}")


@dataclass(frozen=True)
class CalibrationResult:
    k: float
    x0: float
    mu: float
    r: float
    sse: float
    phi_bar: float
    alpha: float
    n_obs: int
    at_boundary: bool = False


def model_variance_per_trade(k: float, half_spread: float) -> float:
    """(k-1)/(k-2) * half_spread^2, the Pareto variance per trade with x0 = half spread."""
    return (k - 1.0) / (k - 2.0) * half_spread**2


def derive_r(k: float) -> float:
    """Jump share r = (k-1)/k.

    Solving E[max(B/h, 1)] = (1+r)/(2r) at h equal to the Pareto scale
    gives 1 + 1/(2(k-1)) = (1+r)/(2r), i.e. r = (k-1)/k.
    """
    if not k > 1.0:
        raise ValueError(f"shape k must be > 1, got {k!r}")
    return (k - 1.0) / k


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-6) -> float:
    """Minimiser of a unimodal f on [lo, hi]."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    # the interior probes never touch the ends; check them explicitly
    return min((lo, x, hi), key=f)


def shape_objective(observations: Sequence[DailyObservation]) -> Callable[[float], float]:
    """Sum of squared errors between the model and the daily variances, as a function of k."""
    phi_bar = sum(o.spread for o in observations) / len(observations)
    half = 0.5 * phi_bar
    targets = [o.variance_per_trade for o in observations]

    def sse(k: float) -> float:
        m = model_variance_per_trade(k, half)
        return sum((m - t) ** 2 for t in targets)

    return sse


def fit_shape(observations: Iterable[DailyObservation], alpha: float, tol: float = 1e-6) -> CalibrationResult:
    obs = list(observations)
    if not obs:
        raise ValueError("fit_shape needs at least one observation")
    if not alpha > 0:
        raise ValueError(f"tick size must be positive, got {alpha!r}")
    phi_bar = sum(o.spread for o in obs) / len(obs)
    if phi_bar <= alpha:
        raise ValueError(
            f"average spread {phi_bar:g} does not exceed the tick {alpha:g}; intrinsic half-spread would be <= 0"
        )
    sse = shape_objective(obs)
    k = golden_section(sse, K_MIN, K_MAX, tol)
    mu = 0.5 * (phi_bar - alpha)
    return CalibrationResult(
        k=k,
        x0=mu + 0.5 * alpha,
        mu=mu,
        r=derive_r(k),
        sse=sse(k),
        phi_bar=phi_bar,
        alpha=alpha,
        n_obs=len(obs),
        at_boundary=min(k - K_MIN, K_MAX - k) <= tol,
    )


def forecast_spread(phi_old: float, alpha_old: float, alpha_new: float) -> float:
    """Average spread after a tick change: phi_old - alpha_old + alpha_new."""
    if not alpha_old > 0 or not alpha_new > 0:
        raise ValueError("tick sizes must be positive")
    if phi_old <= alpha_old:
        raise ValueError(f"spread {phi_old:g} must exceed the old tick {alpha_old:g}")
    # 2*mu + alpha_new with mu = (phi_old - alpha_old) / 2
    return phi_old - alpha_old + alpha_new


@dataclass(frozen=True)
class ForecastRow:
    name: str
    spread_old: float
    tick_old: float
    tick_new: float
    spread_actual: float | None = None


@dataclass
class ForecastLine:
    name: str
    spread_old: float
    tick_old: float
    tick_new: float
    spread_actual: float | None
    forecast: float | None
    relative_error: float | None
    naive_relative_error: float | None
    error: str | None = None


@dataclass
class ForecastReport:
    lines: list[ForecastLine] = field(default_factory=list)

    @property
    def valid(self) -> list[ForecastLine]:
        return [ln for ln in self.lines if ln.error is None]

    @property
    def skipped(self) -> list[ForecastLine]:
        return [ln for ln in self.lines if ln.error is not None]

    @property
    def mean_relative_error(self) -> float | None:
        errs = [ln.relative_error for ln in self.valid if ln.relative_error is not None]
        return sum(errs) / len(errs) if errs else None

    @property
    def naive_mean_relative_error(self) -> float | None:
        errs = [ln.naive_relative_error for ln in self.valid if ln.naive_relative_error is not None]
        return sum(errs) / len(errs) if errs else None


def forecast_report(rows: Iterable[ForecastRow | tuple]) -> ForecastReport:
    """Forecast each row; rows that fail validation are kept with an error note."""
    report = ForecastReport()
    for row in rows:
        if not isinstance(row, ForecastRow):
            row = _row_from_tuple(row, len(report.lines))
        line = ForecastLine(row.name, row.spread_old, row.tick_old, row.tick_new, row.spread_actual,
                            None, None, None)
        try:
            if row.spread_actual is not None and not row.spread_actual > 0:
                raise ValueError(f"actual spread must be positive, got {row.spread_actual!r}")
            line.forecast = forecast_spread(row.spread_old, row.tick_old, row.tick_new)
        except ValueError as exc:
            line.error = str(exc)
        else:
            if row.spread_actual is not None:
                act = row.spread_actual
                line.relative_error = abs(line.forecast - act) / act
                line.naive_relative_error = abs(row.spread_old - act) / act
        report.lines.append(line)
    return report


def _row_from_tuple(row: tuple, n: int) -> ForecastRow:
    if len(row) == 4:
        return ForecastRow(f"row{n + 1}", *row)
    if len(row) == 5:
        return ForecastRow(*row)
    raise ValueError(f"forecast row needs 4 or 5 fields, got {row!r}")
