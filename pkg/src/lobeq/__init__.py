"""Equilibrium limit order book with an informed trader, noise trader and market makers."""

from .calibration import (
    CalibrationResult,
    DailyObservation,
    ForecastReport,
    ForecastRow,
    derive_r,
    fit_shape,
    forecast_report,
    forecast_spread,
)
from .distributions import JumpLaw, NormalVolume, ParetoSymmetric, VolumeLaw
from .equilibrium import EquilibriumBook, MarketParams, marginal_gain, solve_half_spread
from .simulator import (
    SimConfig,
    SimStats,
    informed_share_prediction,
    marker_profit_prediction,
    run,
    variance_per_trade_prediction,
)
from .ticked_book import DiscreteBook, TickGrid, average_spread, conditional_spread, variance_per_trade

__all__ = [
    "CalibrationResult", "DailyObservation", "ForecastReport", "ForecastRow", "derive_r", "fit_shape",
    "forecast_report", "forecast_spread", "JumpLaw", "NormalVolume", "ParetoSymmetric", "VolumeLaw",
    "EquilibriumBook", "MarketParams", "marginal_gain", "solve_half_spread", "SimConfig", "SimStats",
    "informed_share_prediction", "marker_profit_prediction", "run", "variance_per_trade_prediction",
    "DiscreteBook", "TickGrid", "average_spread", "conditional_spread", "variance_per_trade",
]
