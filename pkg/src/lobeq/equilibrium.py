"""Zero-tick equilibrium book: intrinsic half-spread, cumulative shape, gains.

The book is described relative to the efficient price.  ``L(x)`` is the
signed cumulative liquidity between the efficient price and offset ``x``
(positive on the ask side, negative on the bid side).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import JumpLaw, NormalVolume, ParetoSymmetric, VolumeLaw


@dataclass(frozen=True)
class MarketParams:
    """r is the share of market events that are efficient-price jumps."""

    r: float
    jump: JumpLaw
    volume: VolumeLaw = NormalVolume(1.0)

    def __post_init__(self) -> None:
        if not (0.0 < self.r < 1.0):
            raise ValueError(f"r must lie in (0, 1), got {self.r!r}")

    @classmethod
    def from_rates(cls, lambda_i: float, lambda_u: float, jump: JumpLaw,
                   volume: VolumeLaw = NormalVolume(1.0)) -> "MarketParams":
        if lambda_i <= 0 or lambda_u <= 0:
            raise ValueError("event rates must be positive")
        return cls(lambda_i / (lambda_i + lambda_u), jump, volume)

    @property
    def target_ratio(self) -> float:
        """(1 + r) / (2r), the value E[max(B/mu, 1)] takes at the half-spread."""
        return (1.0 + self.r) / (2.0 * self.r)

    @property
    def odds(self) -> float:
        return self.r / (1.0 - self.r)


def pareto_half_spread(r: float, k: float, x0: float) -> float:
    """Closed-form half-spread for symmetric Pareto jumps."""
    if r <= (k - 1.0) / k:
        return r * k * x0 / (k - 1.0)
    return x0 * (r / ((1.0 - r) * (k - 1.0))) ** (1.0 / k)


def bisect_half_spread(params: MarketParams, rtol: float = 1e-12) -> float:
    """Root of x -> E[max(B/x, 1)] - (1+r)/(2r) by geometric bisection.

    The map is strictly decreasing from +inf to 1 and the target exceeds 1,
    so ``[scale*1e-6, scale*1e6]`` brackets the root for any sane law.
    """
    law, target = params.jump, params.target_ratio - 1.0
    lo, hi = law.scale * 1e-6, law.scale * 1e6
    if not (law.expected_max_excess(lo) > target > law.expected_max_excess(hi)):
        raise ValueError("half-spread bracket does not contain the root")
    while hi / lo - 1.0 > rtol:
        mid = math.sqrt(lo * hi)
        if mid in (lo, hi):
            break
        if law.expected_max_excess(mid) > target:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def solve_half_spread(params: MarketParams, method: str = "auto") -> float:
    """Intrinsic half-spread mu solving E[max(B/mu, 1)] = (1+r)/(2r).

    ``method`` is ``"auto"`` (closed form when the family has one),
    ``"closed_form"`` or ``"bisection"``.
    """
    if method not in ("auto", "closed_form", "bisection"):
        raise ValueError(f"unknown method {method!r}")
    law = params.jump
    if method != "bisection" and isinstance(law, ParetoSymmetric):
        return pareto_half_spread(params.r, law.k, law.x0)
    if method == "closed_form":
        raise ValueError(f"no closed form for jump family {law.family!r}")
    return bisect_half_spread(params)


def marginal_gain(params: MarketParams, x: float, depth: float) -> float:
    """Expected profit of an infinitesimal order at offset x behind ``depth``.

    For x >= 0 the order is a sell and ``depth`` the ask-side cumulative
    volume ahead of it; for x < 0 a buy with (negative) bid-side depth.
    """
    r, law, vol = params.r, params.jump, params.volume
    if x >= 0.0:
        num = r * law.upper_mean(x)
        den = r * law.survival(x) + (1.0 - r) * vol.survival(depth)
        return x - num / den if den > 0.0 else x
    # E[B 1_{B<x}] = -E[B 1_{B>-x}] by symmetry
    num = -r * law.upper_mean(-x)
    den = r * law.cdf(x) + (1.0 - r) * vol.cdf(depth)
    return -x + num / den if den > 0.0 else -x


@dataclass(frozen=True)
class EquilibriumBook:
    params: MarketParams
    mu: float

    @classmethod
    def solve(cls, params: MarketParams, method: str = "auto") -> "EquilibriumBook":
        return cls(params, solve_half_spread(params, method))

    def __post_init__(self) -> None:
        if not self.mu > 0.0:
            raise ValueError(f"half-spread must be positive, got {self.mu!r}")

    @property
    def spread(self) -> float:
        return 2.0 * self.mu

    def residual(self) -> float:
        """E[max(B/mu,1)] - (1+r)/(2r) at the stored mu; zero at equilibrium."""
        p = self.params
        return p.jump.expected_max_excess(self.mu) - (p.target_ratio - 1.0)

    def ask_tail(self, x: float) -> float:
        """P[Q^u > L(x)] at an ask offset x > mu, i.e. r/(1-r) * (E[max(B/x,1)] - 1)."""
        return self.params.odds * self.params.jump.expected_max_excess(x)

    def shape(self, x: float) -> float:
        a = abs(x)
        if a <= self.mu:
            return 0.0
        tail = self.ask_tail(a)
        if tail >= 0.5:
            # only reachable through rounding right at the spread edge
            return 0.0
        depth = -self.params.volume.quantile(tail) if tail > 0.0 else math.inf
        return depth if x > 0.0 else -depth

    def shape_inverse(self, q: float) -> float:
        """argmin{x : L(x) >= q}."""
        if q == 0.0:
            return -self.mu
        a = abs(q)
        target = self.params.volume.survival(a) / self.params.odds
        x = self.params.jump.excess_inverse(target)
        return x if q > 0.0 else -x

    def gain(self, x: float, depth: float | None = None) -> float:
        return marginal_gain(self.params, x, self.shape(x) if depth is None else depth)


def cumulative_shape(book: EquilibriumBook, x: float) -> float:
    return book.shape(x)


def shape_inverse(book: EquilibriumBook, q: float) -> float:
    return book.shape_inverse(q)


def variance_per_trade_zero_tick(book: EquilibriumBook) -> float:
    """E[B^2] mu / E[|B| 1_{|B| > mu}]."""
    law = book.params.jump
    return law.second_moment() * book.mu / law.abs_upper_mean(book.mu)
