"""Equilibrium book on a tick grid.

Level ``i > 0`` is the i-th admissible ask price at or above the efficient
price, at offset ``d + (i-1)*alpha``; level ``i < 0`` is a bid at offset
``d + i*alpha``.  ``d`` is the distance from the efficient price up to the
next grid point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .distributions import JumpLaw
from .equilibrium import EquilibriumBook, marginal_gain

QUEUE_CONVENTIONS = ("materialized", "extended")


def _strict_ceil(x: float) -> int:
    """Smallest integer strictly larger than x."""
    return math.floor(x) + 1


@dataclass(frozen=True)
class TickGrid:
    alpha: float
    d: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise ValueError(f"tick size alpha must be > 0, got {self.alpha!r}")
        if not (0.0 <= self.d < self.alpha):
            raise ValueError(f"offset d must lie in [0, alpha), got d={self.d!r} alpha={self.alpha!r}")

    @classmethod
    def from_price(cls, price: float, alpha: float) -> "TickGrid":
        u = price / alpha
        d = (math.ceil(u) - u) * alpha
        return cls(alpha, d if d < alpha else 0.0)

    def reflected(self) -> "TickGrid":
        """Grid seen from the bid side: d -> alpha - d (0 stays 0)."""
        return TickGrid(self.alpha, self.alpha - self.d if self.d > 0.0 else 0.0)


def first_limits(mu: float, grid: TickGrid) -> tuple[int, int]:
    """Indices (k_r, k_l) of the first non-empty ask and bid limits."""
    if not mu > 0.0:
        raise ValueError("half-spread must be positive")
    k_r = 1 + max(0, _strict_ceil((mu - grid.d) / grid.alpha))
    k_l = _strict_ceil((mu + grid.d) / grid.alpha)
    return k_r, k_l


def conditional_spread(mu: float, grid: TickGrid) -> float:
    """Quoted spread for a given offset d."""
    k_r, k_l = first_limits(mu, grid)
    return grid.alpha * (k_r + k_l - 1)


def average_spread(mu: float, alpha: float) -> float:
    """Spread averaged over d uniform on [0, alpha): 2*mu + alpha."""
    if alpha < 0:
        raise ValueError("tick size must be non-negative")
    return 2.0 * mu + alpha


def variance_per_trade(mu: float, alpha: float, law: JumpLaw) -> float:
    """E[B^2] (mu + alpha/2) / E[|B| 1_{|B| > mu + alpha/2}]."""
    if alpha < 0:
        raise ValueError("tick size must be non-negative")
    h = mu + 0.5 * alpha
    return law.second_moment() * h / law.abs_upper_mean(h)


@dataclass(frozen=True)
class BookLevel:
    side: str
    index: int
    price_offset: float
    level_volume: float
    cumulative_volume: float
    level_gain: float
    queue_value: float


@dataclass(frozen=True)
class DiscreteBook:
    grid: TickGrid
    equilibrium: EquilibriumBook
    n_levels: int = 50
    k_r: int = field(init=False)
    k_l: int = field(init=False)

    def __post_init__(self) -> None:
        if self.n_levels < 1:
            raise ValueError("n_levels must be >= 1")
        k_r, k_l = first_limits(self.equilibrium.mu, self.grid)
        object.__setattr__(self, "k_r", k_r)
        object.__setattr__(self, "k_l", k_l)

    @property
    def params(self):
        return self.equilibrium.params

    @property
    def spread(self) -> float:
        return self.grid.alpha * (self.k_r + self.k_l - 1)

    def offset(self, i: int) -> float:
        _check_index(i)
        a, d = self.grid.alpha, self.grid.d
        return d + (i - 1) * a if i > 0 else d + i * a

    def cumulative_depth(self, i: int) -> float:
        """L^d(i); zero strictly inside the spread."""
        if i == 0:
            return 0.0
        if -self.k_l < i < self.k_r:
            return 0.0
        return self.equilibrium.shape(self.offset(i))

    def level_volume(self, i: int) -> float:
        _check_index(i)
        inner = i - 1 if i > 0 else i + 1
        return self.cumulative_depth(i) - self.cumulative_depth(inner)

    def level_gain(self, i: int) -> float:
        return marginal_gain(self.params, self.offset(i), self.cumulative_depth(i))

    def queue_value(self, i: int, convention: str = "materialized") -> float:
        """Head-of-queue minus tail-of-queue expected profit at limit i.

        Positive indices are asks.  Bid values come from the reflected grid.
        ``convention`` picks the depth ahead of the queue when limit i-1 lies
        inside the spread: ``"materialized"`` uses the empty book (depth 0),
        ``"extended"`` keeps the zero-profit depth relation for limit i-1
        even where it would ask for negative liquidity.
        """
        _check_index(i)
        if i < 0:
            mirror = DiscreteBook(self.grid.reflected(), self.equilibrium, self.n_levels)
            j = -i if self.grid.d > 0.0 else 1 - i
            return mirror.queue_value(j, convention)
        if convention not in QUEUE_CONVENTIONS:
            raise ValueError(f"convention must be one of {QUEUE_CONVENTIONS}, got {convention!r}")
        p = self.params
        r, law = p.r, p.jump
        h = self.offset(i)
        if i == 1:
            # nothing sits ahead of the first limit
            ahead = 0.5 * (1.0 - r)
        elif convention == "materialized" or i - 1 >= self.k_r:
            ahead = (1.0 - r) * p.volume.survival(self.cumulative_depth(i - 1))
        else:
            prev = self.offset(i - 1)
            if prev <= 0.0:
                return h
            # (1-r) P[Q^u > L(prev)] rewritten through the zero-profit relation
            ahead = r * law.expected_max_excess(prev)
        den = r * law.survival(h) + ahead
        return h - r * law.upper_mean(h) / den

    def levels(self, n: int | None = None) -> list[BookLevel]:
        """Ask levels 1..n and bid levels -1..-n, best prices first."""
        n = self.n_levels if n is None else n
        out = []
        for side, sign in (("ask", 1), ("bid", -1)):
            for j in range(1, n + 1):
                i = sign * j
                out.append(BookLevel(
                    side=side,
                    index=i,
                    price_offset=self.offset(i),
                    level_volume=self.level_volume(i),
                    cumulative_volume=self.cumulative_depth(i),
                    level_gain=self.level_gain(i),
                    queue_value=self.queue_value(i),
                ))
        return out


def _check_index(i: int) -> None:
    if i == 0:
        raise ValueError("limit index must be non-zero")


def cumulative_depth(book: DiscreteBook, i: int) -> float:
    _check_index(i)
    return book.cumulative_depth(i)


def level_volume(book: DiscreteBook, i: int) -> float:
    return book.level_volume(i)


def level_gain(book: DiscreteBook, i: int) -> float:
    return book.level_gain(i)


def queue_position_value(book: DiscreteBook, i: int, convention: str = "materialized") -> float:
    if i <= 0:
        raise ValueError("queue_position_value takes an ask index i >= 1")
    return book.queue_value(i, convention)
