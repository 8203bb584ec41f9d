"""Event-driven Monte Carlo of the informed / noise / market-maker mechanism.

Every event is either an efficient-price jump (probability r) or a noise
market order.  Market makers requote the full equilibrium book after each
event, so the book is a deterministic function of the offset ``d`` between
the efficient price and the tick grid; the simulator only evaluates the
levels an event touches.

Queue accounting: each level carries ``n_slices`` marker orders spread
evenly through its queue, marker 0 at the head and marker ``n_slices-1``
at the tail.  For every marker we record the realized profit per unit
(against the post-event efficient price) each time it would be executed.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .distributions import JumpLaw, NormalVolume, VolumeLaw
from .equilibrium import EquilibriumBook, MarketParams

CLIP_WARN_FRACTION = 1e-4


@dataclass(frozen=True)
class SimConfig:
    lambda_i: float
    lambda_u: float
    jump: JumpLaw
    volume: VolumeLaw = NormalVolume(1.0)
    alpha: float = 0.0
    p0: float = 100.0
    n_events: int = 100_000
    seed: int = 0
    n_levels: int = 50
    n_slices: int = 10
    d_bins: int = 10

    def __post_init__(self) -> None:
        if not (self.lambda_i > 0 and self.lambda_u > 0):
            raise ValueError("lambda_i and lambda_u must be positive")
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise ValueError(f"tick size alpha must be >= 0, got {self.alpha!r}")
        if not self.p0 > 0:
            raise ValueError("initial price p0 must be positive")
        if int(self.n_events) != self.n_events or self.n_events < 1:
            raise ValueError("n_events must be a positive integer")
        if self.n_levels < 1:
            raise ValueError("n_levels must be >= 1")
        if self.n_slices < 2:
            raise ValueError("n_slices must be >= 2 (head and tail markers)")
        if self.d_bins < 1:
            raise ValueError("d_bins must be >= 1")
        if not -(2**63) <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")
        # five standard deviations of the total efficient-price move
        drift = 5.0 * math.sqrt(self.n_events * self.r * self.jump.second_moment())
        if self.p0 <= drift:
            raise ValueError(f"p0={self.p0:g} too small: total price drift may reach {drift:g}")

    @classmethod
    def from_r(cls, r: float, jump: JumpLaw, total_rate: float = 1.0, **kw) -> "SimConfig":
        if not 0 < r < 1:
            raise ValueError(f"r must lie in (0, 1), got {r!r}")
        return cls(r * total_rate, (1.0 - r) * total_rate, jump, **kw)

    @property
    def r(self) -> float:
        return self.lambda_i / (self.lambda_i + self.lambda_u)

    @property
    def params(self) -> MarketParams:
        return MarketParams(self.r, self.jump, self.volume)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["jump"] = self.jump.to_config()
        out["volume"] = self.volume.to_config()
        return out


@dataclass(frozen=True)
class TradeEvent:
    """One executed market order.

    ``fills`` holds (level, price offset from the pre-event efficient price,
    volume) per level touched; empty in continuous-price mode.
    """

    time: float
    informed: bool
    size: float
    price_pre: float
    price_post: float
    fills: tuple[tuple[int, float, float], ...] = ()

    def initiator_profit(self) -> float:
        """Profit of the market order against the post-event efficient price."""
        move = self.price_post - self.price_pre
        sign = 1.0 if self.size > 0 else -1.0
        return sum(sign * (move - off) * vol for _, off, vol in self.fills)


@dataclass(frozen=True)
class SliceStat:
    level: int
    slice: int
    count: int
    mean: float
    se: float


@dataclass
class SimStats:
    n_events: int
    n_jumps: int
    n_noise: int
    n_trades: int
    n_informed_trades: int
    duration: float
    mu: float
    spread: float
    variance_per_trade: float
    variance_per_trade_se: float
    informed_share: float
    informed_share_se: float
    clip_count: int
    clip_fraction: float
    truncation_biased: bool
    d_mean: float
    d_histogram: list[int]
    slices: list[SliceStat] = field(default_factory=list)
    informed_sizes: np.ndarray | None = field(default=None, repr=False)

    def slice_stat(self, level: int, slice_: int) -> SliceStat | None:
        for s in self.slices:
            if s.level == level and s.slice == slice_:
                return s
        return None

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k not in ("informed_sizes", "slices")}
        out["slices"] = [asdict(s) for s in self.slices]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=True)


def _strict_ceil(x: float) -> int:
    return math.floor(x) + 1


class _Accumulator:
    """Per-level profit sums for the queue markers of one book side.

    Executions that reach every marker of a level are pooled; a partial fill
    reaching the first ``m`` markers is filed under prefix ``m``.
    """

    def __init__(self, n_levels: int, n_slices: int) -> None:
        self.n_slices = n_slices
        size = n_levels + 1
        self.full = [[0, 0.0, 0.0] for _ in range(size)]
        self.prefix = [[[0, 0.0, 0.0] for _ in range(n_slices + 1)] for _ in range(size)]

    def add_full(self, level: int, profit: float) -> None:
        acc = self.full[level]
        acc[0] += 1
        acc[1] += profit
        acc[2] += profit * profit

    def add_prefix(self, level: int, m: int, profit: float) -> None:
        acc = self.prefix[level][m]
        acc[0] += 1
        acc[1] += profit
        acc[2] += profit * profit

    def stats(self, sign: int) -> list[SliceStat]:
        out = []
        n = self.n_slices
        for level in range(1, len(self.full)):
            cnt, s, sq = self.full[level]
            tail = [0, 0.0, 0.0]
            per_slice = [None] * n
            # marker j is reached by every prefix m > j
            for j in range(n - 1, -1, -1):
                pc = self.prefix[level][j + 1]
                tail = [tail[0] + pc[0], tail[1] + pc[1], tail[2] + pc[2]]
                per_slice[j] = (cnt + tail[0], s + tail[1], sq + tail[2])
            for j, (c, sm, sqm) in enumerate(per_slice):
                if c == 0:
                    continue
                mean = sm / c
                var = max(sqm - c * mean * mean, 0.0) / (c - 1) if c > 1 else math.nan
                out.append(SliceStat(sign * level, j, c, mean, math.sqrt(var / c)))
        return out


def run(
    config: SimConfig,
    record_informed_sizes: bool = False,
    trace_path: str | None = None,
    on_trade: Callable[[TradeEvent], None] | None = None,
) -> SimStats:
    """Simulate ``config.n_events`` events and collect the empirical statistics.

    ``on_trade`` receives a :class:`TradeEvent` for every trade (slow; meant
    for tests and debugging).  ``trace_path`` writes one CSV row per event.
    """
    cfg = config
    book = EquilibriumBook.solve(cfg.params)
    mu, r, odds = book.mu, cfg.r, cfg.params.odds
    excess = cfg.jump.expected_max_excess
    vq = cfg.volume.quantile
    alpha = cfg.alpha
    ticked = alpha > 0.0
    n_levels, n_slices = cfg.n_levels, cfg.n_slices

    def depth(h: float) -> float:
        # ask-side cumulative depth at offset h > mu
        tail = odds * excess(h)
        if tail <= 0.0:
            return math.inf
        return -vq(tail) if tail < 0.5 else 0.0

    rng = np.random.default_rng(cfg.seed)
    n = int(cfg.n_events)
    dts = rng.exponential(1.0 / (cfg.lambda_i + cfg.lambda_u), n).tolist()
    is_jump = (rng.random(n) < r).tolist()
    n_jumps = sum(is_jump)
    jumps = cfg.jump.sample(rng, n_jumps).tolist()
    noise = cfg.volume.sample(rng, n - n_jumps).tolist()

    ask_acc = _Accumulator(n_levels, n_slices)
    bid_acc = _Accumulator(n_levels, n_slices)
    sizes = np.zeros(n_jumps) if record_informed_sizes else None
    d_hist = [0] * cfg.d_bins
    d_sum = 0.0

    y = 0.0  # cumulative efficient-price move since p0
    p0 = cfg.p0
    last_trade_y = None
    sq_sum = sq_sq = 0.0
    n_inc = 0
    n_trades = n_inf = clips = 0
    spread_time = 0.0
    duration = 0.0
    ji = ni = 0

    trace_file = open(trace_path, "w", newline="") if trace_path else None
    writer = csv.writer(trace_file) if trace_file else None
    if writer:
        writer.writerow(["time", "type", "size", "price_pre", "price_post"])

    try:
        for ev in range(n):
            dt = dts[ev]
            if ticked:
                u = (p0 + y) / alpha
                dt_ = math.ceil(u) - u
                d = dt_ * alpha
                k_r = 1 + max(0, _strict_ceil((mu - d) / alpha))
                k_l = _strict_ceil((mu + d) / alpha)
                spread = alpha * (k_r + k_l - 1)
                b = int(dt_ * cfg.d_bins)
                d_hist[b if b < cfg.d_bins else cfg.d_bins - 1] += 1
                d_sum += d
            else:
                spread = 2.0 * mu
            spread_time += spread * dt
            duration += dt
            y_pre = y
            traded = False
            fills = []

            if is_jump[ev]:
                bj = jumps[ji]
                q = 0.0
                if ticked:
                    if bj > 0.0:
                        t = (bj - d) / alpha
                        i_max = math.ceil(t) if t > 0.0 else 0
                        if i_max >= k_r:
                            traded = True
                            q = depth(d + (i_max - 1) * alpha)
                            for i in range(k_r, min(i_max, n_levels) + 1):
                                ask_acc.add_full(i, d + (i - 1) * alpha - bj)
                            if on_trade:
                                fills = _fills(depth, k_r, i_max, d - alpha, alpha, 1)
                    elif bj < 0.0:
                        i_max = math.ceil((d - bj) / alpha) - 1
                        if i_max >= k_l:
                            traded = True
                            q = -depth(i_max * alpha - d)
                            for i in range(k_l, min(i_max, n_levels) + 1):
                                bid_acc.add_full(i, bj - d + i * alpha)
                            if on_trade:
                                fills = _fills(depth, k_l, i_max, -d, alpha, -1)
                elif abs(bj) > mu:
                    traded = True
                    q = depth(bj) if bj > 0.0 else -depth(-bj)
                if sizes is not None:
                    sizes[ji] = q
                ji += 1
                y += bj
                if traded:
                    n_inf += 1
                kind = "jump"
            else:
                q = noise[ni]
                ni += 1
                traded = q != 0.0
                if ticked and traded:
                    if q > 0.0:
                        acc, first, base, step, size, sign = ask_acc, k_r, d - alpha, alpha, q, 1
                    else:
                        acc, first, base, step, size, sign = bid_acc, k_l, -d, alpha, -q, -1
                    prev = 0.0
                    i = first
                    while True:
                        if i > n_levels:
                            clips += 1
                            q = prev if q > 0.0 else -prev
                            if on_trade:
                                fills = _fills(depth, first, n_levels, base, step, sign)
                            break
                        h = base + i * step
                        cum = depth(h)
                        if size >= cum:
                            acc.add_full(i, h)
                            prev = cum
                            i += 1
                            continue
                        x = (size - prev) * (n_slices - 1) / (cum - prev)
                        m = min(n_slices, math.ceil(x)) if x > 0.0 else 0
                        if m:
                            acc.add_prefix(i, m, h)
                        if on_trade:
                            fills = _fills(depth, first, i - 1, base, step, sign)
                            fills.append((sign * i, sign * h, size - prev))
                        break
                kind = "noise"

            if traded:
                n_trades += 1
                if last_trade_y is not None:
                    inc = y - last_trade_y
                    s2 = inc * inc
                    sq_sum += s2
                    sq_sq += s2 * s2
                    n_inc += 1
                last_trade_y = y
                if on_trade:
                    on_trade(TradeEvent(duration, kind == "jump", q, p0 + y_pre, p0 + y, tuple(fills)))
            if writer:
                writer.writerow([repr(duration), kind, repr(q), repr(p0 + y_pre), repr(p0 + y)])
            if p0 + y <= 0.0:
                raise RuntimeError(f"efficient price became non-positive at event {ev}")
    finally:
        if trace_file:
            trace_file.close()

    if n_inc:
        vpt = sq_sum / n_inc
        var = max(sq_sq / n_inc - vpt * vpt, 0.0)
        vpt_se = math.sqrt(var / max(n_inc - 1, 1))
    else:
        vpt = vpt_se = math.nan
    share = n_inf / n_trades if n_trades else math.nan
    share_se = math.sqrt(share * (1.0 - share) / n_trades) if n_trades else math.nan
    slices = (ask_acc.stats(1) + bid_acc.stats(-1)) if ticked else []
    n_noise = n - n_jumps
    return SimStats(
        n_events=n,
        n_jumps=n_jumps,
        n_noise=n_noise,
        n_trades=n_trades,
        n_informed_trades=n_inf,
        duration=duration,
        mu=mu,
        spread=spread_time / duration,
        variance_per_trade=vpt,
        variance_per_trade_se=vpt_se,
        informed_share=share,
        informed_share_se=share_se,
        clip_count=clips,
        clip_fraction=clips / n_noise if n_noise else 0.0,
        truncation_biased=(clips / n_noise if n_noise else 0.0) > CLIP_WARN_FRACTION,
        d_mean=d_sum / n if ticked else math.nan,
        d_histogram=d_hist if ticked else [],
        slices=sorted(slices, key=lambda s: (s.level, s.slice)),
        informed_sizes=sizes,
    )


def _fills(depth, first: int, last: int, base: float, step: float, sign: int) -> list:
    """Whole-level fills for levels first..last of one side (signed offsets)."""
    out, prev = [], 0.0
    for i in range(first, last + 1):
        h = base + i * step
        cum = depth(h)
        out.append((sign * i, sign * h, cum - prev))
        prev = cum
    return out


def run_many(config: SimConfig, seeds: Sequence[int], workers: int | None = None) -> list[SimStats]:
    """Independent runs of the same configuration, one per seed."""
    from dataclasses import replace

    configs = [replace(config, seed=s) for s in seeds]
    if workers == 1 or len(configs) == 1:
        return [run(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, configs))


# Analytic counterparts of the simulated statistics.


def _d_average(f, alpha: float, thresholds: Sequence[float]) -> float:
    """Mean of f(d) over d uniform on [0, alpha).

    The integrand jumps or kinks wherever a grid level crosses one of the
    ``thresholds`` (the half-spread, the jump-law scale), so integrate
    piecewise between those points.
    """
    cuts = {0.0, alpha}
    for t in thresholds:
        m = math.fmod(t, alpha)
        for c in (m, alpha - m):
            if 0.0 < c < alpha:
                cuts.add(c)
    pts = sorted(cuts)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=1e-14 * alpha, epsrel=1e-11, limit=200)
        total += val
    return total / alpha


def _informed_trade_probability(config: SimConfig, mu: float) -> float:
    """P[a jump triggers an informed trade], averaged over d in ticked mode."""
    law = config.jump
    if config.alpha == 0.0:
        return law.abs_survival(mu)
    alpha = config.alpha

    def p_trade(d: float) -> float:
        k_r = 1 + max(0, _strict_ceil((mu - d) / alpha))
        k_l = _strict_ceil((mu + d) / alpha)
        ask = d + (k_r - 1) * alpha
        bid = k_l * alpha - d
        return law.survival(ask) + law.survival(bid)

    return _d_average(p_trade, alpha, (mu, law.scale))


def informed_share_prediction(config: SimConfig) -> float:
    """Expected share of trades initiated by the informed trader.

    Zero tick: r P[|B|>mu] / (1 - r P[|B|<mu]).  With a tick the trade
    threshold is the first quoted level, averaged over d uniform.
    """
    mu = EquilibriumBook.solve(config.params).mu
    r = config.r
    p = _informed_trade_probability(config, mu)
    return r * p / (r * p + 1.0 - r)


def variance_per_trade_prediction(config: SimConfig) -> float:
    """r E[B^2] / P[an event is a trade].

    The efficient price is a martingale, so the squared move between trades
    is the sum of squared jumps in between (Wald); events per trade is the
    inverse trade probability.  Equals the zero-tick closed form when alpha=0.
    """
    mu = EquilibriumBook.solve(config.params).mu
    r = config.r
    p = _informed_trade_probability(config, mu)
    return r * config.jump.second_moment() / (r * p + 1.0 - r)


def marker_profit_prediction(config: SimConfig, level: int, fraction: float) -> float:
    """Expected profit per execution of the marker at ``fraction`` of a level's queue.

    ``fraction`` 0 is the head of the queue, 1 the tail.  Averaged over d
    uniform, as a ratio of expected profit to execution probability.  Bid
    levels give the same value as the matching ask level by symmetry.
    """
    if config.alpha <= 0:
        raise ValueError("queue markers exist only in ticked mode")
    if level == 0:
        raise ValueError("level must be non-zero")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    book = EquilibriumBook.solve(config.params)
    mu, r, alpha = book.mu, config.r, config.alpha
    law, vol = config.jump, config.volume
    i = abs(level)

    def parts(d: float) -> tuple[float, float]:
        k_r = 1 + max(0, _strict_ceil((mu - d) / alpha))
        if i < k_r:
            return 0.0, 0.0
        h = d + (i - 1) * alpha
        prev = book.shape(h - alpha) if i - 1 >= k_r else 0.0
        cur = book.shape(h)
        c = prev + fraction * (cur - prev)
        s_q = vol.survival(c)
        den = r * law.survival(h) + (1.0 - r) * s_q
        num = h * den - r * law.upper_mean(h)
        return num, den

    cuts = (mu, law.scale)
    num = _d_average(lambda d: parts(d)[0], alpha, cuts)
    den = _d_average(lambda d: parts(d)[1], alpha, cuts)
    return num / den if den > 0 else math.nan
