"""Laws of the efficient-price jump B and of the noise-trader order size Q^u.

Both laws are symmetric around zero.  Jump laws expose the truncated
moments the equilibrium formulas need; volume laws expose CDF, survival
and quantile.  New families subclass :class:`JumpLaw` / :class:`VolumeLaw`
and register themselves in ``JUMP_FAMILIES`` / ``VOLUME_FAMILIES``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable, Mapping

import numpy as np


def bisect_quantile(
    cdf: Callable[[float], float],
    p: float,
    scale: float = 1.0,
    tol: float = 1e-12,
) -> float:
    """Invert a continuous increasing CDF by bracketed bisection.

    The bracket starts at ``[-scale, scale]`` and doubles until it contains
    the target; bisection stops once the bracket is narrower than ``tol``.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p!r}")
    lo, hi = -scale, scale
    while cdf(lo) > p:
        lo *= 2.0
    while cdf(hi) < p:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class JumpLaw:
    """Symmetric law of the efficient-price jump B."""

    family: str = ""

    @property
    def scale(self) -> float:
        raise NotImplementedError

    def abs_survival(self, x: float) -> float:
        """P[|B| > x] for x >= 0."""
        raise NotImplementedError

    def abs_upper_mean(self, x: float) -> float:
        """E[|B| 1_{|B| > x}] for x >= 0."""
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    def pdf(self, x: float) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def cdf(self, x: float) -> float:
        if x >= 0.0:
            return 1.0 - 0.5 * self.abs_survival(x)
        return 0.5 * self.abs_survival(-x)

    def survival(self, x: float) -> float:
        """P[B > x]; computed from the tail so it stays accurate far out."""
        if x >= 0.0:
            return 0.5 * self.abs_survival(x)
        return 1.0 - 0.5 * self.abs_survival(-x)

    def upper_mean(self, x: float) -> float:
        """E[B 1_{B > x}] for x >= 0."""
        if x < 0.0:
            raise ValueError("upper_mean needs x >= 0; use symmetry for the bid side")
        return 0.5 * self.abs_upper_mean(x)

    def expected_max_excess(self, x: float) -> float:
        """E[max(B/x, 1)] - 1 for x > 0.

        Kept separate from :meth:`expected_max_ratio` because the equilibrium
        depth far from the spread depends on this small difference.
        """
        if x <= 0.0:
            raise ValueError(f"expected_max_ratio needs x > 0, got {x!r}")
        return 0.5 * (self.abs_upper_mean(x) / x - self.abs_survival(x))

    def expected_max_ratio(self, x: float) -> float:
        return 1.0 + self.expected_max_excess(x)

    def excess_inverse(self, target: float) -> float:
        """The unique x > 0 with expected_max_excess(x) == target."""
        if target <= 0.0:
            raise ValueError("target excess must be positive")
        lo = hi = self.scale
        while self.expected_max_excess(lo) < target:
            lo *= 0.5
        while self.expected_max_excess(hi) > target:
            hi *= 2.0
        # geometric bisection: relative tolerance on x
        while hi / lo - 1.0 > 1e-14:
            mid = math.sqrt(lo * hi)
            if mid in (lo, hi):
                break
            if self.expected_max_excess(mid) > target:
                lo = mid
            else:
                hi = mid
        return math.sqrt(lo * hi)

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ParetoSymmetric(JumpLaw):
    """|B| ~ Pareto(k, x0) with an independent fair sign.

    The density is taken right-continuous at |x| = x0.  Between -x0 and x0
    the CDF is flat at 1/2.
    """

    k: float
    x0: float
    family = "pareto"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k) and self.k > 2.0):
            raise ValueError(f"Pareto shape k must be > 2 (finite variance), got {self.k!r}")
        if not (math.isfinite(self.x0) and self.x0 > 0.0):
            raise ValueError(f"Pareto scale x0 must be > 0, got {self.x0!r}")

    @property
    def scale(self) -> float:
        return self.x0

    def pdf(self, x: float) -> float:
        a = abs(x)
        if a < self.x0:
            return 0.0
        return 0.5 * self.k * self.x0**self.k / a ** (self.k + 1.0)

    def abs_survival(self, x: float) -> float:
        if x < 0.0:
            raise ValueError("abs_survival needs x >= 0")
        if x < self.x0:
            return 1.0
        return (self.x0 / x) ** self.k

    def abs_upper_mean(self, x: float) -> float:
        if x < 0.0:
            raise ValueError("abs_upper_mean needs x >= 0")
        k = self.k
        if x < self.x0:
            return k * self.x0 / (k - 1.0)
        return k / (k - 1.0) * x * (self.x0 / x) ** k

    def second_moment(self) -> float:
        return self.k * self.x0**2 / (self.k - 2.0)

    def expected_max_excess(self, x: float) -> float:
        if x <= 0.0:
            raise ValueError(f"expected_max_ratio needs x > 0, got {x!r}")
        k = self.k
        if x >= self.x0:
            return (self.x0 / x) ** k / (2.0 * (k - 1.0))
        return k * self.x0 / (2.0 * (k - 1.0) * x) - 0.5

    def excess_inverse(self, target: float) -> float:
        if target <= 0.0:
            raise ValueError("target excess must be positive")
        k = self.k
        at_scale = 1.0 / (2.0 * (k - 1.0))
        if target <= at_scale:
            return self.x0 * (2.0 * (k - 1.0) * target) ** (-1.0 / k)
        return k * self.x0 / ((k - 1.0) * (2.0 * target + 1.0))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        # 1 - u lies in (0, 1]; the power never divides by zero
        return sign * self.x0 * (1.0 - u) ** (-1.0 / self.k)

    def to_config(self) -> dict:
        return {"family": self.family, "k": self.k, "x0": self.x0}


class VolumeLaw:
    """Symmetric law of the signed noise order size (positive = buy)."""

    family: str = ""

    @property
    def scale(self) -> float:
        raise NotImplementedError

    def cdf(self, q: float) -> float:
        raise NotImplementedError

    def pdf(self, q: float) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def survival(self, q: float) -> float:
        return self.cdf(-q)

    def quantile(self, p: float) -> float:
        return bisect_quantile(self.cdf, p, self.scale)

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class NormalVolume(VolumeLaw):
    sigma: float = 1.0
    family = "normal"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValueError(f"volume sigma must be > 0, got {self.sigma!r}")
        object.__setattr__(self, "_dist", NormalDist(0.0, self.sigma))

    @property
    def scale(self) -> float:
        return self.sigma

    def cdf(self, q: float) -> float:
        return 0.5 * math.erfc(-q / (self.sigma * math.sqrt(2.0)))

    def pdf(self, q: float) -> float:
        z = q / self.sigma
        return math.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))

    def quantile(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise ValueError(f"probability must lie in (0, 1), got {p!r}")
        return self._dist.inv_cdf(p)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(0.0, self.sigma, size)

    def to_config(self) -> dict:
        return {"family": self.family, "sigma": self.sigma}


JUMP_FAMILIES: dict[str, Callable[..., JumpLaw]] = {"pareto": ParetoSymmetric}
VOLUME_FAMILIES: dict[str, Callable[..., VolumeLaw]] = {"normal": NormalVolume}


def _build(spec: Mapping, families: Mapping[str, Callable], what: str):
    params = dict(spec)
    family = str(params.pop("family", "")).lower()
    if family not in families:
        raise ValueError(f"unknown {what} family {family!r}; expected one of {sorted(families)}")
    try:
        return families[family](**{k: float(v) for k, v in params.items()})
    except TypeError as exc:
        raise ValueError(f"bad {what} parameters {params}: {exc}") from None


def jump_law_from_config(spec: Mapping) -> JumpLaw:
    """``{"family": "pareto", "k": 3.0, "x0": 0.005}`` -> :class:`ParetoSymmetric`."""
    return _build(spec, JUMP_FAMILIES, "jump")


def volume_law_from_config(spec: Mapping) -> VolumeLaw:
    return _build(spec, VOLUME_FAMILIES, "volume")


# Module-level query functions.


def jump_cdf(law: JumpLaw, x: float) -> float:
    return law.cdf(x)


def jump_upper_mean(law: JumpLaw, x: float) -> float:
    """E[B 1_{B>x}], x >= 0."""
    return law.upper_mean(x)


def expected_max_ratio(law: JumpLaw, x: float) -> float:
    """E[max(B/x, 1)], x > 0."""
    return law.expected_max_ratio(x)


def jump_abs_upper_mean(law: JumpLaw, x: float) -> float:
    """E[|B| 1_{|B|>x}], x >= 0."""
    return law.abs_upper_mean(x)


def jump_second_moment(law: JumpLaw) -> float:
    return law.second_moment()


def volume_cdf(law: VolumeLaw, q: float) -> float:
    return law.cdf(q)


def volume_quantile(law: VolumeLaw, p: float) -> float:
    return law.quantile(p)
