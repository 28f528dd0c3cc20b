"""Initial term structure, one-year forwards and deflator dispersion.

Discount factors live on an annual integer grid ``t = 1..T``; ``P(0,0) = 1``
is implicit. Spot-rate series are annually compounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date

import numpy as np


@dataclass(frozen=True)
class DiscountCurve:
    """Zero-coupon prices ``P(0,t)`` for ``t = 1..T``."""

    factors: tuple[float, ...]

    def __post_init__(self) -> None:
        factors = tuple(float(f) for f in self.factors)
        if not factors:
            raise ValueError("discount curve needs at least one tenor")
        for t, f in enumerate(factors, start=1):
            if not math.isfinite(f) or f <= 0.0:
                raise ValueError(f"discount factor at t={t} must be positive, got {f!r}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def from_pairs(cls, pairs) -> DiscountCurve:
        """Build from ``(tenor, factor)`` pairs; tenors must read 1, 2, ..., T."""
        pairs = list(pairs)
        tenors = [int(t) for t, _ in pairs]
        if tenors != list(range(1, len(tenors) + 1)):
            raise ValueError(f"tenors must be 1..T strictly increasing, got {tenors[:5]}...")
        return cls(tuple(f for _, f in pairs))

    @classmethod
    def flat(cls, rate: float, horizon: int) -> DiscountCurve:
        return cls(tuple((1.0 + rate) ** -t for t in range(1, horizon + 1)))

    @property
    def horizon(self) -> int:
        return len(self.factors)

    @property
    def maturities(self) -> tuple[int, ...]:
        return tuple(range(1, self.horizon + 1))

    def with_origin(self) -> np.ndarray:
        """Array ``[P(0,0), P(0,1), ..., P(0,T)]``."""
        return np.concatenate(([1.0], np.asarray(self.factors)))

    def __getitem__(self, t: int) -> float:
        return deterministic_deflator(self, t)


@dataclass(frozen=True)
class ForwardCurve:
    """Simple one-year forwards; ``forwards[t-1]`` covers year ``t-1 -> t``."""

    forwards: tuple[float, ...]

    def __post_init__(self) -> None:
        forwards = tuple(float(f) for f in self.forwards)
        if any(not 1.0 + f > 0.0 for f in forwards):
            raise ValueError("forwards must satisfy 1 + F > 0")
        object.__setattr__(self, "forwards", forwards)

    def bank_account(self) -> np.ndarray:
        """``B_0 .. B_T`` for the deterministic roll-over of these forwards."""
        return np.concatenate(([1.0], np.cumprod(1.0 + np.asarray(self.forwards))))


@dataclass(frozen=True)
class SpotRateSeries:
    """Monthly observations of one annually compounded spot tenor."""

    dates: tuple[date, ...]
    rates: tuple[float, ...]
    tenor: int

    def __post_init__(self) -> None:
        if len(self.rates) < 2:
            raise ValueError("spot series needs at least 2 observations")
        if len(self.dates) != len(self.rates):
            raise ValueError("dates and rates differ in length")
        if int(self.tenor) < 1:
            raise ValueError("tenor must be >= 1")
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tenor", int(self.tenor))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rates, dtype=float)


def bootstrap_forwards(curve: DiscountCurve) -> ForwardCurve:
    p = curve.with_origin()
    return ForwardCurve(tuple(p[:-1] / p[1:] - 1.0))


def deterministic_deflator(curve: DiscountCurve, t: int) -> float:
    if not 1 <= t <= curve.horizon:
        raise IndexError(f"t={t} outside curve tenors 1..{curve.horizon}")
    return curve.factors[t - 1]


def max_discount_factor(curve: DiscountCurve, M: int) -> float:
    """``max_{1<=t<=M} P(0,t)``; equals ``1/(1+F_0)`` when forwards are positive."""
    if not 1 <= M <= curve.horizon:
        raise IndexError(f"M={M} outside curve tenors 1..{curve.horizon}")
    return max(curve.factors[:M])


def argmax_discount_factor(curve: DiscountCurve, M: int) -> int:
    max_discount_factor(curve, M)
    return int(np.argmax(curve.factors[:M])) + 1


def deflator_cov(series: SpotRateSeries, curve: DiscountCurve | None, t: int) -> float:
    """Coefficient of variation ``SD[B_t^-1] / P(0,t)`` estimated from a spot series.

    At the series' own tenor the sample CoV of ``(1+r)^-t`` is returned. Other
    tenors use the flat-volatility duration rule ``t * SD[r] / (1 + mean[r])``.
    Sample deviations use the ``n-1`` denominator.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    if curve is not None and t > curve.horizon:
        raise IndexError(f"t={t} beyond curve horizon {curve.horizon}")
    r = np.sort(series.as_array())  # sorted: result must not depend on observation order
    if t == series.tenor:
        d = (1.0 + r) ** (-t)
        mean = math.fsum(d) / d.size
        if mean == 0.0:
            raise ValueError("degenerate deflator sample")
        return _sample_sd(d) / mean
    return t * _sample_sd(r) / (1.0 + math.fsum(r) / r.size)


def deflator_cov_table(series: SpotRateSeries, curve: DiscountCurve, horizon: int | None = None) -> np.ndarray:
    """CoV for ``t = 1..horizon`` (default: curve horizon)."""
    horizon = curve.horizon if horizon is None else horizon
    return np.array([deflator_cov(series, curve, t) for t in range(1, horizon + 1)])


def _sample_sd(x: np.ndarray) -> float:
    mean = math.fsum(x) / x.size
    if np.all(x == x[0]):
        return 0.0
    return math.sqrt(math.fsum((x - mean) ** 2) / (x.size - 1))
