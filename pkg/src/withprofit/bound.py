"""Analytic lower bound for future discretionary benefits.

Pipeline: ``eta`` per maturity -> depreciation ``D = eta / (1 + eta)`` ->
``LB1 = D (A0 - GB)`` -> subtract the surplus fund and the cross-financing
cap ``F`` computed on a geometric run-off of ``A0``.

Two arithmetic conventions are offered. ``"exact"`` carries full precision
and rounds only for display. ``"published"`` rounds ``D`` to a whole percent
and ``F`` to one decimal before combining them, for figures that were
tabulated with that intermediate rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .curves import DiscountCurve, max_discount_factor

ROUNDING_MODES = ("exact", "published")


def round_half_up(x: float, digits: int = 1) -> float:
    q = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(x)).quantize(q, rounding=ROUND_HALF_UP))


def eta(P0M: float, cov_B: float, cov_ph: float, gph: float) -> float:
    """``P(0,M) (1 - cov_B cov_ph) gph / (1 - gph)``."""
    if not 0.0 <= gph < 1.0:
        raise ValueError("gph must lie in [0, 1)")
    return P0M * (1.0 - cov_B * cov_ph) * gph / (1.0 - gph)


def depreciation(eta_value: float) -> float:
    if eta_value < 0.0:
        raise ValueError("eta must be >= 0")
    return eta_value / (1.0 + eta_value)


def weighted_depreciation(contracts) -> float:
    """Weighted ``D`` from ``(A0_x, GB_x, eta_x)`` triples, weights ``(A0_x - GB_x)/(A0 - GB)``."""
    contracts = list(contracts)
    if not contracts:
        raise ValueError("no contracts")
    excess = [a - g for a, g, _ in contracts]
    total = math.fsum(excess)
    if total == 0.0:
        raise ZeroDivisionError("aggregate A0 equals aggregate GB")
    return math.fsum(w * depreciation(e) for w, (_, _, e) in zip(excess, contracts)) / total


def geometric_runoff(A0: float, T: int, half_life: float = 10.0) -> np.ndarray:
    """Buckets ``A0^{x(t)}``, ``t = 1..T``; the last bucket holds the whole tail."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if half_life <= 0.0:
        raise ValueError("half-life must be > 0")
    t = np.arange(1, T + 1)
    remain = 2.0 ** (-t / half_life)
    prev = 2.0 ** (-(t - 1) / half_life)
    buckets = (prev - remain) * A0
    buckets[-1] = prev[-1] * A0
    return buckets


def bucket_etas(curve: DiscountCurve, cov_B, cov_ph: float, gph: float, T: int, exact: bool = False) -> np.ndarray:
    """``eta_{x(t)}`` for ``t = 1..T`` using ``P(0,t)`` and the per-tenor deflator CoV."""
    if curve.horizon < T:
        raise ValueError(f"curve horizon {curve.horizon} shorter than T={T}")
    cov_B = np.asarray(cov_B, dtype=float)
    if cov_B.size < T:
        raise ValueError(f"deflator CoV needed for tenors 1..{T}")
    out = np.array([eta(curve[t], cov_B[t - 1], cov_ph, gph) for t in range(1, T + 1)])
    if exact:
        out = out / np.maximum.accumulate(np.asarray(curve.factors[:T]))
    return out


def cross_financing_F(
    buckets,
    C0: float,
    gph: float,
    curve: DiscountCurve,
    cov_B,
    cov_ph: float = 0.05,
    exact: bool = False,
) -> float:
    """``C0 sum_t D_{x(t)} (T-t)/T A0^{x(t)}``."""
    buckets = np.asarray(buckets, dtype=float)
    T = buckets.size
    e = bucket_etas(curve, cov_B, cov_ph, gph, T, exact)
    t = np.arange(1, T + 1)
    return C0 * math.fsum(e / (1.0 + e) * (T - t) / T * buckets)


@dataclass(frozen=True)
class BoundInputs:
    BV0: float
    UG0: float
    GB: float
    SF0: float
    curve: DiscountCurve
    cov_B: tuple[float, ...]
    gph: float = 0.8
    cov_ph: float = 0.05
    M: int = 15
    C0: float = 0.03
    T: int = 60
    half_life: float = 10.0
    deduct_surplus_fund: bool = True
    exact: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "cov_B", tuple(float(c) for c in self.cov_B))
        if not 0.0 <= self.gph < 1.0:
            raise ValueError("gph must lie in [0, 1)")
        if not 0.0 <= self.C0 < 1.0:
            raise ValueError("C0 must lie in [0, 1)")
        if self.cov_ph < 0.0:
            raise ValueError("cov_ph must be >= 0")
        if not 1 <= self.M <= self.curve.horizon:
            raise ValueError(f"M={self.M} outside curve tenors")
        if self.T < 1 or self.T > self.curve.horizon:
            raise ValueError(f"T={self.T} outside curve tenors")
        if len(self.cov_B) < max(self.T, self.M):
            raise ValueError("deflator CoV table shorter than the horizon")

    @property
    def A0(self) -> float:
        return self.BV0 + self.UG0

    def replace(self, **changes) -> BoundInputs:
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class LowerBoundResult:
    eta: float
    D: float
    LB1: float
    F: float
    LB: float
    SF_deduction: float
    rounding: str
    buckets: list = field(default_factory=list)  # (t, A0^{x(t)}, eta_t, D_t, C(t))


def lower_bound(inputs: BoundInputs, rounding: str = "exact") -> LowerBoundResult:
    if rounding not in ROUNDING_MODES:
        raise ValueError(f"rounding must be one of {ROUNDING_MODES}")
    i = inputs
    e = eta(i.curve[i.M], i.cov_B[i.M - 1], i.cov_ph, i.gph)
    if i.exact:
        e /= max_discount_factor(i.curve, i.M)
    D = depreciation(e)
    buckets = geometric_runoff(i.A0, i.T, i.half_life)
    F = cross_financing_F(buckets, i.C0, i.gph, i.curve, i.cov_B, i.cov_ph, i.exact)
    if rounding == "published":
        D = round_half_up(D, 2)
        F = round_half_up(F, 1)
    LB1 = D * (i.A0 - i.GB)
    sf = i.SF0 if i.deduct_surplus_fund else 0.0
    etas = bucket_etas(i.curve, i.cov_B, i.cov_ph, i.gph, i.T, i.exact)
    detail = [
        (t, float(buckets[t - 1]), float(etas[t - 1]), depreciation(float(etas[t - 1])), i.C0 * (i.T - t) / i.T)
        for t in range(1, i.T + 1)
    ]
    return LowerBoundResult(e, D, LB1, F, LB1 - sf - F, sf, rounding, detail)


@dataclass(frozen=True)
class SensitivityGrid:
    M_values: tuple[int, ...]
    gph_values: tuple[float, ...]
    C0_values: tuple[float, ...]
    LB: dict  # (M, gph, C0) -> LB
    F: dict  # (gph, C0) -> F
    rounding: str

    def lb_table(self, M: int) -> list[list[float]]:
        """Rows by C0, columns by gph."""
        return [[self.LB[(M, g, c)] for g in self.gph_values] for c in self.C0_values]

    def f_table(self) -> list[list[float]]:
        """Rows by gph, columns by C0."""
        return [[self.F[(g, c)] for c in self.C0_values] for g in self.gph_values]


def sensitivity_grid(inputs: BoundInputs, M_values, gph_values, C0_values, rounding: str = "exact") -> SensitivityGrid:
    M_values, gph_values, C0_values = tuple(M_values), tuple(gph_values), tuple(C0_values)
    if not (M_values and gph_values and C0_values):
        raise ValueError("grids must be non-empty")
    LB, F = {}, {}
    for g in gph_values:
        for c in C0_values:
            for m in M_values:
                res = lower_bound(inputs.replace(M=m, gph=g, C0=c), rounding)
                LB[(m, g, c)] = res.LB
                F[(g, c)] = res.F
    return SensitivityGrid(M_values, gph_values, C0_values, LB, F, rounding)


def format_lb_table(grid: SensitivityGrid, M: int) -> str:
    head = f"{'M=' + str(M):>8} |" + "".join(f" gph={g:.0%}".rjust(11) + " |" for g in grid.gph_values)
    lines = [head, "-" * len(head)]
    for c, row in zip(grid.C0_values, grid.lb_table(M)):
        lines.append(f"{'C0=' + format(c, '.0%'):>8} |" + "".join(f"{round_half_up(v, 1):>11.1f} |" for v in row))
    return "\n".join(lines)


def format_f_table(grid: SensitivityGrid) -> str:
    head = f"{'F':>8} |" + "".join(f" C0={c:.0%}".rjust(11) + " |" for c in grid.C0_values)
    lines = [head, "-" * len(head)]
    for g, row in zip(grid.gph_values, grid.f_table()):
        lines.append(f"{'gph=' + format(g, '.0%'):>8} |" + "".join(f"{round_half_up(v, 1):>11.1f} |" for v in row))
    return "\n".join(lines)
