"""Risk-neutral interest-rate scenarios on the annual grid.

Model: the one-year log growth of the bank account is ``ln(1 + F_t) = phi_t + x_t``
with ``x`` a Gaussian AR(1) obtained by sampling an Ornstein-Uhlenbeck factor
exactly on integer years (``x_0 = 0``). The deterministic shift ``phi`` is fitted
in closed form so that ``E[B_t^-1] = P(0,t)`` for every tenor of the input
curve, and bond prices inside a scenario follow from the conditional Gaussian
law, which makes every deflated zero-coupon bond a martingale.

Each antithetic pair ``(2k, 2k+1)`` draws its innovations from a generator
seeded by ``(seed, k)``, so results do not depend on how pairs are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import DiscountCurve, bootstrap_forwards


@dataclass(frozen=True)
class RateModelParams:
    mean_reversion: float = 0.2
    volatility: float = 0.01
    equity_correlation: float = 0.0
    model: str = "gaussian-shift-1f"

    def __post_init__(self) -> None:
        if self.volatility < 0.0:
            raise ValueError("volatility must be >= 0")
        if self.mean_reversion <= 0.0:
            raise ValueError("mean reversion must be > 0")
        if not -1.0 <= self.equity_correlation <= 1.0:
            raise ValueError("equity correlation must lie in [-1, 1]")
        if self.model != "gaussian-shift-1f":
            raise ValueError(f"unknown rate model {self.model!r}")

    @property
    def rho(self) -> float:
        return math.exp(-self.mean_reversion)

    @property
    def innovation_sd(self) -> float:
        a = self.mean_reversion
        return self.volatility * math.sqrt(-math.expm1(-2.0 * a) / (2.0 * a))


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """Simulated forwards and deflators, shape ``(n_scenarios, T)`` / ``(n, T+1)``.

    ``forwards[:, t-1]`` is ``F_{t-1}``, fixed at ``t-1``; ``deflators[:, t]`` is
    ``B_t^-1``. ``pair`` holds the antithetic group of each scenario.
    ``state``, ``shift`` and ``params`` are absent for imported scenario files,
    which can then be tested but not used to price bonds.
    """

    forwards: np.ndarray
    deflators: np.ndarray
    pair: np.ndarray
    seed: int | None = None
    equity_noise: np.ndarray | None = None
    state: np.ndarray | None = None
    shift: np.ndarray | None = None
    params: RateModelParams | None = None
    curve_horizon: int | None = None
    _rows: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        for name in ("forwards", "deflators", "pair", "equity_noise", "state", "shift"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, copy=True)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)
        if self.forwards.ndim != 2 or self.forwards.shape[0] < 1:
            raise ValueError("scenario set is empty")
        if self.deflators.shape != (self.n_scenarios, self.horizon + 1):
            raise ValueError("deflators must have shape (n, T+1)")

    @property
    def n_scenarios(self) -> int:
        return self.forwards.shape[0]

    @property
    def horizon(self) -> int:
        return self.forwards.shape[1]

    @property
    def bank_account(self) -> np.ndarray:
        return 1.0 / self.deflators

    @property
    def deterministic(self) -> bool:
        """Zero-volatility sets freeze every risk driver, equity included."""
        return self.params is not None and self.params.volatility == 0.0

    @property
    def can_price_bonds(self) -> bool:
        return self.state is not None and self.shift is not None and self.params is not None

    def zcb(self, t: int, n_max: int) -> np.ndarray:
        """Prices ``P(t, t+k)`` for ``k = 1..n_max`` in every scenario, shape ``(n, n_max)``."""
        if not self.can_price_bonds:
            raise ValueError("scenario set carries no term-structure state; cannot price bonds")
        if t + n_max > self.curve_horizon:
            raise ValueError(f"bond maturity {t + n_max} beyond curve horizon {self.curve_horizon}")
        if n_max <= 0:
            return np.ones((self.n_scenarios, 0))
        A, V = _loadings(self.params, n_max)
        cum_phi = np.cumsum(self.shift[t : t + n_max])
        x = self.state[:, t][:, None]
        return np.exp(-cum_phi[None, :] - x * A[None, :] + 0.5 * V[None, :])

    def subset(self, idx) -> ScenarioSet:
        idx = np.asarray(idx)
        pick = lambda a: None if a is None else a[idx]  # noqa: E731
        return ScenarioSet(
            forwards=self.forwards[idx],
            deflators=self.deflators[idx],
            pair=self.pair[idx],
            seed=self.seed,
            equity_noise=pick(self.equity_noise),
            state=pick(self.state),
            shift=self.shift,
            params=self.params,
            curve_horizon=self.curve_horizon,
        )

    def bumped(self, bump: float) -> ScenarioSet:
        """Copy with every forward shifted by ``bump`` (deliberately not arbitrage-free)."""
        fwd = self.forwards + bump
        defl = np.concatenate((np.ones((self.n_scenarios, 1)), 1.0 / np.cumprod(1.0 + fwd, axis=1)), axis=1)
        return ScenarioSet(fwd, defl, self.pair, self.seed, self.equity_noise)


def _loadings(params: RateModelParams, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Factor loading ``A(n)`` and conditional variance ``V(n)`` of ``sum_{u<n} x_{t+u}``."""
    rho, s = params.rho, params.innovation_sd
    n = np.arange(1, n_max + 1)
    A = (1.0 - rho**n) / (1.0 - rho)
    # an innovation entering m years before the end contributes (1-rho^m)/(1-rho)
    contrib = ((1.0 - rho ** np.arange(1, n_max)) / (1.0 - rho)) ** 2
    V = s * s * np.concatenate(([0.0], np.cumsum(contrib)))
    return A, V


def fitted_shift(curve: DiscountCurve, params: RateModelParams) -> np.ndarray:
    """``phi_0 .. phi_{T-1}`` such that ``E[B_t^-1] = P(0,t)`` for ``t = 1..T``."""
    _, V = _loadings(params, curve.horizon)
    cum = -np.log(np.asarray(curve.factors)) + 0.5 * V
    return np.diff(np.concatenate(([0.0], cum)))


def generate(
    curve: DiscountCurve,
    params: RateModelParams,
    n: int,
    seed: int,
    horizon: int | None = None,
    antithetic: bool = True,
) -> ScenarioSet:
    """Simulate ``n`` scenarios up to ``horizon`` (default: the curve horizon).

    With antithetic sampling scenario ``2k+1`` mirrors ``2k``; an odd trailing
    scenario stays unpaired. Zero volatility returns copies of the
    deterministic forward path with equity noise switched off.
    """
    if n < 1:
        raise ValueError("need at least one scenario")
    T = curve.horizon if horizon is None else int(horizon)
    if T < 1 or T > curve.horizon:
        raise ValueError(f"curve horizon {curve.horizon} shorter than requested horizon {T}")

    rho, s = params.rho, params.innovation_sd
    # innovations: T for the rate factor (x_1..x_T), T for equity
    eps = np.empty((n, 2 * T))
    pair = np.empty(n, dtype=np.int64)
    width = 2 if antithetic else 1
    for k in range(-(-n // width)):
        z = np.random.default_rng([seed, k]).standard_normal(2 * T)
        lo = k * width
        eps[lo] = z
        pair[lo] = k
        if antithetic and lo + 1 < n:
            eps[lo + 1] = -z
            pair[lo + 1] = k
    rate_eps, equity_eps = eps[:, :T], eps[:, T:]
    c = params.equity_correlation
    equity_noise = c * rate_eps + math.sqrt(1.0 - c * c) * equity_eps

    x = np.zeros((n, T + 1))
    for t in range(1, T + 1):
        x[:, t] = rho * x[:, t - 1] + s * rate_eps[:, t - 1]
    shift = fitted_shift(curve, params)

    if params.volatility == 0.0:
        det = np.asarray(bootstrap_forwards(curve).forwards[:T])
        forwards = np.broadcast_to(det, (n, T)).copy()
        x[:] = 0.0
        equity_noise = np.zeros_like(equity_noise)
    else:
        forwards = np.expm1(shift[None, :T] + x[:, :T])
    deflators = np.concatenate((np.ones((n, 1)), 1.0 / np.cumprod(1.0 + forwards, axis=1)), axis=1)
    return ScenarioSet(
        forwards=forwards,
        deflators=deflators,
        pair=pair,
        seed=seed,
        equity_noise=equity_noise,
        state=x,
        shift=shift,
        params=params,
        curve_horizon=curve.horizon,
    )


@dataclass(frozen=True)
class MartingaleDiagnostics:
    relative_errors: np.ndarray  # index t-1 -> tenor t
    max_error: float
    worst_tenor: int
    tolerance: float
    passed: bool
    n_scenarios: int


def martingale_test(scenarios: ScenarioSet, curve: DiscountCurve, tolerance: float = 5e-3) -> MartingaleDiagnostics:
    """Compare ``mean_w B_t(w)^-1`` with ``P(0,t)`` for every simulated tenor."""
    if scenarios.n_scenarios == 0:
        raise ValueError("empty scenario set")
    T = scenarios.horizon
    if T > curve.horizon:
        raise ValueError("scenario horizon exceeds curve horizon")
    p = np.asarray(curve.factors[:T])
    means = np.array([math.fsum(col) / col.size for col in scenarios.deflators[:, 1:].T])
    rel = np.abs(means - p) / p
    worst = int(np.argmax(rel))
    max_err = float(rel[worst])
    return MartingaleDiagnostics(rel, max_err, worst + 1, tolerance, max_err <= tolerance, scenarios.n_scenarios)
