"""Statutory balance sheet inputs: contracts, assets and management rules."""

from __future__ import annotations

from dataclasses import dataclass, field

from .curves import DiscountCurve


@dataclass(frozen=True)
class Contract:
    """A pre-decremented with-profit contract.

    ``reserves[t]`` is the guaranteed technical reserve ``TR_x(t)`` for
    ``t = 0..maturity`` (zero at maturity); ``cashflows[t-1]`` is the
    guaranteed benefit and cost flow paid at ``t``.
    """

    id: str
    maturity: int
    reserves: tuple[float, ...]
    cashflows: tuple[float, ...]
    technical_rate: float = 0.0
    bonus: float = 0.0

    def __post_init__(self) -> None:
        m = int(self.maturity)
        if m < 1:
            raise ValueError(f"contract {self.id}: maturity must be >= 1")
        reserves = tuple(float(v) for v in self.reserves)
        cashflows = tuple(float(v) for v in self.cashflows)
        if len(reserves) != m + 1:
            raise ValueError(f"contract {self.id}: need {m + 1} reserve values (t=0..M), got {len(reserves)}")
        if len(cashflows) != m:
            raise ValueError(f"contract {self.id}: need {m} cash flows (t=1..M), got {len(cashflows)}")
        if reserves[-1] != 0.0:
            raise ValueError(f"contract {self.id}: reserve must be 0 at maturity")
        if any(c < 0.0 for c in cashflows):
            raise ValueError(f"contract {self.id}: guaranteed flows must be non-negative")
        if any(r < 0.0 for r in reserves) or self.bonus < 0.0:
            raise ValueError(f"contract {self.id}: reserves must be non-negative")
        object.__setattr__(self, "maturity", m)
        object.__setattr__(self, "reserves", reserves)
        object.__setattr__(self, "cashflows", cashflows)

    @classmethod
    def endowment(cls, id: str, sum_insured: float, maturity: int, technical_rate: float, bonus: float = 0.0) -> Contract:
        """Pure endowment paying ``sum_insured`` at maturity, reserved at the technical rate."""
        v = 1.0 / (1.0 + technical_rate)
        reserves = tuple(sum_insured * v ** (maturity - t) for t in range(maturity)) + (0.0,)
        cashflows = (0.0,) * (maturity - 1) + (float(sum_insured),)
        return cls(id, maturity, reserves, cashflows, technical_rate, bonus)

    @classmethod
    def annuity(cls, id: str, payment: float, maturity: int, technical_rate: float, bonus: float = 0.0) -> Contract:
        """Annuity-certain paying ``payment`` at the end of each year until maturity."""
        v = 1.0 / (1.0 + technical_rate)
        reserves = tuple(payment * sum(v**k for k in range(1, maturity - t + 1)) for t in range(maturity)) + (0.0,)
        return cls(id, maturity, reserves, (float(payment),) * maturity, technical_rate, bonus)

    def reserve(self, t: int) -> float:
        return self.reserves[t] if t <= self.maturity else 0.0

    def cashflow(self, t: int) -> float:
        return self.cashflows[t - 1] if 1 <= t <= self.maturity else 0.0

    def guaranteed_value(self, curve: DiscountCurve) -> float:
        """Guaranteed flows discounted on the initial curve."""
        return sum(curve[t] * self.cashflow(t) for t in range(1, self.maturity + 1))


@dataclass(frozen=True)
class Bond:
    """Fixed-coupon bullet bond; ``coupon`` is per unit of face, paid annually."""

    id: str
    face: float
    coupon: float
    maturity: int
    book_value: float

    def __post_init__(self) -> None:
        if self.maturity < 1:
            raise ValueError(f"bond {self.id}: maturity must be >= 1")
        if self.face < 0.0 or self.book_value < 0.0:
            raise ValueError(f"bond {self.id}: face and book value must be non-negative")

    def market_value(self, curve: DiscountCurve) -> float:
        return self.face * (
            self.coupon * sum(curve[k] for k in range(1, self.maturity + 1)) + curve[self.maturity]
        )


@dataclass(frozen=True)
class Equity:
    """Equity holding with a risk-neutral total return and proportional dividend."""

    id: str
    market_value: float
    book_value: float
    dividend_yield: float = 0.02
    volatility: float = 0.15

    def __post_init__(self) -> None:
        if self.market_value < 0.0 or self.book_value < 0.0:
            raise ValueError(f"equity {self.id}: values must be non-negative")
        if not 0.0 <= self.dividend_yield < 1.0:
            raise ValueError(f"equity {self.id}: dividend yield must be in [0, 1)")
        if self.volatility < 0.0:
            raise ValueError(f"equity {self.id}: volatility must be >= 0")


@dataclass(frozen=True)
class ManagementRules:
    gph: float = 0.8
    tax_rate: float = 0.25
    theta: float = 0.1
    declaration_rate: float = 0.3
    reinvestment_term: int = 10
    reinvestment: str = "par-bond"
    realization: str = "fund-shortfall"

    def __post_init__(self) -> None:
        if not 0.0 <= self.gph < 1.0:
            raise ValueError("gph must lie in [0, 1)")
        if not 0.0 <= self.tax_rate < 1.0:
            raise ValueError("tax rate must lie in [0, 1)")
        if self.theta <= 0.0:
            raise ValueError("theta must be > 0")
        if not 0.0 <= self.declaration_rate <= 1.0:
            raise ValueError("declaration rate must lie in [0, 1]")
        if self.reinvestment_term < 1:
            raise ValueError("reinvestment term must be >= 1")
        if self.reinvestment not in ("par-bond", "cash"):
            raise ValueError(f"unknown reinvestment rule {self.reinvestment!r}")
        if self.realization not in ("fund-shortfall", "none"):
            raise ValueError(f"unknown realization rule {self.realization!r}")


@dataclass(frozen=True)
class BalanceSheet:
    """Opening statutory balance sheet; asset book must equal ``TR + SF``."""

    contracts: tuple[Contract, ...]
    bonds: tuple[Bond, ...] = ()
    equities: tuple[Equity, ...] = ()
    cash: float = 0.0
    surplus_fund: float = 0.0
    tolerance: float = 1e-9

    def __post_init__(self) -> None:
        object.__setattr__(self, "contracts", tuple(self.contracts))
        object.__setattr__(self, "bonds", tuple(self.bonds))
        object.__setattr__(self, "equities", tuple(self.equities))
        if not self.contracts:
            raise ValueError("balance sheet needs at least one contract")
        ids = [c.id for c in self.contracts]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate contract ids")
        if self.surplus_fund < 0.0:
            raise ValueError("surplus fund must be non-negative")
        gap = self.asset_book_value - self.liability_book_value
        if abs(gap) > self.tolerance * max(1.0, abs(self.liability_book_value)):
            raise ValueError(
                f"asset book {self.asset_book_value:.6f} differs from liability book "
                f"{self.liability_book_value:.6f}: statutory equity is not supported"
            )

    @property
    def technical_reserves(self) -> float:
        return sum(c.reserve(0) + c.bonus for c in self.contracts)

    @property
    def liability_book_value(self) -> float:
        return self.technical_reserves + self.surplus_fund

    @property
    def asset_book_value(self) -> float:
        return self.cash + sum(b.book_value for b in self.bonds) + sum(e.book_value for e in self.equities)

    def market_value(self, curve: DiscountCurve) -> float:
        return self.cash + sum(b.market_value(curve) for b in self.bonds) + sum(e.market_value for e in self.equities)

    def unrealized_gains(self, curve: DiscountCurve) -> float:
        return self.market_value(curve) - self.asset_book_value

    @property
    def max_maturity(self) -> int:
        return max(c.maturity for c in self.contracts)


@dataclass(frozen=True)
class Portfolio:
    """Balance sheet plus rules, as loaded from one portfolio file."""

    balance_sheet: BalanceSheet
    rules: ManagementRules = field(default_factory=ManagementRules)
    horizon: int | None = None
    name: str = ""

    @property
    def T(self) -> int:
        return self.horizon if self.horizon is not None else self.balance_sheet.max_maturity

