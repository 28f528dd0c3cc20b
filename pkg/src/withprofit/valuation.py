"""Monte Carlo estimators on projection ledgers and the market-value leakage test.

Antithetic pairs count as one observation for standard errors. All reductions
use exactly rounded sums, so estimates do not depend on scenario order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import DiscountCurve
from .projection import CashflowLedger


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float

    def __iter__(self):
        yield self.value
        yield self.se


def estimate(per_scenario: np.ndarray, pair: np.ndarray) -> Estimate:
    """Scenario mean with a standard error from pair-averaged observations."""
    x = np.asarray(per_scenario, dtype=float)
    if x.size == 0:
        raise ValueError("no scenarios")
    mean = math.fsum(x) / x.size
    order = np.argsort(pair, kind="stable")
    groups = np.split(x[order], np.flatnonzero(np.diff(pair[order])) + 1)
    obs = np.array([math.fsum(g) / g.size for g in groups])
    if obs.size < 2:
        return Estimate(mean, 0.0)
    centre = math.fsum(obs) / obs.size
    var = math.fsum((obs - centre) ** 2) / (obs.size - 1)
    return Estimate(mean, math.sqrt(var / obs.size))


def _pv(ledger: CashflowLedger, flow: np.ndarray) -> np.ndarray:
    return (ledger.deflators[:, 1:] * flow[:, 1:]).sum(axis=1)


def _require(ledger: CashflowLedger) -> None:
    if ledger is None or ledger.n_scenarios == 0:
        raise ValueError("empty ledger set")


def best_estimate(ledger: CashflowLedger) -> tuple[Estimate, Estimate, Estimate]:
    """``(BE, GB, FDB)``; GB here is the scenario-deflated guaranteed stream."""
    _require(ledger)
    f = ledger.flows
    return (
        estimate(_pv(ledger, f["cf"]), ledger.pair),
        estimate(_pv(ledger, f["cf_guaranteed"]), ledger.pair),
        estimate(_pv(ledger, f["cf_discretionary"]), ledger.pair),
    )


def vif_tax(ledger: CashflowLedger) -> tuple[Estimate, Estimate]:
    _require(ledger)
    return (
        estimate(_pv(ledger, ledger.flows["sh"]), ledger.pair),
        estimate(_pv(ledger, ledger.flows["tax"]), ledger.pair),
    )


def guaranteed_on_curve(ledger: CashflowLedger, curve: DiscountCurve) -> float:
    """GB revalued on the initial curve; guaranteed flows are deterministic."""
    g = ledger.contract_guaranteed.sum(axis=0)
    return math.fsum(curve[t] * g[t] for t in range(1, ledger.horizon + 1))


def contract_best_estimates(ledger: CashflowLedger) -> dict[str, Estimate]:
    """BE split by contract, plus the collective surplus-fund payouts."""
    out = {}
    n = ledger.n_scenarios
    for k, cid in enumerate(ledger.contract_ids):
        flow = np.broadcast_to(ledger.contract_guaranteed[k], (n, ledger.horizon + 1)) + ledger.contract_discretionary[k]
        out[cid] = estimate(_pv(ledger, flow), ledger.pair)
    out["collective"] = estimate(_pv(ledger, ledger.collective), ledger.pair)
    return out


@dataclass(frozen=True)
class ValuationResult:
    BE: float
    GB: float
    FDB: float
    VIF: float
    TAX: float
    E_terminal: float
    residual: float
    relative_residual: float
    n_scenarios: int
    BV0: float
    UG0: float
    se: dict = field(default_factory=dict)
    GB_curve: float | None = None
    seed: int | None = None

    @property
    def MV0(self) -> float:
        return self.BV0 + self.UG0

    def as_dict(self) -> dict:
        return {
            "BE": self.BE, "GB": self.GB, "FDB": self.FDB, "VIF": self.VIF, "TAX": self.TAX,
            "E_terminal": self.E_terminal, "GB_curve": self.GB_curve,
            "BV0": self.BV0, "UG0": self.UG0, "residual": self.residual,
            "relative_residual": self.relative_residual, "n_scenarios": self.n_scenarios,
            "seed": self.seed, "se": dict(self.se),
        }


def value(ledger: CashflowLedger, curve: DiscountCurve | None = None) -> ValuationResult:
    """Full valuation of one coherent projection run."""
    _require(ledger)
    be, gb, fdb = best_estimate(ledger)
    vif, tax = vif_tax(ledger)
    terminal = estimate(ledger.deflators[:, -1] * ledger.stocks["MV"][:, -1], ledger.pair)
    f = ledger.flows
    per_scen_resid = ledger.MV0 - (
        _pv(ledger, f["cf"]) + _pv(ledger, f["sh"]) + _pv(ledger, f["tax"])
        + ledger.deflators[:, -1] * ledger.stocks["MV"][:, -1]
    )
    resid = estimate(per_scen_resid, ledger.pair)
    lhs = ledger.BV0 + ledger.UG0
    return ValuationResult(
        BE=be.value, GB=gb.value, FDB=fdb.value, VIF=vif.value, TAX=tax.value,
        E_terminal=terminal.value,
        residual=lhs - (be.value + vif.value + tax.value + terminal.value),
        relative_residual=abs(lhs - (be.value + vif.value + tax.value + terminal.value)) / abs(lhs),
        n_scenarios=ledger.n_scenarios,
        BV0=ledger.BV0, UG0=ledger.UG0,
        se={"BE": be.se, "GB": gb.se, "FDB": fdb.se, "VIF": vif.se, "TAX": tax.se,
            "E_terminal": terminal.se, "residual": resid.se},
        GB_curve=None if curve is None else guaranteed_on_curve(ledger, curve),
        seed=ledger.seed,
    )


@dataclass(frozen=True)
class LeakageReport:
    lhs: float
    rhs: float
    residual: float
    relative: float
    tolerance: float
    passed: bool | None
    residual_se: float = 0.0
    equity: float = 0.0


def leakage_test(
    result: ValuationResult,
    BV0: float,
    UG0: float,
    tolerance: float = 1e-3,
    equity: float = 0.0,
) -> LeakageReport:
    """Check ``BV0 + UG0 = BE + VIF + TAX + E[B_T^-1 MV_T]``.

    Statutory ``equity`` is added to the left-hand side; since own funds then
    stay in the terminal market value, the outcome is reported without a
    pass/fail verdict.
    """
    lhs = BV0 + UG0 + equity
    rhs = result.BE + result.VIF + result.TAX + result.E_terminal
    resid = lhs - rhs
    rel = abs(resid) / abs(BV0 + UG0)
    passed = None if equity else rel <= tolerance
    return LeakageReport(lhs, rhs, resid, rel, tolerance, passed, result.se.get("residual", 0.0), equity)


@dataclass(frozen=True)
class UnexpectedReturnIdentity:
    lhs: float
    rhs: float
    gap: float
    terminal_ug: float


def unexpected_return_identity(ledger: CashflowLedger, UG0: float | None = None) -> UnexpectedReturnIdentity:
    """``E[sum B_t^-1 ur_t]`` against ``UG0 - E[B_T^-1 UG_T]``."""
    _require(ledger)
    ug0 = ledger.UG0 if UG0 is None else UG0
    lhs = estimate(_pv(ledger, ledger.flows["ur"]), ledger.pair).value
    term = estimate(ledger.deflators[:, -1] * ledger.stocks["UG"][:, -1], ledger.pair).value
    rhs = ug0 - term
    return UnexpectedReturnIdentity(lhs, rhs, lhs - rhs, term)


@dataclass(frozen=True)
class ParticipationStats:
    """Inputs and both sides of the participation inequalities.

    ``PH`` is ``E[sum B_t^-1 ph*_t]``; ``sum_ph`` is ``E[sum ph*_t]``;
    ``cov_ph`` is ``SD[sum ph*] / E[sum ph*]``.
    """

    PH: Estimate
    sum_ph: Estimate
    sd_sum_ph: float
    cov_ph: float
    gross_bound: float  # gph * (VIF + PH + TAX)
    max_discount: float


def participation_stats(ledger: CashflowLedger, gph: float, max_discount: float) -> ParticipationStats:
    _require(ledger)
    ph = ledger.flows["ph"]
    PH = estimate(_pv(ledger, ph), ledger.pair)
    total = ph[:, 1:].sum(axis=1)
    s = estimate(total, ledger.pair)
    mean = s.value
    sd = math.sqrt(math.fsum((total - mean) ** 2) / max(total.size - 1, 1))
    vif, tax = vif_tax(ledger)
    return ParticipationStats(
        PH=PH,
        sum_ph=s,
        sd_sum_ph=sd,
        cov_ph=sd / mean if mean > 0 else math.inf,
        gross_bound=gph * (vif.value + PH.value + tax.value),
        max_discount=max_discount,
    )


def deflator_cov_from_scenarios(ledger: CashflowLedger, t: int) -> float:
    """Sample ``SD[B_t^-1] / E[B_t^-1]`` across the projected scenarios."""
    d = ledger.deflators[:, t]
    mean = math.fsum(d) / d.size
    if d.size < 2:
        return 0.0
    return math.sqrt(math.fsum((d - mean) ** 2) / (d.size - 1)) / mean
