"""Run-off projection of the statutory balance sheet under risk-neutral scenarios.

One annual step, identical in every scenario:

1. accrue cash interest, coupons, dividends and bond amortization; redeem
   maturing bonds; revalue everything at the scenario's time-``t`` prices
2. pay guaranteed flows, selling assets pro-rata by market value if cash runs
   short (the whole book is sold in the year the last contract matures)
3. strict lower-of-cost-or-market write-downs
4. gross surplus ``gs* = roa - (cf_guar + dTR)``; a negative surplus is first
   covered by realizing unrealized gains
5. split ``gs*`` into ``ph*``, tax and shareholder result; ``ph*`` goes to the
   surplus fund, which declares a fixed fraction to live contracts and is
   capped at ``theta * TR``
6. pay matured bonuses, tax and shareholder flows; reinvest positive cash in
   par bonds at the scenario curve (negative cash is carried as an overdraft)

Every book change is a cash flow or a market-induced change, so
``BV_t = BV_{t-1} - cf_t - sh_t - tax_t + roa_t`` holds by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .portfolio import BalanceSheet, ManagementRules
from .scenarios import ScenarioSet

FLOW_FIELDS = (
    "cf", "cf_guaranteed", "cf_discretionary", "sh", "tax", "ph", "gs", "roa",
    "income", "amortization", "realized", "write_downs", "ur", "declared",
)
STOCK_FIELDS = ("BV", "TR", "SF", "asset_book", "MV", "UG")


class InsolventScenarioError(RuntimeError):
    def __init__(self, scenarios, year: int):
        self.scenarios = tuple(int(s) for s in scenarios)
        self.year = year
        shown = ", ".join(map(str, self.scenarios[:10]))
        more = "" if len(self.scenarios) <= 10 else f" (+{len(self.scenarios) - 10} more)"
        super().__init__(f"assets exhausted before liabilities in year {year}, scenario(s) {shown}{more}")


def declare_split(gs_star, rules: ManagementRules):
    """Split gross surplus into ``(ph*, tax, sh)``; works on scalars and arrays.

    ``ph* = gph * gs*_+``, ``tax = rate * (gs* - ph*)_+`` and ``sh`` takes the
    rest, so a negative surplus becomes a shareholder injection.
    """
    gs = np.asarray(gs_star, dtype=float)
    ph = rules.gph * np.maximum(gs, 0.0)
    tax = rules.tax_rate * np.maximum(gs - ph, 0.0)
    sh = gs - ph - tax
    if np.ndim(gs_star) == 0:
        return float(ph), float(tax), float(sh)
    return ph, tax, sh


def unexpected_return(roa_t, F_prev, BV_prev):
    return roa_t - F_prev * BV_prev


def apply_locm(book_value, market_value):
    """Strict lower of cost or market: ``(new_book, write_down)``."""
    book = np.asarray(book_value, dtype=float)
    new_book = np.minimum(book, market_value)
    wd = book - new_book
    if np.ndim(book_value) == 0 and np.ndim(market_value) == 0:
        return float(new_book), float(wd)
    return new_book, wd


def enforce_sf_cap(SF, TR, theta: float):
    """Cap the surplus fund at ``theta * TR``; returns ``(SF', forced_declaration)``."""
    if theta <= 0.0:
        raise ValueError("theta must be > 0")
    sf = np.asarray(SF, dtype=float)
    capped = np.minimum(sf, theta * np.maximum(TR, 0.0))
    forced = sf - capped
    if np.ndim(SF) == 0 and np.ndim(TR) == 0:
        return float(capped), float(forced)
    return capped, forced


@dataclass(eq=False)
class _BondSlot:
    id: str
    maturity: int
    face: np.ndarray
    coupon: np.ndarray
    book: np.ndarray
    mv: np.ndarray


@dataclass(eq=False)
class _EquitySlot:
    id: str
    dividend_yield: float
    volatility: float
    book: np.ndarray
    mv: np.ndarray


@dataclass(frozen=True, eq=False)
class CashflowLedger:
    """Per-scenario, per-year projection record.

    Every array in ``flows`` and ``stocks`` has shape ``(n, T+1)``; column 0
    holds the opening balance sheet (flows are zero there).
    ``contract_guaranteed[k, t]`` is contract ``k``'s deterministic flow;
    ``contract_discretionary`` and ``contract_declared`` are ``(K, n, T+1)``.
    ``collective`` holds surplus-fund payouts not attributable to a contract.
    """

    flows: dict
    stocks: dict
    deflators: np.ndarray
    forwards: np.ndarray
    pair: np.ndarray
    contract_ids: tuple[str, ...]
    contract_guaranteed: np.ndarray
    contract_discretionary: np.ndarray
    contract_declared: np.ndarray
    collective: np.ndarray
    seed: int | None = None
    dropped: tuple = field(default=())

    def __getattr__(self, name):
        for store in ("flows", "stocks"):
            d = self.__dict__.get(store)
            if d is not None and name in d:
                return d[name]
        raise AttributeError(name)

    @property
    def n_scenarios(self) -> int:
        return self.deflators.shape[0]

    @property
    def horizon(self) -> int:
        return self.deflators.shape[1] - 1

    @property
    def BV0(self) -> float:
        return float(self.stocks["BV"][0, 0])

    @property
    def MV0(self) -> float:
        return float(self.stocks["MV"][0, 0])

    @property
    def UG0(self) -> float:
        return float(self.stocks["UG"][0, 0])

    @property
    def SF0(self) -> float:
        return float(self.stocks["SF"][0, 0])

    def conservation_gap(self) -> np.ndarray:
        """``BV_t - (BV_{t-1} - cf - sh - tax + roa)`` per scenario and year, shape ``(n, T)``."""
        BV = self.stocks["BV"]
        f = self.flows
        expected = BV[:, :-1] - f["cf"][:, 1:] - f["sh"][:, 1:] - f["tax"][:, 1:] + f["roa"][:, 1:]
        return BV[:, 1:] - expected

    def drop_cashflow(self, year: int, contract: str | None = None) -> CashflowLedger:
        """Fault injection: a copy whose recorded liability cash flow at ``year`` is lost."""
        if not 1 <= year <= self.horizon:
            raise ValueError(f"year {year} outside 1..{self.horizon}")
        flows = {k: v.copy() for k, v in self.flows.items()}
        guar = self.contract_guaranteed.copy()
        disc = self.contract_discretionary.copy()
        coll = self.collective.copy()
        rows = range(len(self.contract_ids)) if contract is None else [self.contract_ids.index(contract)]
        for k in rows:
            flows["cf"][:, year] -= guar[k, year] + disc[k, :, year]
            flows["cf_guaranteed"][:, year] -= guar[k, year]
            flows["cf_discretionary"][:, year] -= disc[k, :, year]
            guar[k, year] = 0.0
            disc[k, :, year] = 0.0
        if contract is None:
            flows["cf"][:, year] -= coll[:, year]
            flows["cf_discretionary"][:, year] -= coll[:, year]
            coll[:, year] = 0.0
        return replace(
            self,
            flows=flows,
            contract_guaranteed=guar,
            contract_discretionary=disc,
            collective=coll,
            dropped=self.dropped + ((year, contract),),
        )

    def subset(self, idx) -> CashflowLedger:
        idx = np.asarray(idx)
        return replace(
            self,
            flows={k: v[idx] for k, v in self.flows.items()},
            stocks={k: v[idx] for k, v in self.stocks.items()},
            deflators=self.deflators[idx],
            forwards=self.forwards[idx],
            pair=self.pair[idx],
            contract_discretionary=self.contract_discretionary[:, idx],
            contract_declared=self.contract_declared[:, idx],
            collective=self.collective[idx],
        )

    def rows(self, fields=None):
        """Yield ``(scenario, year, field, value)`` in a fixed order."""
        names = fields or (FLOW_FIELDS + STOCK_FIELDS)
        for s in range(self.n_scenarios):
            for t in range(self.horizon + 1):
                for name in names:
                    store = self.flows if name in self.flows else self.stocks
                    yield s, t, name, float(store[name][s, t])


def project(
    scenarios: ScenarioSet,
    balance_sheet: BalanceSheet,
    rules: ManagementRules,
    T: int | None = None,
) -> CashflowLedger:
    """Project ``balance_sheet`` over every scenario for ``T`` years.

    ``T`` defaults to the last contract maturity; a shorter ``T`` is an
    explicit truncation and leaves assets and liabilities on the books.
    """
    bs = balance_sheet
    T = bs.max_maturity if T is None else int(T)
    if T < 1:
        raise ValueError("horizon must be >= 1")
    if T > scenarios.horizon:
        raise ValueError(f"scenario horizon {scenarios.horizon} shorter than projection horizon {T}")
    needs_prices = bool(bs.bonds) or rules.reinvestment == "par-bond"
    if needs_prices and not scenarios.can_price_bonds:
        raise ValueError("portfolio holds or buys bonds but the scenario set cannot price them")
    if bs.equities and scenarios.equity_noise is None:
        raise ValueError("portfolio holds equity but the scenario set carries no equity noise")

    n = scenarios.n_scenarios
    contracts = bs.contracts
    K = len(contracts)
    maturities = np.array([c.maturity for c in contracts])
    liquidation_year = bs.max_maturity if bs.max_maturity <= T else None

    guar_reserve = np.array([[c.reserve(t) for t in range(T + 1)] for c in contracts])  # (K, T+1)
    guar_flow = np.array([[c.cashflow(t) for t in range(T + 1)] for c in contracts])

    flows = {k: np.zeros((n, T + 1)) for k in FLOW_FIELDS}
    stocks = {k: np.zeros((n, T + 1)) for k in STOCK_FIELDS}
    disc = np.zeros((K, n, T + 1))
    declared = np.zeros((K, n, T + 1))
    collective = np.zeros((n, T + 1))

    p0 = scenarios.zcb(0, max((b.maturity for b in bs.bonds), default=0)) if bs.bonds else None
    bonds: list[_BondSlot] = []
    for b in bs.bonds:
        mv0 = b.face * (b.coupon * p0[:, : b.maturity].sum(axis=1) + p0[:, b.maturity - 1])
        full = lambda v: np.full(n, float(v))  # noqa: E731
        bonds.append(_BondSlot(b.id, b.maturity, full(b.face), full(b.coupon), full(b.book_value), mv0))
    equities = [
        _EquitySlot(e.id, e.dividend_yield, e.volatility, np.full(n, e.book_value), np.full(n, e.market_value))
        for e in bs.equities
    ]
    cash = np.full(n, float(bs.cash))
    bonus = np.array([np.full(n, c.bonus) for c in contracts])
    SF = np.full(n, float(bs.surplus_fund))

    def record_stocks(t: int) -> None:
        alive_after = (maturities > t)[:, None]
        TR = guar_reserve[:, t].sum() + (bonus * alive_after).sum(axis=0)
        stocks["TR"][:, t] = TR
        stocks["SF"][:, t] = SF
        stocks["BV"][:, t] = TR + SF
        book = cash + sum(s.book for s in bonds) + sum(s.book for s in equities)
        mv = cash + sum(s.mv for s in bonds) + sum(s.mv for s in equities)
        stocks["asset_book"][:, t] = book
        stocks["MV"][:, t] = mv
        stocks["UG"][:, t] = mv - book

    record_stocks(0)

    for t in range(1, T + 1):
        F = scenarios.forwards[:, t - 1]
        income = cash * F
        cash = cash * (1.0 + F)
        amort = np.zeros(n)
        realized = np.zeros(n)
        write_downs = np.zeros(n)

        live = [s for s in bonds if s.maturity >= t]
        n_max = max((s.maturity - t for s in live), default=0)
        prices = scenarios.zcb(t, n_max) if n_max > 0 else None
        kept = []
        for s in live:
            coupon = s.face * s.coupon
            income += coupon
            cash += coupon
            if s.maturity == t:
                amort += s.face - s.book
                cash += s.face
                continue
            remaining = s.maturity - t
            new_book = s.face + (s.book - s.face) * remaining / (remaining + 1)
            amort += new_book - s.book
            s.book = new_book
            p = prices[:, :remaining]
            s.mv = s.face * (s.coupon * p.sum(axis=1) + p[:, -1])
            kept.append(s)
        bonds = kept

        for e in equities:
            z = scenarios.equity_noise[:, t - 1]
            sig = 0.0 if scenarios.deterministic else e.volatility
            cum = e.mv * (1.0 + F) * np.exp(sig * z - 0.5 * sig**2)
            div = e.dividend_yield * cum
            income += div
            cash += div
            e.mv = cum - div

        cf_guar = guar_flow[:, t].sum()
        cash = cash - cf_guar

        risky = bonds + equities
        if liquidation_year == t:
            for s in risky:
                realized += s.mv - s.book
                cash += s.mv
            bonds, equities, risky = [], [], []
        elif np.any(cash < 0.0):
            need = np.maximum(-cash, 0.0)
            mv_risky = sum((s.mv for s in risky), np.zeros(n))
            short = need > mv_risky * (1.0 + 1e-12) + 1e-12
            if np.any(short):
                raise InsolventScenarioError(np.flatnonzero(short), t)
            frac = np.divide(need, mv_risky, out=np.zeros(n), where=mv_risky > 0.0)
            frac = np.minimum(frac, 1.0)
            for s in risky:
                realized += frac * (s.mv - s.book)
                cash += frac * s.mv
                s.mv = s.mv * (1.0 - frac)
                s.book = s.book * (1.0 - frac)
                if isinstance(s, _BondSlot):
                    s.face = s.face * (1.0 - frac)

        for s in risky:
            s.book, wd = apply_locm(s.book, s.mv)
            write_downs += wd

        roa = income + amort + realized - write_downs
        required = cf_guar + guar_reserve[:, t].sum() - guar_reserve[:, t - 1].sum()
        gs = roa - required

        if rules.realization == "fund-shortfall" and risky:
            shortfall = np.maximum(-gs, 0.0)
            ug = sum((np.maximum(s.mv - s.book, 0.0) for s in risky), np.zeros(n))
            frac = np.divide(shortfall, ug, out=np.zeros(n), where=ug > 0.0)
            frac = np.minimum(frac, 1.0)
            for s in risky:
                gain = frac * np.maximum(s.mv - s.book, 0.0)
                s.book = s.book + gain
                realized += gain
                roa = roa + gain
                gs = gs + gain

        ph, tax, sh = declare_split(gs, rules)
        SF = SF + ph

        alive = maturities >= t
        weights = guar_reserve[:, t - 1] * alive
        if weights.sum() > 0.0:
            weights = weights / weights.sum()
        elif alive.any():
            weights = alive / alive.sum()
        smooth = rules.declaration_rate * SF if alive.any() else np.zeros(n)
        SF = SF - smooth
        alive_after = (maturities > t)[:, None]
        TR_after = guar_reserve[:, t].sum() + (bonus * alive_after).sum(axis=0)
        SF, forced = enforce_sf_cap(SF, TR_after, rules.theta)
        to_contracts = smooth + (forced if alive.any() else 0.0)
        declared[:, :, t] = weights[:, None] * to_contracts[None, :]
        bonus = bonus + declared[:, :, t]
        if not alive.any():
            collective[:, t] = forced

        matured = maturities == t
        disc[matured, :, t] = bonus[matured]
        bonus[matured] = 0.0
        cf_disc = disc[:, :, t].sum(axis=0) + collective[:, t]
        cash = cash - cf_disc - sh - tax

        still_running = liquidation_year is None or t < liquidation_year
        if rules.reinvestment == "par-bond" and still_running and t < T:
            amount = np.maximum(cash, 0.0)
            term = min(rules.reinvestment_term, scenarios.curve_horizon - t)
            if term >= 1 and np.any(amount > 0.0):
                p = scenarios.zcb(t, term)
                coupon = (1.0 - p[:, -1]) / p.sum(axis=1)
                bonds.append(_BondSlot(f"par@{t}", t + term, amount, coupon, amount.copy(), amount.copy()))
                cash = cash - amount

        flows["cf_guaranteed"][:, t] = cf_guar
        flows["cf_discretionary"][:, t] = cf_disc
        flows["cf"][:, t] = cf_guar + cf_disc
        flows["sh"][:, t] = sh
        flows["tax"][:, t] = tax
        flows["ph"][:, t] = ph
        flows["gs"][:, t] = gs
        flows["roa"][:, t] = roa
        flows["income"][:, t] = income
        flows["amortization"][:, t] = amort
        flows["realized"][:, t] = realized
        flows["write_downs"][:, t] = write_downs
        flows["declared"][:, t] = to_contracts
        flows["ur"][:, t] = unexpected_return(roa, F, stocks["BV"][:, t - 1])
        record_stocks(t)

    return CashflowLedger(
        flows=flows,
        stocks=stocks,
        deflators=scenarios.deflators[:, : T + 1].copy(),
        forwards=scenarios.forwards[:, :T].copy(),
        pair=scenarios.pair.copy(),
        contract_ids=tuple(c.id for c in contracts),
        contract_guaranteed=guar_flow,
        contract_discretionary=disc,
        contract_declared=declared,
        collective=collective,
        seed=scenarios.seed,
    )


def relative_conservation_error(ledger: CashflowLedger) -> float:
    gap = np.abs(ledger.conservation_gap())
    scale = np.maximum(np.abs(ledger.stocks["BV"][:, :-1]), 1.0)
    return float(np.max(gap / scale)) if gap.size else 0.0


def book_return_components(ledger: CashflowLedger) -> np.ndarray:
    """``income + amortization + realized - write_downs``; equals ``roa``."""
    f = ledger.flows
    return f["income"] + f["amortization"] + f["realized"] - f["write_downs"]


def terminal_ratio(ledger: CashflowLedger) -> float:
    """``E[B_T^-1 MV_T] / MV_0``."""
    v = ledger.deflators[:, -1] * ledger.stocks["MV"][:, -1]
    return math.fsum(v) / v.size / ledger.MV0
