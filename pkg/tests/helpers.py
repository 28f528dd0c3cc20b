import numpy as np

from withprofit.portfolio import BalanceSheet, Bond, Contract, Equity, ManagementRules


def random_portfolio(rng: np.random.Generator) -> tuple[BalanceSheet, ManagementRules]:
    """Endowment backed by two bonds, some equity and cash, with random rules."""
    M = int(rng.integers(6, 16))
    con = Contract.endowment("x", 100.0, M, float(rng.uniform(0.0, 0.005)))
    TR0 = con.reserves[0]
    SF0 = float(rng.uniform(0.0, 0.05)) * TR0
    eqw = float(rng.uniform(0.0, 0.1))
    total = TR0 + SF0
    b1 = Bond("b1", total * 0.5, float(rng.uniform(0.015, 0.03)), int(rng.integers(3, M + 1)), total * 0.5)
    b2 = Bond("b2", total * (0.45 - eqw), float(rng.uniform(0.015, 0.03)), int(rng.integers(M, M + 8)), total * (0.45 - eqw))
    eq = Equity("e", total * eqw * 1.1, total * eqw, 0.02, 0.15)
    bs = BalanceSheet((con,), (b1, b2), (eq,), cash=total * 0.05, surplus_fund=SF0)
    rules = ManagementRules(
        gph=float(rng.uniform(0.7, 0.9)),
        theta=float(rng.uniform(0.05, 0.15)),
        declaration_rate=float(rng.uniform(0.2, 0.5)),
    )
    return bs, rules
