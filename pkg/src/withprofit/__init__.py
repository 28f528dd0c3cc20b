"""Market-consistent valuation of with-profit life business.

Discount curves and rate scenarios, an ALM projection of the statutory
balance sheet, Monte Carlo best estimates with a leakage test, and an
analytic lower bound for future discretionary benefits.
"""

__version__ = "0.1.0"

from .bound import BoundInputs, LowerBoundResult, lower_bound, sensitivity_grid
from .curves import DiscountCurve, ForwardCurve, SpotRateSeries, bootstrap_forwards, deflator_cov
from .portfolio import BalanceSheet, Bond, Contract, Equity, ManagementRules, Portfolio
from .projection import CashflowLedger, InsolventScenarioError, project
from .scenarios import RateModelParams, ScenarioSet, generate, martingale_test
from .valuation import ValuationResult, leakage_test, value

__all__ = [
    "BalanceSheet", "Bond", "BoundInputs", "CashflowLedger", "Contract", "DiscountCurve", "Equity",
    "ForwardCurve", "InsolventScenarioError", "LowerBoundResult", "ManagementRules", "Portfolio",
    "RateModelParams", "ScenarioSet", "SpotRateSeries", "ValuationResult", "bootstrap_forwards",
    "deflator_cov", "generate", "leakage_test", "lower_bound", "martingale_test", "project",
    "sensitivity_grid", "value",
]
