import numpy as np
import pytest

from withprofit.portfolio import BalanceSheet, Bond, Contract, Equity, ManagementRules
from withprofit.projection import (
    FLOW_FIELDS,
    STOCK_FIELDS,
    InsolventScenarioError,
    apply_locm,
    book_return_components,
    declare_split,
    enforce_sf_cap,
    project,
    relative_conservation_error,
    terminal_ratio,
    unexpected_return,
)
from withprofit.scenarios import RateModelParams, generate


class TestContract:
    def test_endowment_reserves_roll_up(self):
        c = Contract.endowment("e", 100.0, 3, 0.01)
        assert c.reserves[0] == pytest.approx(100 / 1.01**3)
        assert c.reserves[-1] == 0.0 and c.cashflow(3) == 100.0 and c.cashflow(1) == 0.0

    def test_annuity_reserve_is_annuity_value(self):
        c = Contract.annuity("a", 10.0, 3, 0.0)
        assert c.reserves == (30.0, 20.0, 10.0, 0.0)

    def test_guaranteed_value_on_curve(self, curve):
        c = Contract.annuity("a", 10.0, 3, 0.0)
        assert c.guaranteed_value(curve) == pytest.approx(10 * (curve[1] + curve[2] + curve[3]))

    @pytest.mark.parametrize(
        "reserves, cashflows",
        [((1.0, 0.0), (1.0, 1.0)), ((1.0, 0.5), (1.0,)), ((1.0, 0.0), (-1.0,))],
    )
    def test_rejects_malformed(self, reserves, cashflows):
        with pytest.raises(ValueError):
            Contract("c", 1, reserves, cashflows)


class TestBalanceSheet:
    def test_book_must_balance(self):
        c = Contract.endowment("e", 100.0, 2, 0.0)
        with pytest.raises(ValueError, match="statutory equity"):
            BalanceSheet((c,), cash=101.0)

    def test_unrealized_gains(self, toy_stochastic, curve):
        bs = toy_stochastic.balance_sheet
        assert bs.unrealized_gains(curve) == pytest.approx(bs.market_value(curve) - bs.asset_book_value)
        assert bs.asset_book_value == pytest.approx(bs.liability_book_value, abs=1e-9)

    def test_duplicate_ids(self):
        c = Contract.endowment("e", 100.0, 2, 0.0)
        with pytest.raises(ValueError, match="duplicate"):
            BalanceSheet((c, c), cash=200.0)


class TestRules:
    def test_split_positive_surplus(self):
        ph, tax, sh = declare_split(10.0, ManagementRules(gph=0.8, tax_rate=0.25))
        assert (ph, tax, sh) == pytest.approx((8.0, 0.5, 1.5))

    def test_split_negative_surplus_is_shareholder_funded(self):
        ph, tax, sh = declare_split(-4.0, ManagementRules(gph=0.8, tax_rate=0.25))
        assert (ph, tax, sh) == (0.0, 0.0, -4.0)

    def test_split_vectorised(self):
        ph, tax, sh = declare_split(np.array([10.0, -1.0]), ManagementRules())
        np.testing.assert_allclose(ph + tax + sh, [10.0, -1.0])

    def test_locm(self):
        assert apply_locm(10.0, 9.0) == (9.0, 1.0)
        assert apply_locm(10.0, 11.0) == (10.0, 0.0)

    def test_sf_cap(self):
        assert enforce_sf_cap(12.0, 100.0, 0.1) == pytest.approx((10.0, 2.0))
        assert enforce_sf_cap(5.0, 100.0, 0.1) == (5.0, 0.0)
        with pytest.raises(ValueError):
            enforce_sf_cap(1.0, 1.0, 0.0)

    def test_unexpected_return(self):
        assert unexpected_return(3.0, 0.01, 100.0) == pytest.approx(2.0)


@pytest.fixture(scope="module")
def stochastic_ledger(curve, toy_stochastic):
    s = generate(curve, RateModelParams(), 200, 4, horizon=toy_stochastic.T)
    return project(s, toy_stochastic.balance_sheet, toy_stochastic.rules)


class TestProjection:
    def test_ledger_layout(self, stochastic_ledger):
        L = stochastic_ledger
        for name in FLOW_FIELDS + STOCK_FIELDS:
            assert getattr(L, name).shape == (200, 11)
        assert np.all(L.cf[:, 0] == 0.0)

    def test_conservation(self, stochastic_ledger):
        assert relative_conservation_error(stochastic_ledger) <= 1e-9

    def test_book_return_components(self, stochastic_ledger):
        np.testing.assert_allclose(book_return_components(stochastic_ledger), stochastic_ledger.roa, atol=1e-10)

    def test_gross_surplus_split(self, stochastic_ledger):
        L = stochastic_ledger
        np.testing.assert_allclose(L.sh + L.ph + L.tax, L.gs, atol=1e-10)

    def test_surplus_fund_capped(self, stochastic_ledger, toy_stochastic):
        L = stochastic_ledger
        assert np.all(L.SF <= toy_stochastic.rules.theta * L.TR + 1e-9)

    def test_run_off_is_complete(self, stochastic_ledger):
        assert np.all(stochastic_ledger.BV[:, -1] == 0.0)
        assert abs(terminal_ratio(stochastic_ledger)) <= 1e-12

    def test_contract_split_adds_up(self, stochastic_ledger):
        L = stochastic_ledger
        total = L.contract_guaranteed.sum(axis=0)[None, :] + L.contract_discretionary.sum(axis=0) + L.collective
        np.testing.assert_allclose(total, L.cf, atol=1e-10)

    def test_matched_book_has_no_surplus(self, curve, toy_matched):
        s = generate(curve, RateModelParams(volatility=0.0), 1, 0, horizon=1)
        L = project(s, toy_matched.balance_sheet, toy_matched.rules)
        assert L.cf[0, 1] == pytest.approx(100.0)
        assert L.ur[0, 1] == pytest.approx(0.0, abs=1e-12)
        assert L.gs[0, 1] == pytest.approx(0.0, abs=1e-12)

    def test_insolvency_is_reported(self, curve):
        c = Contract.annuity("x", 50.0, 3, 1.0)
        bs = BalanceSheet((c,), (Bond("b", c.reserves[0], 0.0, 3, c.reserves[0]),))
        s = generate(curve, RateModelParams(), 4, 0, horizon=3)
        with pytest.raises(InsolventScenarioError) as exc:
            project(s, bs, ManagementRules())
        assert exc.value.year == 1 and exc.value.scenarios == (0, 1, 2, 3)

    def test_horizon_longer_than_scenarios(self, curve, toy_stochastic):
        s = generate(curve, RateModelParams(), 2, 0, horizon=5)
        with pytest.raises(ValueError):
            project(s, toy_stochastic.balance_sheet, toy_stochastic.rules)

    def test_equity_only_portfolio(self, curve):
        c = Contract.endowment("e", 100.0, 4, 0.0)
        bs = BalanceSheet((c,), equities=(Equity("q", 110.0, 100.0),))
        s = generate(curve, RateModelParams(), 100, 1, horizon=4)
        L = project(s, bs, ManagementRules(reinvestment="cash"))
        assert relative_conservation_error(L) <= 1e-9
