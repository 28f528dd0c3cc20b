import numpy as np
import pytest

from withprofit.curves import DiscountCurve, bootstrap_forwards
from withprofit.scenarios import RateModelParams, ScenarioSet, fitted_shift, generate, martingale_test


class TestParams:
    def test_innovation_sd_small_reversion_limit(self):
        p = RateModelParams(1e-8, 0.01)
        assert p.innovation_sd == pytest.approx(0.01, rel=1e-6)

    @pytest.mark.parametrize("kwargs", [{"volatility": -0.1}, {"mean_reversion": 0.0}, {"model": "lmm"}])
    def test_rejects_bad_params(self, kwargs):
        with pytest.raises(ValueError):
            RateModelParams(**kwargs)


class TestGenerate:
    def test_shapes_and_start(self, curve):
        s = generate(curve, RateModelParams(), 10, 1)
        assert s.forwards.shape == (10, 60) and s.deflators.shape == (10, 61)
        assert np.all(s.deflators[:, 0] == 1.0)

    def test_same_seed_same_paths(self, curve):
        a = generate(curve, RateModelParams(), 6, 3)
        b = generate(curve, RateModelParams(), 6, 3)
        np.testing.assert_array_equal(a.deflators, b.deflators)

    def test_prefix_stable_when_adding_scenarios(self, curve):
        a = generate(curve, RateModelParams(), 4, 3)
        b = generate(curve, RateModelParams(), 10, 3)
        np.testing.assert_array_equal(a.deflators, b.deflators[:4])

    def test_antithetic_pairs_mirror_the_state(self, curve):
        s = generate(curve, RateModelParams(), 7, 5)
        np.testing.assert_array_equal(s.pair, [0, 0, 1, 1, 2, 2, 3])
        np.testing.assert_allclose(s.state[0], -s.state[1])
        np.testing.assert_allclose(s.equity_noise[2], -s.equity_noise[3])

    def test_zero_volatility_is_the_forward_curve(self, curve):
        s = generate(curve, RateModelParams(volatility=0.0), 3, 0)
        f = np.asarray(bootstrap_forwards(curve).forwards)
        np.testing.assert_array_equal(s.forwards[1], f)
        assert np.all(s.equity_noise == 0.0)
        assert martingale_test(s, curve).max_error <= 1e-12

    def test_horizon_beyond_curve(self, curve):
        with pytest.raises(ValueError):
            generate(curve, RateModelParams(), 2, 0, horizon=61)

    def test_read_only(self, curve):
        s = generate(curve, RateModelParams(), 2, 0, horizon=5)
        with pytest.raises(ValueError):
            s.forwards[0, 0] = 1.0


class TestBondPrices:
    def test_time_zero_prices_match_curve(self, curve):
        s = generate(curve, RateModelParams(0.3, 0.02), 2, 0, horizon=10)
        p = s.zcb(0, 50)
        np.testing.assert_allclose(p[0], curve.factors[:50], rtol=1e-12)

    def test_deflated_prices_are_martingales(self, curve):
        s = generate(curve, RateModelParams(0.2, 0.01), 4000, 11, horizon=10)
        p = s.zcb(5, 20)
        deflated = (s.deflators[:, 5][:, None] * p).mean(axis=0)
        np.testing.assert_allclose(deflated, curve.factors[5:25], rtol=3e-3)

    def test_fitted_shift_reprices_when_state_is_zero(self, curve):
        params = RateModelParams(0.2, 0.0)
        phi = fitted_shift(curve, params)
        np.testing.assert_allclose(np.exp(-np.cumsum(phi)), curve.factors, rtol=1e-12)

    def test_imported_sets_cannot_price(self):
        s = ScenarioSet(np.zeros((1, 3)), np.ones((1, 4)), np.array([0]))
        assert not s.can_price_bonds
        with pytest.raises(ValueError):
            s.zcb(0, 2)


class TestMartingale:
    def test_default_model_passes(self, curve):
        s = generate(curve, RateModelParams(), 10_000, 1)
        d = martingale_test(s, curve)
        assert d.passed and d.relative_errors.shape == (60,)

    def test_bumped_set_fails(self, curve):
        s = generate(curve, RateModelParams(), 200, 1).bumped(0.01)
        d = martingale_test(s, curve)
        assert not d.passed and d.worst_tenor == 60

    def test_flat_curve(self):
        c = DiscountCurve.flat(0.01, 20)
        s = generate(c, RateModelParams(), 2000, 2)
        assert martingale_test(s, c).passed
