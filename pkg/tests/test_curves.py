import math
from datetime import date

import numpy as np
import pytest

from withprofit.curves import (
    DiscountCurve,
    ForwardCurve,
    SpotRateSeries,
    argmax_discount_factor,
    bootstrap_forwards,
    deflator_cov,
    deflator_cov_table,
    deterministic_deflator,
    max_discount_factor,
)


class TestDiscountCurve:
    def test_bundled_curve_values(self, curve):
        assert curve.horizon == 60
        assert curve[2] == pytest.approx(1.005)
        assert curve[15] == pytest.approx(0.839)

    def test_rejects_non_positive_factor(self):
        with pytest.raises(ValueError, match="t=2"):
            DiscountCurve((0.99, 0.0, 0.97))

    def test_from_pairs_requires_consecutive_tenors(self):
        with pytest.raises(ValueError):
            DiscountCurve.from_pairs([(1, 0.99), (3, 0.97)])

    def test_flat_curve(self):
        c = DiscountCurve.flat(0.02, 5)
        assert c[5] == pytest.approx(1.02**-5)
        assert c.with_origin()[0] == 1.0


class TestForwards:
    def test_flat_zero_curve_has_zero_forwards(self):
        f = bootstrap_forwards(DiscountCurve.flat(0.0, 10))
        assert np.all(np.asarray(f.forwards) == 0.0)

    def test_bank_account_reprices_curve(self, curve):
        bank = bootstrap_forwards(curve).bank_account()
        np.testing.assert_allclose(1.0 / bank[1:], curve.factors, rtol=1e-14)

    def test_negative_rates_allowed(self, curve):
        assert bootstrap_forwards(curve).forwards[0] < 0.0

    def test_rejects_forward_below_minus_one(self):
        with pytest.raises(ValueError):
            ForwardCurve((0.01, -1.0))

    def test_deterministic_deflator(self, curve):
        assert deterministic_deflator(curve, 15) == pytest.approx(curve[15], rel=1e-14)
        with pytest.raises(IndexError):
            deterministic_deflator(curve, 61)


class TestMaxDiscountFactor:
    def test_peak_at_two_years(self, curve):
        assert max_discount_factor(curve, 15) == pytest.approx(1.005)
        assert argmax_discount_factor(curve, 15) == 2

    def test_monotone_in_window(self, curve):
        vals = [max_discount_factor(curve, m) for m in range(1, 61)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_out_of_range(self, curve):
        with pytest.raises(IndexError):
            max_discount_factor(curve, 0)


class TestDeflatorCov:
    def test_series_tenor_uses_sample_cov(self, spot_series, curve):
        r = np.asarray(spot_series.rates)
        d = (1.0 + r) ** -15
        expected = d.std(ddof=1) / d.mean()
        assert deflator_cov(spot_series, curve, 15) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.0376, abs=5e-4)

    def test_other_tenors_scale_linearly(self, spot_series, curve):
        r = np.asarray(spot_series.rates)
        per_year = r.std(ddof=1) / (1.0 + r.mean())
        assert deflator_cov(spot_series, curve, 7) == pytest.approx(7 * per_year, rel=1e-12)

    def test_table_covers_curve(self, spot_series, curve):
        table = deflator_cov_table(spot_series, curve)
        assert len(table) == 60 and np.all(np.asarray(table) > 0)

    def test_constant_series_has_zero_cov(self, curve):
        s = SpotRateSeries((date(2020, 1, 1), date(2020, 2, 1)), (0.01, 0.01), 15)
        assert deflator_cov(s, curve, 15) == 0.0

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            SpotRateSeries((date(2020, 1, 1),), (0.01,), 15)

    def test_tenor_beyond_curve(self, spot_series, curve):
        with pytest.raises(IndexError):
            deflator_cov(spot_series, curve, 61)
