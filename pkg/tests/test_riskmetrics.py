import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microreserve import (RunoffTriangle, chain_ladder_mack, mape,
                          risk_capital, risk_measures)


class TestRiskMeasures:
    def test_order_statistic_oracle(self):
        x = np.arange(1, 101, dtype=float)
        rs = risk_measures(x, levels=(0.60, 0.95))
        assert rs.var[0.95] == 95.0
        assert rs.tvar[0.95] == pytest.approx(98.0)
        assert rs.var[0.60] == 60.0
        assert rs.tvar[0.60] == pytest.approx(np.mean(np.arange(61, 101)))
        assert rs.risk_capital == pytest.approx(98.0 - 80.5)

    def test_risk_capital_helper(self):
        x = np.arange(1, 101, dtype=float)
        assert risk_capital(x) == pytest.approx(17.5)

    def test_translation_invariance(self, rng):
        x = rng.lognormal(1.0, 1.0, 1000)
        a = risk_measures(x, levels=(0.95,))
        b = risk_measures(x + 100.0, levels=(0.95,))
        assert b.var[0.95] == pytest.approx(a.var[0.95] + 100.0)
        assert b.tvar[0.95] == pytest.approx(a.tvar[0.95] + 100.0)

    def test_positive_homogeneity(self, rng):
        x = rng.lognormal(1.0, 1.0, 1000)
        a = risk_measures(x, levels=(0.95,))
        b = risk_measures(3.0 * x, levels=(0.95,))
        assert b.var[0.95] == pytest.approx(3.0 * a.var[0.95])
        assert b.tvar[0.95] == pytest.approx(3.0 * a.tvar[0.95])

    def test_level_validation(self):
        with pytest.raises(ValueError):
            risk_measures([1.0, 2.0], levels=(1.5,))

    @given(st.lists(st.floats(-1e6, 1e6), min_size=10, max_size=200),
           st.floats(0.05, 0.95))
    @settings(max_examples=60, deadline=None)
    def test_tvar_dominates_var(self, xs, p):
        rs = risk_measures(np.asarray(xs), levels=(p,))
        assert rs.tvar[p] >= rs.var[p]


class TestMape:
    def test_formula(self):
        assert mape(110.0, 100.0) == pytest.approx(10.0)
        assert mape(90.0, 100.0) == pytest.approx(10.0)

    def test_zero_truth_rejected(self):
        with pytest.raises(ValueError):
            mape(1.0, 0.0)


class TestRunoffTriangle:
    def test_validation(self):
        with pytest.raises(ValueError):
            RunoffTriangle(np.ones((2, 3)))
        with pytest.raises(ValueError):
            RunoffTriangle(np.array([[1.0, np.nan], [2.0, np.nan]]))

    def test_diagonal(self):
        tri = RunoffTriangle(np.array([[10.0, 15.0], [12.0, np.nan]]))
        assert np.allclose(tri.diagonal(), [15.0, 12.0])

    def test_from_incremental(self):
        inc = np.array([[10.0, 5.0], [12.0, np.nan]])
        tri = RunoffTriangle.from_incremental(inc)
        assert tri.values[0, 1] == pytest.approx(15.0)
        assert np.isnan(tri.values[1, 1])


class TestChainLadder:
    def test_two_by_two_hand_oracle(self):
        tri = RunoffTriangle(np.array([[10.0, 15.0], [12.0, np.nan]]))
        res = chain_ladder_mack(tri)
        assert res.factors[0] == pytest.approx(1.5)
        assert res.ultimates[1] == pytest.approx(18.0)
        assert res.reserve == pytest.approx(6.0)

    def test_fully_developed_zero_reserve(self):
        # all link ratios exactly 1: nothing outstanding
        v = np.array([[100.0, 100.0, 100.0],
                      [80.0, 80.0, np.nan],
                      [90.0, np.nan, np.nan]])
        res = chain_ladder_mack(RunoffTriangle(v))
        assert res.reserve == pytest.approx(0.0)
        assert res.total_mse == pytest.approx(0.0)

    def test_scaling_invariance(self):
        v = np.array([[100.0, 150.0, 160.0],
                      [110.0, 170.0, np.nan],
                      [120.0, np.nan, np.nan]])
        res = chain_ladder_mack(RunoffTriangle(v))
        scaled = chain_ladder_mack(RunoffTriangle(1000.0 * v))
        assert scaled.reserve == pytest.approx(1000.0 * res.reserve)
        assert np.allclose(scaled.factors, res.factors)
        assert scaled.total_se == pytest.approx(1000.0 * res.total_se,
                                                rel=1e-9)

    def test_textbook_mse_positive(self):
        v = np.array([[100.0, 150.0, 160.0, 165.0],
                      [110.0, 168.0, 185.0, np.nan],
                      [115.0, 169.0, np.nan, np.nan],
                      [125.0, np.nan, np.nan, np.nan]])
        res = chain_ladder_mack(RunoffTriangle(v))
        assert res.reserve > 0
        assert res.total_mse > 0
        assert np.all(res.mse[1:] >= 0)
