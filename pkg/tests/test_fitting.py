import numpy as np
import pytest
from hypothesis import given, strategies as st

from gnet.errors import FitError
from gnet.fitting import fit_slope, loglog_fit


class TestFitSlope:
    def test_exact_line(self):
        x = np.linspace(-3, 3, 7)
        fit = fit_slope(np.column_stack([x, -2 * x + 1]))
        assert fit.slope == pytest.approx(-2.0, abs=1e-12)
        assert fit.intercept == pytest.approx(1.0, abs=1e-12)
        assert fit.r2 == pytest.approx(1.0)

    def test_two_points_interpolate(self):
        fit = fit_slope([(1.0, 3.0), (4.0, -3.0)])
        assert fit.slope == pytest.approx(-2.0)
        assert fit.intercept == pytest.approx(5.0)

    def test_noisy_slope_recovered(self):
        # synthetic-data oracle: slope -1.25 plus N(0, 0.05) noise over 8 points
        rng = np.random.default_rng(11)
        x = np.log(np.geomspace(50, 800, 8))
        y = -1.25 * x + 0.3 + rng.normal(0, 0.05, size=8)
        assert abs(fit_slope(np.column_stack([x, y])).slope + 1.25) <= 0.15

    @pytest.mark.parametrize("pts", [[(1.0, 2.0)], [(1.0, 2.0), (1.0, 3.0)], [(0.0, np.nan), (1.0, 1.0)]])
    def test_degenerate_inputs(self, pts):
        with pytest.raises(FitError):
            fit_slope(pts)

    def test_constant_y_has_unit_r2(self):
        assert fit_slope([(0, 1), (1, 1), (2, 1)]).r2 == 1.0

    @given(st.floats(-5, 5), st.floats(-5, 5))
    def test_recovers_any_line(self, a, b):
        x = np.arange(5.0)
        fit = fit_slope(np.column_stack([x, a * x + b]))
        assert fit.slope == pytest.approx(a, abs=1e-9)
        assert fit.intercept == pytest.approx(b, abs=1e-9)


def test_loglog_power_law():
    x = np.array([10.0, 100.0, 1000.0])
    assert loglog_fit(x, 3 * x**-0.5).slope == pytest.approx(-0.5)
    with pytest.raises(FitError):
        loglog_fit([1, 2], [0, 1])
