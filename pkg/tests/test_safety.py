"""Calibration of the safety shift a_star."""

import contextlib
import logging
import math

import pytest

from src.core.approximation import Approximation, FunctionApproximation
from src.core.errors import CalibrationError
from src.core.safety import (
    default_y_min,
    find_a_star,
    manual_safety_params,
    margin_at,
    second_moment_bound,
)
from src.increments.lattice import DiscreteLattice

# the Weibull margin is already negative at -60
Y_MIN = -200.0
STEP = 0.1


@pytest.fixture(scope="module")
def weibull_safety(weibull_approx):
    return find_a_star(weibull_approx, 0.5, Y_MIN, STEP)


class TestFindAStar:
    def test_prefix_is_feasible(self, weibull_safety):
        grid = weibull_safety.verified_grid
        assert grid[0].y == Y_MIN
        assert grid[-1].y == weibull_safety.a_star
        assert all(g.margin >= 0.0 for g in grid)
        ys = [g.y for g in grid]
        assert all(b - a == pytest.approx(STEP) for a, b in zip(ys, ys[1:]))

    def test_a_star_nonpositive_with_kappa(self, weibull_safety, weibull_approx):
        assert weibull_safety.a_star <= 0.0
        assert weibull_safety.kappa == weibull_approx.v(weibull_safety.a_star)
        assert weibull_safety.kappa > 0.0
        assert weibull_safety.epsilon == pytest.approx(0.5)

    def test_deterministic(self, weibull_safety, weibull_approx):
        again = find_a_star(weibull_approx, 0.5, Y_MIN, STEP)
        assert again == weibull_safety
        assert again.verified_grid == weibull_safety.verified_grid

    def test_calibrated_weibull_shift(self, weibull_safety):
        assert weibull_safety.a_star == pytest.approx(-151.2, abs=0.15)
        assert weibull_safety.kappa == pytest.approx(4.94e-10, rel=0.05)

    def test_monotone_in_gamma(self, weibull_safety, weibull_approx):
        looser = find_a_star(weibull_approx, 0.9, Y_MIN, STEP)
        assert looser.a_star == pytest.approx(-65.8, abs=0.15)
        assert weibull_safety.a_star <= looser.a_star
        assert len(looser.verified_grid) >= len(weibull_safety.verified_grid)

    def test_shallow_y_min_fails(self, weibull_approx):
        with pytest.raises(CalibrationError, match="y_min=-60"):
            find_a_star(weibull_approx, 0.5, -60.0, STEP)

    def test_margin_frame(self, weibull_safety):
        frame = weibull_safety.margin_frame()
        assert list(frame.columns) == ["y", "v", "w", "tail", "margin"]
        assert len(frame) == len(weibull_safety.verified_grid)
        assert (frame["margin"] >= 0.0).all()

    def test_infeasible_start(self):
        """A v that grows too fast makes w exceed v everywhere on the lattice."""
        model = DiscreteLattice.from_mapping({-1.0: 0.7, 1.0: 0.3})
        approx = FunctionApproximation(model, lambda y: 0.1 ** max(-y, 0.0), label="steep")
        with pytest.raises(CalibrationError, match="y_min"):
            find_a_star(approx, 0.5, -30.0, 1.0)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, -0.3])
    def test_gamma_range(self, weibull_approx, gamma):
        with pytest.raises(CalibrationError, match="gamma"):
            find_a_star(weibull_approx, gamma, Y_MIN, STEP)

    def test_y_min_must_be_negative(self, weibull_approx):
        with pytest.raises(CalibrationError, match="y_min"):
            find_a_star(weibull_approx, 0.5, 0.0, STEP)

    def test_light_tailed_warning(self, exp_diff, caplog):
        # the big-jump part of w swamps v here, so the scan itself may fail
        with caplog.at_level(logging.WARNING, logger="src.core.safety"), contextlib.suppress(CalibrationError):
            find_a_star(Approximation(exp_diff), 0.5, -20.0, 1.0)
        assert "light-tailed" in caplog.text


class TestMargin:
    def test_exact_solution_has_zero_numerator(self):
        """With v equal to the exact hitting probability w = v, so the margin is gamma."""
        model = DiscreteLattice.from_mapping({-1.0: 0.7, 1.0: 0.3})
        r = 3.0 / 7.0
        approx = FunctionApproximation(model, lambda y: r ** (1.0 - y) if y <= 0 else 1.0, label="exact")
        for y in (-1.0, -5.0, -12.0):
            assert margin_at(approx, 0.25, y).margin == 0.25

    def test_default_y_min(self):
        assert default_y_min() == -200.0
        assert default_y_min(650.0) == -1300.0


class TestManualOverride:
    def test_negative_shift(self, weibull_approx):
        safety = manual_safety_params(weibull_approx, 0.5, -10.0)
        assert safety.a_star == -10.0
        assert safety.kappa == weibull_approx.v(-10.0)
        assert safety.verified_grid == ()

    def test_positive_shift_warns(self, weibull_approx, caplog):
        with caplog.at_level(logging.WARNING, logger="src.core.safety"):
            safety = manual_safety_params(weibull_approx, 0.5, 10.0)
        assert safety.a_star == 10.0
        assert "did you mean -10" in caplog.text

    def test_vanishing_kappa(self):
        model = DiscreteLattice.from_mapping({-1.0: 0.7, 1.0: 0.3})
        approx = Approximation(model)
        with pytest.raises(CalibrationError, match="vanishes"):
            manual_safety_params(approx, 0.5, -5.0)


class TestSecondMomentBound:
    def test_formula(self, weibull_approx):
        safety = manual_safety_params(weibull_approx, 0.5, -10.0)
        b = 50.0
        expected = weibull_approx.v(-60.0) ** 2 / (0.5 * weibull_approx.v(-10.0) ** 2)
        assert second_moment_bound(safety, weibull_approx, b) == pytest.approx(expected, rel=1e-14)

    def test_bound_exceeds_squared_target(self, weibull_approx):
        """E R^2 >= (E R)^2, and the bound sits above the approximation squared."""
        safety = manual_safety_params(weibull_approx, 0.5, -10.0)
        for b in (10.0, 250.0):
            assert second_moment_bound(safety, weibull_approx, b) > weibull_approx.v(-b) ** 2
            assert math.isfinite(second_moment_bound(safety, weibull_approx, b))
