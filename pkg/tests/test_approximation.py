"""v, w and the auxiliary function against closed forms and published values."""

import logging
import math

import numpy as np
import pytest

from src.core.approximation import W_TABLE_RTOL, Approximation, BaseApproximation, FunctionApproximation
from src.core.errors import DomainError
from src.increments.lattice import DiscreteLattice
from src.utils.random_stream import RandomStream

# (b, v(-b)) for the Weibull walk with c = 2, k = 1/2, d = 1
WEIBULL_V = [
    (10.0, 1.004e-02),
    (50.0, 9.577e-06),
    (250.0, 5.666e-13),
    (500.0, 1.655e-18),
    (650.0, 3.584e-21),
]
PARETO_V = [
    (1e3, 3.151e-05),
    (1e4, 9.996e-07),
]


class TestZTail:
    def test_nonpositive_arguments(self, weibull_approx):
        for t in (-5.0, -1e-9, 0.0):
            assert weibull_approx.z_tail(t) == 1.0

    def test_weibull_closed_form(self, weibull_approx):
        """P(Z > t) = (1 + 2 sqrt(t + 1)) exp(-2 sqrt(t + 1))."""
        for t in (0.5, 10.0, 123.0):
            x = 2.0 * math.sqrt(t + 1.0)
            assert weibull_approx.z_tail(t) == pytest.approx((1.0 + x) * math.exp(-x), rel=1e-10)

    def test_exp_diff_atom(self, exp_diff):
        """I(0) = 1/3 < |EX| = 1, so Z has an atom of 2/3 at zero."""
        approx = Approximation(exp_diff)
        assert approx.y0 == 0.0
        assert approx.z_atom == pytest.approx(2.0 / 3.0)
        assert approx.z_tail(2.0) == pytest.approx(math.exp(-2.0) / 3.0)

    def test_y0_positive_when_upward_mass_is_large(self):
        """EX^+ > |EX| pushes the left end of Z's support above zero."""
        model = DiscreteLattice.from_mapping({-3.0: 0.5, 2.0: 0.5})
        approx = Approximation(model)
        # I(t) = 0.5 (2 - t) hits |EX| = 0.5 at t = 1
        assert approx.y0 == pytest.approx(1.0)
        assert approx.z_atom == pytest.approx(0.0, abs=1e-12)
        assert approx.p_z_positive == 1.0


class TestV:
    @pytest.mark.parametrize("b,expected", WEIBULL_V)
    def test_weibull_reference_values(self, weibull_approx, b, expected):
        assert weibull_approx.v(-b) == pytest.approx(expected, rel=0.01)

    @pytest.mark.parametrize("b,expected", PARETO_V)
    def test_pareto_reference_values(self, pareto_approx, b, expected):
        assert pareto_approx.v(-b) == pytest.approx(expected, rel=0.01)

    def test_pareto_power_law_scaling(self, pareto_approx):
        """Between b = 100 and 1000 the tail of Z falls by about 10^1.5."""
        ratio = pareto_approx.v(-1e2) / pareto_approx.v(-1e3)
        assert ratio == pytest.approx(10.0 ** 1.5, rel=0.15)

    def test_saturates_above_zero(self, weibull_approx, pareto_approx):
        for approx in (weibull_approx, pareto_approx):
            assert approx.v(0.0) == 1.0
            assert approx.v(3.0) == 1.0

    @pytest.mark.parametrize("approx_name", ["weibull_approx", "pareto_approx"])
    def test_monotone_in_unit_interval(self, approx_name, request):
        approx = request.getfixturevalue(approx_name)
        ys = np.linspace(-300.0, 5.0, 200)
        vs = np.array([approx.v(y) for y in ys])
        assert np.all(np.diff(vs) >= 0.0)
        assert vs.min() >= 0.0 and vs.max() <= 1.0


class TestW:
    @pytest.mark.parametrize("y", [-50.0, -10.0, -1.5, -0.2])
    def test_split_quadrature_matches_plain(self, weibull_approx, y):
        """The breakpoint-aware w agrees with a plain expectation of v(y + X)."""
        plain = BaseApproximation.partial_w(weibull_approx, y, math.inf)
        assert weibull_approx.w_exact(y) == pytest.approx(plain, rel=1e-6)

    def test_lattice_sum_is_exact(self):
        model = DiscreteLattice.from_mapping({-1.0: 0.7, 1.0: 0.3})
        approx = Approximation(model)
        for y in (-6.0, -2.0, -1.0):
            expected = 0.7 * approx.v(y - 1.0) + 0.3 * approx.v(y + 1.0)
            assert approx.w(y) == pytest.approx(expected, rel=1e-14)

    def test_lower_bound_from_monotonicity(self, weibull_approx):
        y = -50.0
        lower = weibull_approx.v(y + weibull_approx.model.support_lower)
        assert weibull_approx.w(y) >= lower

    def test_near_one_far_above(self, pareto_approx):
        assert pareto_approx.w(200.0) == pytest.approx(1.0, abs=1e-8)

    def test_monotone(self, weibull_approx):
        ys = np.linspace(-100.0, 0.0, 41)
        ws = np.array([weibull_approx.w(y) for y in ys])
        assert np.all(np.diff(ws) >= 0.0)
        assert ws.max() <= 1.0

    def test_matches_convolution_by_simulation(self, weibull_approx):
        """w(-10) = P(X + Z > 10) with Z drawn by inversion of its tail."""
        stream = RandomStream.from_seed(2024)
        n = 200_000
        approx = weibull_approx
        # P(Z > t) = (1 + x) e^(-x) with x = 2 sqrt(t + 1): draw x from Gamma(2, 1), reject x < 2
        gen = stream.generator
        x = gen.gamma(2.0, 1.0, size=4 * n)
        x = x[x >= 2.0][:n]
        z = (x / 2.0) ** 2 - 1.0
        xs = np.array([approx.model.sample(stream) for _ in range(n)])
        # Z's atom at zero has mass 1 - P(Z > 0) = 1 - 3/e^2
        atom = stream.generator.random(n) < 1.0 - 3.0 * math.exp(-2.0)
        z = np.where(atom, 0.0, z)
        hits = (xs + z) > 10.0
        p = hits.mean()
        stderr = math.sqrt(p * (1.0 - p) / n)
        assert abs(approx.w(-10.0) - p) < 4.0 * stderr

    def test_approaches_v_relative_to_tail(self, weibull_approx):
        """|w - v| / P(X > -y) shrinks as y goes down."""
        ys = [-50.0, -100.0, -200.0, -400.0]
        ratios = [
            abs(weibull_approx.w(y) - weibull_approx.v(y)) / weibull_approx.model.tail(-y) for y in ys
        ]
        assert all(a > b for a, b in zip(ratios, ratios[1:])), ratios
        assert ratios[-1] < 0.5


class TestWTable:
    def test_spline_matches_quadrature(self, weibull_approx):
        table = weibull_approx.tabulate_w(-120.0, 0.0, resolution=0.01)
        assert table.has_w_table and not weibull_approx.has_w_table
        for y in (-117.3, -64.0, -10.05, -0.4):
            assert table.w(y) == pytest.approx(weibull_approx.w_exact(y), rel=1e-6)

    def test_outside_table_falls_back(self, weibull_approx):
        table = weibull_approx.tabulate_w(-20.0, 0.0)
        assert table.w(-40.0) == weibull_approx.w_exact(-40.0)

    def test_deep_range_matches_quadrature(self, weibull_approx):
        """A b = 250 run with a_star = -10 reads w down to -560."""
        table = weibull_approx.tabulate_w(-560.0, -250.0, resolution=0.01)
        for y in np.linspace(-559.3, -250.7, 12):
            assert table.w(y) == pytest.approx(weibull_approx.w_exact(y), rel=W_TABLE_RTOL)
        assert table.w_table.max_rel_error < W_TABLE_RTOL
        assert weibull_approx.w_table is None

    def test_coarse_table_warns(self, weibull_approx, caplog):
        with caplog.at_level(logging.WARNING, logger="src.core.approximation"):
            table = weibull_approx.tabulate_w(-120.0, 0.0, resolution=1.0)
        assert table.w_table.max_rel_error > W_TABLE_RTOL
        assert "lower w_resolution" in caplog.text

    def test_discrete_models_are_not_tabulated(self):
        approx = Approximation(DiscreteLattice.from_mapping({-1.0: 0.7, 1.0: 0.3}))
        assert approx.tabulate_w(-50.0) is approx

    def test_rejects_bad_range(self, weibull_approx):
        with pytest.raises(ValueError):
            weibull_approx.tabulate_w(-5.0, 1.0)


class TestConditionalCdf:
    def test_monotone_and_normalised(self, weibull_approx):
        beta = 20.0
        ts = [-0.9, 0.0, 5.0, 15.0, 19.0, 25.0, 200.0]
        cdf = [weibull_approx.conditional_cdf(beta, t) for t in ts]
        assert all(a <= b for a, b in zip(cdf, cdf[1:]))
        assert cdf[-1] == pytest.approx(1.0, abs=1e-8)
        assert cdf[0] >= 0.0


class TestAuxiliaryXi:
    def test_weibull_closed_form(self, weibull_approx):
        # I(100) / P(X > 100) = sqrt(101) + 1/2
        assert weibull_approx.auxiliary_xi(100.0) == pytest.approx(math.sqrt(101.0) + 0.5, rel=1e-8)

    def test_pareto_karamata(self, pareto_approx):
        assert pareto_approx.auxiliary_xi(1e3) == pytest.approx(1e3 / 1.5, rel=0.05)

    def test_at_support_minimum(self, weibull_approx):
        x = weibull_approx.model.support_lower
        assert weibull_approx.auxiliary_xi(x) == pytest.approx(weibull_approx.model.integrated_tail(x))

    def test_vanishing_tail(self):
        approx = Approximation(DiscreteLattice.from_mapping({-1.0: 0.7, 1.0: 0.3}))
        with pytest.raises(DomainError):
            approx.auxiliary_xi(5.0)


class TestFunctionApproximation:
    def test_custom_v(self):
        model = DiscreteLattice.from_mapping({-1.0: 0.7, 1.0: 0.3})
        approx = FunctionApproximation(model, lambda y: (3.0 / 7.0) ** max(1.0 - y, 0.0) if y <= 0 else 1.0)
        # the exact hitting probability is harmonic: w = v below zero
        for y in (-1.0, -4.0, -9.0):
            assert approx.w(y) == pytest.approx(approx.v(y), rel=1e-12)
        assert approx.kappa(-2.0) == approx.v(-2.0)
