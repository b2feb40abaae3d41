"""Exact lattice oracles, drift checks and the named validation suite."""

import math

import numpy as np
import pytest

from src.core.approximation import Approximation, FunctionApproximation
from src.core.errors import ConfigError, UnstableSamplerWarning, UnsupportedInstanceError
from src.validation.lattice import DiscreteWalkSpec, exact_u_star, harmonic_residual, killed_kernel
from src.validation.lyapunov import (
    bg_kernel_ratio,
    constant_ratio,
    exact_second_moment,
    lyapunov_check,
    safety_certificate,
    truncate_below,
    zero_variance_ratio,
)
from src.validation.suite import (
    CHECKS,
    GAMBLERS_RUIN,
    HEAVY_Y_MIN,
    NO_UPWARD_MASS,
    SKEWED_WALK,
    calibrated_heavy_lattice,
    geometric_v,
    heavy_lattice,
    run_suite,
)

R = 3.0 / 7.0

FAST_CHECKS = [
    "gamblers_ruin",
    "methods_agree",
    "harmonic",
    "no_upward_mass",
    "zero_variance",
    "identity_kernel",
    "second_moment_recursion",
    "cauchy_schwarz",
    "safety_certificate",
]


class TestDiscreteWalkSpec:
    def test_step_and_jumps(self):
        spec = DiscreteWalkSpec.from_mapping({-0.5: 0.7, 0.25: 0.3})
        assert spec.step == pytest.approx(0.25)
        assert spec.jumps == (-2, 1)

    @pytest.mark.parametrize("irrational", [math.sqrt(2.0), math.pi])
    def test_non_lattice_support(self, irrational):
        spec = DiscreteWalkSpec.from_mapping({-2.0: 0.7, irrational: 0.3})
        with pytest.raises(UnsupportedInstanceError):
            spec.step

    def test_positive_mean_rejected(self):
        with pytest.raises(ValueError, match="negative mean"):
            DiscreteWalkSpec.from_mapping({-1.0: 0.5, 1.0: 0.5})

    def test_model_round_trip(self):
        model = GAMBLERS_RUIN.model()
        assert model.mean == pytest.approx(-0.4)


class TestKilledKernel:
    def test_exit_weight_only_from_top(self):
        kernel = killed_kernel(GAMBLERS_RUIN, 10)
        assert kernel.eta[-1] == pytest.approx(0.3)
        assert np.all(kernel.eta[:-1] == 0.0)
        assert kernel.levels[0] == -10.0 and kernel.levels[-1] == 0.0

    def test_banded_form_matches_apply(self):
        """Rebuild I - K densely from apply() and compare with the banded storage."""
        kernel = killed_kernel(SKEWED_WALK, 12)
        size = kernel.depth + 1
        dense = np.eye(size) - np.column_stack([kernel.apply(col) for col in np.eye(size)])
        (lower, upper), ab = kernel.banded()
        for i in range(size):
            for j in range(max(0, i - lower), min(size, i + upper + 1)):
                assert ab[upper + i - j, j] == pytest.approx(dense[i, j])

    def test_infinite_ratio_drops_moves(self):
        kernel = killed_kernel(GAMBLERS_RUIN, 5, lambda y, z: math.inf if z > 0 else 1.0)
        assert np.all(kernel.eta == 0.0)


class TestExactUStar:
    def test_gamblers_ruin_closed_form(self):
        sol = exact_u_star(GAMBLERS_RUIN, 30)
        for b in range(0, 11):
            assert sol.u(-b) == pytest.approx(R ** (b + 1), rel=1e-10)

    def test_outside_table(self):
        sol = exact_u_star(GAMBLERS_RUIN, 10)
        assert sol(0.5) == 1.0
        assert sol(-11.0) == 0.0
        assert sol.step == 1.0

    def test_methods_agree(self):
        linear = exact_u_star(SKEWED_WALK, 30, method="linear")
        iterated = exact_u_star(SKEWED_WALK, 30, method="iteration")
        np.testing.assert_allclose(iterated.u_star, linear.u_star, rtol=1e-10)

    def test_no_upward_mass(self):
        assert np.all(exact_u_star(NO_UPWARD_MASS, 10).u_star == 0.0)

    @pytest.mark.parametrize("spec", [GAMBLERS_RUIN, SKEWED_WALK, heavy_lattice()], ids=["ruin", "skewed", "heavy"])
    def test_harmonic(self, spec):
        assert harmonic_residual(spec, exact_u_star(spec, 100)) < 1e-10

    def test_monotone_in_level(self):
        sol = exact_u_star(heavy_lattice(), 60)
        assert np.all(np.diff(sol.u_star) >= -1e-15)

    def test_bad_arguments(self):
        with pytest.raises(ValueError, match="method"):
            exact_u_star(GAMBLERS_RUIN, 10, method="dense")
        with pytest.raises(ValueError, match="L must"):
            exact_u_star(GAMBLERS_RUIN, 0)


class TestSecondMoment:
    def test_zero_variance_kernel(self):
        exact = exact_u_star(GAMBLERS_RUIN, 60)
        s = exact_second_moment(GAMBLERS_RUIN, zero_variance_ratio(exact), 60)
        for k in range(0, 11):
            assert s.s(-k) == pytest.approx(exact.u(-k) ** 2, rel=1e-9)

    def test_identity_ratio_gives_first_passage(self):
        exact = exact_u_star(SKEWED_WALK, 30)
        s = exact_second_moment(SKEWED_WALK, constant_ratio(1.0), 30)
        np.testing.assert_allclose(s.values[-11:], exact.u_star[-11:], rtol=1e-9)

    def test_geometric_v_dominates_square(self):
        exact = exact_u_star(GAMBLERS_RUIN, 30)
        approx = FunctionApproximation(GAMBLERS_RUIN.model(), geometric_v(), label="geometric")
        s = exact_second_moment(GAMBLERS_RUIN, bg_kernel_ratio(approx, 0.0), 30)
        for k in range(0, 21):
            assert s.s(-k) >= exact.u(-k) ** 2 * (1.0 - 1e-10)

    def test_recursion_is_tight(self):
        approx = FunctionApproximation(GAMBLERS_RUIN.model(), geometric_v(), label="geometric")
        ratio = bg_kernel_ratio(approx, 0.0)
        s = exact_second_moment(GAMBLERS_RUIN, ratio, 30)
        report = lyapunov_check(GAMBLERS_RUIN, s, ratio, -np.arange(0, 30))
        assert report.frame["margin"].abs().max() < 1e-10
        assert list(report.frame.columns) == ["y", "h", "kh", "eta", "margin"]

    def test_exploding_kernel_warns(self):
        with pytest.warns(UnstableSamplerWarning):
            s = exact_second_moment(GAMBLERS_RUIN, constant_ratio(3.0), 10)
        assert np.all(np.isinf(s.values))

    def test_too_fast_drift_fails_lyapunov(self):
        """A flat h = 0.5 cannot absorb the exit weight at the top level."""
        report = lyapunov_check(GAMBLERS_RUIN, lambda y: 0.5, constant_ratio(1.0), [0.0, -1.0])
        assert not report.passed()
        assert report.worst_level == 0.0
        assert report.max_margin == pytest.approx(0.15)


class TestHeavyLatticeCertificate:
    @pytest.fixture(scope="class")
    def calibrated(self):
        return calibrated_heavy_lattice()

    def test_truncated_v(self):
        approx = Approximation(heavy_lattice().model())
        cut = truncate_below(approx, -10.0)
        assert cut.v(-10.0) == approx.v(-10.0) > 0.0
        assert cut.v(-11.0) == 0.0
        assert cut.v(1.0) == 1.0

    def test_scan_starts_at_floor(self, calibrated):
        _, _, safety = calibrated
        assert safety.verified_grid[0].y == HEAVY_Y_MIN
        assert HEAVY_Y_MIN < safety.a_star <= 0.0

    def test_series_finite_and_below_certificate(self, calibrated):
        """Every state the shifted sampler reaches was scanned, so s stays under H."""
        spec, approx, safety = calibrated
        ratio = bg_kernel_ratio(approx, safety.a_star)
        s = exact_second_moment(spec, ratio, 20)
        certificate = safety_certificate(approx, safety)
        assert np.all(np.isfinite(s.values))
        for k in range(0, 21):
            assert s.s(-k) <= certificate(-k) * (1.0 + 1e-9)

    def test_untruncated_v_diverges(self, calibrated):
        """Without the cut the walk reaches uncalibrated levels near -top."""
        spec, _, safety = calibrated
        ratio = bg_kernel_ratio(Approximation(spec.model()), safety.a_star)
        with pytest.warns(UnstableSamplerWarning):
            s = exact_second_moment(spec, ratio, 20)
        assert np.all(np.isinf(s.values))


class TestSuite:
    def test_registry(self):
        assert set(FAST_CHECKS) < set(CHECKS)
        assert {"unbiased", "restricted_mean"} < set(CHECKS)

    def test_fast_checks_pass(self):
        report = run_suite(FAST_CHECKS, n=1000, seed=0)
        failures = [f"{r.name}: {r.worst:.3e} > {r.tolerance:.1e} ({r.detail})" for r in report.results if not r.passed]
        assert report.passed, failures
        assert [r.name for r in report.results] == FAST_CHECKS
        assert all(r.seconds >= 0.0 for r in report.results)

    def test_unbiased(self):
        report = run_suite(["unbiased"], n=4000, seed=1)
        assert report.passed, report.results[0]

    def test_corrupted_v_fails_zero_variance(self):
        report = run_suite(["zero_variance"], v_corruption=1.2, n=200)
        assert not report.passed
        assert report.first_failure.name == "zero_variance"
        frame = report.frame()
        assert frame.loc[0, "status"] == "FAIL"

    @pytest.mark.parametrize("selection", [[], ["gamblers_ruin", "nonsense"]])
    def test_bad_selection(self, selection):
        with pytest.raises(ConfigError):
            run_suite(selection)

    @pytest.mark.slow
    def test_restricted_mean(self):
        report = run_suite(["restricted_mean"], n=20_000, seed=0)
        assert report.passed, report.results[0]

    @pytest.mark.slow
    def test_default_suite_passes(self):
        report = run_suite()
        failures = [f"{r.name}: {r.worst:.3e} > {r.tolerance:.1e} ({r.detail})" for r in report.results if not r.passed]
        assert report.passed, failures
        assert [r.name for r in report.results] == list(CHECKS)
