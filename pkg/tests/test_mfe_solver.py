"""Tests for the mean-field equation solver."""
import math

import numpy as np
import pytest

from corpus import critical_path
from errors import InvalidInput, MassOutOfRange
from families import fs_profile
from mfe_solver import (
    SolverOptions,
    concentration_report,
    continuation,
    critical_mass,
    eps_from_depth,
    oracle_epsilon,
    perturbation_check,
    solve,
    solve_gamma_form,
)
from radial_core import evaluate, ma_mass


class TestMassRange:
    """Tests for the admissible mass range."""

    def test_critical_mass(self):
        """Test (n+1)^n."""
        assert critical_mass(2) == 9.0
        assert critical_mass(3) == 64.0

    def test_oracle_epsilon(self):
        """Test eps = sqrt((n+1)/a^{1/n} - 1)."""
        assert oracle_epsilon(2, 2.25) == pytest.approx(1.0)
        assert oracle_epsilon(2, 4.0) == pytest.approx(math.sqrt(0.5))

    def test_eps_from_depth(self):
        """Test the bottom value of fs(2, 1) gives eps = 1."""
        assert eps_from_depth(2, -3 * math.log(2.0)) == pytest.approx(1.0)

    @pytest.mark.parametrize("a", [0.0, -1.0, 9.0, 12.0])
    def test_mass_out_of_range(self, a):
        """Test masses outside (0, (n+1)^n) are rejected."""
        with pytest.raises(MassOutOfRange):
            solve(2, a)


class TestSolve:
    """Tests for solve."""

    @pytest.mark.parametrize("n,a", [(1, 1.0), (2, 4.0), (2, 2.25), (3, 10.0)])
    def test_matches_closed_form(self, n, a):
        """Test the solution is the Fubini-Study profile of the same mass."""
        solution = solve(n, a)
        family = fs_profile(n, oracle_epsilon(n, a))
        distance = np.max(np.abs(solution.profile.grid_g - evaluate(family, solution.profile.grid_t)))
        assert solution.converged
        assert solution.residual_sup < 1e-7
        assert distance < 1e-6
        assert solution.eps_fit == pytest.approx(oracle_epsilon(n, a), rel=1e-5)

    def test_fixed_point_is_kept(self):
        """Test a settled fixed point passes the residual check without the shooting fallback."""
        solution = solve(2, 4.0, SolverOptions(fallback=False))
        family = fs_profile(2, oracle_epsilon(2, 4.0))
        assert solution.method == "fixed_point"
        assert solution.residual_sup < 1e-7
        assert np.max(np.abs(solution.profile.grid_g - evaluate(family, solution.profile.grid_t))) < 1e-9

    def test_solution_mass(self):
        """Test the solution carries mass a."""
        solution = solve(2, 4.0)
        assert ma_mass(solution.profile).total == pytest.approx(4.0, rel=1e-7)

    def test_gamma_form(self):
        """Test the gamma form has unit mass and records gamma."""
        solution = solve_gamma_form(2, 1.5)
        assert solution.gamma == 1.5
        assert solution.mass_a == 1.0
        assert ma_mass(solution.profile).total == pytest.approx(1.0, rel=1e-7)

    def test_gamma_form_range(self):
        """Test gamma must stay below n + 1."""
        with pytest.raises(MassOutOfRange):
            solve_gamma_form(2, 3.0)

    def test_cross_check_records_distance(self):
        """Test the shooting cross-check is recorded."""
        solution = solve(1, 1.0, SolverOptions(cross_check=True))
        assert solution.method == "fixed_point"
        assert solution.cross_distance is not None

    def test_solution_maximizes_functional(self):
        """Test random admissible perturbations do not increase G_a."""
        report = perturbation_check(solve(2, 2.25), count=9, seed=0)
        assert report.count == 9
        assert report.holds


class TestContinuation:
    """Tests for continuation and concentration diagnostics."""

    def test_path_must_increase(self):
        """Test the mass path must be strictly increasing."""
        with pytest.raises(InvalidInput):
            continuation(2, [2.0, 1.0])

    def test_path_past_critical_mass(self):
        """Test the failing step is identified by index."""
        with pytest.raises(MassOutOfRange) as exc:
            continuation(1, [1.0, 2.5])
        assert exc.value.index == 1

    def test_eps_fit_decreases(self):
        """Test solutions sharpen as the mass grows."""
        solutions = continuation(2, [1.0, 2.25, 4.0])
        eps = [s.eps_fit for s in solutions]
        assert eps[0] > eps[1] > eps[2]
        assert eps[1] == pytest.approx(1.0, rel=1e-5)

    def test_warm_start_stays_on_fixed_point(self):
        """Test every continuation step is solved by the warm-started fixed point."""
        solutions = continuation(2, [1.0, 2.25, 4.0])
        assert [s.method for s in solutions] == ["fixed_point"] * 3

    def test_empty_report(self):
        """Test no solutions are classified as compact."""
        assert concentration_report([]).classification == "compact"

    def test_single_solution_is_compact(self):
        """Test one mass cannot show concentration."""
        report = concentration_report([solve(2, 4.0)])
        assert report.classification == "compact"
        assert 0 < report.rows[0].core_fraction < 1

    @pytest.mark.slow
    def test_concentration_near_critical_mass(self):
        """Test the path toward (n+1)^n concentrates mass at the origin."""
        report = concentration_report(continuation(2, critical_path(2)))
        last = report.rows[-1]
        assert report.classification == "concentrating"
        assert last.core_fraction > 0.99
        assert last.annulus_distance < 0.05
        fractions = [r.core_fraction for r in report.rows]
        assert fractions == sorted(fractions)
