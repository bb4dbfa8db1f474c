"""Tests for the closed-form families."""
import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from errors import DimensionMismatch, EpsTooSmall, InvalidInput
from families import (
    bergman_ratio,
    cone_profile,
    fs_exp_integral,
    fs_mass,
    fs_profile,
    ke_constant,
    ke_residual,
    product_lift,
    zero_profile,
)
from functionals import bm_check_product
from radial_core import exp_integral


class TestFubiniStudy:
    """Tests for the Fubini-Study family."""

    def test_fs_mass_values(self):
        """Test closed-form masses."""
        assert fs_mass(2, 1.0) == pytest.approx(2.25)
        assert fs_mass(1, 1.0) == pytest.approx(1.0)
        assert fs_mass(3, 0.0001) == pytest.approx(64.0, rel=1e-7)

    def test_ke_constant(self):
        """Test the Kähler-Einstein constant (n+1)^n eps^2 / (1+eps^2)^{n+1}."""
        assert ke_constant(2, 1.0) == pytest.approx(1.125)
        assert ke_constant(1, 2.0) == pytest.approx(2 * 4 / 25)

    def test_profile_endpoints(self):
        """Test g(0) = 0 and the bottom value (n+1) log(eps^2/(1+eps^2))."""
        p = fs_profile(2, 1.0)
        assert p.grid_g[-1] == 0.0
        assert p.grid_g[0] == pytest.approx(-3 * math.log(2.0), abs=1e-12)
        assert p.bounded

    def test_shoulder_is_a_grid_node(self):
        """Test log eps^2 is refined into the grid."""
        p = fs_profile(2, 0.1)
        assert min(abs(p.grid_t - 2 * math.log(0.1))) < 1e-12

    def test_eps_too_small(self):
        """Test a shoulder below t_min is rejected."""
        with pytest.raises(EpsTooSmall):
            fs_profile(2, 1e-10)

    def test_nonpositive_eps(self):
        """Test eps must be positive."""
        with pytest.raises(InvalidInput):
            fs_mass(2, 0.0)

    @pytest.mark.parametrize("n,eps,gamma", [(1, 1.0, 0.0), (2, 1.0, 1.0), (2, 0.5, 2.0), (3, 1.0, 0.5)])
    def test_exp_integral_closed_form(self, n, eps, gamma):
        """Test the extended-precision formula against quadrature."""
        assert exp_integral(fs_profile(n, eps), gamma) == pytest.approx(fs_exp_integral(n, eps, gamma), rel=1e-9)

    def test_bm_integral_values(self):
        """Test int e^{-phi} dV = 2 for fs(2, 1)."""
        assert fs_exp_integral(2, 1.0, 1.0) == pytest.approx(2.0, rel=1e-12)

    def test_bergman_ratio(self):
        """Test b_n(eps) = n!/M."""
        assert bergman_ratio(2, 1.0) == pytest.approx(2 / 2.25, rel=1e-10)


class TestKEResidual:
    """Tests for the Kähler-Einstein residual."""

    @pytest.mark.parametrize("n,eps", [(1, 0.01), (2, 0.1), (2, 1.0), (3, 2.0)])
    def test_analytic_mode(self, n, eps):
        """Test the density ratio is constant and equals the closed form."""
        res = ke_residual(n, eps)
        assert res.max_rel_dev < 1e-10
        assert res.constant == pytest.approx(res.candidate, rel=1e-10)

    def test_numeric_mode(self):
        """Test differentiating the sampled mass recovers the constant."""
        res = ke_residual(2, 1.0, mode="numeric")
        assert res.mode == "numeric"
        assert res.max_rel_dev < 1e-4
        assert res.constant == pytest.approx(1.125, rel=1e-4)

    def test_unknown_mode(self):
        """Test the mode is validated."""
        with pytest.raises(InvalidInput):
            ke_residual(2, 1.0, mode="spectral")


class TestCones:
    """Tests for cones and the zero profile."""

    def test_cone_is_linear(self):
        """Test g(t) = slope * t."""
        p = cone_profile(2, 0.5)
        assert p.grid_g[0] == pytest.approx(-20.0)
        assert p.tail_slope == 0.5

    def test_negative_slope(self):
        """Test the slope must be nonnegative."""
        with pytest.raises(InvalidInput):
            cone_profile(2, -0.1)

    def test_zero_profile_is_bounded(self):
        """Test u = 0 is bounded."""
        assert zero_profile(3).bounded


class TestProductLift:
    """Tests for separable products."""

    def test_cone_product(self):
        """Test cone(1, 0.9) x cone(1, 0.9): mass 1.62, integral 100."""
        sp = product_lift(cone_profile(1, 0.9), cone_profile(1, 0.9))
        assert sp.dim_n == 2
        assert sp.mass == pytest.approx(1.62)
        assert sp.exp_integral(1.0) == pytest.approx(100.0, rel=1e-9)

    def test_product_ratio_grows(self):
        """Test the Brezis-Merle ratio of the product is large and grows with the slope."""
        low = bm_check_product(product_lift(cone_profile(1, 0.9), cone_profile(1, 0.9)))
        high = bm_check_product(product_lift(cone_profile(1, 0.99), cone_profile(1, 0.99)))
        assert low.ratio_quasi == pytest.approx(59.5, rel=1e-8)
        assert high.ratio_quasi > 10 * low.ratio_quasi

    @pytest.mark.parametrize("eps,slope", [(0.5, 0.5), (1.0, 0.9)])
    def test_fs_cone_product_against_double_integral(self, eps, slope):
        """Test the factorized integral of fs(1, eps) x cone(1, slope) against a 2D quadrature."""
        sp = product_lift(fs_profile(1, eps), cone_profile(1, slope))

        def integrand(t2, t1):
            g1 = 2.0 * (np.logaddexp(2.0 * math.log(eps), t1) - math.log1p(eps * eps))
            return math.exp(t1 + t2 - g1 - slope * t2)

        direct, _ = dblquad(integrand, -60.0, 0.0, -400.0, 0.0, epsabs=0.0, epsrel=1e-12)
        assert sp.exp_integral(1.0) == pytest.approx(direct, rel=1e-9)
        assert sp.mass == pytest.approx(2 * fs_mass(1, eps) * slope, rel=1e-10)

    def test_second_factor_must_be_a_disc(self):
        """Test the second factor must have n = 1."""
        with pytest.raises(DimensionMismatch):
            product_lift(cone_profile(1, 0.5), cone_profile(2, 0.5))
