"""Tests for the thermodynamic formalism."""
import math

import numpy as np
import pytest

from corpus import unit_mass_corpus
from errors import Divergent, InfiniteEnergy, InvalidInput, NotNormalized
from families import cone_profile, fs_profile, zero_profile
from radial_core import GridSpec, build_grid, normalize_mass, scale_profile
from thermo import (
    alpha_lower_bound,
    corpus_c_t,
    duality_gap,
    entropy,
    entropy_legendre_gap,
    free_energy,
    free_energy_bound,
    gibbs_measure,
    ma_measure,
    make_measure,
    measure_energy,
    potential_of_measure,
    uniform_measure,
    variational_gap,
)


class TestMeasures:
    """Tests for radial measures."""

    def test_uniform_measure_is_probability(self):
        """Test dV has unit total mass and zero entropy."""
        mu = uniform_measure(2)
        assert mu.total == pytest.approx(1.0, rel=1e-12)
        assert entropy(mu) == pytest.approx(0.0, abs=1e-12)

    def test_gibbs_of_cone(self):
        """Test gibbs(cone(2, 1), 1) has density e^{-t}/2 and entropy 1 - log 2."""
        mu = gibbs_measure(cone_profile(2, 1.0), 1.0)
        assert mu.density[-1] == pytest.approx(0.5, rel=1e-10)
        assert mu.total == pytest.approx(1.0, rel=1e-10)
        assert entropy(mu) == pytest.approx(1.0 - math.log(2.0), rel=1e-8)

    def test_gibbs_diverges_above_threshold(self):
        """Test e^{-gamma u} must be integrable."""
        with pytest.raises(Divergent):
            gibbs_measure(cone_profile(2, 1.0), 2.0)

    def test_negative_density(self):
        """Test densities must be nonnegative."""
        t = build_grid(GridSpec(points=11))
        with pytest.raises(InvalidInput):
            make_measure(t, -np.ones_like(t), 2)

    def test_non_integrable_tail(self):
        """Test a tail growing like e^{-nt} or faster is rejected."""
        t = build_grid(GridSpec(points=11))
        with pytest.raises(Divergent):
            make_measure(t, np.ones_like(t), 2, tail_density=1.0, tail_rate=2.0)

    def test_entropy_needs_probability(self):
        """Test entropy rejects measures of total mass 2."""
        t = build_grid(GridSpec())
        with pytest.raises(NotNormalized):
            entropy(make_measure(t, 2 * np.ones_like(t), 2, tail_density=2.0))

    def test_atom_has_infinite_entropy(self):
        """Test the Dirac mass of a unit cone."""
        mu = ma_measure(cone_profile(2, 1.0))
        assert mu.atom_origin == pytest.approx(1.0)
        assert entropy(mu) == math.inf
        assert free_energy(mu, 1.0) == -math.inf
        with pytest.raises(InfiniteEnergy):
            measure_energy(mu)


class TestEnergy:
    """Tests for measure energy and potentials."""

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_energy_of_volume(self, n):
        """Test E(dV) = n/(n+1)^2."""
        assert measure_energy(uniform_measure(n)) == pytest.approx(n / (n + 1) ** 2, rel=1e-6)

    def test_potential_of_volume(self):
        """Test the potential of dV is e^t - 1."""
        u = potential_of_measure(uniform_measure(2))
        np.testing.assert_allclose(u.grid_g, np.expm1(u.grid_t), atol=1e-8)

    @pytest.mark.parametrize("n,eps", [(1, 1.0), (2, 0.5), (3, 2.0)])
    def test_potential_inverts_monge_ampere(self, n, eps):
        """Test the potential of (dd^c u)^n gives back u on Fubini-Study profiles."""
        p = fs_profile(n, eps)
        u = potential_of_measure(ma_measure(p))
        np.testing.assert_allclose(u.grid_g, p.grid_g, rtol=0, atol=1e-8)

    def test_free_energy_under_refinement(self):
        """Test F_gamma of a Gibbs measure barely moves when the grid is refined."""
        coarse = free_energy(gibbs_measure(fs_profile(2, 0.5), 2.0), 2.0)
        fine = free_energy(gibbs_measure(fs_profile(2, 0.5, GridSpec(points=16001)), 2.0), 2.0)
        assert fine == pytest.approx(coarse, abs=1e-8)

    def test_variational_gap_vanishes_at_potential(self):
        """Test E(mu) = E_thermo(u_mu) - <u_mu, mu>."""
        mu = uniform_measure(2)
        assert variational_gap(mu, potential_of_measure(mu)) == pytest.approx(0.0, abs=1e-6)

    def test_variational_gap_is_nonnegative(self):
        """Test other test functions give a positive gap."""
        mu = uniform_measure(2)
        assert variational_gap(mu, zero_profile(2)) == pytest.approx(2 / 9, rel=1e-6)
        assert variational_gap(mu, normalize_mass(fs_profile(2, 1.0))) > 0


class TestDualities:
    """Tests for the free-energy dualities."""

    def test_zero_profile_gap(self):
        """Test the gap of u = 0 equals E(dV)."""
        assert duality_gap(zero_profile(2), 1.0) == pytest.approx(2 / 9, rel=1e-6)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matched_gap_vanishes(self, n):
        """Test the gap vanishes for u = phi / M^{1/n} at gamma = M^{1/n}."""
        gamma = (n + 1) / 2
        u = scale_profile(fs_profile(n, 1.0), 1.0 / gamma)
        assert abs(duality_gap(u, gamma)) < 1e-6

    @pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0, 2.5])
    def test_gap_is_nonnegative(self, gamma):
        """Test F_gamma(gibbs(u)) >= G_gamma(u)."""
        for eps in (0.5, 1.0, 2.0):
            assert duality_gap(fs_profile(2, eps), gamma) >= -1e-8

    def test_entropy_legendre_equality(self):
        """Test mu = dV, u = 0 gives a zero gap."""
        assert entropy_legendre_gap(uniform_measure(2), zero_profile(2), 1.0) == pytest.approx(0.0, abs=1e-10)

    def test_entropy_legendre_inequality(self):
        """Test the gap is nonnegative against a cone."""
        mu = gibbs_measure(fs_profile(2, 1.0), 2.0)
        assert entropy_legendre_gap(mu, cone_profile(2, 0.5), 2.0) >= -1e-8

    def test_entropy_legendre_at_gibbs(self):
        """Test the gap vanishes when mu is the Gibbs measure of u."""
        u = fs_profile(2, 0.5)
        assert entropy_legendre_gap(gibbs_measure(u, 1.0), u, 1.0) == pytest.approx(0.0, abs=1e-8)


class TestAlphaInvariant:
    """Tests for the alpha bound and C_t."""

    def test_corpus_alpha(self):
        """Test the unit-mass corpus in dimension 2 has alpha bound 2."""
        assert alpha_lower_bound(2, unit_mass_corpus(2)) == pytest.approx(2.0)

    def test_bounded_only_without_green(self):
        """Test bounded profiles alone give no finite bound."""
        profiles = [normalize_mass(fs_profile(2, 1.0))]
        assert alpha_lower_bound(2, profiles, include_green=False) == math.inf
        assert alpha_lower_bound(2, profiles) == 2.0

    def test_unit_mass_required(self):
        """Test profiles must be normalized."""
        with pytest.raises(NotNormalized):
            alpha_lower_bound(2, [fs_profile(2, 1.0)])

    def test_c_t_includes_cones(self):
        """Test C_1 is at least log 2 from the unit cone."""
        assert corpus_c_t(unit_mass_corpus(2), 1.0) >= math.log(2.0) - 1e-10

    def test_c_t_diverges_at_threshold(self):
        """Test t = n is outside the integrable range of the unit cone."""
        with pytest.raises(Divergent):
            corpus_c_t(unit_mass_corpus(2), 2.0)

    def test_free_energy_bound(self):
        """Test F_gamma(mu) is below the C_t bound for MA(u) of a corpus profile."""
        profiles = unit_mass_corpus(2)
        c_t = corpus_c_t(profiles, 1.0)
        for profile in profiles:
            report = free_energy_bound(ma_measure(profile), 1.0, 1.0, c_t)
            assert report.holds

    def test_free_energy_bound_ranges(self):
        """Test t and gamma are range checked."""
        mu = uniform_measure(2)
        with pytest.raises(InvalidInput):
            free_energy_bound(mu, 1.0, 2.5, 0.0)
        with pytest.raises(InvalidInput):
            free_energy_bound(mu, 2.0, 1.0, 0.0)
