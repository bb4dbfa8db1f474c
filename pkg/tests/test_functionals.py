"""Tests for Moser-Trudinger and Brezis-Merle evaluations."""
import json
import math
from pathlib import Path

import pytest

from corpus import build_entry, corpus_profiles, find_entry
from errors import InfiniteEnergy, InvalidInput, VolumeBoundViolated
from families import cone_profile, fs_profile, product_lift, zero_profile
from functionals import (
    FamilySpec,
    bm_check,
    bm_check_product,
    fit_volume_bound,
    growth_rate,
    mt_check,
    sobolev_check,
    sweep,
    trudinger_integral,
)
from radial_core import ma_mass

GOLDEN = Path(__file__).parent / "golden"


class TestMTCheck:
    """Tests for mt_check."""

    def test_zero_profile_is_equality(self):
        """Test u = 0 makes both sides vanish."""
        report = mt_check(zero_profile(2), 3.0)
        assert report.lhs == pytest.approx(0.0, abs=1e-12)
        assert report.j_raw == 0.0
        assert report.sharp_margin == pytest.approx(0.0, abs=1e-12)

    def test_critical_scaling_value(self):
        """Test G_3 of the critically scaled fs(2, 0.1)."""
        report = mt_check(FamilySpec("fs", 2).build(0.1), 3.0)
        assert report.g_value == pytest.approx(0.4934, abs=1e-3)

    def test_bounded_at_critical_gamma(self):
        """Test G_{n+1} stays bounded as eps shrinks."""
        family = FamilySpec("fs", 2)
        values = [mt_check(family.build(eps), 3.0).g_value for eps in (0.1, 0.02, 0.005)]
        assert max(values) - min(values) < 0.05

    @pytest.mark.parametrize("eps,expected", [(1.0, 0.2154), (0.01, 1.19758), (0.005, 1.32958)])
    def test_supercritical_values(self, eps, expected):
        """Test G_3.5 along the critically scaled family."""
        report = mt_check(FamilySpec("fs", 2).build(eps), 3.5)
        assert report.g_value == pytest.approx(expected, abs=1e-3)

    def test_supercritical_slope(self):
        """Test G_3.5 grows at the asymptotic rate per unit of log(1/eps^2)."""
        family = FamilySpec("fs", 2)
        g_mid = mt_check(family.build(0.01), 3.5).g_value
        g_small = mt_check(family.build(0.005), 3.5).g_value
        slope = (g_small - g_mid) / (2 * math.log(2.0))
        assert slope == pytest.approx(growth_rate(2, 3.5), rel=0.02)

    def test_quasi_rhs_per_delta(self):
        """Test one quasi-sharp bound per delta."""
        report = mt_check(fs_profile(2, 1.0), 1.0, deltas=(0.5, 0.1))
        assert set(report.quasi_rhs) == {0.5, 0.1}
        assert all(margin > 0 for margin in report.quasi_margin.values())

    def test_cone_has_infinite_energy(self):
        """Test the check needs finite energy."""
        with pytest.raises(InfiniteEnergy):
            mt_check(cone_profile(2, 0.5), 1.0)

    def test_gamma_must_be_positive(self):
        """Test gamma > 0."""
        with pytest.raises(InvalidInput):
            mt_check(zero_profile(2), 0.0)

    def test_growth_rate(self):
        """Test kappa = 1 - n/gamma - 1/(n+1)."""
        assert growth_rate(2, 3.5) == pytest.approx(0.095238, rel=1e-5)

    def test_trudinger_integral(self):
        """Test the Trudinger integral is finite and above the volume."""
        value = trudinger_integral(fs_profile(2, 1.0), 0.5)
        assert math.isfinite(value)
        assert value > 1.0

    def test_trudinger_delta_range(self):
        """Test delta must lie in (0, 1)."""
        with pytest.raises(InvalidInput):
            trudinger_integral(fs_profile(2, 1.0), 1.5)


class TestBMCheck:
    """Tests for bm_check."""

    def test_fs_ratios(self):
        """Test fs(2, 1): integral 2, ratio 0.875."""
        report = bm_check(fs_profile(2, 1.0))
        assert report.mass == pytest.approx(2.25)
        assert report.integral == pytest.approx(2.0, rel=1e-9)
        assert report.ratio_quasi == pytest.approx(0.875, rel=1e-9)
        assert report.admissible

    def test_fs_wide(self):
        """Test fs(2, 2): integral 1.25, ratio 1.1375."""
        report = bm_check(fs_profile(2, 2.0))
        assert report.integral == pytest.approx(1.25, rel=1e-9)
        assert report.ratio_quasi == pytest.approx(1.1375, rel=1e-9)

    @pytest.mark.parametrize("slope", [1.5, 1.9, 1.99, 1.999])
    def test_cone_ratio_bounded(self, slope):
        """Test cone(2, s) has ratio 1 + s/2 while the integral blows up."""
        report = bm_check(cone_profile(2, slope))
        assert report.integral == pytest.approx(2 / (2 - slope), rel=1e-10)
        assert report.ratio_sharp == pytest.approx(1 + slope / 2, rel=1e-9)

    def test_corpus_ratio_below_recorded_constant(self):
        """Test ratio_quasi stays below the recorded A0 on the corpus and its disc products."""
        golden = json.loads((GOLDEN / "bm_corpus.json").read_text())
        reports = [bm_check(p) for p in corpus_profiles()]
        for first, second in golden["products"]:
            lift = product_lift(build_entry(find_entry(first)), build_entry(find_entry(second)))
            reports.append(bm_check_product(lift))
        admissible = [r for r in reports if r.admissible]
        assert len(admissible) >= 10
        assert max(r.ratio_quasi for r in admissible) <= golden["A0"]

    def test_inadmissible_mass(self):
        """Test mass at or above n^n is not admissible."""
        report = bm_check(cone_profile(2, 2.5))
        assert not report.admissible
        assert report.ratio_sharp == math.inf


class TestSobolev:
    """Tests for volume fits and moment bounds."""

    def test_fitted_bound_implies_moment_bound(self):
        """Test the tight volume fit gives a valid moment bound."""
        p = fs_profile(2, 1.0)
        fit = fit_volume_bound(p)
        assert fit.b > 0
        for power in (1.0, 2.0, 3.5):
            assert sobolev_check(p, power, fit.b, fit.c).holds

    def test_violated_volume_bound(self):
        """Test an overly strong volume bound is reported with its level."""
        with pytest.raises(VolumeBoundViolated) as exc:
            sobolev_check(fs_profile(2, 1.0), 2.0, 100.0, 1.0)
        assert exc.value.s > 0

    def test_zero_profile_fit(self):
        """Test V vanishes for u = 0, so any B works."""
        assert fit_volume_bound(zero_profile(2)).b == math.inf

    def test_bad_constants(self):
        """Test B and C must be positive."""
        with pytest.raises(InvalidInput):
            sobolev_check(fs_profile(2, 1.0), 2.0, -1.0, 1.0)


class TestSweep:
    """Tests for family sweeps."""

    def test_empty_gamma_list(self):
        """Test no gammas give no rows."""
        assert sweep(FamilySpec("fs", 2), [], [1.0]) == []

    def test_row_order(self):
        """Test rows come back in (gamma, param) order with several workers."""
        rows = sweep(FamilySpec("fs", 2), [3.0, 3.5], [1.0, 0.1], workers=2)
        assert [(r.gamma, r.param) for r in rows] == [(3.0, 1.0), (3.0, 0.1), (3.5, 1.0), (3.5, 0.1)]

    def test_cone_rows_skip_mt(self):
        """Test cones have no Moser-Trudinger part."""
        rows = sweep(FamilySpec("cone", 2), [1.0], [0.5])
        assert rows[0].mt is None
        assert rows[0].bm.mass == pytest.approx(0.25)

    def test_unit_mass_normalization(self):
        """Test the unit-mass scaling."""
        p = FamilySpec("fs", 3, "unit_mass").build(0.5)
        assert ma_mass(p).total == pytest.approx(1.0, rel=1e-10)

    def test_critical_normalization(self):
        """Test the critical scaling divides by n + 1."""
        p = FamilySpec("fs", 2).build(1.0)
        assert ma_mass(p).total == pytest.approx(0.25, rel=1e-10)
