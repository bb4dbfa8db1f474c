"""Thermodynamic formalism for radial measures.

A RadialMeasure is dmu = density dV + atom * delta_0 with dV = n e^{nt} dt.
Below t_min the density continues as tail_density * e^{-tail_rate (t - t_min)},
which is exact for Gibbs measures of profiles with a linear tail.
"""
import math
from dataclasses import dataclass

import numpy as np
import structlog
from scipy.integrate import cumulative_simpson
from scipy.special import xlogy

from errors import DimensionMismatch, Divergent, InfiniteEnergy, InvalidInput, NotNormalized
from radial_core import (
    GridSpec,
    RadialProfile,
    build_grid,
    energy,
    evaluate,
    exp_integral,
    integrate,
    ma_density,
    ma_mass,
    make_profile,
    singularity_exponent,
)

log = structlog.get_logger()

TOL_TOTAL = 1e-8
TOL_UNIT_MASS = 1e-8

# ============================================
# Measures
# ============================================


@dataclass(frozen=True, eq=False)
class RadialMeasure:
    grid_t: np.ndarray
    density: np.ndarray
    atom_origin: float
    dim_n: int
    tail_density: float = 0.0
    tail_rate: float = 0.0
    label: str = ""

    @property
    def t_min(self) -> float:
        return float(self.grid_t[0])

    @property
    def _tail_weight(self) -> float:
        """rho0 n e^{nT}; the tail integrals are this times powers of 1/(n - rate)."""
        return self.tail_density * self.dim_n * math.exp(self.dim_n * self.t_min)

    @property
    def tail_mass(self) -> float:
        if self.tail_density == 0:
            return 0.0
        return self._tail_weight / (self.dim_n - self.tail_rate)

    @property
    def total(self) -> float:
        n = self.dim_n
        body = integrate(self.density * n * np.exp(n * self.grid_t), self.grid_t).value
        return self.atom_origin + body + self.tail_mass


def make_measure(
    grid_t,
    density,
    dim_n: int,
    atom_origin: float = 0.0,
    tail_density: float = 0.0,
    tail_rate: float = 0.0,
    label: str = "",
) -> RadialMeasure:
    t = np.array(grid_t, dtype=float)
    rho = np.array(density, dtype=float)
    if t.shape != rho.shape or t.ndim != 1 or len(t) < 2:
        raise InvalidInput("grid and density must be 1D of equal length >= 2")
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise InvalidInput("density must be finite and nonnegative")
    if atom_origin < 0 or tail_density < 0:
        raise InvalidInput("atom and tail density must be nonnegative", atom=atom_origin)
    if tail_density > 0 and not tail_rate < dim_n:
        raise Divergent("tail density is not integrable", tail_rate=tail_rate, n=dim_n)
    t.setflags(write=False)
    rho.setflags(write=False)
    return RadialMeasure(
        grid_t=t,
        density=rho,
        atom_origin=float(atom_origin),
        dim_n=int(dim_n),
        tail_density=float(tail_density),
        tail_rate=float(tail_rate),
        label=label,
    )


def uniform_measure(n: int, grid_spec: GridSpec | None = None) -> RadialMeasure:
    """Normalized volume dV."""
    t = build_grid(grid_spec or GridSpec())
    return make_measure(t, np.ones_like(t), n, tail_density=1.0, label=f"dV(n={n})")


def ma_measure(profile: RadialProfile) -> RadialMeasure:
    """(dd^c u)^n as a radial measure; a linear tail carries no mass besides the atom."""
    return make_measure(
        profile.grid_t,
        ma_density(profile),
        profile.dim_n,
        atom_origin=ma_mass(profile).atom_origin,
        label=f"MA[{profile.label}]",
    )


def gibbs_measure(profile: RadialProfile, gamma: float) -> RadialMeasure:
    """e^{-gamma u} dV / int e^{-gamma u} dV."""
    z = exp_integral(profile, gamma)
    if not math.isfinite(z):
        raise Divergent("e^{-gamma u} is not integrable", gamma=gamma, label=profile.label)
    density = np.exp(-gamma * profile.grid_g) / z
    return make_measure(
        profile.grid_t,
        density,
        profile.dim_n,
        tail_density=float(density[0]),
        tail_rate=gamma * profile.tail_slope,
        label=f"gibbs[{profile.label},{gamma:g}]",
    )


def _check_probability(mu: RadialMeasure) -> None:
    if abs(mu.total - 1.0) > TOL_TOTAL:
        raise NotNormalized("measure must be a probability measure", total=mu.total)


# ============================================
# Entropy and energy
# ============================================


def entropy(mu: RadialMeasure) -> float:
    """D(mu) = int log(dmu/dV) dmu; +inf when mu has an atom."""
    _check_probability(mu)
    if mu.atom_origin > 0:
        return math.inf
    n = mu.dim_n
    t = mu.grid_t
    body = integrate(xlogy(mu.density, mu.density) * n * np.exp(n * t), t).value
    tail = 0.0
    if mu.tail_density > 0:
        gap = n - mu.tail_rate
        tail = mu._tail_weight * (math.log(mu.tail_density) / gap + mu.tail_rate / gap**2)
    return body + tail


def potential_of_measure(mu: RadialMeasure) -> RadialProfile:
    """Radial inverse of the Monge-Ampère operator: g' = c^{1/n}, c the cumulative mass."""
    n = mu.dim_n
    t = mu.grid_t
    inner = cumulative_simpson(mu.density * n * np.exp(n * t), x=t, initial=0.0)
    c = np.maximum.accumulate(mu.atom_origin + mu.tail_mass + np.maximum(inner, 0.0))
    dg = c ** (1.0 / n)
    primitive = cumulative_simpson(dg, x=t, initial=0.0)
    return make_profile(
        t,
        primitive - primitive[-1],
        mu.atom_origin ** (1.0 / n),
        n,
        label=f"U[{mu.label}]",
        grid_dg=dg,
    )


def pair(profile: RadialProfile, mu: RadialMeasure) -> float:
    """<u, mu> = int u dmu, which is <= 0; -inf when u has a pole and mu an atom."""
    if profile.dim_n != mu.dim_n:
        raise DimensionMismatch("profile and measure live in different dimensions")
    if mu.atom_origin > 0 and profile.tail_slope > 0:
        return -math.inf
    n = mu.dim_n
    t = mu.grid_t
    if profile.grid_t.shape == t.shape and np.array_equal(profile.grid_t, t):
        g = profile.grid_g
    else:
        g = evaluate(profile, t)
    body = integrate(g * mu.density * n * np.exp(n * t), t).value
    tail = 0.0
    if mu.tail_density > 0:
        gap = n - mu.tail_rate
        tail = mu._tail_weight * (float(g[0]) / gap - profile.tail_slope / gap**2)
    return body + tail + mu.atom_origin * float(g[0] if profile.bounded else 0.0)


def measure_energy(mu: RadialMeasure) -> float:
    """E(mu) = -(n/(n+1)) <u_mu, mu> >= 0."""
    if mu.atom_origin > 0:
        raise InfiniteEnergy("a measure with an atom has infinite energy", atom=mu.atom_origin)
    potential = potential_of_measure(mu)
    n = mu.dim_n
    return -(n / (n + 1)) * pair(potential, mu)


def free_energy(mu: RadialMeasure, gamma: float) -> float:
    """F_gamma(mu) = E(mu) - D(mu)/gamma."""
    if not gamma > 0:
        raise InvalidInput("gamma must be positive", gamma=gamma)
    _check_probability(mu)
    if mu.atom_origin > 0:
        return -math.inf
    return measure_energy(mu) - entropy(mu) / gamma


def mt_functional(profile: RadialProfile, gamma: float) -> float:
    """G_gamma(u) = E_thermo(u) + (1/gamma) log int e^{-gamma u} dV."""
    report = energy(profile)
    if not report.finite:
        raise InfiniteEnergy("profile has infinite energy", label=profile.label)
    z = exp_integral(profile, gamma)
    if not math.isfinite(z):
        raise Divergent("e^{-gamma u} is not integrable", gamma=gamma, label=profile.label)
    return report.e_thermo + math.log(z) / gamma


# ============================================
# Dualities
# ============================================


def duality_gap(profile: RadialProfile, gamma: float) -> float:
    """F_gamma(gibbs(u)) - G_gamma(u); vanishes when u is the potential of its own Gibbs measure."""
    gap = free_energy(gibbs_measure(profile, gamma), gamma) - mt_functional(profile, gamma)
    log.debug("duality_gap", label=profile.label, gamma=gamma, gap=gap)
    return gap


def entropy_legendre_gap(mu: RadialMeasure, test_profile: RadialProfile, gamma: float) -> float:
    """(1/gamma) D(mu) + (1/gamma) log int e^{-gamma u} dV + <u, mu> >= 0."""
    if not gamma > 0:
        raise InvalidInput("gamma must be positive", gamma=gamma)
    z = exp_integral(test_profile, gamma)
    if not math.isfinite(z):
        raise Divergent("e^{-gamma u} is not integrable", gamma=gamma, label=test_profile.label)
    d = entropy(mu)
    if math.isinf(d):
        return math.inf
    return d / gamma + math.log(z) / gamma + pair(test_profile, mu)


def variational_gap(mu: RadialMeasure, test_profile: RadialProfile) -> float:
    """E(mu) - (E_thermo(u) - <u, mu>) >= 0, zero at u = u_mu."""
    report = energy(test_profile)
    if not report.finite:
        raise InfiniteEnergy("test profile has infinite energy", label=test_profile.label)
    return measure_energy(mu) - (report.e_thermo - pair(test_profile, mu))


# ============================================
# alpha-invariant and the free-energy bound
# ============================================


def _check_unit_mass(n: int, profile: RadialProfile) -> None:
    if profile.dim_n != n:
        raise DimensionMismatch("profile dimension differs", expected=n, got=profile.dim_n)
    total = ma_mass(profile).total
    if abs(total - 1.0) > TOL_UNIT_MASS:
        raise NotNormalized("profile must have unit Monge-Ampère mass", label=profile.label, mass=total)


def alpha_lower_bound(n: int, profiles, include_green: bool = True) -> float:
    """min over unit-mass profiles of the integrability threshold n / tail_slope."""
    thresholds = []
    for profile in profiles:
        _check_unit_mass(n, profile)
        thresholds.append(singularity_exponent(profile))
    if include_green:
        thresholds.append(float(n))
    return min(thresholds, default=math.inf)


def corpus_c_t(profiles, t: float) -> float:
    """C_t = max over unit-mass profiles of (1/t) log int e^{-t u} dV."""
    if not t > 0:
        raise InvalidInput("t must be positive", t=t)
    values = []
    for profile in profiles:
        _check_unit_mass(profile.dim_n, profile)
        z = exp_integral(profile, t)
        if not math.isfinite(z):
            raise Divergent("t is above the integrability threshold", t=t, label=profile.label)
        values.append(math.log(z) / t)
    if not values:
        raise InvalidInput("corpus is empty")
    return max(values)


@dataclass(frozen=True)
class FreeEnergyBound:
    free_energy: float
    bound: float
    holds: bool


def free_energy_bound(mu: RadialMeasure, gamma: float, t: float, c_t: float) -> FreeEnergyBound:
    """F_gamma(mu) <= (t/gamma - n/(n+1)) <u_mu, mu> + (t/gamma) C_t for t < n."""
    n = mu.dim_n
    if not 0 < t < n:
        raise InvalidInput("t must lie in (0, n)", t=t, n=n)
    if not 0 < gamma < t * (n + 1) / n:
        raise InvalidInput("gamma must lie in (0, t(n+1)/n)", gamma=gamma, t=t)
    value = free_energy(mu, gamma)
    paired = pair(potential_of_measure(mu), mu)
    bound = (t / gamma - n / (n + 1)) * paired + (t / gamma) * c_t
    return FreeEnergyBound(free_energy=value, bound=bound, holds=value <= bound + TOL_TOTAL)
