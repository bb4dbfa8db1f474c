"""Moser-Trudinger and Brezis-Merle evaluations, sweeps and moment bounds."""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Literal

import numpy as np
import structlog
from scipy.special import gamma as gamma_fn

from errors import InfiniteEnergy, InvalidInput, VolumeBoundViolated
from families import SeparableProfile, cone_profile, fs_mass, fs_profile
from radial_core import (
    GridSpec,
    RadialProfile,
    energy,
    exp_integral,
    exp_integral_with_error,
    integrate,
    lp_moment,
    ma_mass,
    s_grid,
    scale_profile,
    volume_curve,
)

log = structlog.get_logger()

DEFAULT_DELTAS = (0.5, 0.1, 0.02)
MOMENT_SLACK = 1e-8
VOLUME_SLACK = 1e-9

# ============================================
# Moser-Trudinger
# ============================================


@dataclass(frozen=True)
class MTReport:
    gamma: float
    lhs: float
    e_thermo: float
    g_value: float
    j_raw: float
    sharp_rhs: float
    sharp_margin: float
    quasi_rhs: dict[float, float] = field(default_factory=dict)
    quasi_margin: dict[float, float] = field(default_factory=dict)
    error: float = 0.0


def mt_check(profile: RadialProfile, gamma: float = 1.0, deltas=DEFAULT_DELTAS) -> MTReport:
    """Both sides of the sharp and quasi-sharp inequalities for gamma * u."""
    if not gamma > 0:
        raise InvalidInput("gamma must be positive", gamma=gamma)
    if any(not d > 0 for d in deltas):
        raise InvalidInput("delta must be positive", deltas=list(deltas))
    report = energy(profile)
    if not report.finite:
        raise InfiniteEnergy("Moser-Trudinger check needs finite energy", label=profile.label)
    n = profile.dim_n
    integral = exp_integral_with_error(profile, gamma)
    lhs = math.log(integral.value)
    scaled_j = gamma ** (n + 1) * report.j_raw
    sharp_rhs = scaled_j / (n + 1) ** (n + 1)
    quasi_rhs = {
        float(d): (1 + d) * scaled_j / (n + 1) ** (n + 1) - (n - 1) * math.log(d) for d in deltas
    }
    return MTReport(
        gamma=gamma,
        lhs=lhs,
        e_thermo=report.e_thermo,
        g_value=report.e_thermo + lhs / gamma,
        j_raw=report.j_raw,
        sharp_rhs=sharp_rhs,
        sharp_margin=sharp_rhs - lhs,
        quasi_rhs=quasi_rhs,
        quasi_margin={d: rhs - lhs for d, rhs in quasi_rhs.items()},
        error=max(report.error, integral.error / integral.value),
    )


def trudinger_integral(profile: RadialProfile, delta: float) -> float:
    """int exp((1-delta) n (-u)^{(n+1)/n}) dV after rescaling u to J_raw = 1."""
    if not 0 < delta < 1:
        raise InvalidInput("delta must lie in (0, 1)", delta=delta)
    report = energy(profile)
    if not report.finite:
        raise InfiniteEnergy("Trudinger integral needs finite energy", label=profile.label)
    n = profile.dim_n
    if report.j_raw == 0:
        return 1.0
    depth = np.maximum(-profile.grid_g, 0.0) * report.j_raw ** (-1.0 / (n + 1))
    exponent = (1 - delta) * n * depth ** ((n + 1) / n)
    t = profile.grid_t
    body = integrate(n * np.exp(n * t + exponent), t)
    return body.value + math.exp(n * t[0] + exponent[0])


# ============================================
# Brezis-Merle
# ============================================


@dataclass(frozen=True)
class BMReport:
    dim_n: int
    mass: float
    integral: float
    ratio_sharp: float
    ratio_quasi: float
    admissible: bool


def _bm_report(dim_n: int, mass: float, integral: float) -> BMReport:
    critical = float(dim_n) ** dim_n
    admissible = mass < critical
    if admissible:
        gap = 1.0 - mass / critical
        ratio_sharp = integral * gap
        ratio_quasi = integral * gap ** (dim_n - 1)
    else:
        ratio_sharp = ratio_quasi = math.inf
    return BMReport(
        dim_n=dim_n,
        mass=mass,
        integral=integral,
        ratio_sharp=ratio_sharp,
        ratio_quasi=ratio_quasi,
        admissible=admissible,
    )


def bm_check(profile: RadialProfile) -> BMReport:
    """int e^{-u} against the mass deficit 1 - M(u)/n^n."""
    return _bm_report(profile.dim_n, ma_mass(profile).total, exp_integral(profile, 1.0))


def bm_check_product(sp: SeparableProfile) -> BMReport:
    """Brezis-Merle report in dimension n+1 from the factor quantities."""
    return _bm_report(sp.dim_n, sp.mass, sp.exp_integral(1.0))


# ============================================
# Sobolev-type moment bounds
# ============================================


@dataclass(frozen=True)
class SobolevReport:
    moment: float
    bound: float
    holds: bool


@dataclass(frozen=True)
class VolumeFit:
    b: float
    c: float
    s_tight: float


def fit_volume_bound(profile: RadialProfile, c: float = 1.0, s_points: int = 2001) -> VolumeFit:
    """Largest B with V(s) <= C exp(-B s^{(n+1)/n}) on the s-grid."""
    if not c > 0:
        raise InvalidInput("C must be positive", c=c)
    q = (profile.dim_n + 1) / profile.dim_n
    s = s_grid(profile, s_points)[1:]
    v = volume_curve(profile, s)
    keep = v > 0
    if not np.any(keep):
        return VolumeFit(b=math.inf, c=c, s_tight=0.0)
    ratios = np.log(c / v[keep]) / s[keep] ** q
    i = int(np.argmin(ratios))
    return VolumeFit(b=float(ratios[i]), c=c, s_tight=float(s[keep][i]))


def sobolev_check(profile: RadialProfile, p: float, b: float, c: float, s_points: int = 2001) -> SobolevReport:
    """Moment bound C Gamma(k+1) B^{-k}, k = np/(n+1), once the volume bound is verified."""
    if not (b > 0 and c > 0):
        raise InvalidInput("B and C must be positive", b=b, c=c)
    n = profile.dim_n
    q = (n + 1) / n
    s = s_grid(profile, s_points)
    envelope = c * np.exp(-b * s**q)
    violations = np.flatnonzero(volume_curve(profile, s) > envelope * (1 + VOLUME_SLACK))
    if violations.size:
        raise VolumeBoundViolated("V(s) exceeds C exp(-B s^{(n+1)/n})", s=float(s[violations[0]]))
    k = n * p / (n + 1)
    moment = lp_moment(profile, p).direct
    bound = c * float(gamma_fn(k + 1)) * b ** (-k)
    return SobolevReport(moment=moment, bound=bound, holds=moment <= bound * (1 + MOMENT_SLACK))


# ============================================
# Family sweeps
# ============================================

Normalization = Literal["raw", "critical", "unit_mass"]


@dataclass(frozen=True)
class FamilySpec:
    """fs: parameter is eps; cone: parameter is the slope."""

    kind: Literal["fs", "cone"]
    n: int
    normalization: Normalization = "critical"
    grid: GridSpec = field(default_factory=GridSpec)

    def build(self, param: float) -> RadialProfile:
        if self.kind == "cone":
            return cone_profile(self.n, param, self.grid)
        if self.kind != "fs":
            raise InvalidInput("unknown family", kind=self.kind)
        base = fs_profile(self.n, param, self.grid)
        if self.normalization == "raw":
            return base
        if self.normalization == "critical":
            return scale_profile(base, 1.0 / (self.n + 1))
        if self.normalization == "unit_mass":
            return scale_profile(base, fs_mass(self.n, param) ** (-1.0 / self.n))
        raise InvalidInput("unknown normalization", normalization=self.normalization)


@dataclass(frozen=True)
class SweepRow:
    family: str
    n: int
    param: float
    gamma: float
    mt: MTReport | None
    bm: BMReport


def _sweep_row(family: FamilySpec, param: float, gamma: float) -> SweepRow:
    profile = family.build(param)
    mt = mt_check(profile, gamma) if energy(profile).finite else None
    return SweepRow(family=family.kind, n=family.n, param=param, gamma=gamma, mt=mt, bm=bm_check(profile))


def sweep(family: FamilySpec, gammas, params, workers: int = 1) -> list[SweepRow]:
    """Rows ordered by (gamma, param) in input order; evaluation may run on worker threads."""
    cells = list(product(gammas, params))
    if not cells:
        return []
    log.info("sweep_start", family=family.kind, n=family.n, rows=len(cells), workers=workers)
    with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
        rows = list(pool.map(lambda cell: _sweep_row(family, cell[1], cell[0]), cells))
    return rows


def growth_rate(n: int, gamma: float) -> float:
    """Asymptotic d G_gamma / d log(1/eps^2) along the critically scaled fs family."""
    return 1.0 - n / gamma - 1.0 / (n + 1)
