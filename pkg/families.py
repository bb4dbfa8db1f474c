"""Closed-form test families and the separable product lift."""
import math
from dataclasses import dataclass
from typing import Literal

import mpmath
import numpy as np
import structlog

from errors import DimensionMismatch, EpsTooSmall, InvalidInput
from radial_core import (
    GridSpec,
    RadialProfile,
    build_grid,
    exp_integral,
    ma_density,
    ma_mass,
    make_profile,
)

log = structlog.get_logger()

# ============================================
# Fubini-Study family
# ============================================


def _check_eps(n: int, eps: float) -> None:
    if int(n) != n or n < 1:
        raise InvalidInput("dimension must be a positive integer", n=n)
    if not (eps > 0 and math.isfinite(eps)):
        raise InvalidInput("eps must be positive", eps=eps)


def fs_mass(n: int, eps: float) -> float:
    """(n+1)^n (1+eps^2)^{-n}."""
    _check_eps(n, eps)
    return ((n + 1) / (1.0 + eps * eps)) ** n


def ke_constant(n: int, eps: float) -> float:
    """The constant in (dd^c phi)^n = c e^{-phi} dV for the Fubini-Study potential."""
    _check_eps(n, eps)
    e2 = eps * eps
    return (n + 1) ** n * e2 / (1.0 + e2) ** (n + 1)


def fs_profile(n: int, eps: float, grid_spec: GridSpec | None = None) -> RadialProfile:
    """g(t) = (n+1)[log(eps^2 + e^t) - log(eps^2 + 1)] with its exact slopes."""
    _check_eps(n, eps)
    spec = grid_spec or GridSpec()
    shoulder = 2.0 * math.log(eps)
    if shoulder <= spec.t_min:
        raise EpsTooSmall(
            f"log eps^2 = {shoulder:.6g} lies below t_min = {spec.t_min:.6g}",
            eps=eps,
            t_min=spec.t_min,
        )
    t = build_grid(spec.refined(shoulder))
    e2 = eps * eps
    g = (n + 1) * (np.logaddexp(shoulder, t) - math.log1p(e2))
    # g' = (n+1) e^t / (eps^2 + e^t), written to stay finite for very negative t
    dg = (n + 1) / (1.0 + e2 * np.exp(-t))
    return make_profile(t, g, 0.0, n, label=f"fs(n={n},eps={eps:g})", grid_dg=dg)


def fs_exp_integral(n: int, eps: float, gamma: float) -> float:
    """Closed form of int e^{-gamma phi} dV, evaluated in extended precision.

    With x = |z|^2 and w = eps^2 + x the integral is
    n (1+eps^2)^b int_{eps^2}^{1+eps^2} (w - eps^2)^{n-1} w^{-b} dw, b = gamma (n+1),
    expanded binomially.
    """
    _check_eps(n, eps)
    with mpmath.workdps(40):
        e2 = mpmath.mpf(eps) ** 2
        b = mpmath.mpf(gamma) * (n + 1)
        lo, hi = e2, 1 + e2
        total = mpmath.mpf(0)
        for k in range(n):
            coeff = mpmath.binomial(n - 1, k) * (-e2) ** (n - 1 - k)
            power = k - b + 1
            if power == 0:
                piece = mpmath.log(hi / lo)
            else:
                piece = (hi**power - lo**power) / power
            total += coeff * piece
        return float(n * (1 + e2) ** b * total)


def bergman_ratio(n: int, eps: float, grid_spec: GridSpec | None = None) -> float:
    """b_n(eps) = n! / M(phi_eps), from the numerically computed mass."""
    return math.factorial(n) / ma_mass(fs_profile(n, eps, grid_spec)).total


# ============================================
# Cones
# ============================================


def cone_profile(n: int, slope: float, grid_spec: GridSpec | None = None) -> RadialProfile:
    """g(t) = slope * t: all Monge-Ampère mass sits at the origin."""
    if not (slope >= 0 and math.isfinite(slope)):
        raise InvalidInput("cone slope must be nonnegative", slope=slope)
    t = build_grid(grid_spec or GridSpec())
    return make_profile(
        t, slope * t, slope, n, label=f"cone(n={n},s={slope:g})", grid_dg=np.full_like(t, slope)
    )


def zero_profile(n: int, grid_spec: GridSpec | None = None) -> RadialProfile:
    return cone_profile(n, 0.0, grid_spec)


# ============================================
# Kähler-Einstein residual
# ============================================


@dataclass(frozen=True)
class KEResidual:
    constant: float
    max_rel_dev: float
    candidate: float
    mode: str


def ke_residual(
    n: int,
    eps: float,
    grid_spec: GridSpec | None = None,
    mode: Literal["analytic", "numeric"] = "analytic",
) -> KEResidual:
    """Ratio of the Monge-Ampère density to e^{-phi} across the grid.

    analytic uses the closed-form g' and g''; numeric differentiates the
    sampled mass and serves as the independent check of the constant.
    """
    profile = fs_profile(n, eps, grid_spec)
    t = profile.grid_t
    if mode == "analytic":
        log_e2 = 2.0 * math.log(eps)
        log_w = np.logaddexp(log_e2, t)
        log_dg = math.log(n + 1) + t - log_w
        log_d2g = math.log(n + 1) + log_e2 + t - 2.0 * log_w
        ratio = np.exp((n - 1) * log_dg + log_d2g - n * t + profile.grid_g)
    elif mode == "numeric":
        ratio = ma_density(profile) * np.exp(profile.grid_g)
    else:
        raise InvalidInput("mode must be analytic or numeric", mode=mode)
    constant = float(np.mean(ratio))
    deviation = float(np.max(np.abs(ratio / constant - 1.0)))
    log.info("ke_residual", n=n, eps=eps, mode=mode, constant=constant, max_rel_dev=deviation)
    return KEResidual(constant=constant, max_rel_dev=deviation, candidate=ke_constant(n, eps), mode=mode)


# ============================================
# Product lift
# ============================================


@dataclass(frozen=True, eq=False)
class SeparableProfile:
    """u(z, w) = u_n(z) + u_1(w) on the product of the n-ball and the disc."""

    factor_n: RadialProfile
    factor_1: RadialProfile

    @property
    def dim_n(self) -> int:
        return self.factor_n.dim_n + 1

    @property
    def mass(self) -> float:
        """(n+1) M(u_n) M(u_1): only the mixed top-degree term survives."""
        return self.dim_n * ma_mass(self.factor_n).total * ma_mass(self.factor_1).total

    def exp_integral(self, gamma: float = 1.0) -> float:
        first = exp_integral(self.factor_n, gamma)
        second = exp_integral(self.factor_1, gamma)
        return first * second


def product_lift(p_n: RadialProfile, p_1: RadialProfile) -> SeparableProfile:
    """Separable function on the product domain, evaluated through its factors."""
    if p_1.dim_n != 1:
        raise DimensionMismatch("second factor must live on the disc (n = 1)", dim_n=p_1.dim_n)
    return SeparableProfile(factor_n=p_n, factor_1=p_1)
