"""Sharp constants of the ball inequality and the (P^1)^n counterexample.

pi-dependent constants are evaluated with mpmath at MTLAB_PRECISION digits;
the counterexample is rational and evaluated exactly.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import mpmath
import structlog

from errors import InvalidInput
from settings import precision_from_env

log = structlog.get_logger()

RESIDUAL_TOL = 1e-12


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise InvalidInput("n must be a positive integer", n=n)


@dataclass(frozen=True)
class ConstantsRow:
    n: int
    xi_n: mpmath.mpf
    d_n: mpmath.mpf
    sigma_2n_minus_1: mpmath.mpf
    aubin_a_n: mpmath.mpf
    sharp_c_n: mpmath.mpf
    identity_residuals: dict[str, float] = field(default_factory=dict)
    precision: int = 0

    @property
    def holds(self) -> bool:
        return all(r < RESIDUAL_TOL for r in self.identity_residuals.values())


def _rel(x, y) -> float:
    return float(abs(x - y) / abs(y))


def constants_row(n: int, precision: int | None = None) -> ConstantsRow:
    """xi_n, d_n, sigma_{2n-1}, a_n and c_n with the residuals of their identities."""
    _check_n(n)
    digits = precision or precision_from_env()
    with mpmath.workdps(digits):
        pi = mpmath.pi
        xi = pi ** (-n) * factorial(n - 1) * mpmath.mpf(n) ** n * mpmath.mpf(n + 1) ** (-(2 * n + 1))
        d = 1 / (n * (2 * pi) ** n)
        sigma = 2 * pi**n / factorial(n - 1)
        a = 2 * mpmath.mpf(n) ** n * mpmath.mpf(n + 1) ** (-(2 * n + 1)) / sigma
        # product form before simplification
        c = (
            (1 / (2 * pi) ** n)
            * mpmath.mpf(factorial(n - 1)) / factorial(n + 1)
            * factorial(n) / mpmath.mpf(n + 1) ** n
        )
        c_closed = factorial(n - 1) / ((2 * pi) ** n * mpmath.mpf(n + 1) ** (n + 1))
        ratio = ((1 + mpmath.mpf(1) / n) / 2) ** n
        residuals = {
            "a_n=xi_n": _rel(a, xi),
            "c_n/a_n=((1+1/n)/2)^n": _rel(c / a, ratio),
            "c_n_closed_form": _rel(c, c_closed),
            "sigma=2pi^n/Gamma(n)": _rel(sigma, 2 * pi**n / mpmath.gamma(n)),
        }
        row = ConstantsRow(
            n=n,
            xi_n=+xi,
            d_n=+d,
            sigma_2n_minus_1=+sigma,
            aubin_a_n=+a,
            sharp_c_n=+c,
            identity_residuals=residuals,
            precision=digits,
        )
    if not row.holds:
        log.warning("constants_identity_residual", n=n, residuals=residuals)
    return row


def constants_table(n_max: int, precision: int | None = None) -> list[ConstantsRow]:
    if int(n_max) != n_max or n_max < 1:
        raise InvalidInput("n_max must be a positive integer", n_max=n_max)
    return [constants_row(n, precision) for n in range(1, n_max + 1)]


# ============================================
# Counterexample
# ============================================


@dataclass(frozen=True)
class CounterexampleReport:
    n: int
    volume: Fraction
    bound: Fraction
    holds: bool
    pi_route_residual: float

    @property
    def ratio(self) -> Fraction:
        return self.bound / self.volume


def counterexample_check(n: int, precision: int | None = None) -> CounterexampleReport:
    """Is Vol((P^1)^n) = 2^n/n! below (1/(n+1)) d_n/xi_n?

    The bound equals (1/(n+1)!) 2^{-n} (1+1/n)^n (n+1)^{n+1}; the same quantity
    is also formed from the extended-precision d_n and xi_n as a cross-check.
    """
    _check_n(n)
    volume = Fraction(2**n, factorial(n))
    bound = Fraction(1, factorial(n + 1)) * Fraction(1, 2**n) * Fraction(n + 1, n) ** n * (n + 1) ** (n + 1)
    row = constants_row(n, precision)
    with mpmath.workdps(row.precision):
        via_pi = row.d_n / ((n + 1) * row.xi_n)
        exact = mpmath.mpf(bound.numerator) / bound.denominator
        residual = _rel(via_pi, exact)
    return CounterexampleReport(n=n, volume=volume, bound=bound, holds=volume < bound, pi_route_residual=residual)


def smallest_counterexample_n(n_max: int = 50, precision: int | None = None) -> int | None:
    """Smallest n for which the volume lies strictly below the bound."""
    for n in range(1, n_max + 1):
        if counterexample_check(n, precision).holds:
            log.info("smallest_counterexample", n=n)
            return n
    return None
