"""Legendre transforms and the Laplace/layer-cake link between E(t) and V(s)."""
import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
import structlog
from scipy.interpolate import CubicSpline

from errors import Divergent, HypothesisFails, InvalidGrid, InvalidInput, NonConvex
from radial_core import (
    RadialProfile,
    exp_integral,
    integrate,
    s_grid,
    volume_curve,
)

log = structlog.get_logger()

TOL_CONVEX = 1e-9
BOUND_SLACK = 1e-9
LAPLACE_SLACK = 1e-10
SEARCH_STEPS = 100

Side = Literal["t", "s"]


@dataclass(frozen=True, eq=False)
class ConvexGridFunction:
    grid_x: np.ndarray
    values: np.ndarray
    side: Side = "t"
    label: str = ""

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.grid_x, self.values)


def make_convex_function(grid_x, values, side: Side = "t", label: str = "", tol: float = TOL_CONVEX) -> ConvexGridFunction:
    """Validate a sampled convex function."""
    x = np.array(grid_x, dtype=float)
    y = np.array(values, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or len(x) < 2:
        raise InvalidGrid("grid and values must be 1D of equal length >= 2", index=min(x.size, y.size))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidGrid("non-finite sample", index=int(np.flatnonzero(~np.isfinite(x + y))[0]))
    steps = np.diff(x)
    if np.any(steps <= 0):
        raise InvalidGrid("grid must be strictly increasing", index=int(np.flatnonzero(steps <= 0)[0]) + 1)
    slopes = np.diff(y) / steps
    bends = np.diff(slopes)
    kinks = np.flatnonzero(bends < -tol * np.maximum(1.0, np.abs(slopes[1:])))
    if kinks.size:
        raise NonConvex("function is not convex", index=int(kinks[0]) + 1)
    x.setflags(write=False)
    y.setflags(write=False)
    return ConvexGridFunction(grid_x=x, values=y, side=side, label=label)


def sample_convex(fn: Callable[[np.ndarray], np.ndarray], grid_x, side: Side = "t", label: str = "") -> ConvexGridFunction:
    grid_x = np.asarray(grid_x, dtype=float)
    return make_convex_function(grid_x, fn(grid_x), side=side, label=label)


def _lower_hull(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    hull: list[int] = []
    for i in range(len(x)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a])
            if cross > 0:
                break
            hull.pop()
        hull.append(i)
    return np.array(hull)


def legendre(f: ConvexGridFunction, s_grid_values) -> ConvexGridFunction:
    """f*(s) = sup_t (s t - f(t)) over the grid's range, refined between hull vertices."""
    s = np.asarray(s_grid_values, dtype=float)
    x, y = f.grid_x, f.values
    hull = _lower_hull(x, y)
    hx, hy = x[hull], y[hull]
    if len(hull) == 1:
        values = s * hx[0] - hy[0]
    else:
        hull_slopes = np.diff(hy) / np.diff(hx)
        k = np.searchsorted(hull_slopes, s)
        vertex = s * hx[k] - hy[k]

        spline = CubicSpline(x, y)
        lo = hx[np.maximum(k - 1, 0)]
        hi = hx[np.minimum(k + 1, len(hx) - 1)]
        for _ in range(SEARCH_STEPS):
            left = lo + (hi - lo) / 3.0
            right = hi - (hi - lo) / 3.0
            rising = s * left - spline(left) < s * right - spline(right)
            lo = np.where(rising, left, lo)
            hi = np.where(rising, hi, right)
        best = 0.5 * (lo + hi)
        values = np.maximum(vertex, s * best - spline(best))
    other: Side = "s" if f.side == "t" else "t"
    return make_convex_function(s, values, side=other, label=f"({f.label})*")


# ============================================
# Laplace transform and layer cake
# ============================================


@dataclass(frozen=True)
class LaplaceReport:
    t: float
    direct: float
    layer: float

    @property
    def rel_diff(self) -> float:
        return abs(self.direct - self.layer) / max(abs(self.direct), 1e-300)


def _s_integral(profile: RadialProfile, t: float, s_points: int) -> float:
    """int_0^inf e^{ts} V(s) ds; the part below t_min is closed form."""
    n = profile.dim_n
    top = float(-profile.grid_g[0])
    total = 0.0
    if top > 0:
        s = np.linspace(0.0, top, s_points)
        total = integrate(np.exp(t * s) * volume_curve(profile, s), s).value
    if not profile.bounded:
        rate = n / profile.tail_slope - t
        if rate <= 0:
            return math.inf
        total += math.exp(n * profile.t_min + t * top) / rate
    return total


def laplace_layer_cake(profile: RadialProfile, t: float, s_points: int = 20001) -> LaplaceReport:
    """E(t) = int e^{-tu} dV directly and as Vol + t int_0^inf e^{ts} V(s) ds."""
    if not t >= 0:
        raise InvalidInput("t must be nonnegative", t=t)
    direct = exp_integral(profile, t)
    if not math.isfinite(direct):
        raise Divergent("e^{-tu} is not integrable", t=t, label=profile.label)
    tail = _s_integral(profile, t, s_points)
    if not math.isfinite(tail):
        raise Divergent("s-integral does not converge", t=t, label=profile.label)
    return LaplaceReport(t=t, direct=direct, layer=1.0 + t * tail)


@dataclass(frozen=True)
class LaplaceBoundReport:
    worst_excess: float
    holds: bool
    points: int


def laplace_bound_check(profile: RadialProfile, s_values, t_values) -> LaplaceBoundReport:
    """V(s) <= e^{-st} E(t) on every (s, t) pair."""
    s = np.asarray(s_values, dtype=float)
    t = np.asarray(t_values, dtype=float)
    v = volume_curve(profile, s)
    e = np.array([exp_integral(profile, ti) for ti in t])
    with np.errstate(over="ignore", invalid="ignore"):
        bound = np.exp(-np.outer(s, t)) * e[None, :]
    excess = v[:, None] - bound
    excess = np.where(np.isfinite(bound), excess, -np.inf)
    worst = float(np.max(excess))
    return LaplaceBoundReport(worst_excess=worst, holds=worst <= LAPLACE_SLACK, points=excess.size)


# ============================================
# Volume / exponential-moment lemma
# ============================================


@dataclass(frozen=True)
class LemmaReport:
    forward_holds: bool
    forward_worst_ratio: float
    c_delta: float
    converse_holds: bool
    converse_literal_holds: bool
    converse_worst_ratio: float
    t: list[float]
    s: list[float]


def lemma_check(
    profile: RadialProfile,
    f: ConvexGridFunction,
    c: float,
    delta: float,
    g: ConvexGridFunction | None = None,
    s_points: int = 201,
) -> LemmaReport:
    """From E <= C e^f derive V <= C e^{-f*}; then from V <= C e^{-g} bound E by g*.

    The converse is checked in the layer-cake form E(t) <= 1 + t (C/delta) e^{g*(t+delta)}
    and, separately, in the form without the Vol term, (C/delta) e^{g*(t+delta)}.
    """
    if not (c > 0 and delta > 0):
        raise InvalidInput("C and delta must be positive", c=c, delta=delta)
    t = f.grid_x
    if np.any(t < 0):
        raise InvalidInput("exponential-moment grid must be nonnegative", t_min=float(t[0]))
    e = np.array([exp_integral(profile, ti) for ti in t])
    broken = np.flatnonzero(~(e <= c * np.exp(f.values) * (1 + BOUND_SLACK)))
    if broken.size:
        raise HypothesisFails("E(t) exceeds C e^{f(t)}", point=float(t[broken[0]]))

    s = s_grid(profile, s_points)
    f_star = legendre(f, s)
    v = volume_curve(profile, s)
    forward = v / (c * np.exp(-f_star.values))
    forward_worst = float(np.max(forward))

    if g is None:
        g = f_star
    else:
        premise = volume_curve(profile, g.grid_x) / (c * np.exp(-g.values))
        broken = np.flatnonzero(premise > 1 + BOUND_SLACK)
        if broken.size:
            raise HypothesisFails("V(s) exceeds C e^{-g(s)}", point=float(g.grid_x[broken[0]]))
    g_star = legendre(g, t + delta).values
    c_delta = c / delta
    rigorous = 1.0 + t * c_delta * np.exp(g_star)
    literal = c_delta * np.exp(g_star)
    converse_worst = float(np.max(e / rigorous))
    report = LemmaReport(
        forward_holds=forward_worst <= 1 + BOUND_SLACK,
        forward_worst_ratio=forward_worst,
        c_delta=c_delta,
        converse_holds=converse_worst <= 1 + BOUND_SLACK,
        converse_literal_holds=bool(np.all(e <= literal * (1 + BOUND_SLACK))),
        converse_worst_ratio=converse_worst,
        t=[float(x) for x in t],
        s=[float(x) for x in s],
    )
    log.info(
        "lemma_check",
        label=profile.label,
        forward_holds=report.forward_holds,
        converse_holds=report.converse_holds,
        converse_literal_holds=report.converse_literal_holds,
    )
    return report
