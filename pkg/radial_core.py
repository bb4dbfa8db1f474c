"""Radial Monge-Ampère calculus on the unit ball.

A profile g(t), t = log|z|^2 <= 0, stands for the S^1-invariant function
u(z) = g(log|z|^2). Volume is normalized so that Vol(ball) = 1, which makes
dV = n e^{nt} dt, and dd^c is normalized so that (dd^c log|z|^2)^n is the unit
Dirac at the origin. With these choices the Monge-Ampère mass inside radius t
is g'(t)^n and every quantity below reduces to a 1D integral in t.
"""
import io
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np
import structlog
from scipy.integrate import quad, simpson
from scipy.interpolate import CubicHermiteSpline, make_interp_spline

import settings  # noqa: F401
from errors import (
    BoundaryNotZero,
    InvalidGrid,
    InvalidInput,
    NonConvex,
    NonMonotone,
)

log = structlog.get_logger()

TOL_MONO = 1e-9
TOL_CONVEX = 1e-9
TOL_BOUNDARY = 1e-12
DEFAULT_T_MIN = -40.0
DEFAULT_POINTS = 8001
S_POINTS = 20001
VOLUME_FLOOR = 1e-30
SPLINE_ORDER = 5
PROFILE_HEADER = "# mtlab-profile v1"

# ============================================
# Grids and quadrature
# ============================================


@dataclass(frozen=True)
class GridSpec:
    """Nonuniform t-grid on [t_min, 0]: uniform base plus geometric clusters."""

    t_min: float = DEFAULT_T_MIN
    points: int = DEFAULT_POINTS
    refine_at: tuple[float, ...] = ()
    refine_levels: int = 4
    refine_ratio: float = 0.5

    def __post_init__(self):
        if not (self.t_min < 0 and math.isfinite(self.t_min)):
            raise InvalidInput("t_min must be finite and negative", t_min=self.t_min)
        if self.points < 3:
            raise InvalidInput("grid needs at least 3 points", points=self.points)
        if not 0 < self.refine_ratio < 1 or self.refine_levels < 0:
            raise InvalidInput("bad refinement controls", ratio=self.refine_ratio, levels=self.refine_levels)

    @property
    def step(self) -> float:
        return -self.t_min / (self.points - 1)

    def refined(self, *points: float) -> "GridSpec":
        """Same spec with extra refinement targets."""
        targets = set(self.refine_at) | {float(p) for p in points}
        return replace(self, refine_at=tuple(sorted(targets)))


def build_grid(spec: GridSpec) -> np.ndarray:
    """Grid whose breakpoints are t_min, 0 and every refinement target inside."""
    h = spec.step
    breaks = sorted({spec.t_min, 0.0, *(p for p in spec.refine_at if spec.t_min < p < 0.0)})
    pieces = []
    for left, right in zip(breaks[:-1], breaks[1:]):
        cells = max(math.ceil((right - left) / h - 1e-9), 2)
        step = (right - left) / cells
        offsets = step * spec.refine_ratio ** np.arange(1, spec.refine_levels + 1)
        pieces.append(np.linspace(left, right, cells + 1))
        pieces.append(right - offsets)
        if left != spec.t_min:
            pieces.append(left + offsets)
    grid = np.unique(np.concatenate(pieces))
    grid[-1] = 0.0
    return grid


@dataclass(frozen=True)
class Quadrature:
    value: float
    error: float


def integrate(values: np.ndarray, grid: np.ndarray) -> Quadrature:
    """Integral of the quintic interpolating spline; the error is its distance to composite Simpson."""
    values = np.asarray(values, dtype=float)
    grid = np.asarray(grid, dtype=float)
    rough = float(simpson(values, x=grid))
    if len(grid) <= SPLINE_ORDER or not math.isfinite(rough):
        return Quadrature(rough, 0.0)
    spline = make_interp_spline(grid, values, k=SPLINE_ORDER)
    value = float(spline.integrate(grid[0], grid[-1]))
    return Quadrature(value, abs(value - rough))


# ============================================
# Profiles
# ============================================


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Convex nondecreasing g on [t_min, 0] with g(0) = 0 and a linear tail below t_min."""

    grid_t: np.ndarray
    grid_g: np.ndarray
    tail_slope: float
    dim_n: int
    label: str = ""
    grid_dg: np.ndarray | None = None

    @property
    def t_min(self) -> float:
        return float(self.grid_t[0])

    @property
    def bounded(self) -> bool:
        return self.tail_slope == 0.0

    @cached_property
    def slopes(self) -> np.ndarray:
        """Nodal g'; exact when the constructor supplied it, else the quintic spline derivative."""
        if self.grid_dg is not None:
            return self.grid_dg
        if len(self.grid_t) > SPLINE_ORDER:
            spline = make_interp_spline(self.grid_t, self.grid_g, k=SPLINE_ORDER)
            dg = spline.derivative()(self.grid_t)
        else:
            dg = np.gradient(self.grid_g, self.grid_t)
        dg = np.maximum(dg, 0.0)
        dg.setflags(write=False)
        return dg

    @cached_property
    def hermite(self) -> CubicHermiteSpline:
        return CubicHermiteSpline(self.grid_t, self.grid_g, self.slopes)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


def make_profile(
    grid_t,
    grid_g,
    tail_slope: float,
    dim_n: int,
    label: str = "",
    grid_dg=None,
    tol_mono: float = TOL_MONO,
    tol_convex: float = TOL_CONVEX,
) -> RadialProfile:
    """Validate and freeze a radial profile."""
    t = np.array(grid_t, dtype=float)
    g = np.array(grid_g, dtype=float)
    if int(dim_n) != dim_n or dim_n < 1:
        raise InvalidInput("dimension must be a positive integer", dim_n=dim_n)
    if t.ndim != 1 or t.shape != g.shape or len(t) < 2:
        raise InvalidGrid("grid_t and grid_g must be 1D of equal length >= 2", index=min(t.size, g.size))
    bad = np.flatnonzero(~(np.isfinite(t) & np.isfinite(g)))
    if bad.size:
        raise InvalidGrid("non-finite grid value", index=int(bad[0]))
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise InvalidGrid("grid_t must be strictly increasing", index=int(np.flatnonzero(steps <= 0)[0]) + 1)
    if t[-1] != 0.0:
        raise InvalidGrid("last grid point must be t = 0", index=len(t) - 1)
    if abs(g[-1]) > TOL_BOUNDARY * max(1.0, float(np.max(np.abs(g)))):
        raise BoundaryNotZero("profile must vanish at t = 0", index=len(t) - 1)
    g[-1] = 0.0
    if "\n" in label or "\r" in label:
        raise InvalidInput("label must fit on one header line", label=label)
    if not (tail_slope >= 0 and math.isfinite(tail_slope)):
        raise NonMonotone("tail slope must be finite and nonnegative", index=0)

    rises = np.diff(g)
    drops = np.flatnonzero(rises < -tol_mono)
    if drops.size:
        raise NonMonotone("profile decreases", index=int(drops[0]))

    cell_slopes = np.concatenate(([tail_slope], rises / steps))
    bends = np.diff(cell_slopes)
    scale = np.maximum(1.0, np.abs(cell_slopes[1:]))
    kinks = np.flatnonzero(bends < -tol_convex * scale)
    if kinks.size:
        raise NonConvex("profile is not convex", index=int(kinks[0]))

    dg = None
    if grid_dg is not None:
        dg = np.array(grid_dg, dtype=float)
        if dg.shape != t.shape or not np.all(np.isfinite(dg)) or np.any(dg < 0):
            raise InvalidGrid("grid_dg must be finite, nonnegative and match grid_t", index=0)
        dg.setflags(write=False)

    return RadialProfile(
        grid_t=_frozen(t),
        grid_g=_frozen(g),
        tail_slope=float(tail_slope),
        dim_n=int(dim_n),
        label=label,
        grid_dg=dg,
    )


def scale_profile(profile: RadialProfile, lam: float, label: str | None = None) -> RadialProfile:
    """The profile lam * g."""
    if not (lam >= 0 and math.isfinite(lam)):
        raise InvalidInput("scale must be finite and nonnegative", scale=lam)
    return make_profile(
        profile.grid_t,
        lam * profile.grid_g,
        lam * profile.tail_slope,
        profile.dim_n,
        label=profile.label if label is None else label,
        grid_dg=None if profile.grid_dg is None else lam * profile.grid_dg,
    )


def normalize_mass(profile: RadialProfile) -> RadialProfile:
    """Rescale to unit Monge-Ampère mass."""
    total = ma_mass(profile).total
    if total <= 0:
        raise InvalidInput("cannot normalize a profile with zero mass", label=profile.label)
    return scale_profile(profile, total ** (-1.0 / profile.dim_n))


def evaluate(profile: RadialProfile, t) -> np.ndarray:
    """g at arbitrary t <= 0, using the linear tail below t_min."""
    t = np.asarray(t, dtype=float)
    inner = profile.hermite(np.clip(t, profile.t_min, 0.0))
    tail = profile.grid_g[0] + profile.tail_slope * (t - profile.t_min)
    return np.where(t < profile.t_min, tail, inner)


# ============================================
# Mass and energy
# ============================================


@dataclass(frozen=True, eq=False)
class MassProfile:
    grid_t: np.ndarray
    grid_m: np.ndarray
    atom_origin: float
    total: float


def ma_mass(profile: RadialProfile) -> MassProfile:
    """Cumulative Monge-Ampère mass m(t) = g'(t)^n, including the origin atom."""
    atom = profile.tail_slope ** profile.dim_n
    m = np.maximum.accumulate(np.maximum(profile.slopes ** profile.dim_n, atom))
    m.setflags(write=False)
    return MassProfile(grid_t=profile.grid_t, grid_m=m, atom_origin=atom, total=float(m[-1]))


def ma_density(profile: RadialProfile) -> np.ndarray:
    """Density of (dd^c u)^n with respect to dV on the grid."""
    n = profile.dim_n
    t = profile.grid_t
    m = ma_mass(profile).grid_m
    k = SPLINE_ORDER if len(t) > SPLINE_ORDER else 1
    if np.all(m > 0):
        q = np.log(m) - n * t
        dq = make_interp_spline(t, q, k=k).derivative()(t)
        density = np.exp(q) * (dq + n) / n
    else:
        dm = make_interp_spline(t, m, k=k).derivative()(t)
        density = dm * np.exp(-n * t) / n
    return np.maximum(density, 0.0)


@dataclass(frozen=True)
class EnergyReport:
    j_raw: float
    e_standard: float
    e_thermo: float
    finite: bool
    error: float = 0.0


def energy(profile: RadialProfile) -> EnergyReport:
    """J_raw = int (-u)(dd^c u)^n = int g'^{n+1} dt, with its two normalizations."""
    n = profile.dim_n
    if profile.tail_slope > 0:
        return EnergyReport(math.inf, -math.inf, -math.inf, False)
    quadrature = integrate(profile.slopes ** (n + 1), profile.grid_t)
    j_raw = max(quadrature.value, 0.0)
    return EnergyReport(
        j_raw=j_raw,
        e_standard=-j_raw / math.factorial(n + 1),
        e_thermo=-j_raw / (n + 1),
        finite=True,
        error=quadrature.error,
    )


# ============================================
# Exponential integrals
# ============================================


def exp_integral_with_error(profile: RadialProfile, gamma: float) -> Quadrature:
    """int e^{-gamma u} dV with its quadrature error; the tail is closed form."""
    if not gamma >= 0:
        raise InvalidInput("gamma must be nonnegative", gamma=gamma)
    n = profile.dim_n
    rate = n - gamma * profile.tail_slope
    if rate <= 0:
        return Quadrature(math.inf, 0.0)
    t = profile.grid_t
    body = integrate(n * np.exp(n * t - gamma * profile.grid_g), t)
    tail = n * math.exp(n * t[0] - gamma * profile.grid_g[0]) / rate
    return Quadrature(body.value + tail, body.error)


def exp_integral(profile: RadialProfile, gamma: float) -> float:
    """int_ball e^{-gamma u} dV, +inf once gamma * tail_slope >= n."""
    return exp_integral_with_error(profile, gamma).value


def singularity_exponent(profile: RadialProfile) -> float:
    """sup{c : e^{-c u} integrable near 0} = n / tail_slope."""
    if profile.tail_slope == 0:
        return math.inf
    return profile.dim_n / profile.tail_slope


# ============================================
# Distribution function and moments
# ============================================


def level_crossing(profile: RadialProfile, levels) -> np.ndarray:
    """t*(c) = sup{t : g(t) < c}; -inf when the set is empty."""
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    g = profile.grid_g
    t = profile.grid_t
    out = np.full(levels.shape, -np.inf)

    in_tail = levels <= g[0]
    if profile.tail_slope > 0:
        out[in_tail] = t[0] + (levels[in_tail] - g[0]) / profile.tail_slope

    inside = ~in_tail
    if np.any(inside):
        target = levels[inside]
        idx = np.clip(np.searchsorted(g, target, side="left"), 1, len(g) - 1)
        lo = t[idx - 1].copy()
        hi = t[idx].copy()
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            below = profile.hermite(mid) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out[inside] = 0.5 * (lo + hi)
    return out


def volume_curve(profile: RadialProfile, s) -> np.ndarray:
    """V(s) = Vol{u < -s} = e^{n t*(-s)} on an array of s >= 0; V(0) = 1."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s < 0):
        raise InvalidInput("s must be nonnegative", s=float(np.min(s)))
    v = np.exp(profile.dim_n * level_crossing(profile, -s))
    return np.where(s == 0.0, 1.0, v)


def volume_function(profile: RadialProfile, s: float) -> float:
    """V(s) = Vol{u < -s}."""
    return float(volume_curve(profile, [s])[0])


def level_range(profile: RadialProfile) -> float:
    """s beyond which V vanishes (bounded profiles) or drops under VOLUME_FLOOR."""
    if profile.bounded:
        return float(-profile.grid_g[0])
    t_cut = math.log(VOLUME_FLOOR) / profile.dim_n
    return float(-evaluate(profile, t_cut))


def s_grid(profile: RadialProfile, points: int = S_POINTS) -> np.ndarray:
    """Uniform s-grid covering the support of V."""
    top = level_range(profile)
    if top <= 0:
        return np.zeros(1)
    return np.linspace(0.0, top, points)


@dataclass(frozen=True)
class LpMoment:
    direct: float
    layer_cake: float
    error: float = 0.0


def lp_moment(profile: RadialProfile, p: float, s_points: int = S_POINTS) -> LpMoment:
    """int (-u)^p dV computed directly and through the layer-cake formula."""
    if not p >= 1:
        raise InvalidInput("p must be at least 1", p=p)
    n = profile.dim_n
    t = profile.grid_t
    depth = np.maximum(-profile.grid_g, 0.0)
    body = integrate(depth**p * n * np.exp(n * t), t)

    base = float(depth[0])
    slope = profile.tail_slope
    tail_shape, _ = quad(
        lambda sigma: (base + slope * sigma) ** p * math.exp(-n * sigma),
        0.0,
        math.inf,
        epsabs=0.0,
        epsrel=1e-12,
        limit=200,
    )
    direct = body.value + n * math.exp(n * t[0]) * tail_shape

    s = s_grid(profile, s_points)
    if len(s) < 2:
        return LpMoment(direct=direct, layer_cake=0.0, error=body.error)
    layer = integrate(volume_curve(profile, s) * p * s ** (p - 1), s)
    return LpMoment(direct=direct, layer_cake=layer.value, error=max(body.error, layer.error))


# ============================================
# Tabular I/O
# ============================================


def write_profile(profile: RadialProfile, path: str | Path | None = None) -> str:
    """Serialize as CSV with a header carrying n, tail_slope and label."""
    lines = [
        PROFILE_HEADER,
        f"# n={profile.dim_n}",
        f"# tail_slope={profile.tail_slope:.17g}",
        f"# label={profile.label}",
    ]
    if profile.grid_dg is None:
        lines.append("t,g")
        lines.extend(f"{t:.17g},{g:.17g}" for t, g in zip(profile.grid_t, profile.grid_g))
    else:
        lines.append("t,g,dg")
        lines.extend(
            f"{t:.17g},{g:.17g},{d:.17g}"
            for t, g, d in zip(profile.grid_t, profile.grid_g, profile.grid_dg)
        )
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
        log.info("profile_written", path=str(path), points=len(profile.grid_t))
    return text


def read_profile(source: str | Path) -> RadialProfile:
    """Parse the tabular format; accepts a path or the text itself."""
    text = Path(source).read_text() if isinstance(source, Path) or "\n" not in str(source) else str(source)
    meta: dict[str, str] = {}
    body: list[str] = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                meta[key.strip()] = value.strip()
        elif line.strip() and not line[0].isalpha():
            body.append(line)
    if "n" not in meta or "tail_slope" not in meta:
        raise InvalidInput("profile header must carry n and tail_slope")
    data = np.loadtxt(io.StringIO("\n".join(body)), delimiter=",", ndmin=2)
    return make_profile(
        data[:, 0],
        data[:, 1],
        float(meta["tail_slope"]),
        int(meta["n"]),
        label=meta.get("label", ""),
        grid_dg=data[:, 2] if data.shape[1] > 2 else None,
    )
