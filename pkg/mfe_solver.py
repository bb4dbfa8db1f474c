"""Radial mean-field Monge-Ampère equation (dd^c u)^n = a e^{-u} dV / int e^{-u} dV.

In the t variable the equation reads (g'^n)' = (a/Z) n e^{nt - g}, g(0) = 0,
with g' -> 0 as t -> -inf when there is no atom. Radial solutions exist for
0 < a < (n+1)^n and coincide with the Fubini-Study profile of matching mass.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np
import structlog
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.optimize import brentq

from errors import DimensionMismatch, InvalidInput, MassOutOfRange, NoConvergence
from radial_core import (
    VOLUME_FLOOR,
    GridSpec,
    RadialProfile,
    build_grid,
    energy,
    evaluate,
    exp_integral,
    ma_density,
    ma_mass,
    make_profile,
    scale_profile,
)

log = structlog.get_logger()

AGREEMENT_TOL = 1e-6


@dataclass(frozen=True)
class SolverOptions:
    theta: float = 0.5
    theta_min: float = 1.0 / 64
    max_iter: int = 5000
    tol: float = 1e-7
    step_tol: float = 1e-11
    stall_window: int = 500
    fallback: bool = True
    cross_check: bool = False
    method: str = "DOP853"
    rtol: float = 1e-12
    atol: float = 1e-14
    grid: GridSpec = field(default_factory=GridSpec)


@dataclass(frozen=True, eq=False)
class MFESolution:
    profile: RadialProfile
    mass_a: float
    normalization_Z: float
    residual_sup: float
    iterations: int
    eps_fit: float
    converged: bool
    method: str
    flagged: bool = False
    cross_distance: float | None = None
    gamma: float | None = None


def critical_mass(n: int) -> float:
    return float((n + 1) ** n)


def _check_mass(n: int, a: float, index: int | None = None) -> None:
    if int(n) != n or n < 1:
        raise InvalidInput("dimension must be a positive integer", n=n)
    if not 0 < a < critical_mass(n):
        raise MassOutOfRange(
            f"mass a={a!r} outside (0, {critical_mass(n):g})", index=index, a=a, n=n
        )


def oracle_epsilon(n: int, a: float) -> float:
    """The eps with M(phi_eps) = a: sqrt((n+1)/a^{1/n} - 1)."""
    _check_mass(n, a)
    return math.sqrt((n + 1) / a ** (1.0 / n) - 1.0)


def eps_from_depth(n: int, depth: float) -> float:
    """Invert g(-inf) = (n+1) log(eps^2/(1+eps^2))."""
    x = depth / (n + 1)
    if x >= 0:
        return math.inf
    return math.sqrt(math.exp(x) / -math.expm1(x))


# ============================================
# Fixed point
# ============================================


def _mass_map(t: np.ndarray, g: np.ndarray, n: int, a: float) -> tuple[np.ndarray, np.ndarray, float]:
    """One application of g -> potential of a e^{-g} dV / Z."""
    w = n * np.exp(n * t - g)
    cumulative = cumulative_simpson(w, x=t, initial=0.0) + math.exp(n * t[0] - g[0])
    z = float(cumulative[-1])
    dg = np.maximum.accumulate((a * cumulative / z) ** (1.0 / n))
    primitive = cumulative_simpson(dg, x=t, initial=0.0)
    return primitive - primitive[-1], dg, z


def _residual(profile: RadialProfile, a: float, z: float) -> float:
    """Sup relative residual of the density equation on nodes where dV exceeds VOLUME_FLOOR."""
    target = a * np.exp(-profile.grid_g) / z
    relative = np.abs(ma_density(profile) / target - 1.0)
    resolved = profile.dim_n * profile.grid_t >= math.log(VOLUME_FLOOR)
    return float(np.max(relative[resolved]))


@dataclass
class _Iterate:
    g: np.ndarray
    dg: np.ndarray
    z: float
    iterations: int
    step: float


def _fixed_point(t: np.ndarray, g0: np.ndarray, n: int, a: float, opts: SolverOptions) -> tuple[_Iterate, bool]:
    g = g0.copy()
    theta = opts.theta
    history: list[float] = []
    best = math.inf
    g_new, dg, z = g, g, math.nan
    for k in range(1, opts.max_iter + 1):
        g_new, dg, z = _mass_map(t, g, n, a)
        step = float(np.max(np.abs(g_new - g)))
        history.append(step)
        if step < opts.step_tol:
            return _Iterate(g_new, dg, z, k, step), True
        if step < best:
            best = step
            theta = min(1.0, theta * 1.2)
        else:
            theta = max(opts.theta_min, theta / 2)
        if len(history) > opts.stall_window and step > 0.5 * history[-1 - opts.stall_window]:
            log.warning("mfe_fixed_point_stall", n=n, a=a, iteration=k, step=step)
            return _Iterate(g_new, dg, z, k, step), False
        g = (1 - theta) * g + theta * g_new
        g[-1] = 0.0
    return _Iterate(g_new, dg, z, opts.max_iter, history[-1]), False


# ============================================
# Shooting
# ============================================


def _shoot(t: np.ndarray, n: int, log_k: float, opts: SolverOptions):
    """Integrate w' = e^{l/n}, l' = K n e^{nt - w - l} from t_min with w(-inf) = 0."""
    k = math.exp(log_k)

    def rhs(s, y):
        return [math.exp(y[1] / n), k * n * math.exp(n * s - y[0] - y[1])]

    y0 = [k ** (1.0 / n) * math.exp(t[0]), log_k + n * t[0]]
    sol = solve_ivp(rhs, (t[0], 0.0), y0, method=opts.method, t_eval=t, rtol=opts.rtol, atol=opts.atol)
    if not sol.success:
        raise NoConvergence(f"shooting integration failed: {sol.message}", residual=math.inf)
    return sol


def _shooting(t: np.ndarray, n: int, a: float, opts: SolverOptions) -> _Iterate:
    """Bisect on K = (a/Z) e^{-w(0)} until the mass at t = 0 equals a."""
    target = math.log(a)

    def miss(log_k: float) -> float:
        return float(_shoot(t, n, log_k, opts).y[1, -1]) - target

    # below t_min the profile is flat only while log K < log a - n t_min
    ceiling = target - n * t[0]
    lo, hi = target - 10.0, target + 10.0
    while miss(lo) > 0:
        lo -= 10.0
    while miss(hi) < 0:
        hi += 10.0
        if hi > ceiling:
            raise NoConvergence("no shooting bracket for the mass", residual=math.inf)
    log_k = brentq(miss, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    sol = _shoot(t, n, log_k, opts)
    w, ell = sol.y
    z = a / math.exp(log_k - w[-1])
    return _Iterate(w - w[-1], np.exp(ell / n), z, int(sol.nfev), 0.0)


# ============================================
# Solve
# ============================================


def _build_solution(it: _Iterate, t: np.ndarray, n: int, a: float, method: str, converged: bool) -> MFESolution:
    profile = make_profile(t, it.g, 0.0, n, label=f"mfe(n={n},a={a:g})", grid_dg=it.dg)
    return MFESolution(
        profile=profile,
        mass_a=a,
        normalization_Z=it.z,
        residual_sup=_residual(profile, a, it.z),
        iterations=it.iterations,
        eps_fit=eps_from_depth(n, float(it.g[0])),
        converged=converged,
        method=method,
    )


def _grid_for(n: int, a: float, opts: SolverOptions) -> np.ndarray:
    shoulder = 2.0 * math.log(oracle_epsilon(n, a))
    spec = opts.grid.refined(shoulder) if opts.grid.t_min < shoulder < 0 else opts.grid
    return build_grid(spec)


def solve(
    n: int,
    a: float,
    opts: SolverOptions | None = None,
    initial: RadialProfile | None = None,
) -> MFESolution:
    """Damped fixed point on the cumulative mass, with a shooting fallback."""
    opts = opts or SolverOptions()
    _check_mass(n, a)
    t = _grid_for(n, a, opts)
    if initial is None:
        g0 = a ** (1.0 / n) * np.expm1(t)
    else:
        g0 = np.array(evaluate(initial, t), dtype=float)

    it, settled = _fixed_point(t, g0, n, a, opts)
    solution = _build_solution(it, t, n, a, "fixed_point", settled)
    if not (settled and solution.residual_sup < opts.tol):
        if not opts.fallback:
            raise NoConvergence(
                "fixed point did not converge", residual=solution.residual_sup, iterate=solution.profile
            )
        log.warning("mfe_shooting_fallback", n=n, a=a, residual=solution.residual_sup)
        solution = _build_solution(_shooting(t, n, a, opts), t, n, a, "shooting", True)
    elif opts.cross_check:
        shot = _build_solution(_shooting(t, n, a, opts), t, n, a, "shooting", True)
        distance = float(np.max(np.abs(shot.profile.grid_g - solution.profile.grid_g)))
        solution = replace(solution, cross_distance=distance, flagged=distance > AGREEMENT_TOL)
        if solution.flagged:
            log.warning(
                "mfe_methods_disagree",
                n=n,
                a=a,
                sup_distance=distance,
                fixed_point_residual=solution.residual_sup,
                shooting_residual=shot.residual_sup,
            )

    if solution.residual_sup >= opts.tol:
        raise NoConvergence(
            f"residual {solution.residual_sup:.3g} above tolerance",
            residual=solution.residual_sup,
            iterate=solution.profile,
        )
    log.info(
        "mfe_solve",
        n=n,
        a=a,
        method=solution.method,
        iterations=solution.iterations,
        residual=solution.residual_sup,
        eps_fit=solution.eps_fit,
    )
    return solution


def solve_gamma_form(n: int, gamma: float, opts: SolverOptions | None = None) -> MFESolution:
    """(dd^c u)^n = e^{-gamma u} dV / int e^{-gamma u} dV through v = gamma u, a = gamma^n."""
    if not 0 < gamma < n + 1:
        raise MassOutOfRange("gamma must lie in (0, n+1)", gamma=gamma, n=n)
    mass_form = solve(n, gamma**n, opts)
    profile = scale_profile(mass_form.profile, 1.0 / gamma, label=f"mfe(n={n},gamma={gamma:g})")
    return MFESolution(
        profile=profile,
        mass_a=1.0,
        normalization_Z=mass_form.normalization_Z,
        residual_sup=mass_form.residual_sup,
        iterations=mass_form.iterations,
        eps_fit=mass_form.eps_fit,
        converged=mass_form.converged,
        method=mass_form.method,
        flagged=mass_form.flagged,
        gamma=gamma,
    )


def continuation(n: int, a_path, opts: SolverOptions | None = None) -> list[MFESolution]:
    """Solve along an increasing mass path, warm-starting each step."""
    path = [float(a) for a in a_path]
    if any(b <= a for a, b in zip(path, path[1:])):
        raise InvalidInput("mass path must be strictly increasing", path=path)
    solutions: list[MFESolution] = []
    for index, a in enumerate(path):
        _check_mass(n, a, index=index)
        initial = None
        if solutions:
            prev = solutions[-1]
            initial = scale_profile(prev.profile, (a / prev.mass_a) ** (1.0 / n))
        try:
            solutions.append(solve(n, a, opts, initial=initial))
        except NoConvergence as exc:
            raise NoConvergence(str(exc), residual=exc.residual, iterate=exc.iterate, index=index) from exc
        log.info("mfe_continuation_step", n=n, index=index, a=a, eps_fit=solutions[-1].eps_fit)
    return solutions


# ============================================
# Diagnostics
# ============================================


def mean_field_functional(profile: RadialProfile, a: float) -> float:
    """G_a(u) = E_thermo(u) + a log int e^{-u} dV; solutions are its maximizers."""
    return energy(profile).e_thermo + a * math.log(exp_integral(profile, 1.0))


@dataclass(frozen=True)
class PerturbationReport:
    value: float
    worst_perturbed: float
    count: int
    holds: bool


def perturbation_check(solution: MFESolution, count: int = 20, seed: int = 0) -> PerturbationReport:
    """Compare G_a at the solution against random admissible perturbations."""
    rng = np.random.default_rng(seed)
    profile = solution.profile
    a = solution.mass_a
    t = profile.grid_t
    g = profile.grid_g
    dg = profile.slopes
    base = mean_field_functional(profile, a)
    worst = -math.inf
    for i in range(count):
        kind = i % 3
        if kind == 0:
            lam = rng.uniform(0.8, 1.2)
            new_g, new_dg = lam * g, lam * dg
        elif kind == 1:
            eta, k = rng.uniform(0.0, 0.1), int(rng.integers(1, 4))
            new_g, new_dg = g + eta * np.expm1(k * t), dg + eta * k * np.exp(k * t)
        else:
            c, mix = rng.uniform(0.5, 2.5), rng.uniform(0.0, 0.3)
            new_g = (1 - mix) * g + mix * c * np.expm1(t)
            new_dg = (1 - mix) * dg + mix * c * np.exp(t)
        candidate = make_profile(t, new_g, 0.0, profile.dim_n, grid_dg=new_dg)
        worst = max(worst, mean_field_functional(candidate, a))
    return PerturbationReport(value=base, worst_perturbed=worst, count=count, holds=worst <= base + 1e-9)


@dataclass(frozen=True)
class ConcentrationRow:
    mass_a: float
    eps_fit: float
    core_fraction: float
    shoulder_fraction: float
    annulus_distance: float
    e_thermo: float
    supercritical_log_integral: float


@dataclass(frozen=True)
class ConcentrationReport:
    rows: list[ConcentrationRow]
    classification: str


def concentration_report(
    solutions: list[MFESolution],
    t_core: float = -1.0,
    core_threshold: float = 0.99,
    annulus_threshold: float = 0.05,
    delta: float = 0.5,
) -> ConcentrationReport:
    """Mass fractions, distance to the scaled Green function and the compactness verdict."""
    if not solutions:
        return ConcentrationReport(rows=[], classification="compact")
    n = solutions[0].profile.dim_n
    if any(s.profile.dim_n != n for s in solutions):
        raise DimensionMismatch("solutions on a path must share the dimension")
    annulus = np.linspace(-2.0, 0.0, 401)
    rows = []
    for sol in solutions:
        p = sol.profile
        a = sol.mass_a
        mass = ma_mass(p)
        shoulder = 2.0 * math.log(sol.eps_fit) if math.isfinite(sol.eps_fit) else 0.0
        rows.append(
            ConcentrationRow(
                mass_a=a,
                eps_fit=sol.eps_fit,
                core_fraction=float(np.interp(t_core, p.grid_t, mass.grid_m)) / mass.total,
                shoulder_fraction=float(np.interp(shoulder, p.grid_t, mass.grid_m)) / mass.total,
                annulus_distance=float(np.max(np.abs(evaluate(p, annulus) - a ** (1.0 / n) * annulus))),
                e_thermo=energy(p).e_thermo,
                supercritical_log_integral=math.log(exp_integral(p, (n + delta) / a ** (1.0 / n))),
            )
        )
    last = rows[-1]
    moving = len({r.mass_a for r in rows}) > 1
    concentrating = (
        moving and last.core_fraction > core_threshold and last.annulus_distance < annulus_threshold
    )
    classification = "concentrating" if concentrating else "compact"
    log.info("concentration_report", n=n, steps=len(rows), classification=classification)
    return ConcentrationReport(rows=rows, classification=classification)
