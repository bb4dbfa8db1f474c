"""Operations behind the CLI, with Pydantic input validation."""
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Annotated, Any, Callable, Literal

import mpmath
import numpy as np
import structlog
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError

from constants import constants_table, counterexample_check, smallest_counterexample_n
from errors import InvalidInput, MtlabError, UsageError
from families import cone_profile, fs_mass, ke_constant, product_lift, zero_profile
from functionals import FamilySpec, Normalization, bm_check, bm_check_product, mt_check, sweep
from mfe_solver import (
    MFESolution,
    SolverOptions,
    concentration_report,
    continuation,
    oracle_epsilon,
    perturbation_check,
    solve,
    solve_gamma_form,
)
from radial_core import (
    DEFAULT_POINTS,
    DEFAULT_T_MIN,
    GridSpec,
    RadialProfile,
    energy,
    exp_integral,
    ma_mass,
    normalize_mass,
    singularity_exponent,
)
from reproduce import run_acceptance
from settings import workers_from_env
from thermo import (
    alpha_lower_bound,
    duality_gap,
    entropy,
    entropy_legendre_gap,
    free_energy,
    gibbs_measure,
    measure_energy,
)
from transforms import laplace_layer_cake, legendre, make_convex_function

log = structlog.get_logger()

# ============================================
# Input Schemas (Pydantic models)
# ============================================


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    if isinstance(value, (int, float)):
        return [value]
    return value


FloatList = Annotated[list[float], BeforeValidator(_split_list), Field(min_length=1)]


class OpInput(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridInput(OpInput):
    tmin: Annotated[float, Field(lt=0, description="Left end of the t-grid")] = DEFAULT_T_MIN
    grid_points: Annotated[int, Field(ge=3, le=400_001, description="Base grid points")] = DEFAULT_POINTS

    def grid(self) -> GridSpec:
        return GridSpec(t_min=self.tmin, points=self.grid_points)


class ProfileInput(GridInput):
    family: Literal["fs", "cone", "zero"] = "fs"
    n: Annotated[int, Field(ge=1, le=12)] = 2
    eps: Annotated[float, Field(gt=0, description="Fubini-Study parameter")] = 1.0
    slope: Annotated[float, Field(ge=0, description="Cone slope")] = 1.0
    scale: Normalization = "raw"

    def build(self) -> RadialProfile:
        if self.family == "zero":
            return zero_profile(self.n, self.grid())
        spec = FamilySpec(self.family, self.n, self.scale, self.grid())
        return spec.build(self.eps if self.family == "fs" else self.slope)


class FamilyInput(ProfileInput):
    gamma: Annotated[float, Field(ge=0)] = 1.0
    slopes: bool = False


class MTInput(ProfileInput):
    scale: Normalization = "critical"
    gamma: Annotated[float, Field(gt=0)] = 1.0
    deltas: FloatList = [0.5, 0.1, 0.02]


class BMInput(ProfileInput):
    factor_slope: Annotated[float | None, Field(ge=0, description="Lift with a disc cone of this slope")] = None


class SweepInput(GridInput):
    family: Literal["fs", "cone"] = "fs"
    n: Annotated[int, Field(ge=1, le=12)] = 2
    gamma: FloatList = [3.0]
    eps: FloatList = [1.0]
    slope: FloatList = [1.0]
    scale: Normalization = "critical"
    workers: Annotated[int | None, Field(ge=1)] = None


class LegendreInput(OpInput):
    n: Annotated[int, Field(ge=1, le=12)] = 2
    input: str | None = None
    t_max: Annotated[float, Field(gt=0)] = 25.0
    t_points: Annotated[int, Field(ge=3)] = 20001
    s_min: Annotated[float, Field(ge=0)] = 0.1
    s_max: Annotated[float, Field(gt=0)] = 10.0
    s_points: Annotated[int, Field(ge=2)] = 1001


class LaplaceInput(ProfileInput):
    t: FloatList = [1.0]
    s_points: Annotated[int, Field(ge=5)] = 20001


class ThermoInput(ProfileInput):
    gamma: Annotated[float, Field(gt=0)] = 1.0


class MFESolveInput(GridInput):
    n: Annotated[int, Field(ge=1, le=12)] = 2
    a: Annotated[float | None, Field(gt=0)] = None
    gamma: Annotated[float | None, Field(gt=0)] = None
    gamma_form: bool = False
    tol: Annotated[float, Field(gt=0)] = 1e-7
    cross_check: bool = False
    seed: int | None = None

    def options(self) -> SolverOptions:
        return SolverOptions(tol=self.tol, cross_check=self.cross_check, grid=self.grid())


class MFEContinueInput(GridInput):
    n: Annotated[int, Field(ge=1, le=12)] = 2
    path: FloatList
    tol: Annotated[float, Field(gt=0)] = 1e-7
    t_core: Annotated[float, Field(lt=0)] = -1.0


class ConstantsInput(OpInput):
    n_max: Annotated[int, Field(ge=1, le=200)] = 5
    precision: Annotated[int | None, Field(ge=20)] = None
    counterexample_max: Annotated[int, Field(ge=1, le=500)] = 50


class ReproduceInput(OpInput):
    include_slow: bool = True


# ============================================
# Op Implementations
# ============================================


@dataclass
class OpResult:
    record: dict
    columns: list[str] = field(default_factory=list)
    rows: list[list] = field(default_factory=list)
    errors: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"record": self.record, "columns": self.columns, "rows": self.rows, "errors": self.errors}


def _profile_table(profile: RadialProfile, slopes: bool) -> tuple[list[str], list[list]]:
    if slopes:
        return ["t", "g", "dg"], np.column_stack((profile.grid_t, profile.grid_g, profile.slopes)).tolist()
    return ["t", "g"], np.column_stack((profile.grid_t, profile.grid_g)).tolist()


def family_op(inp: FamilyInput) -> OpResult:
    """Build a family profile and report its mass, energy and exponential integral."""
    profile = inp.build()
    report = energy(profile)
    record = {
        "label": profile.label,
        "n": profile.dim_n,
        "tail_slope": profile.tail_slope,
        "mass": ma_mass(profile).total,
        "j_raw": report.j_raw,
        "e_standard": report.e_standard,
        "e_thermo": report.e_thermo,
        "gamma": inp.gamma,
        "exp_integral": exp_integral(profile, inp.gamma),
        "singularity_exponent": singularity_exponent(profile),
    }
    if inp.family == "fs" and inp.scale == "raw":
        record["fs_mass_closed_form"] = fs_mass(inp.n, inp.eps)
        record["ke_constant"] = ke_constant(inp.n, inp.eps)
    columns, rows = _profile_table(profile, inp.slopes)
    return OpResult(record=record, columns=columns, rows=rows, errors={"energy": report.error})


def mt_op(inp: MTInput) -> OpResult:
    """Moser-Trudinger sides for gamma * u."""
    report = mt_check(inp.build(), inp.gamma, tuple(inp.deltas))
    record = asdict(report)
    record["quasi_rhs"] = {repr(k): v for k, v in report.quasi_rhs.items()}
    record["quasi_margin"] = {repr(k): v for k, v in report.quasi_margin.items()}
    return OpResult(record=record, errors={"mt": report.error})


def bm_op(inp: BMInput) -> OpResult:
    """Brezis-Merle ratios, optionally on the product with a disc cone."""
    profile = inp.build()
    if inp.factor_slope is None:
        report = bm_check(profile)
    else:
        report = bm_check_product(product_lift(profile, cone_profile(1, inp.factor_slope, inp.grid())))
    return OpResult(record=asdict(report))


SWEEP_COLUMNS = [
    "family",
    "n",
    "param",
    "gamma",
    "lhs",
    "e_thermo",
    "g_value",
    "sharp_margin",
    "bm_mass",
    "bm_integral",
    "bm_ratio_quasi",
]


def sweep_op(inp: SweepInput) -> OpResult:
    """Family sweep over gamma x parameter."""
    family = FamilySpec(inp.family, inp.n, inp.scale, inp.grid())
    params = inp.eps if inp.family == "fs" else inp.slope
    rows = []
    for row in sweep(family, inp.gamma, params, workers=inp.workers or workers_from_env()):
        mt = row.mt
        rows.append([
            row.family,
            row.n,
            row.param,
            row.gamma,
            mt.lhs if mt else None,
            mt.e_thermo if mt else None,
            mt.g_value if mt else None,
            mt.sharp_margin if mt else None,
            row.bm.mass,
            row.bm.integral,
            row.bm.ratio_quasi,
        ])
    g_values = [r[6] for r in rows if r[6] is not None]
    record = {"rows": len(rows), "g_spread": max(g_values) - min(g_values) if g_values else None}
    return OpResult(record=record, columns=SWEEP_COLUMNS, rows=rows)


def _read_pairs(path: str) -> tuple[np.ndarray, np.ndarray]:
    lines = [
        line
        for line in Path(path).read_text().splitlines()
        if line.strip() and not line.startswith("#") and not line[0].isalpha()
    ]
    data = np.loadtxt(lines, delimiter=",", ndmin=2)
    return data[:, 0], data[:, 1]


def legendre_op(inp: LegendreInput) -> OpResult:
    """Convex conjugate of a tabulated function or of (n+1)^{-(n+1)} t^{n+1}."""
    if inp.s_min >= inp.s_max:
        raise InvalidInput("s_min must be below s_max", s_min=inp.s_min, s_max=inp.s_max)
    s = np.linspace(inp.s_min, inp.s_max, inp.s_points)
    if inp.input is not None:
        x, y = _read_pairs(inp.input)
        f_star = legendre(make_convex_function(x, y, label=Path(inp.input).name), s)
        rows = np.column_stack((s, f_star.values)).tolist()
        return OpResult(record={"points": len(x)}, columns=["s", "f_star"], rows=rows)

    n = inp.n
    t = np.linspace(0.0, inp.t_max, inp.t_points)
    f = make_convex_function(t, t ** (n + 1) / (n + 1) ** (n + 1), label=f"power(n={n})")
    f_star = legendre(f, s)
    exact = n * s ** ((n + 1) / n)
    error = float(np.max(np.abs(f_star.values - exact)))
    return OpResult(
        record={"n": n, "sup_error": error},
        columns=["s", "f_star", "exact"],
        rows=np.column_stack((s, f_star.values, exact)).tolist(),
    )


def laplace_op(inp: LaplaceInput) -> OpResult:
    """E(t) directly and through the layer-cake formula."""
    profile = inp.build()
    reports = [laplace_layer_cake(profile, t, inp.s_points) for t in inp.t]
    rows = [[r.t, r.direct, r.layer, r.rel_diff] for r in reports]
    record = {"label": profile.label, "max_rel_diff": max(r.rel_diff for r in reports)}
    return OpResult(record=record, columns=["t", "direct", "layer", "rel_diff"], rows=rows)


def thermo_op(inp: ThermoInput) -> OpResult:
    """Gibbs measure of a profile and its thermodynamic quantities."""
    profile = inp.build()
    mu = gibbs_measure(profile, inp.gamma)
    record: dict[str, Any] = {
        "label": profile.label,
        "gamma": inp.gamma,
        "total": mu.total,
        "entropy": entropy(mu),
        "measure_energy": measure_energy(mu),
        "free_energy": free_energy(mu, inp.gamma),
        "entropy_legendre_gap": entropy_legendre_gap(mu, profile, inp.gamma),
        "duality_gap": duality_gap(profile, inp.gamma) if energy(profile).finite else None,
    }
    if ma_mass(profile).total > 0:
        record["alpha_lower_bound"] = alpha_lower_bound(profile.dim_n, [normalize_mass(profile)])
    return OpResult(record=record)


def _solution_record(solution: MFESolution) -> dict:
    return {
        "mass_a": solution.mass_a,
        "normalization_Z": solution.normalization_Z,
        "residual_sup": solution.residual_sup,
        "iterations": solution.iterations,
        "eps_fit": solution.eps_fit,
        "converged": solution.converged,
        "method": solution.method,
        "flagged": solution.flagged,
        "cross_distance": solution.cross_distance,
        "gamma": solution.gamma,
    }


def mfe_solve_op(inp: MFESolveInput) -> OpResult:
    """Solve the mean-field equation in mass form or gamma form."""
    if inp.gamma_form:
        if inp.gamma is None:
            raise UsageError("--gamma-form needs --gamma")
        solution = solve_gamma_form(inp.n, inp.gamma, inp.options())
    else:
        if inp.a is None:
            raise UsageError("mfe solve needs --a (or --gamma-form with --gamma)")
        solution = solve(inp.n, inp.a, inp.options())
    record = _solution_record(solution)
    if not inp.gamma_form:
        record["oracle_eps"] = oracle_epsilon(inp.n, inp.a)
    if inp.seed is not None:
        record["perturbation"] = asdict(perturbation_check(solution, seed=inp.seed))
    columns, rows = _profile_table(solution.profile, slopes=True)
    return OpResult(record=record, columns=columns, rows=rows)


CONCENTRATION_COLUMNS = [
    "mass_a",
    "eps_fit",
    "core_fraction",
    "shoulder_fraction",
    "annulus_distance",
    "e_thermo",
    "supercritical_log_integral",
]


def mfe_continue_op(inp: MFEContinueInput) -> OpResult:
    """Continuation along a mass path with concentration diagnostics."""
    opts = SolverOptions(tol=inp.tol, grid=inp.grid())
    solutions = continuation(inp.n, inp.path, opts)
    report = concentration_report(solutions, t_core=inp.t_core)
    rows = [[getattr(r, c) for c in CONCENTRATION_COLUMNS] for r in report.rows]
    record = {
        "classification": report.classification,
        "solutions": [_solution_record(s) for s in solutions],
    }
    return OpResult(record=record, columns=CONCENTRATION_COLUMNS, rows=rows)


CONSTANTS_COLUMNS = ["n", "xi_n", "d_n", "sigma_2n_minus_1", "aubin_a_n", "sharp_c_n", "max_residual"]


def constants_op(inp: ConstantsInput) -> OpResult:
    """Table of constants with identity residuals, plus the counterexample scan."""
    rows = []
    residuals = {}
    for row in constants_table(inp.n_max, inp.precision):
        digits = 20
        rows.append([
            row.n,
            mpmath.nstr(row.xi_n, digits),
            mpmath.nstr(row.d_n, digits),
            mpmath.nstr(row.sigma_2n_minus_1, digits),
            mpmath.nstr(row.aubin_a_n, digits),
            mpmath.nstr(row.sharp_c_n, digits),
            max(row.identity_residuals.values()),
        ])
        residuals[str(row.n)] = row.identity_residuals
    checks = [counterexample_check(n, inp.precision) for n in range(1, min(inp.n_max, 10) + 1)]
    record = {
        "identity_residuals": residuals,
        "smallest_counterexample_n": smallest_counterexample_n(inp.counterexample_max, inp.precision),
        "counterexample": [
            {"n": c.n, "volume": c.volume, "bound": c.bound, "holds": c.holds, "pi_route_residual": c.pi_route_residual}
            for c in checks
        ],
    }
    return OpResult(record=record, columns=CONSTANTS_COLUMNS, rows=rows)


def reproduce_op(inp: ReproduceInput) -> OpResult:
    """Run the acceptance suite."""
    results = run_acceptance(include_slow=inp.include_slow)
    rows = [[r.criterion, r.name, r.passed, r.detail] for r in results]
    return OpResult(
        record={"all_passed": all(r.passed for r in results), "criteria": len(results)},
        columns=["criterion", "name", "passed", "detail"],
        rows=rows,
    )


# ============================================
# Op Executor
# ============================================

OPS: dict[str, tuple[type[OpInput], Callable[[Any], OpResult]]] = {
    "family": (FamilyInput, family_op),
    "mt": (MTInput, mt_op),
    "bm": (BMInput, bm_op),
    "sweep": (SweepInput, sweep_op),
    "legendre": (LegendreInput, legendre_op),
    "laplace": (LaplaceInput, laplace_op),
    "thermo": (ThermoInput, thermo_op),
    "mfe-solve": (MFESolveInput, mfe_solve_op),
    "mfe-continue": (MFEContinueInput, mfe_continue_op),
    "constants": (ConstantsInput, constants_op),
    "reproduce": (ReproduceInput, reproduce_op),
}


def run_op(name: str, arguments: dict) -> OpResult:
    """Validate arguments and run an op; errors propagate."""
    if name not in OPS:
        raise UsageError(f"Unknown op: {name}", known=sorted(OPS))
    model, fn = OPS[name]
    return fn(model.model_validate(arguments))


def validation_error_dict(exc: ValidationError) -> dict:
    return {
        "kind": "validation",
        "type": "ValidationError",
        "message": f"{exc.error_count()} invalid parameter(s)",
        "details": {"errors": json.loads(exc.json(include_url=False))},
    }


def execute_op(name: str, arguments: dict) -> dict:
    """Execute an op by name; failures come back as an error object."""
    try:
        return run_op(name, arguments).to_dict()
    except ValidationError as e:
        log.error("op_validation_error", op=name, errors=e.error_count())
        return {"error": validation_error_dict(e)}
    except MtlabError as e:
        log.error("op_execution_error", op=name, error=str(e))
        return {"error": e.to_dict()}
    except (ArithmeticError, ValueError) as e:
        log.error("op_execution_error", op=name, error=str(e))
        return {"error": {"kind": "numerical", "type": type(e).__name__, "message": str(e), "details": {}}}
