"""mtlab command line.

Parameters come from three layers, later ones winning: an INI config file
(`--config`, one section per subcommand plus an optional [run] section),
MTLAB_* environment variables, and command-line flags.
"""
import argparse
import configparser
import os
import sys
from pathlib import Path
from typing import Any

import structlog
from pydantic import BaseModel, ConfigDict, ValidationError

from errors import EXIT_NUMERICAL, EXIT_USAGE, EXIT_VALIDATION, UsageError
from ops import OPS, execute_op, validation_error_dict
from report import OutputFormat, RunReport
from settings import configure_logging

log = structlog.get_logger()

EXIT_CODES = {"validation": EXIT_VALIDATION, "usage": EXIT_USAGE, "numerical": EXIT_NUMERICAL}
RUN_KEYS = ("format", "out", "log_level")
ENV_PARAMS = {"workers": "MTLAB_WORKERS", "precision": "MTLAB_PRECISION"}
GLOBAL_PARAMS = ("tol",)


class RunConfig(BaseModel):
    """Resolved configuration of one CLI run."""

    model_config = ConfigDict(extra="forbid")

    command: str
    format: OutputFormat = "csv"
    out: Path | None = None
    log_level: str | None = None
    params: dict[str, Any] = {}


class MtlabParser(argparse.ArgumentParser):
    """Usage errors exit with code 3."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ============================================
# Parser
# ============================================


def _parent() -> argparse.ArgumentParser:
    return argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)


def _run_parent() -> argparse.ArgumentParser:
    p = _parent()
    p.add_argument("--config", help="INI file with a section per subcommand")
    p.add_argument("--out", help="Write the report here instead of stdout")
    p.add_argument("--format", help="csv | json | table")
    p.add_argument("--log-level", dest="log_level", help="structlog level, default MTLAB_LOG_LEVEL")
    p.add_argument("--tol", help="Solver tolerance, for subcommands that iterate")
    return p


def _grid_parent() -> argparse.ArgumentParser:
    p = _parent()
    p.add_argument("--tmin", help="Left end of the t-grid (default -40)")
    p.add_argument("--grid-points", dest="grid_points", help="Base grid points (default 8001)")
    return p


def _profile_parent() -> argparse.ArgumentParser:
    p = _parent()
    p.add_argument("--family", help="fs | cone | zero")
    p.add_argument("--n", help="Complex dimension")
    p.add_argument("--eps", help="Fubini-Study parameter")
    p.add_argument("--slope", help="Cone slope")
    p.add_argument("--scale", help="raw | critical | unit_mass")
    return p


def build_parser() -> argparse.ArgumentParser:
    run, grid, profile = _run_parent(), _grid_parent(), _profile_parent()
    parser = MtlabParser(prog="mtlab", description="Radial complex Monge-Ampère lab")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=MtlabParser)

    def leaf(container, name: str, command: str, parents, help_text: str) -> argparse.ArgumentParser:
        p = container.add_parser(name, parents=parents, help=help_text, argument_default=argparse.SUPPRESS)
        p.set_defaults(command=command)
        return p

    p = leaf(sub, "family", "family", [run, grid, profile], "Build a profile and report its invariants")
    p.add_argument("--gamma", help="Exponent of the reported exponential integral")
    p.add_argument("--slopes", action="store_true", help="Include g' in the table")

    p = leaf(sub, "mt", "mt", [run, grid, profile], "Moser-Trudinger sides")
    p.add_argument("--gamma")
    p.add_argument("--delta", dest="deltas", help="Comma-separated quasi-sharp deltas")

    p = leaf(sub, "bm", "bm", [run, grid, profile], "Brezis-Merle ratios")
    p.add_argument("--factor-slope", dest="factor_slope", help="Lift by a disc cone of this slope")

    p = leaf(sub, "sweep", "sweep", [run, grid], "Family sweep over gamma x parameter")
    p.add_argument("--family", help="fs | cone")
    p.add_argument("--n")
    p.add_argument("--gamma", help="Comma-separated gammas")
    p.add_argument("--eps", help="Comma-separated eps values")
    p.add_argument("--slope", help="Comma-separated cone slopes")
    p.add_argument("--scale")
    p.add_argument("--workers")

    p = leaf(sub, "legendre", "legendre", [run], "Convex conjugate")
    p.add_argument("--n")
    p.add_argument("--input", help="CSV of t,f pairs")
    p.add_argument("--t-max", dest="t_max")
    p.add_argument("--t-points", dest="t_points")
    p.add_argument("--s-min", dest="s_min")
    p.add_argument("--s-max", dest="s_max")
    p.add_argument("--s-points", dest="s_points")

    p = leaf(sub, "laplace", "laplace", [run, grid, profile], "Laplace transform via layer cake")
    p.add_argument("--t", help="Comma-separated transform variables")
    p.add_argument("--s-points", dest="s_points")

    p = leaf(sub, "thermo", "thermo", [run, grid, profile], "Gibbs measure and free energy")
    p.add_argument("--gamma")

    mfe = sub.add_parser("mfe", help="Mean-field equation")
    mfe_sub = mfe.add_subparsers(dest="mfe_command", required=True, parser_class=MtlabParser)
    p = leaf(mfe_sub, "solve", "mfe-solve", [run, grid], "Solve for one mass")
    p.add_argument("--n")
    p.add_argument("--a", help="Monge-Ampère mass")
    p.add_argument("--gamma", help="Inverse temperature (with --gamma-form)")
    p.add_argument("--gamma-form", dest="gamma_form", action="store_true")
    p.add_argument("--cross-check", dest="cross_check", action="store_true")
    p.add_argument("--seed", help="Run the maximizer perturbation check with this seed")
    p = leaf(mfe_sub, "continue", "mfe-continue", [run, grid], "Continuation along a mass path")
    p.add_argument("--n")
    p.add_argument("--path", help="Comma-separated increasing masses")
    p.add_argument("--t-core", dest="t_core")

    p = leaf(sub, "constants", "constants", [run], "Sharp constants and the counterexample")
    p.add_argument("--n-max", dest="n_max")
    p.add_argument("--precision", help="mpmath digits (default MTLAB_PRECISION)")
    p.add_argument("--counterexample-max", dest="counterexample_max")

    p = leaf(sub, "reproduce", "reproduce", [run], "Run every acceptance criterion")
    p.add_argument("--fast", dest="include_slow", action="store_false", help="Skip the slow criteria")
    return parser


# ============================================
# Config resolution
# ============================================


def _normalize(section) -> dict[str, str]:
    return {key.replace("-", "_"): value for key, value in section.items()}


def read_config_file(path: str, command: str) -> tuple[dict, dict]:
    """(run options, op parameters) from an INI file."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise UsageError("config file not found", path=path)
    run = _normalize(parser["run"]) if parser.has_section("run") else {}
    params = _normalize(parser[command]) if parser.has_section(command) else {}
    return run, params


def _env_params(command: str) -> dict[str, str]:
    fields = OPS[command][0].model_fields
    return {key: os.environ[var] for key, var in ENV_PARAMS.items() if key in fields and os.getenv(var)}


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    flags = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "mfe_command", "config")}
    command = flags.pop("command")
    run: dict = {}
    params: dict = {}
    if getattr(ns, "config", None):
        run, params = read_config_file(ns.config, command)
    params.update(_env_params(command))
    for key in RUN_KEYS:
        if key in flags:
            run[key] = flags.pop(key)
    fields = OPS[command][0].model_fields
    for key in GLOBAL_PARAMS:
        if key in flags and key not in fields:
            log.debug("flag_ignored", command=command, flag=key)
            flags.pop(key)
    params.update(flags)
    return RunConfig(command=command, params=params, **run)


# ============================================
# Entry point
# ============================================


def _emit_error(error: dict) -> None:
    report = RunReport("config", {})
    report.add_result({"error": error})
    sys.stdout.write(report.to_json())


def main(argv: list[str] | None = None) -> int:
    """Run one subcommand; returns the process exit code."""
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        config = resolve_config(ns)
    except ValidationError as exc:
        _emit_error(validation_error_dict(exc))
        return EXIT_VALIDATION
    except UsageError as exc:
        _emit_error(exc.to_dict())
        return EXIT_USAGE

    configure_logging(config.log_level)
    log.info("run_start", command=config.command)
    report = RunReport(config.command, config.params)
    report.add_result(execute_op(config.command, config.params))

    if report.error is not None:
        code = EXIT_CODES.get(report.error.get("kind"), EXIT_NUMERICAL)
    elif config.command == "reproduce" and not report.record.get("all_passed", False):
        code = EXIT_NUMERICAL
    else:
        code = 0

    if config.out is not None:
        report.save_sync(config.out, config.format)
    else:
        sys.stdout.write(report.render(config.format))
    report.footer()
    return code


if __name__ == "__main__":
    sys.exit(main())
