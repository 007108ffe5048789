import logging
from pathlib import Path
from typing import Any, Optional

import anyio
import click

from . import config, logger, report
from .checks import selftest
from .const import (
    EXIT_CONFIG_ERROR,
    EXIT_OK,
    EXIT_SELFTEST_FAILURE,
    EXIT_SOLVER_FAILURE,
)
from .errors import ConfigError, HpicpError
from .experiment import ExperimentReport, ExperimentSpec, ProblemKind, run_experiment

VERBOSITY = [logging.INFO, logging.DEBUG, logging.HPICP_TRACE]

# keys with a dedicated flag
DEDICATED_KEYS = ("seed", "methods", "output_dir", "parallel")
# boolean keys that are switched on by a bare flag
SWITCH_KEYS = ("absolute_noise",)

OPTION_CONFIG = click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Flat key = value experiment file",
)
OPTION_SEED = click.option("--seed", type=str, help="Noise generator seed")
OPTION_METHOD = click.option(
    "--method",
    type=click.Choice(["hpicp", "licp", "both"], case_sensitive=False),
    help="Method(s) to run on the same noisy data",
)
OPTION_OUT = click.option(
    "--out", type=click.Path(file_okay=False, path_type=Path), help="Output directory"
)
OPTION_PARALLEL = click.option(
    "--parallel", is_flag=True, help="Run the methods concurrently"
)


def override_options(func):
    """Attach a ``--key value`` option for every configuration key"""
    for key in reversed(sorted(config.CONFIG_KEYS)):
        if key in DEDICATED_KEYS:
            continue
        flag = "--" + key.replace("_", "-")
        if key in SWITCH_KEYS:
            func = click.option(flag, key, is_flag=True, help=f"Turn on {key}")(func)
            continue
        func = click.option(
            flag, key, type=str, default=None, help=f"Override {key}"
        )(func)
    return func


def configure_logging(verbose: int) -> None:
    logger.setLevel(VERBOSITY[min(verbose, len(VERBOSITY) - 1)])
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(
            logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
        )
        logger.addHandler(handler)


def collect_overrides(
    config_path: Optional[Path],
    seed: Optional[str],
    method: Optional[str],
    out: Optional[Path],
    parallel: Optional[bool],
    overrides: dict[str, Optional[str]],
) -> dict[str, Any]:
    """Config file values, then command-line overrides"""
    mapping: dict[str, Any] = {}
    if config_path is not None:
        mapping.update(config.parse_config_file(config_path))
    mapping.update(
        {k: v for k, v in overrides.items() if v is not None and v is not False}
    )
    if seed is not None:
        mapping["seed"] = seed
    if method is not None:
        mapping["methods"] = method
    if out is not None:
        mapping["output_dir"] = out
    if parallel:
        mapping["parallel"] = True
    return mapping


def echo_report(result: ExperimentReport) -> None:
    click.echo(f"delta_eff = {result.delta_eff:.6g}")
    for method in result.spec.methods:
        summary = result.summaries[method]
        line = (
            f"{method.value}: n_delta={summary.n_delta} "
            f"RE={summary.relative_error} time={summary.time_s:.3f}s "
            f"stop={summary.stop_reason.value}"
        )
        if summary.error:
            line += f" error={summary.error}"
        click.echo(line)


def run_spec(spec: ExperimentSpec) -> ExperimentReport:
    try:
        return anyio.run(run_experiment, spec)
    except HpicpError as err:
        logger.error("Experiment failed: %s", err)
        raise click.exceptions.Exit(EXIT_SOLVER_FAILURE) from err


def load_spec(ctx: click.Context, problem: ProblemKind, **kwargs) -> ExperimentSpec:
    try:
        return config.spec_from_mapping(problem, collect_overrides(**kwargs))
    except ConfigError as err:
        click.echo(f"Configuration error: {err}", err=True)
        ctx.exit(EXIT_CONFIG_ERROR)


def run_problem(ctx: click.Context, problem: ProblemKind, **kwargs) -> None:
    spec = load_spec(ctx, problem, **kwargs)
    result = run_spec(spec)
    echo_report(result)
    click.echo(f"Report written to {spec.output_dir}")
    ctx.exit(EXIT_SOLVER_FAILURE if result.failed else EXIT_OK)


@click.group()
@click.option("-v", "--verbose", count=True, help="INFO, DEBUG, then HPICP_TRACE")
@click.pass_context
def workflow(ctx, verbose):
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    configure_logging(verbose)


def _problem_command(name: str, problem: ProblemKind, help_text: str):
    @workflow.command(name=name, help=help_text)
    @OPTION_CONFIG
    @OPTION_SEED
    @OPTION_METHOD
    @OPTION_OUT
    @OPTION_PARALLEL
    @override_options
    @click.pass_context
    def command(ctx, config_path, seed, method, out, parallel, **overrides):
        run_problem(
            ctx,
            problem,
            config_path=config_path,
            seed=seed,
            method=method,
            out=out,
            parallel=parallel,
            overrides=overrides,
        )

    return command


run_1d = _problem_command(
    "run-1d", ProblemKind.POT1D, "Piecewise constant potential on [-1, 1]"
)
run_2d = _problem_command(
    "run-2d", ProblemKind.POT2D, "Smooth bump potential on [-1, 1]^2"
)


@workflow.command(name="selftest")
@click.option(
    "--mis-signed-adjoint",
    is_flag=True,
    hidden=True,
    help="Negate the adjoint given to the adjoint suite",
)
@click.pass_context
def selftest_command(ctx, mis_signed_adjoint):
    """Run the numerical self checks"""

    def show(result):
        verdict = "PASS" if result.passed else "FAIL"
        click.echo(
            f"{verdict} {result.name}: {result.detail} = {result.worst:.3e} "
            f"({result.elapsed:.2f}s)"
        )

    results = selftest(mis_signed_adjoint=mis_signed_adjoint, progress=show)
    failed = [result.name for result in results if not result.passed]
    if failed:
        click.echo(f"Failed suites: {', '.join(failed)}")
        ctx.exit(EXIT_SELFTEST_FAILURE)
    click.echo("All suites passed")
    ctx.exit(EXIT_OK)


def _float_list(ctx, param, value: Optional[str]) -> Optional[list[float]]:
    if value is None:
        return None
    try:
        return [float(part) for part in value.split(",") if part.strip()]
    except ValueError as err:
        raise click.BadParameter(f"expected comma separated numbers, got {value!r}") from err


@workflow.command(name="sweep")
@click.option(
    "--problem",
    type=click.Choice([kind.value for kind in ProblemKind]),
    default=ProblemKind.POT1D.value,
    show_default=True,
)
@click.option(
    "--betas", callback=_float_list, default="10,20,40", show_default=True
)
@click.option(
    "--deltas",
    callback=_float_list,
    default="0.0005,0.001,0.005,0.01",
    show_default=True,
)
@OPTION_CONFIG
@OPTION_SEED
@OPTION_METHOD
@OPTION_OUT
@OPTION_PARALLEL
@override_options
@click.pass_context
def sweep(
    ctx, problem, betas, deltas, config_path, seed, method, out, parallel, **overrides
):
    """Grid of experiments over beta and the noise level"""
    overrides = {k: v for k, v in overrides.items() if k not in ("beta", "noise_level")}
    base = load_spec(
        ctx,
        ProblemKind(problem),
        config_path=config_path,
        seed=seed,
        method=method,
        out=out,
        parallel=parallel,
        overrides=overrides,
    )
    mapping = base.as_mapping()
    results = []
    for beta in betas:
        for delta in deltas:
            cell = dict(
                mapping,
                beta=beta,
                noise_level=delta,
                output_dir=base.output_dir / f"beta={beta:g}_delta={delta:g}",
            )
            spec = load_spec(
                ctx,
                base.problem,
                config_path=None,
                seed=None,
                method=None,
                out=None,
                parallel=None,
                overrides={k: v for k, v in cell.items() if k != "problem"},
            )
            click.echo(f"beta={beta:g} delta={delta:g}")
            result = run_spec(spec)
            echo_report(result)
            results.append(result)
    report.write_sweep(base.output_dir / "sweep.csv", results)
    click.echo(f"Sweep table written to {base.output_dir / 'sweep.csv'}")
    failed = any(result.failed for result in results)
    ctx.exit(EXIT_SOLVER_FAILURE if failed else EXIT_OK)


if __name__ == "__main__":
    workflow(obj={})
