"""
Main command-line application

    simulate --config F --seed N --policy P --out D
    sweep    --plan F --out D [--resume] [--jobs K]
    inspect  --run D

Progress goes to stderr through logging; every result goes to files.
Exit codes: 0 success, 1 run failure, 2 configuration error.
"""
import logging
import sys
from pathlib import Path

import click

from app.config.scenario import load_config, load_plan, load_plan_config
from app.config.settings import settings
from app.models.scenario import ScenarioConfig
from app.services import metrics_service
from app.services.simulation_service import simulate as run_simulation
from app.services.sweep_service import sweep as run_sweep
from app.utils.errors import ConfigError, LabError

logger = logging.getLogger("app")

EXIT_RUN_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def configure_logging(level: str) -> None:
    logging.basicConfig(level=level, format=settings.LOG_FORMAT, stream=sys.stderr, force=True)


def _fail(exc: Exception) -> None:
    if isinstance(exc, ConfigError):
        logger.error("❌ Configuration error: %s", exc)
        sys.exit(EXIT_CONFIG_ERROR)
    logger.error("❌ %s: %s", type(exc).__name__, exc)
    sys.exit(EXIT_RUN_FAILURE)


@click.group()
@click.version_option(settings.VERSION, prog_name=settings.APP_NAME)
@click.option("--log-level", default=settings.LOG_LEVEL, show_default=True,
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
def cli(log_level: str):
    """TH-GCN vs max-SINR vehicular handover lab."""
    configure_logging(log_level.upper())


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Scenario YAML; built-in defaults when omitted.")
@click.option("--seed", type=int, default=None, help="Overrides the scenario seed.")
@click.option("--policy", type=click.Choice(["th_gcn", "max_sinr"]), default=None,
              help="Overrides the scenario policy.")
@click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None,
              help=f"Output root (default {settings.OUTPUT_DIR}).")
@click.option("--init-params", type=click.Path(dir_okay=False, exists=True), default=None,
              help="Start TH-GCN from a saved parameter file.")
def simulate(config_path, seed, policy, output_dir, init_params):
    """Run one simulation and write its traces and report."""
    try:
        config = load_config(config_path) if config_path else ScenarioConfig()
        result = run_simulation(config, seed=seed, policy=policy, output_dir=output_dir,
                                init_params=init_params)
    except (LabError, OSError, FloatingPointError) as exc:
        _fail(exc)
    else:
        logger.info("📁 Outputs in %s", result.run_dir)


@cli.command()
@click.option("--plan", "plan_path", type=click.Path(dir_okay=False), required=True, help="Sweep plan YAML.")
@click.option("--out", "output_dir", type=click.Path(file_okay=False), default=None,
              help="Output root; overrides the plan's output_dir.")
@click.option("--resume", is_flag=True, help="Skip runs that already have a report.csv.")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True,
              help="Runs executed in parallel.")
def sweep(plan_path, output_dir, resume, jobs):
    """Run densities × seeds × policies and aggregate."""
    try:
        plan = load_plan(plan_path)
        config = load_plan_config(plan)
        result = run_sweep(plan, config, output_dir=output_dir, resume=resume, jobs=jobs)
    except (LabError, OSError) as exc:
        _fail(exc)
    if result.failures:
        logger.error("❌ %d of %d runs failed", len(result.failures), len(result.outcomes))
        sys.exit(EXIT_RUN_FAILURE)
    if result.summary_path is not None:
        logger.info("📁 Summary in %s", result.summary_path)


@cli.command()
@click.option("--run", "run_path", type=click.Path(exists=True, file_okay=False), required=True,
              help="A run directory holding report.csv.")
def inspect(run_path):
    """Pretty-print a run's report."""
    try:
        report = metrics_service.read_report(Path(run_path) / "report.csv")
    except (OSError, ValueError) as exc:
        _fail(exc)
    data = report.model_dump()
    width = max(len(k) for k in data)
    for key, value in data.items():
        if isinstance(value, float):
            value = f"{value:.6g}"
        click.echo(f"{key:<{width}}  {value}")


if __name__ == "__main__":
    cli()
