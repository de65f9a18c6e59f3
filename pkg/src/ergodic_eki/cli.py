"""
Command line interface for ergodic-eki.

    ergodic-eki run configs/l63_case_i_sde.toml --smoke
    ergodic-eki simulate configs/l96_case_a.toml --out results/l96_truth
    ergodic-eki stats series.csv spec.toml --dt 1.0
"""

import json
import logging
import sys

import click

from .core.config import EXIT_CODES, STATISTICS_DEFAULTS
from .core.data_manager import DataManager, ingest_timeseries
from .core.errors import ConfigError, DataFileError, ErgodicEkiError
from .core.experiment_config import STATISTICS_SCHEMA, load_config, load_raw, validate
from .core.models import DataVector, StatisticsSpec
from .core.observables import assemble_data, estimate_gamma
from .core.runner import run_experiment, simulate_only

logger = logging.getLogger("ergodic_eki")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def exit_code_for(error: Exception) -> int:
    if isinstance(error, ConfigError):
        return EXIT_CODES["config"]
    if isinstance(error, DataFileError):
        return EXIT_CODES["data"]
    return EXIT_CODES["solver"]


def _guarded(action):
    """Run a command body, turning package errors into exit codes."""
    try:
        action()
    except ErgodicEkiError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        sys.exit(exit_code_for(exc))


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
def cli(verbose):
    """Calibrate SDE models to ergodic statistics with ensemble Kalman inversion."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT)


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", "output_dir", default=None, help="Result bundle directory.")
@click.option("--smoke", is_flag=True, help="Apply the config's [smoke] settings.")
@click.option("--with-data", is_flag=True, help="Use the user-supplied data file.")
@click.option("--progress/--no-progress", default=True, help="Show the generation progress bar.")
def run(config_path, seed, output_dir, smoke, with_data, progress):
    """Run a full experiment and write its result bundle."""
    def action():
        config = load_config(config_path, smoke=smoke, seed=seed, output_dir=output_dir)
        bundle = run_experiment(config, with_data=with_data, progress=progress)
        summary = bundle.summary
        click.echo(
            f"{config.name}: misfit {summary['misfit_initial']:.4g} -> "
            f"{summary['misfit_final']:.4g}, bundle in {bundle.output_dir}"
        )
    _guarded(action)


@cli.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--out", "output_dir", default=None)
@click.option("--smoke", is_flag=True)
@click.option("--with-data", is_flag=True)
def simulate(config_path, seed, output_dir, smoke, with_data):
    """Generate (or ingest) the data only: observation.json and truth files."""
    def action():
        config = load_config(config_path, smoke=smoke, seed=seed, output_dir=output_dir)
        y = simulate_only(config, with_data=with_data, output_dir=config.output_dir)
        click.echo(f"{config.name}: data vector of dimension {y.dimension}")
    _guarded(action)


@cli.command()
@click.argument("csv_path", type=click.Path(dir_okay=False))
@click.argument("spec_path", type=click.Path(dir_okay=False))
@click.option("--dt", "sampling_interval", type=float, required=True, help="Sampling interval of the series.")
@click.option("--column", default="0", help="Header name or 0-based column index.")
@click.option("--remove-mean", is_flag=True)
@click.option("--batches", type=int, default=STATISTICS_DEFAULTS["gamma_batches"], help="Batches for Gamma.")
@click.option("--out", "output_path", default=None, help="Write the data vector JSON here.")
def stats(csv_path, spec_path, sampling_interval, column, remove_mean, batches, output_path):
    """Statistics of a time series: the data vector and its batch-means Gamma."""
    def action():
        raw = load_raw(spec_path)
        table = raw.get("statistics", raw)
        validate(table, STATISTICS_SCHEMA)
        try:
            spec = StatisticsSpec.from_dict(table)
        except ValueError as exc:
            raise ConfigError("statistics", str(exc)) from exc
        key = int(column) if column.isdigit() else column
        traj = ingest_timeseries(csv_path, key, sampling_interval, remove_mean)
        y = assemble_data(traj, spec)
        result = DataVector(y.values, estimate_gamma(traj, spec, batches), y.labels)
        if output_path:
            DataManager.save_json_file(output_path, result.to_dict())
        click.echo(json.dumps(dict(zip(result.labels, result.values.tolist())), indent=2))
    _guarded(action)


def main(argv=None):
    """Console-script entry point."""
    cli.main(args=argv, prog_name="ergodic-eki")


if __name__ == "__main__":
    main()
