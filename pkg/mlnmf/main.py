#!/usr/bin/env python3

import logging
import os
import sys
from typing import Callable, Optional

import click

from .commands import bench as bench_command
from .commands import cost as cost_command
from .commands import factorize as factorize_command
from .commands import smoothing as smoothing_command
from .commands import synth as synth_command
from .commands import transfer_check as transfer_check_command
from .common import CycleKind, SolverKind
from .datasets import DATA_FORMATS
from .errors import MlnmfError, exit_code_for

__all__ = ["cli", "configure_logging"]

U64_MAX = 2**64 - 1


def configure_logging(log_file: str = "mlnmf.log", verbose: bool = False) -> None:
    """Configure logging to the console and, optionally, a file.

    The log level is determined from the configuration file ([logger]
    verbosity) and forced to DEBUG by --verbose. Logs go to stderr, and also to
    <logger.path>/<log_file> when [logger] path is set.

    Logs from chatty third-party modules (numexpr, matplotlib) are filtered
    out unless in debug mode.
    """
    from .config import get_logger_path, get_logger_verbosity

    log_level_str = get_logger_verbosity()

    # Map string log level to logging constants
    log_level_map = {
        "DEBUG": logging.DEBUG,
        "INFO": logging.INFO,
        "WARNING": logging.WARNING,
        "ERROR": logging.ERROR,
        "CRITICAL": logging.CRITICAL,
    }

    # Convert string to logging level, default to INFO if invalid
    log_level = log_level_map.get(log_level_str.upper(), logging.INFO)

    debug_mode = verbose
    if verbose:
        log_level = logging.DEBUG

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    # Clear any existing handlers
    if root_logger.hasHandlers():
        root_logger.handlers.clear()

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    class ModuleFilter(logging.Filter):
        def filter(self, record: logging.LogRecord) -> bool:
            if debug_mode:
                return True
            return not record.name.startswith(("numexpr", "matplotlib"))

    module_filter = ModuleFilter()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    console_handler.addFilter(module_filter)
    root_logger.addHandler(console_handler)

    log_dir = get_logger_path()
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        log_path = os.path.join(log_dir, log_file)
        file_handler = logging.FileHandler(log_path)
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        file_handler.addFilter(module_filter)
        root_logger.addHandler(file_handler)
        logging.debug(f"Logging configured. Log file: {log_path}")

    logging.debug(f"Log level set to: {logging.getLevelName(log_level)}")


def _run(action: Callable[[], str]) -> None:
    """Run a command body, echo its report, and turn failures into exit codes."""
    try:
        output = action()
    except (MlnmfError, OSError, ValueError) as e:
        logging.debug("Command failed", exc_info=True)
        click.echo(f"Error: {e}", err=True)
        sys.exit(exit_code_for(e))
    click.echo(output, nl=False)


def _data_options(f: Callable[..., None]) -> Callable[..., None]:
    f = click.option(
        "--grid",
        default=None,
        help="Image size HxW for CSV data (rows must be column-vectorized pixels)",
    )(f)
    f = click.option(
        "--format",
        "fmt",
        type=click.Choice(DATA_FORMATS),
        default="pgm-dir",
        show_default=True,
        help="Input format",
    )(f)
    f = click.option(
        "--data",
        required=True,
        type=click.Path(exists=True),
        help="PGM directory or CSV file",
    )(f)
    return f


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False),
    default=None,
    help="TOML configuration file (default: ./mlnmf.toml if present)",
)
@click.option("--verbose", "-v", is_flag=True, help="Log at DEBUG level")
def cli(config_path: Optional[str], verbose: bool) -> None:
    """mlnmf: multilevel nonnegative matrix factorization for image data."""
    from .config import set_config_path

    set_config_path(config_path)
    try:
        configure_logging(verbose=verbose)
    except (MlnmfError, OSError) as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(exit_code_for(e))


@cli.command()
@_data_options
@click.option(
    "--algo", type=click.Choice([k.value for k in SolverKind]), required=True
)
@click.option(
    "--cycle",
    type=click.Choice([k.value for k in CycleKind]),
    default="none",
    show_default=True,
)
@click.option("--levels", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--rank", type=click.IntRange(min=1), required=True)
@click.option("--budget", required=True, help="work:<units> or time:<seconds>")
@click.option("--seed", type=click.IntRange(0, U64_MAX), default=0, show_default=True)
@click.option(
    "--trace-every", type=click.IntRange(min=1), default=1, show_default=True
)
@click.option("--out", default="mlnmf", show_default=True, help="Output prefix")
@click.option("--dry-run", is_flag=True, help="Print the budget schedule and exit")
@click.option(
    "--s-r",
    "s_r",
    type=click.FloatRange(min=1),
    default=None,
    help="Active-set exchanges per NNLS solve for ANLS work charges (default 2r)",
)
def factorize(
    data: str,
    fmt: str,
    grid: Optional[str],
    algo: str,
    cycle: str,
    levels: int,
    rank: int,
    budget: str,
    seed: int,
    trace_every: int,
    out: str,
    dry_run: bool,
    s_r: Optional[float],
) -> None:
    """Factorize a dataset with one algorithm, cycle and level count.

    Writes <out>.trace.csv, <out>.V.csv, <out>.W.csv and, for image data,
    <out>.basis/*.pgm.
    """
    _run(
        lambda: factorize_command(
            data,
            fmt,
            algo,
            cycle,
            levels,
            rank,
            budget,
            seed,
            trace_every,
            out,
            grid=grid,
            dry_run=dry_run,
            s_r=s_r,
        )
    )


@cli.command()
@_data_options
@click.option("--algos", default="mu", show_default=True, help="e.g. anls,mu,hals")
@click.option("--cycles", default="none,fmg", show_default=True, help="e.g. none,ni,vc,fmg")
@click.option("--levels", default="1,3", show_default=True, help="e.g. 1,2,3")
@click.option("--rank", type=click.IntRange(min=1), required=True)
@click.option("--runs", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--budget", required=True, help="work:<units> or time:<seconds>")
@click.option("--seed", type=click.IntRange(0, U64_MAX), default=0, show_default=True)
@click.option("--out", default="bench", show_default=True, help="Output prefix")
@click.option(
    "--workers",
    type=click.IntRange(min=1),
    default=None,
    help="Worker threads (default: [bench] workers)",
)
def bench(
    data: str,
    fmt: str,
    grid: Optional[str],
    algos: str,
    cycles: str,
    levels: str,
    rank: int,
    runs: int,
    budget: str,
    seed: int,
    out: str,
    workers: Optional[int],
) -> None:
    """Run every configuration over seeds seed..seed+runs-1 and summarize.

    Writes <out>.summary.csv and <out>.summary.txt.
    """
    _run(
        lambda: bench_command(
            data,
            fmt,
            algos,
            cycles,
            levels,
            rank,
            runs,
            budget,
            seed,
            out,
            grid=grid,
            workers=workers,
        )
    )


@cli.command("transfer-check")
@_data_options
@click.option("--levels", type=click.IntRange(min=1), required=True)
@click.option(
    "--rank",
    type=click.IntRange(min=1),
    default=None,
    help="Also factorize with MU and report s_V of the basis",
)
@click.option("--iterations", type=click.IntRange(min=0), default=50, show_default=True)
@click.option("--seed", type=click.IntRange(0, U64_MAX), default=0, show_default=True)
def transfer_check(
    data: str,
    fmt: str,
    grid: Optional[str],
    levels: int,
    rank: Optional[int],
    iterations: int,
    seed: int,
) -> None:
    """Print s_M per level and the transfer operators' row-sum diagnostics."""
    _run(
        lambda: transfer_check_command(
            data, fmt, levels, grid=grid, rank=rank, iterations=iterations, seed=seed
        )
    )


@cli.command()
@click.option("--height", type=click.IntRange(min=1), required=True)
@click.option("--width", type=click.IntRange(min=1), required=True)
@click.option("--n", "n", type=click.IntRange(min=1), required=True)
@click.option("--blobs", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--seed", type=click.IntRange(0, U64_MAX), default=0, show_default=True)
@click.option("--out", required=True, help="Output directory")
def synth(height: int, width: int, n: int, blobs: int, seed: int, out: str) -> None:
    """Write a synthetic smooth-image dataset as PGM files."""
    _run(lambda: synth_command(height, width, n, blobs, seed, out))


@cli.command()
@_data_options
@click.option(
    "--algo", type=click.Choice([k.value for k in SolverKind]), required=True
)
@click.option("--levels", type=click.IntRange(min=1), required=True)
@click.option("--rank", type=click.IntRange(min=1), required=True)
@click.option("--iterations", type=click.IntRange(min=0), required=True)
@click.option("--seed", type=click.IntRange(0, U64_MAX), default=0, show_default=True)
@click.option("--column", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--trace-every", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--out", required=True, help="Output directory")
def smoothing(
    data: str,
    fmt: str,
    grid: Optional[str],
    algo: str,
    levels: int,
    rank: int,
    iterations: int,
    seed: int,
    column: int,
    trace_every: int,
    out: str,
) -> None:
    """Iterate independently on every level and compare on the finest grid."""
    _run(
        lambda: smoothing_command(
            data,
            fmt,
            algo,
            levels,
            rank,
            iterations,
            seed,
            column,
            out,
            grid=grid,
            trace_every=trace_every,
        )
    )


@cli.command()
@click.option("--m", "m", type=click.IntRange(min=1), required=True)
@click.option("--n", "n", type=click.IntRange(min=1), required=True)
@click.option("--rank", type=click.IntRange(min=1), required=True)
@click.option("--s-r", "s_r", type=float, default=None, help="Default: 2r")
@click.option("--coarse-m", type=float, default=None, help="Default: m/4")
def cost(
    m: int, n: int, rank: int, s_r: Optional[float], coarse_m: Optional[float]
) -> None:
    """Print the model flop table, reduction factors and regime."""
    _run(lambda: cost_command(m, n, rank, s_r=s_r, coarse_m=coarse_m))
