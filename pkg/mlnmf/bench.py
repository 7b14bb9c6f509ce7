#!/usr/bin/env python3

"""Multi-seed benchmark harness.

Every (algorithm, cycle, levels) configuration runs with seeds base_seed,
base_seed + 1, ..., so all configurations start from the same random factors.
Runs are independent and may execute on worker threads; results are reduced
in (algorithm, cycle, levels, run) order, so the summary does not depend on
scheduling.
"""

import logging
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import anyio
import anyio.to_thread
import numpy as np
import pandas as pd

from .common import METRIC_LABEL, Budget, CycleKind, SolverKind
from .config import SolverSettings, get_bench_workers, get_solver_settings
from .datasets import Dataset
from .errors import CannotCoarsenError, InvalidArgumentError
from .multilevel import run_configuration
from .transfer import ImageGrid, coarsen_grid

__all__ = [
    "BenchConfig",
    "Configuration",
    "SkippedConfiguration",
    "SummaryRow",
    "BenchSummary",
    "configurations",
    "run_bench",
    "render_summary",
    "save_summary_csv",
    "SUMMARY_COLUMNS",
]

SUMMARY_COLUMNS = [
    "algorithm",
    "cycle",
    "levels",
    "runs",
    "mean_error",
    "std_error",
    "min_error",
    "max_error",
    "mean_relative_error",
    "mean_work",
]

PathLike = Union[str, Path]


@dataclass(frozen=True)
class BenchConfig:
    algorithms: Tuple[SolverKind, ...]
    cycles: Tuple[CycleKind, ...]
    level_counts: Tuple[int, ...]
    rank: int
    runs: int
    budget: Budget
    base_seed: int = 0
    trace_every: int = 1000

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise InvalidArgumentError(f"runs must be >= 1, got {self.runs}")
        if not self.algorithms or not self.cycles or not self.level_counts:
            raise InvalidArgumentError(
                "at least one algorithm, cycle and level count is required"
            )
        for levels in self.level_counts:
            if levels < 1:
                raise InvalidArgumentError(f"level counts must be >= 1, got {levels}")


class Configuration(NamedTuple):
    algorithm: SolverKind
    cycle: CycleKind
    levels: int


class SkippedConfiguration(NamedTuple):
    algorithm: SolverKind
    cycle: CycleKind
    levels: int
    reason: str


@dataclass(frozen=True)
class SummaryRow:
    algorithm: SolverKind
    cycle: CycleKind
    levels: int
    runs: int
    mean_error: float
    std_error: float  # population standard deviation over runs
    min_error: float
    max_error: float
    mean_relative_error: float
    mean_work: float


@dataclass
class BenchSummary:
    budget: Budget
    runs: int
    rows: List[SummaryRow] = field(default_factory=lambda: [])
    skipped: List[SkippedConfiguration] = field(default_factory=lambda: [])

    def row(
        self, algorithm: SolverKind, cycle: CycleKind, levels: int
    ) -> Optional[SummaryRow]:
        for r in self.rows:
            if (r.algorithm, r.cycle, r.levels) == (algorithm, cycle, levels):
                return r
        return None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                [
                    r.algorithm.value,
                    r.cycle.value,
                    r.levels,
                    r.runs,
                    r.mean_error,
                    r.std_error,
                    r.min_error,
                    r.max_error,
                    r.mean_relative_error,
                    r.mean_work,
                ]
                for r in self.rows
            ],
            columns=SUMMARY_COLUMNS,
        )


def _feasibility(grid: Optional[ImageGrid], levels: int) -> Optional[str]:
    """Reason why `levels` levels cannot be used, or None."""
    if levels == 1:
        return None
    if grid is None:
        return "no grid metadata for a multilevel cycle"
    g = grid
    try:
        for _ in range(levels - 1):
            g = coarsen_grid(g)
    except CannotCoarsenError as e:
        return str(e)
    return None


def configurations(
    cfg: BenchConfig, grid: Optional[ImageGrid]
) -> Tuple[List[Configuration], List[SkippedConfiguration]]:
    """Enumerate the configurations to run, in reporting order.

    The single-level cycle always runs with one level, once per algorithm;
    other cycles run with every requested level count the grid allows.
    """
    runnable: List[Configuration] = []
    skipped: List[SkippedConfiguration] = []
    for algorithm in cfg.algorithms:
        for cycle in cfg.cycles:
            counts: Sequence[int] = (
                (1,) if cycle is CycleKind.SINGLE_LEVEL else cfg.level_counts
            )
            for levels in counts:
                reason = _feasibility(grid, levels)
                if reason is None:
                    runnable.append(Configuration(algorithm, cycle, levels))
                else:
                    logging.warning(
                        f"Skipping {algorithm.value}/{cycle.value}/L={levels}: {reason}"
                    )
                    skipped.append(
                        SkippedConfiguration(algorithm, cycle, levels, reason)
                    )
    return runnable, skipped


def _run_one(
    d: Dataset,
    cfg: BenchConfig,
    conf: Configuration,
    run: int,
    settings: SolverSettings,
) -> Tuple[float, float]:
    seed = cfg.base_seed + run
    _, _, trace = run_configuration(
        d.matrix,
        d.grid,
        conf.levels,
        conf.algorithm,
        conf.cycle,
        cfg.rank,
        seed,
        cfg.budget,
        cfg.trace_every,
        settings=settings,
    )
    logging.info(
        f"{conf.algorithm.value}/{conf.cycle.value}/L={conf.levels} seed {seed}: "
        f"{METRIC_LABEL} = {trace.final_error:.6g}"
    )
    return trace.final_error, trace.total_work


async def _run_all(
    d: Dataset,
    cfg: BenchConfig,
    confs: List[Configuration],
    settings: SolverSettings,
    workers: int,
) -> Dict[Tuple[int, int], Tuple[float, float]]:
    results: Dict[Tuple[int, int], Tuple[float, float]] = {}
    limiter = anyio.CapacityLimiter(workers)

    async def worker(ci: int, run: int) -> None:
        results[(ci, run)] = await anyio.to_thread.run_sync(
            partial(_run_one, d, cfg, confs[ci], run, settings), limiter=limiter
        )

    async with anyio.create_task_group() as tg:
        for ci in range(len(confs)):
            for run in range(cfg.runs):
                tg.start_soon(worker, ci, run)
    return results


def run_bench(
    d: Dataset,
    cfg: BenchConfig,
    workers: Optional[int] = None,
    settings: Optional[SolverSettings] = None,
) -> BenchSummary:
    """Run every configuration `cfg.runs` times and aggregate the final errors.

    Args:
        d: The dataset
        cfg: What to run
        workers: Worker threads, from the configuration if None
        settings: Solver settings, from the configuration if None

    Returns:
        One summary row per configuration plus the skipped ones

    Raises:
        InvalidArgumentError: If the rank does not fit the data
        CapExceededError: If an ANLS run fails
    """
    n_min = min(d.matrix.rows, d.matrix.cols)
    if cfg.rank < 1 or cfg.rank > n_min:
        raise InvalidArgumentError(
            f"rank must satisfy 1 <= r <= min(m, n) = {n_min}, got {cfg.rank}"
        )
    if workers is None:
        workers = get_bench_workers()
    if settings is None:
        settings = get_solver_settings()

    confs, skipped = configurations(cfg, d.grid)
    logging.info(
        f"Benchmark on {d.name}: {len(confs)} configurations x {cfg.runs} runs, "
        f"budget {cfg.budget}, {workers} worker(s)"
    )
    results = anyio.run(_run_all, d, cfg, confs, settings, workers)

    norm_m = float(np.linalg.norm(d.matrix.data))
    records = [
        (conf.algorithm.value, conf.cycle.value, conf.levels, run, *results[(ci, run)])
        for ci, conf in enumerate(confs)
        for run in range(cfg.runs)
    ]
    frame = pd.DataFrame(
        records, columns=["algorithm", "cycle", "levels", "run", "error", "work"]
    )
    frame["relative_error"] = frame["error"] / norm_m if norm_m > 0 else 0.0

    summary = BenchSummary(budget=cfg.budget, runs=cfg.runs, skipped=skipped)
    grouped = frame.groupby(["algorithm", "cycle", "levels"], sort=False)
    for (algorithm, cycle, levels), group in grouped:
        errors = group["error"]
        summary.rows.append(
            SummaryRow(
                algorithm=SolverKind(algorithm),
                cycle=CycleKind(cycle),
                levels=int(levels),
                runs=len(group),
                mean_error=float(errors.mean()),
                std_error=float(errors.std(ddof=0)),
                min_error=float(errors.min()),
                max_error=float(errors.max()),
                mean_relative_error=float(group["relative_error"].mean()),
                mean_work=float(group["work"].mean()),
            )
        )
    return summary


def render_summary(summary: BenchSummary) -> str:
    """Error table with one row per (cycle, levels) and one column per algorithm.

    Cells read `mean +/- std`.
    """
    algorithms: List[SolverKind] = []
    row_keys: List[Tuple[CycleKind, int]] = []
    cells: Dict[Tuple[CycleKind, int, SolverKind], str] = {}
    for r in summary.rows:
        if r.algorithm not in algorithms:
            algorithms.append(r.algorithm)
        if (r.cycle, r.levels) not in row_keys:
            row_keys.append((r.cycle, r.levels))
        cells[(r.cycle, r.levels, r.algorithm)] = (
            f"{r.mean_error:.6g} +/- {r.std_error:.2g}"
        )

    header = ["cycle", "levels", *(a.value.upper() for a in algorithms)]
    table = [header]
    for cycle, levels in row_keys:
        table.append(
            [
                cycle.label,
                str(levels),
                *(cells.get((cycle, levels, a), "-") for a in algorithms),
            ]
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]

    lines = [
        f"{METRIC_LABEL}: mean +/- std over {summary.runs} run(s), budget {summary.budget}"
    ]
    for row in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    for s in summary.skipped:
        lines.append(
            f"skipped {s.algorithm.value}/{s.cycle.value}/L={s.levels}: {s.reason}"
        )
    return "\n".join(lines) + "\n"


def save_summary_csv(summary: BenchSummary, path: PathLike) -> None:
    summary.to_frame().to_csv(path, index=False, lineterminator="\n")
