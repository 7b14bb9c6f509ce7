#!/usr/bin/env python3

import logging
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from ..common import METRIC_LABEL, BudgetMode, CycleKind, SolverKind, parse_budget
from ..config import get_solver_settings
from ..cost_model import CostParams, estimate_s_r, iteration_cost
from ..datasets import load_dataset, save_matrix_csv
from ..matrix import relative_error
from ..multilevel import (
    Schedule,
    check_configuration,
    iterations_per_level,
    level_costs,
    plan_schedule,
    run_configuration,
)
from ..reports import save_basis_mosaic, save_trace_csv
from ..transfer import ImageGrid, coarsen_grid

__all__ = ["factorize", "dry_run_report"]


def _level_rows(grid: Optional[ImageGrid], rows: int, levels: int) -> List[int]:
    if grid is None:
        return [rows]
    sizes = [grid.size]
    g = grid
    for _ in range(levels - 1):
        g = coarsen_grid(g)
        sizes.append(g.size)
    return sizes


def dry_run_report(
    schedule: Schedule,
    kind: SolverKind,
    rows: List[int],
    n: int,
    rank: int,
    s_r: Optional[float] = None,
) -> str:
    """The allocation log plus nominal iterations per level (work budgets only)."""
    lines = [schedule.render()]
    if schedule.budget.mode is BudgetMode.WORK:
        costs = level_costs(kind, rows, n, rank, s_r)
        counts = iterations_per_level(schedule, costs)
        for level, (count, cost) in enumerate(zip(counts, costs)):
            lines.append(
                f"level {level}: {rows[level]} pixels, {count} iterations "
                f"at {cost:.4g} work units each"
            )
    return "\n".join(lines) + "\n"


def _anls_report(counts: List[int], m: int, n: int, rank: int) -> str:
    s_r = estimate_s_r(counts, rank)
    flops = iteration_cost(SolverKind.ANLS, CostParams(m=m, n=n, r=rank, s_r=s_r))
    return (
        f"measured s(r) = {s_r:.4g} over {len(counts)} NNLS solves, "
        f"{flops:.6g} model flops per iteration\n"
    )


def factorize(
    data: str,
    fmt: str,
    algo: str,
    cycle: str,
    levels: int,
    rank: int,
    budget: str,
    seed: int,
    trace_every: int,
    out: str,
    grid: Optional[str] = None,
    dry_run: bool = False,
    s_r: Optional[float] = None,
) -> str:
    """Factorize one dataset with one configuration and write the results.

    Writes <out>.trace.csv, <out>.V.csv, <out>.W.csv and, when the dataset has
    a grid, basis images under <out>.basis/.

    s_r is the assumed number of active-set exchanges per NNLS solve used to
    charge ANLS iterations on coarse levels. ANLS runs report the measured
    value.

    Returns:
        A short report, or the schedule when dry_run is set
    """
    kind = SolverKind.parse(algo)
    cycle_kind = CycleKind.parse(cycle)
    parsed_budget = parse_budget(budget)
    dataset = load_dataset(data, fmt, grid)
    m = dataset.matrix

    if dry_run:
        check_configuration(dataset.grid, levels, cycle_kind)
        rows = _level_rows(dataset.grid, m.rows, levels)
        schedule = plan_schedule(cycle_kind, levels, parsed_budget)
        return dry_run_report(schedule, kind, rows, m.cols, rank, s_r)

    v, w, trace = run_configuration(
        m,
        dataset.grid,
        levels,
        kind,
        cycle_kind,
        rank,
        seed,
        parsed_budget,
        trace_every,
        settings=replace(get_solver_settings(), anls_steps=s_r),
    )

    prefix = Path(out)
    if prefix.parent != Path(""):
        prefix.parent.mkdir(parents=True, exist_ok=True)
    written = [
        Path(f"{prefix}.trace.csv"),
        Path(f"{prefix}.V.csv"),
        Path(f"{prefix}.W.csv"),
    ]
    save_trace_csv(trace, written[0])
    save_matrix_csv(v, written[1])
    save_matrix_csv(w, written[2])
    if dataset.grid is not None:
        basis_dir = Path(f"{prefix}.basis")
        save_basis_mosaic(v, dataset.grid, basis_dir)
        written.append(basis_dir)
    logging.info(f"Wrote {', '.join(str(p) for p in written)}")

    report = (
        f"{kind.value}/{cycle_kind.label}/L={levels} r={rank} seed={seed}: "
        f"{METRIC_LABEL} = {trace.final_error:.6g} "
        f"(relative {relative_error(m, v, w):.4g}), "
        f"work {trace.total_work:.6g}, {trace.total_iterations} iterations\n"
    )
    if kind is SolverKind.ANLS:
        report += _anls_report(trace.nnls_iteration_counts, m.rows, m.cols, rank)
    return report
