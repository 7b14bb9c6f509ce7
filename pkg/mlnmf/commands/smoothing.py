#!/usr/bin/env python3

from pathlib import Path
from typing import List, Optional

from ..common import METRIC_LABEL, SolverKind
from ..datasets import load_dataset
from ..errors import UnsupportedOperationError
from ..matrix import random_init
from ..multilevel import level_comparison
from ..reports import save_error_heatmap, save_trace_csv
from ..solvers import RunTrace
from ..transfer import build_hierarchy

__all__ = ["smoothing"]


def smoothing(
    data: str,
    fmt: str,
    algo: str,
    levels: int,
    rank: int,
    iterations: int,
    seed: int,
    column: int,
    out: str,
    grid: Optional[str] = None,
    trace_every: int = 1,
) -> str:
    """Run the same iterations on every level and compare them on the finest grid.

    Writes <out>/level_<l>.heatmap.pgm (error of image `column` after
    prolongation) for every level and <out>/levels.trace.csv.

    Raises:
        UnsupportedOperationError: If the dataset has no grid
    """
    kind = SolverKind.parse(algo)
    dataset = load_dataset(data, fmt, grid)
    if dataset.grid is None:
        raise UnsupportedOperationError(
            "smoothing needs grid metadata (use --grid HxW for CSV data)"
        )
    h = build_hierarchy(dataset.matrix, dataset.grid, levels)
    v0, w0 = random_init(dataset.matrix.rows, dataset.matrix.cols, rank, seed)
    results = level_comparison(h, v0, w0, kind, iterations, trace_every)

    directory = Path(out)
    directory.mkdir(parents=True, exist_ok=True)
    combined = RunTrace()
    lines: List[str] = [f"{METRIC_LABEL} on the finest grid after {iterations} iterations"]
    for result in results:
        save_error_heatmap(
            h.data(0),
            result.v_fine,
            result.w,
            dataset.grid,
            column,
            directory / f"level_{result.level}.heatmap.pgm",
        )
        combined.extend(result.trace)
        lines.append(
            f"level {result.level} ({h.levels[result.level]}): "
            f"{result.trace.final_error:.6g} for {result.trace.total_work:.4g} work units"
        )
    save_trace_csv(combined, directory / "levels.trace.csv")
    return "\n".join(lines) + "\n"
