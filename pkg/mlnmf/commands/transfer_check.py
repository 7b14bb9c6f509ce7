#!/usr/bin/env python3

from typing import List, Optional

from ..common import Budget, BudgetMode, SolverKind
from ..datasets import load_dataset
from ..errors import UnsupportedOperationError
from ..matrix import NonnegMatrix, random_init
from ..solvers import run_solver
from ..transfer import build_hierarchy, factor_smoothness, operator_diagnostics, smoothness

__all__ = ["transfer_check"]


def transfer_check(
    data: str,
    fmt: str,
    levels: int,
    grid: Optional[str] = None,
    rank: Optional[int] = None,
    iterations: int = 50,
    seed: int = 0,
) -> str:
    """Report s_M per level pair and the transfer operators' row-sum diagnostics.

    With `rank`, a short MU factorization of the finest data also reports the
    smoothness s_V of its basis at every level.

    Raises:
        UnsupportedOperationError: If the dataset has no grid
    """
    dataset = load_dataset(data, fmt, grid)
    if dataset.grid is None:
        raise UnsupportedOperationError(
            "transfer-check needs grid metadata (use --grid HxW for CSV data)"
        )
    h = build_hierarchy(dataset.matrix, dataset.grid, levels)

    v: Optional[NonnegMatrix] = None
    if rank is not None:
        v0, w0 = random_init(dataset.matrix.rows, dataset.matrix.cols, rank, seed)
        v, _, _ = run_solver(
            dataset.matrix,
            v0,
            w0,
            SolverKind.MU,
            Budget(BudgetMode.WORK, iterations),
            trace_every=max(1, iterations),
        )

    lines: List[str] = [f"{dataset.name}: {h.num_levels} level(s)"]
    for index, g in enumerate(h.levels):
        lines.append(f"level {index}: {g} ({g.size} pixels)")
    for index in range(h.num_levels - 1):
        r_op = h.restrictions[index]
        p_op = h.prolongations[index]
        s_m = smoothness(h.data(index), r_op, p_op)
        r_min, r_dev = operator_diagnostics(r_op)
        p_min, p_dev = operator_diagnostics(p_op)
        lines.append(
            f"levels {index}->{index + 1}: s_M = {s_m:.6g}; "
            f"R min weight {r_min:.4g}, max |row sum - 1| {r_dev:.3g}; "
            f"P min weight {p_min:.4g}, max |row sum - 1| {p_dev:.3g}"
        )
        if v is not None:
            lines.append(
                f"levels {index}->{index + 1}: s_V = "
                f"{factor_smoothness(v, r_op, p_op):.6g} (rank {rank})"
            )
            v = h.restrict_from(index, v)
    return "\n".join(lines) + "\n"
