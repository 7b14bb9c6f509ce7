#!/usr/bin/env python3

from pathlib import Path
from typing import List, Optional

from ..bench import BenchConfig, render_summary, run_bench, save_summary_csv
from ..common import CycleKind, SolverKind, parse_budget
from ..datasets import load_dataset
from ..errors import InvalidArgumentError

__all__ = ["bench", "split_list"]


def split_list(text: str) -> List[str]:
    """Split a comma-separated option value, dropping empty items."""
    return [item.strip() for item in text.split(",") if item.strip()]


def _parse_levels(text: str) -> List[int]:
    levels: List[int] = []
    for item in split_list(text):
        try:
            levels.append(int(item))
        except ValueError:
            raise InvalidArgumentError(f"invalid level count {item!r}") from None
    return levels


def bench(
    data: str,
    fmt: str,
    algos: str,
    cycles: str,
    levels: str,
    rank: int,
    runs: int,
    budget: str,
    seed: int,
    out: str,
    grid: Optional[str] = None,
    workers: Optional[int] = None,
) -> str:
    """Benchmark every (algorithm, cycle, levels) combination over `runs` seeds.

    Writes <out>.summary.csv and <out>.summary.txt.

    Returns:
        The rendered summary table
    """
    cfg = BenchConfig(
        algorithms=tuple(SolverKind.parse(a) for a in split_list(algos)),
        cycles=tuple(CycleKind.parse(c) for c in split_list(cycles)),
        level_counts=tuple(_parse_levels(levels)),
        rank=rank,
        runs=runs,
        budget=parse_budget(budget),
        base_seed=seed,
    )
    dataset = load_dataset(data, fmt, grid)
    summary = run_bench(dataset, cfg, workers=workers)

    prefix = Path(out)
    if prefix.parent != Path(""):
        prefix.parent.mkdir(parents=True, exist_ok=True)
    text = render_summary(summary)
    save_summary_csv(summary, f"{prefix}.summary.csv")
    Path(f"{prefix}.summary.txt").write_text(text)
    return text
