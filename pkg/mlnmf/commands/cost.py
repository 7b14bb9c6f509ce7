#!/usr/bin/env python3

from typing import List, Optional

from ..common import SolverKind
from ..cost_model import (
    G_OF_R_MAX_RANK,
    CostParams,
    classify_regime,
    cost_table,
    g_of_r,
    reduction_factor,
)

__all__ = ["cost"]


def cost(
    m: int,
    n: int,
    rank: int,
    s_r: Optional[float] = None,
    coarse_m: Optional[float] = None,
) -> str:
    """Print the per-update model flop table, reduction factors and regime.

    The coarse row count defaults to m / 4, one coarsening of an image grid.
    """
    params = CostParams(m=m, n=n, r=rank, s_r=s_r)
    m_prime = m / 4 if coarse_m is None else coarse_m

    rows = [("update", "ANLS (model flops)", "MU/HALS (model flops)")]
    for row in cost_table(params):
        rows.append((row.update, f"{row.anls:.6g}", f"{row.mu_hals:.6g}"))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]

    lines: List[str] = [f"m={m} n={n} r={rank} s(r)={params.steps:g}"]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    lines.append(
        f"reduction factor for m'={m_prime:g}: "
        f"MU/HALS {reduction_factor(params, m_prime, SolverKind.MU):.4f}, "
        f"ANLS {reduction_factor(params, m_prime, SolverKind.ANLS):.4f}"
    )
    if rank <= G_OF_R_MAX_RANK:
        lines.append(f"g(r) = {g_of_r(rank)}")
    lines.append(f"regime: {classify_regime(params).value}")
    return "\n".join(lines) + "\n"
