#!/usr/bin/env python3

"""Model flop counts per iteration for ANLS, MU and HALS.

MU and HALS use the exact count 2m(nr + r^2) + 2nr^2. ANLS realizes its big-O
estimate mnr + (m + n) s(r) r^3 with unit constants, so its numbers are a
model, not a measurement. Reports label all of them "model flops".
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence

from .common import SolverKind
from .errors import InvalidArgumentError

__all__ = [
    "G_OF_R_MAX_RANK",
    "CostParams",
    "Regime",
    "CostRow",
    "mu_flops",
    "anls_flops",
    "mu_iteration_cost",
    "anls_iteration_cost",
    "iteration_cost",
    "level_cost_ratio",
    "g_of_r",
    "reduction_factor",
    "classify_regime",
    "estimate_s_r",
    "cost_table",
]

G_OF_R_MAX_RANK = 30


@dataclass(frozen=True)
class CostParams:
    """Problem dimensions for the cost model.

    s_r is the assumed number of active-set exchanges per NNLS solve; it
    defaults to 2r when not given.
    """

    m: int
    n: int
    r: int
    s_r: Optional[float] = None

    def __post_init__(self) -> None:
        if self.r < 1 or self.m < self.r or self.n < self.r:
            raise InvalidArgumentError(
                f"cost model needs m >= r and n >= r >= 1, got m={self.m}, "
                f"n={self.n}, r={self.r}"
            )
        if self.s_r is None:
            object.__setattr__(self, "s_r", float(2 * self.r))
        elif self.s_r < 1:
            raise InvalidArgumentError(f"s_r must be >= 1, got {self.s_r}")

    @property
    def steps(self) -> float:
        assert self.s_r is not None
        return self.s_r

    def with_rows(self, m: int) -> "CostParams":
        return replace(self, m=m)


class Regime(Enum):
    BENEFICIAL_ALL = "beneficial_all"
    BENEFICIAL_MU_HALS_ONLY = "beneficial_mu_hals_only"


class CostRow(NamedTuple):
    update: str
    anls: float
    mu_hals: float


def mu_flops(m: float, n: float, r: float) -> float:
    """2m(nr + r^2) + 2nr^2 for any nonnegative m (used for coarse levels too)."""
    return 2 * m * (n * r + r * r) + 2 * n * r * r


def anls_flops(m: float, n: float, r: float, s_r: float) -> float:
    """mnr + (m + n) s(r) r^3."""
    return m * n * r + (m + n) * s_r * r**3


def mu_iteration_cost(p: CostParams) -> int:
    """Exact flop count of one MU iteration (both factor updates)."""
    return 2 * p.m * (p.n * p.r + p.r * p.r) + 2 * p.n * p.r * p.r


def anls_iteration_cost(p: CostParams) -> float:
    """Model cost of one ANLS iteration with unit constants."""
    return anls_flops(p.m, p.n, p.r, p.steps)


def iteration_cost(kind: SolverKind, p: CostParams) -> float:
    """Model flops of one fine iteration; HALS shares the MU count."""
    if kind is SolverKind.ANLS:
        return anls_iteration_cost(p)
    return float(mu_iteration_cost(p))


def level_cost_ratio(kind: SolverKind, p: CostParams, m_level: float) -> float:
    """Cost of one iteration on a level with m_level rows, in fine-level units.

    This is the work-unit charge of one step at that level.
    """
    if kind is SolverKind.ANLS:
        return anls_flops(m_level, p.n, p.r, p.steps) / anls_iteration_cost(p)
    return mu_flops(m_level, p.n, p.r) / mu_iteration_cost(p)


def g_of_r(r: int) -> int:
    """Worst-case cost of enumerating every NNLS subsystem: sum_i C(r, i) i^3.

    Raises:
        InvalidArgumentError: If r is outside [1, 30]
    """
    if r < 1 or r > G_OF_R_MAX_RANK:
        raise InvalidArgumentError(f"g(r) is defined for 1 <= r <= 30, got {r}")
    return sum(math.comb(r, i) * i**3 for i in range(1, r + 1))


def reduction_factor(p: CostParams, m_prime: float, kind: SolverKind) -> float:
    """Per-iteration cost ratio between the fine level and a level with m_prime rows.

    Raises:
        InvalidArgumentError: If m_prime > m or m_prime < 0
    """
    if m_prime > p.m or m_prime < 0:
        raise InvalidArgumentError(
            f"coarse row count must be in [0, {p.m}], got {m_prime}"
        )
    return 1.0 / level_cost_ratio(kind, p, m_prime)


def classify_regime(p: CostParams) -> Regime:
    """Whether reducing m pays off for every algorithm or only for MU and HALS."""
    if p.m >= min(p.n, p.steps * p.r * p.r):
        return Regime.BENEFICIAL_ALL
    return Regime.BENEFICIAL_MU_HALS_ONLY


def estimate_s_r(counts: Sequence[int], r: int) -> float:
    """Mean measured exchange count per NNLS solve, or 2r without measurements."""
    if not counts:
        return float(2 * r)
    return max(1.0, sum(counts) / len(counts))


def cost_table(p: CostParams) -> List[CostRow]:
    """Per-update model flops for ANLS and MU/HALS."""
    m, n, r, s = p.m, p.n, p.r, p.steps
    return [
        CostRow(
            "update of V",
            m * n * r + m * s * r**3 + n * r * r,
            m * n * r + (m + n) * r * r,
        ),
        CostRow(
            "update of W",
            m * n * r + n * s * r**3 + m * r * r,
            m * n * r + (m + n) * r * r,
        ),
        CostRow(
            "both updates",
            m * (n * r + s * r**3) + n * s * r**3,
            m * (n * r + r * r) + n * r * r,
        ),
    ]
