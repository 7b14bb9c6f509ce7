#!/usr/bin/env python3

"""Multilevel cycles over a GridHierarchy: nested iteration, V-cycle and full
multigrid.

Hierarchy levels are indexed from 0 (finest). The public cycle functions take
`level`, the number of levels still available below and including the current
one, so level 1 is the coarsest grid of the hierarchy.

Budgets are split by fixed fractions of T at every node of the recursion:

    nested iteration  recurse T/4, solve 3T/4
    V-cycle           solve T/4, recurse T/4, solve T/2
    full multigrid    recurse (full multigrid) T/4, V-cycle 3T/4

In work mode every step is charged its level's cost-model ratio and iterations
are floored on every level. The work lost to flooring is handed to the final
phase of the run, a solve on the starting level, so a cycle never spends more
than T and leaves less than one iteration of it unspent.

With sample_start, descents made before the first solver step keep the coarse
pixels of V (injection) instead of applying the full-weighting restriction.
run_configuration sets it for its random start.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .common import Budget, BudgetMode, CycleKind, SolverKind
from .config import SolverSettings, get_solver_settings
from .cost_model import CostParams, level_cost_ratio
from .errors import InvalidArgumentError, UnsupportedOperationError
from .matrix import MatrixLike, NonnegMatrix, as_array, frobenius_error, random_init
from .solvers import RunTrace, run_solver, step_function
from .transfer import GridHierarchy, ImageGrid, build_hierarchy

__all__ = [
    "Phase",
    "Allocation",
    "Schedule",
    "LevelResult",
    "nested_iteration",
    "v_cycle",
    "full_multigrid",
    "plan_schedule",
    "iterations_per_level",
    "level_costs",
    "check_configuration",
    "run_configuration",
    "level_comparison",
]

# Budget fractions
NI_RECURSE = 0.25
NI_SOLVE = 0.75
VC_PRE_SOLVE = 0.25
VC_RECURSE = 0.25
VC_POST_SOLVE = 0.5
FMG_RECURSE = 0.25
FMG_VCYCLE = 0.75


class Phase(Enum):
    SOLVE = "solve"
    RECURSE = "recurse"
    VCYCLE = "vcycle"


@dataclass(frozen=True)
class Allocation:
    depth: int  # recursion depth, 0 = outermost call
    level: int  # hierarchy index, 0 = finest
    phase: Phase
    allocated: float  # nominal work units or seconds


@dataclass
class Schedule:
    """Ordered log of the nominal allocations made by one cycle."""

    budget: Budget
    allocations: List[Allocation] = field(default_factory=lambda: [])

    def add(self, depth: int, level: int, phase: Phase, allocated: float) -> None:
        self.allocations.append(Allocation(depth, level, phase, allocated))
        logging.debug(
            f"{'  ' * depth}{phase.value} on level {level}: {allocated:g} "
            f"{self.budget.mode.value}"
        )

    def solves(self) -> List[Allocation]:
        return [a for a in self.allocations if a.phase is Phase.SOLVE]

    def total_solved(self) -> float:
        return math.fsum(a.allocated for a in self.solves())

    def per_level(self) -> Dict[int, float]:
        """Sum of solve allocations at each hierarchy index."""
        totals: Dict[int, float] = {}
        for a in self.solves():
            totals[a.level] = totals.get(a.level, 0.0) + a.allocated
        return dict(sorted(totals.items()))

    def render(self) -> str:
        lines = [f"schedule for {self.budget}"]
        for a in self.allocations:
            lines.append(
                f"{'  ' * a.depth}{a.phase.value:<7} level {a.level}  {a.allocated:g}"
            )
        return "\n".join(lines)


def _plan(
    cycle: CycleKind,
    index: int,
    last: int,
    amount: float,
    depth: int,
    schedule: Schedule,
) -> None:
    if index == last or cycle is CycleKind.SINGLE_LEVEL:
        schedule.add(depth, index, Phase.SOLVE, amount)
    elif cycle is CycleKind.NESTED_ITERATION:
        schedule.add(depth, index, Phase.RECURSE, amount * NI_RECURSE)
        _plan(cycle, index + 1, last, amount * NI_RECURSE, depth + 1, schedule)
        schedule.add(depth, index, Phase.SOLVE, amount * NI_SOLVE)
    elif cycle is CycleKind.V_CYCLE:
        schedule.add(depth, index, Phase.SOLVE, amount * VC_PRE_SOLVE)
        schedule.add(depth, index, Phase.RECURSE, amount * VC_RECURSE)
        _plan(cycle, index + 1, last, amount * VC_RECURSE, depth + 1, schedule)
        schedule.add(depth, index, Phase.SOLVE, amount * VC_POST_SOLVE)
    else:
        schedule.add(depth, index, Phase.RECURSE, amount * FMG_RECURSE)
        _plan(cycle, index + 1, last, amount * FMG_RECURSE, depth + 1, schedule)
        schedule.add(depth, index, Phase.VCYCLE, amount * FMG_VCYCLE)
        _plan(
            CycleKind.V_CYCLE, index, last, amount * FMG_VCYCLE, depth + 1, schedule
        )


def plan_schedule(cycle: CycleKind, levels: int, budget: Budget) -> Schedule:
    """Allocation tree of a cycle over `levels` levels, without running anything.

    Solve allocations (the leaves) sum to the budget amount.

    Raises:
        InvalidArgumentError: If levels < 1
    """
    if levels < 1:
        raise InvalidArgumentError(f"number of levels must be >= 1, got {levels}")
    schedule = Schedule(budget)
    _plan(cycle, 0, levels - 1, budget.amount, 0, schedule)
    return schedule


def level_costs(
    kind: SolverKind,
    rows: Sequence[int],
    n: int,
    r: int,
    s_r: Optional[float] = None,
) -> List[float]:
    """Work units charged by one iteration on each level (1.0 on the finest).

    s_r only matters for ANLS; it defaults to 2r.
    """
    params = CostParams(m=rows[0], n=n, r=r, s_r=s_r)
    return [level_cost_ratio(kind, params, m_level) for m_level in rows]


def iterations_per_level(schedule: Schedule, costs: Sequence[float]) -> List[int]:
    """Nominal iteration count at each level for a schedule in work units.

    Each solve allocation runs floor(allocated / cost) iterations.
    """
    counts = [0] * len(costs)
    for a in schedule.solves():
        counts[a.level] += math.floor(a.allocated / costs[a.level] + 1e-9)
    return counts


@dataclass
class _CycleRun:
    """Mutable state threaded through one cycle execution."""

    hierarchy: GridHierarchy
    kind: SolverKind
    mode: BudgetMode
    trace_every: int
    settings: SolverSettings
    costs: List[float]
    schedule: Schedule
    clock_start: float
    total: float  # T
    sample_start: bool = False
    trace: RunTrace = field(default_factory=RunTrace)
    work: float = 0.0
    iterations: int = 0
    started: bool = False  # a solver phase has run

    @property
    def last(self) -> int:
        return self.hierarchy.num_levels - 1

    def solve(
        self, index: int, v: MatrixLike, w: MatrixLike, amount: float
    ) -> Tuple[NonnegMatrix, NonnegMatrix]:
        v_out, w_out, trace = run_solver(
            self.hierarchy.data(index),
            v,
            w,
            self.kind,
            Budget(self.mode, max(0.0, amount)),
            self.trace_every,
            level=index,
            step_cost=self.costs[index],
            work_offset=self.work,
            iteration_offset=self.iterations,
            clock_start=self.clock_start,
            settings=self.settings,
        )
        self.started = True
        self.trace.extend(trace)
        self.work = trace.total_work
        self.iterations = trace.total_iterations
        return v_out, w_out

    def descend(self, index: int, v: MatrixLike) -> NonnegMatrix:
        if self.sample_start and not self.started:
            return self.hierarchy.sample_from(index, v)
        return self.hierarchy.restrict_from(index, v)

    def last_share(self, nominal: float, final: bool) -> float:
        """Budget for the last phase of a node.

        In work mode the final phase of the whole run gets everything not spent
        yet, so the iterations lost to flooring on every level end up there.
        Every other phase gets its nominal share.
        """
        if final and self.mode is BudgetMode.WORK:
            return self.total - self.work
        return nominal

    def run(
        self,
        cycle: CycleKind,
        index: int,
        v: MatrixLike,
        w: MatrixLike,
        amount: float,
        final: bool,
        depth: int,
    ) -> Tuple[NonnegMatrix, NonnegMatrix]:
        h = self.hierarchy
        if index == self.last or cycle is CycleKind.SINGLE_LEVEL:
            self.schedule.add(depth, index, Phase.SOLVE, amount)
            return self.solve(index, v, w, self.last_share(amount, final))

        if cycle is CycleKind.NESTED_ITERATION:
            share = amount * NI_RECURSE
            self.schedule.add(depth, index, Phase.RECURSE, share)
            v_c, w = self.run(
                cycle, index + 1, self.descend(index, v), w, share, False, depth + 1
            )
            v = h.prolong_to(index, v_c)
            nominal = amount * NI_SOLVE
            self.schedule.add(depth, index, Phase.SOLVE, nominal)
            return self.solve(index, v, w, self.last_share(nominal, final))

        if cycle is CycleKind.V_CYCLE:
            share = amount * VC_PRE_SOLVE
            self.schedule.add(depth, index, Phase.SOLVE, share)
            v, w = self.solve(index, v, w, share)
            share = amount * VC_RECURSE
            self.schedule.add(depth, index, Phase.RECURSE, share)
            v_c, w = self.run(
                cycle, index + 1, self.descend(index, v), w, share, False, depth + 1
            )
            v = h.prolong_to(index, v_c)
            nominal = amount * VC_POST_SOLVE
            self.schedule.add(depth, index, Phase.SOLVE, nominal)
            return self.solve(index, v, w, self.last_share(nominal, final))

        share = amount * FMG_RECURSE
        self.schedule.add(depth, index, Phase.RECURSE, share)
        v_c, w = self.run(
            cycle, index + 1, self.descend(index, v), w, share, False, depth + 1
        )
        v = h.prolong_to(index, v_c)
        nominal = amount * FMG_VCYCLE
        self.schedule.add(depth, index, Phase.VCYCLE, nominal)
        return self.run(CycleKind.V_CYCLE, index, v, w, nominal, final, depth + 1)


def _execute(
    cycle: CycleKind,
    h: GridHierarchy,
    level: int,
    v0: MatrixLike,
    w0: MatrixLike,
    kind: SolverKind,
    budget: Budget,
    trace_every: int,
    schedule: Optional[Schedule],
    settings: Optional[SolverSettings],
    sample_start: bool,
) -> Tuple[NonnegMatrix, NonnegMatrix, RunTrace]:
    if level < 1 or level > h.num_levels:
        raise InvalidArgumentError(
            f"level must be in [1, {h.num_levels}] for this hierarchy, got {level}"
        )
    index = h.num_levels - level
    va, wa = as_array(v0), as_array(w0)
    if va.shape[0] != h.level_rows(index):
        raise InvalidArgumentError(
            f"V0 has {va.shape[0]} rows but level {level} has {h.level_rows(index)} "
            "pixels"
        )
    rows = [h.level_rows(i) for i in range(h.num_levels)]
    if settings is None:
        settings = get_solver_settings()
    runner = _CycleRun(
        hierarchy=h,
        kind=kind,
        mode=budget.mode,
        trace_every=trace_every,
        settings=settings,
        costs=level_costs(
            kind, rows, wa.shape[1], wa.shape[0], settings.anls_steps
        ),
        schedule=Schedule(budget) if schedule is None else schedule,
        clock_start=time.perf_counter(),
        total=budget.amount,
        sample_start=sample_start,
    )
    v, w = runner.run(cycle, index, va, wa, budget.amount, True, 0)
    return v, w, runner.trace


def nested_iteration(
    h: GridHierarchy,
    level: int,
    v0: MatrixLike,
    w0: MatrixLike,
    kind: SolverKind,
    budget: Budget,
    trace_every: int = 1,
    *,
    schedule: Optional[Schedule] = None,
    settings: Optional[SolverSettings] = None,
    sample_start: bool = False,
) -> Tuple[NonnegMatrix, NonnegMatrix, RunTrace]:
    """Solve on the coarser levels first (T/4), prolong V, refine (3T/4).

    Args:
        h: The grid hierarchy with cached data
        level: Levels available, counting the current one (1 = coarsest)
        v0: Initial basis on the current level's grid
        w0: Initial coefficients
        kind: Solver applied at every level
        budget: Total budget T
        trace_every: Sampling period in steps
        schedule: Filled with the nominal allocations when given
        settings: Solver floors and tolerances
        sample_start: Inject V0 instead of restricting it on the way down

    Returns:
        (V, W, trace) with samples tagged by level
    """
    return _execute(
        CycleKind.NESTED_ITERATION,
        h,
        level,
        v0,
        w0,
        kind,
        budget,
        trace_every,
        schedule,
        settings,
        sample_start,
    )


def v_cycle(
    h: GridHierarchy,
    level: int,
    v0: MatrixLike,
    w0: MatrixLike,
    kind: SolverKind,
    budget: Budget,
    trace_every: int = 1,
    *,
    schedule: Optional[Schedule] = None,
    settings: Optional[SolverSettings] = None,
    sample_start: bool = False,
) -> Tuple[NonnegMatrix, NonnegMatrix, RunTrace]:
    """Solve T/4, restrict V and recurse with T/4, prolong, solve T/2."""
    return _execute(
        CycleKind.V_CYCLE,
        h,
        level,
        v0,
        w0,
        kind,
        budget,
        trace_every,
        schedule,
        settings,
        sample_start,
    )


def full_multigrid(
    h: GridHierarchy,
    level: int,
    v0: MatrixLike,
    w0: MatrixLike,
    kind: SolverKind,
    budget: Budget,
    trace_every: int = 1,
    *,
    schedule: Optional[Schedule] = None,
    settings: Optional[SolverSettings] = None,
    sample_start: bool = False,
) -> Tuple[NonnegMatrix, NonnegMatrix, RunTrace]:
    """Full multigrid with T/4, then a V-cycle at this level with 3T/4.

    Restricted data comes from the hierarchy cache.
    """
    return _execute(
        CycleKind.FULL_MULTIGRID,
        h,
        level,
        v0,
        w0,
        kind,
        budget,
        trace_every,
        schedule,
        settings,
        sample_start,
    )


def check_configuration(
    grid: Optional[ImageGrid], levels: int, cycle: CycleKind
) -> None:
    """Reject level counts a cycle or a dataset cannot run with.

    Raises:
        InvalidArgumentError: If levels < 1 or the single-level cycle gets more
            than one level
        UnsupportedOperationError: If levels > 1 and there is no grid
    """
    if levels < 1:
        raise InvalidArgumentError(f"number of levels must be >= 1, got {levels}")
    if cycle is CycleKind.SINGLE_LEVEL and levels != 1:
        raise InvalidArgumentError("the single-level run uses exactly one level")
    if levels > 1 and grid is None:
        raise UnsupportedOperationError(
            "multilevel cycles need grid metadata (use --grid HxW for CSV data)"
        )


def run_configuration(
    m: MatrixLike,
    grid: Optional[ImageGrid],
    levels: int,
    kind: SolverKind,
    cycle: CycleKind,
    r: int,
    seed: int,
    budget: Budget,
    trace_every: int = 1,
    *,
    schedule: Optional[Schedule] = None,
    settings: Optional[SolverSettings] = None,
) -> Tuple[NonnegMatrix, NonnegMatrix, RunTrace]:
    """Seed the factors and run one (algorithm, cycle, levels) configuration.

    The hierarchy is built before any solver work, so an infeasible level count
    fails fast. With one level every cycle reduces to the plain solver run.
    Multilevel cycles sample the random start on the coarse grids
    (sample_start).

    Raises:
        InvalidArgumentError: If levels < 1 or r is out of range
        CannotCoarsenError: If the grid cannot be coarsened levels - 1 times
        UnsupportedOperationError: If levels > 1 and there is no grid
    """
    data = m if isinstance(m, NonnegMatrix) else NonnegMatrix.from_array(m)
    check_configuration(grid, levels, cycle)

    v0, w0 = random_init(data.rows, data.cols, r, seed)
    if settings is None:
        settings = get_solver_settings()

    if levels == 1:
        if schedule is not None:
            schedule.add(0, 0, Phase.SOLVE, budget.amount)
        return run_solver(
            data, v0, w0, kind, budget, trace_every, settings=settings
        )

    assert grid is not None
    h = build_hierarchy(data, grid, levels)
    dispatch = {
        CycleKind.NESTED_ITERATION: nested_iteration,
        CycleKind.V_CYCLE: v_cycle,
        CycleKind.FULL_MULTIGRID: full_multigrid,
    }
    return dispatch[cycle](
        h,
        levels,
        v0,
        w0,
        kind,
        budget,
        trace_every,
        schedule=schedule,
        settings=settings,
        sample_start=True,
    )


class LevelResult(NamedTuple):
    """Outcome of solving on one level, seen from the finest grid."""

    level: int
    v_fine: NonnegMatrix  # basis prolonged to the finest grid
    w: NonnegMatrix
    trace: RunTrace  # errors measured on the finest data


def level_comparison(
    h: GridHierarchy,
    v0: MatrixLike,
    w0: MatrixLike,
    kind: SolverKind,
    iterations: int,
    trace_every: int = 1,
    *,
    settings: Optional[SolverSettings] = None,
) -> List[LevelResult]:
    """Run the same number of iterations independently on every level.

    Each level starts from the restriction of the fine (V0, W0); after every
    `trace_every` steps its V is prolonged to the finest grid and the error is
    measured against the fine data, with work charged at the level's cost.
    """
    if iterations < 0:
        raise InvalidArgumentError(f"iterations must be >= 0, got {iterations}")
    if trace_every < 1:
        raise InvalidArgumentError(f"trace_every must be >= 1, got {trace_every}")
    if settings is None:
        settings = get_solver_settings()

    fine = h.data(0)
    wa = as_array(w0)
    rows = [h.level_rows(i) for i in range(h.num_levels)]
    costs = level_costs(kind, rows, wa.shape[1], wa.shape[0], settings.anls_steps)
    step = step_function(kind)
    results: List[LevelResult] = []

    v_level = NonnegMatrix.from_array(as_array(v0))
    for index in range(h.num_levels):
        if index > 0:
            v_level = h.restrict_from(index - 1, v_level)
        data = h.data(index)
        v = v_level.to_array()
        w = np.array(wa, dtype=np.float64, copy=True)
        trace = RunTrace()
        start = time.perf_counter()

        def sample(steps: int) -> None:
            trace.record(
                time.perf_counter() - start,
                steps * costs[index],
                index,
                steps,
                frobenius_error(fine, h.prolong_to_finest(index, v), w),
            )

        sample(0)
        for it in range(1, iterations + 1):
            step(data, v, w, settings, trace.nnls_iteration_counts)
            if it % trace_every == 0 or it == iterations:
                sample(it)
        results.append(
            LevelResult(
                index,
                h.prolong_to_finest(index, v),
                NonnegMatrix(w),
                trace,
            )
        )
    return results
