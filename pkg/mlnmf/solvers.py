#!/usr/bin/env python3

"""The three baseline NMF iterations and the budget-driven run loop.

Every step function takes the data M and writable float arrays V (m x r) and
W (r x n), and updates V then W in place.
"""

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .common import WORK_SLACK, Budget, BudgetMode, SolverKind
from .config import SolverSettings, get_solver_settings
from .errors import InvalidArgumentError
from .matrix import FloatArray, MatrixLike, NonnegMatrix, as_array, frobenius_error
from .nnls import kkt_residuals, nnls_active_set

__all__ = [
    "SolverKind",
    "StepFunction",
    "TraceSample",
    "RunTrace",
    "mu_step",
    "hals_step",
    "anls_step",
    "step_function",
    "run_solver",
]

StepFunction = Callable[
    [MatrixLike, FloatArray, FloatArray, SolverSettings, Optional[List[int]]], None
]


@dataclass(frozen=True)
class TraceSample:
    elapsed_seconds: float
    work_units: float
    level: int  # 0 = finest
    iteration: int
    error: float  # ||M - VW||_F on the level's own data


@dataclass
class RunTrace:
    """Samples recorded during a run, in the order they were taken.

    For ANLS, nnls_iteration_counts holds the number of active-set exchanges
    of every NNLS subproblem solved (the measured s(r)).
    """

    samples: List[TraceSample] = field(default_factory=lambda: [])
    nnls_iteration_counts: List[int] = field(default_factory=lambda: [])

    def record(
        self,
        elapsed_seconds: float,
        work_units: float,
        level: int,
        iteration: int,
        error: float,
    ) -> None:
        self.samples.append(
            TraceSample(elapsed_seconds, work_units, level, iteration, error)
        )

    def extend(self, other: "RunTrace") -> None:
        """Append the samples and NNLS counts of a later phase."""
        self.samples.extend(other.samples)
        self.nnls_iteration_counts.extend(other.nnls_iteration_counts)

    @property
    def final_error(self) -> float:
        return self.samples[-1].error if self.samples else math.nan

    @property
    def total_work(self) -> float:
        return self.samples[-1].work_units if self.samples else 0.0

    @property
    def total_iterations(self) -> int:
        return self.samples[-1].iteration if self.samples else 0

    def __len__(self) -> int:
        return len(self.samples)


def _check_shapes(m: FloatArray, v: FloatArray, w: FloatArray) -> None:
    if v.shape[0] != m.shape[0] or w.shape[1] != m.shape[1] or v.shape[1] != w.shape[0]:
        raise InvalidArgumentError(
            f"dimension mismatch: M is {m.shape[0]}x{m.shape[1]}, "
            f"V is {v.shape[0]}x{v.shape[1]}, W is {w.shape[0]}x{w.shape[1]}"
        )


def mu_step(
    m: MatrixLike,
    v: FloatArray,
    w: FloatArray,
    settings: SolverSettings = SolverSettings(),
    nnls_counts: Optional[List[int]] = None,
) -> None:
    """One multiplicative-update sweep: V first, then W using the new V.

    Denominators are floored at settings.mu_floor.
    """
    ma = as_array(m)
    _check_shapes(ma, v, w)
    floor = settings.mu_floor
    v *= (ma @ w.T) / np.maximum(v @ (w @ w.T), floor)
    w *= (v.T @ ma) / np.maximum((v.T @ v) @ w, floor)


def hals_step(
    m: MatrixLike,
    v: FloatArray,
    w: FloatArray,
    settings: SolverSettings = SolverSettings(),
    nnls_counts: Optional[List[int]] = None,
) -> None:
    """One HALS sweep: every column of V (k = 1..r), then every row of W.

    A column (row) whose diagonal Gram entry is zero is left unchanged and
    logged at debug level.
    """
    ma = as_array(m)
    _check_shapes(ma, v, w)
    r = v.shape[1]

    a = ma @ w.T
    b = w @ w.T
    for k in range(r):
        bkk = float(b[k, k])
        if bkk <= 0.0:
            logging.debug(f"HALS: row {k} of W is zero, column {k} of V unchanged")
            continue
        # v @ b[:, k] includes the k-th term, which is added back.
        numerator = a[:, k] - v @ b[:, k] + v[:, k] * bkk
        v[:, k] = np.maximum(0.0, numerator / bkk)

    c = v.T @ ma
    d = v.T @ v
    for k in range(r):
        dkk = float(d[k, k])
        if dkk <= 0.0:
            logging.debug(f"HALS: column {k} of V is zero, row {k} of W unchanged")
            continue
        numerator = c[k, :] - d[k, :] @ w + dkk * w[k, :]
        w[k, :] = np.maximum(0.0, numerator / dkk)


def anls_step(
    m: MatrixLike,
    v: FloatArray,
    w: FloatArray,
    settings: SolverSettings = SolverSettings(),
    nnls_counts: Optional[List[int]] = None,
) -> None:
    """One ANLS sweep: exact nonnegative least squares for V, then for W.

    Each half-step forms its Gram matrix and linear terms once and solves the
    independent row (column) subproblems with the active-set method, warm
    started from the current iterate. Exchange counts are appended to
    `nnls_counts` when given. At debug level the worst KKT residual of each
    half-step is logged.

    Raises:
        CapExceededError: If an NNLS subproblem does not converge
    """
    ma = as_array(m)
    _check_shapes(ma, v, w)

    # V half-step: rows of V solve V_i (W W^T) = M_i W^T.
    g_v = w @ w.T
    h_v = ma @ w.T
    for i in range(v.shape[0]):
        x, exchanges = nnls_active_set(
            g_v, h_v[i], v[i], tol=settings.nnls_tol, ridge=settings.nnls_ridge
        )
        v[i] = x
        if nnls_counts is not None:
            nnls_counts.append(exchanges)

    # W half-step: columns of W solve (V^T V) W_j = V^T M_j.
    g_w = v.T @ v
    h_w = v.T @ ma
    for j in range(w.shape[1]):
        x, exchanges = nnls_active_set(
            g_w, h_w[:, j], w[:, j], tol=settings.nnls_tol, ridge=settings.nnls_ridge
        )
        w[:, j] = x
        if nnls_counts is not None:
            nnls_counts.append(exchanges)

    if logging.getLogger().isEnabledFor(logging.DEBUG):
        worst_v = max(
            (kkt_residuals(g_v, h_v[i], v[i]).worst for i in range(v.shape[0])),
            default=0.0,
        )
        worst_w = max(
            (kkt_residuals(g_w, h_w[:, j], w[:, j]).worst for j in range(w.shape[1])),
            default=0.0,
        )
        logging.debug(
            f"ANLS: worst KKT residual {worst_v:.3g} for V, {worst_w:.3g} for W"
        )


_STEPS: Dict[SolverKind, StepFunction] = {
    SolverKind.ANLS: anls_step,
    SolverKind.MU: mu_step,
    SolverKind.HALS: hals_step,
}


def step_function(kind: SolverKind) -> StepFunction:
    return _STEPS[kind]


def run_solver(
    m: MatrixLike,
    v0: MatrixLike,
    w0: MatrixLike,
    kind: SolverKind,
    budget: Budget,
    trace_every: int = 1,
    *,
    level: int = 0,
    step_cost: float = 1.0,
    work_offset: float = 0.0,
    iteration_offset: int = 0,
    clock_start: Optional[float] = None,
    settings: Optional[SolverSettings] = None,
) -> Tuple[NonnegMatrix, NonnegMatrix, RunTrace]:
    """Apply `kind` steps to (V0, W0) until the budget is spent.

    In work mode each step charges `step_cost` work units (1 on the finest
    level) and the number of steps is floor(T / step_cost), so the result is
    bit-deterministic. In time mode steps run while wall-clock time remains.

    A sample is recorded before the first step, every `trace_every` steps and
    after the last step.

    Args:
        m: Data matrix of the level being solved
        v0: Initial basis factor
        w0: Initial coefficient factor
        kind: Which iteration to apply
        budget: Work units or seconds for this run
        trace_every: Sampling period in steps
        level: Level tag stored in the trace samples
        step_cost: Work units charged per step
        work_offset: Work already spent by earlier phases of the same cycle
        iteration_offset: Steps already taken by earlier phases
        clock_start: perf_counter() value elapsed time is measured from
        settings: Floors and tolerances, read from the configuration if None

    Returns:
        (V, W, trace)

    Raises:
        InvalidArgumentError: If trace_every < 1, step_cost <= 0 or shapes mismatch
        CapExceededError: If an ANLS subproblem does not converge
    """
    if trace_every < 1:
        raise InvalidArgumentError(f"trace_every must be >= 1, got {trace_every}")
    if not step_cost > 0:
        raise InvalidArgumentError(f"step cost must be > 0, got {step_cost}")
    if settings is None:
        settings = get_solver_settings()
    start = time.perf_counter() if clock_start is None else clock_start
    phase_start = time.perf_counter()

    ma = as_array(m)
    v = np.array(as_array(v0), dtype=np.float64, copy=True)
    w = np.array(as_array(w0), dtype=np.float64, copy=True)
    _check_shapes(ma, v, w)

    step = step_function(kind)
    trace = RunTrace()

    def sample(steps: int) -> None:
        trace.record(
            time.perf_counter() - start,
            work_offset + steps * step_cost,
            level,
            iteration_offset + steps,
            frobenius_error(ma, v, w),
        )

    if budget.mode is BudgetMode.WORK:
        max_steps: Optional[int] = math.floor(budget.amount / step_cost + WORK_SLACK)
    else:
        max_steps = None

    sample(0)
    steps = 0
    while True:
        if max_steps is not None:
            if steps >= max_steps:
                break
        elif time.perf_counter() - phase_start >= budget.amount:
            break
        step(ma, v, w, settings, trace.nnls_iteration_counts)
        steps += 1
        if steps % trace_every == 0:
            sample(steps)
    if steps % trace_every != 0:
        sample(steps)

    logging.debug(
        f"{kind.value} on level {level}: {steps} steps, "
        f"error {trace.final_error:.6g}"
    )
    return NonnegMatrix(v), NonnegMatrix(w), trace
