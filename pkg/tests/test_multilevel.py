#!/usr/bin/env python3

"""Unit tests for budget schedules and the multilevel cycles."""

import math
import unittest

import numpy as np
from expecttest import TestCase

from mlnmf.common import Budget, BudgetMode, CycleKind, SolverKind
from mlnmf.config import SolverSettings
from mlnmf.cost_model import CostParams, level_cost_ratio
from mlnmf.errors import InvalidArgumentError, UnsupportedOperationError
from mlnmf.matrix import NonnegMatrix, frobenius_error, random_init
from mlnmf.multilevel import (
    Phase,
    Schedule,
    full_multigrid,
    iterations_per_level,
    level_comparison,
    level_costs,
    nested_iteration,
    plan_schedule,
    run_configuration,
    v_cycle,
)
from mlnmf.solvers import run_solver
from mlnmf.transfer import ImageGrid, build_hierarchy

SETTINGS = SolverSettings()
MULTILEVEL_CYCLES = (
    CycleKind.NESTED_ITERATION,
    CycleKind.V_CYCLE,
    CycleKind.FULL_MULTIGRID,
)


def smooth_data(grid, n, seed):
    rows, cols = np.meshgrid(
        np.arange(grid.height), np.arange(grid.width), indexing="ij"
    )
    rng = np.random.default_rng(seed)
    columns = []
    for _ in range(n):
        ci, cj = rng.random(2) * [grid.height, grid.width]
        image = np.exp(-((rows - ci) ** 2 + (cols - cj) ** 2) / 8.0)
        columns.append(image.reshape(-1, order="F"))
    return NonnegMatrix.from_array(np.column_stack(columns))


def allocations(schedule):
    return [(a.depth, a.level, a.phase.value, a.allocated) for a in schedule.allocations]


class ScheduleTest(TestCase):
    BUDGET = Budget(BudgetMode.WORK, 400)

    def test_nested_iteration_fractions(self):
        schedule = plan_schedule(CycleKind.NESTED_ITERATION, 2, self.BUDGET)
        self.assertEqual(
            allocations(schedule),
            [(0, 0, "recurse", 100.0), (1, 1, "solve", 100.0), (0, 0, "solve", 300.0)],
        )

    def test_v_cycle_fractions(self):
        schedule = plan_schedule(CycleKind.V_CYCLE, 2, self.BUDGET)
        self.assertEqual(
            allocations(schedule),
            [
                (0, 0, "solve", 100.0),
                (0, 0, "recurse", 100.0),
                (1, 1, "solve", 100.0),
                (0, 0, "solve", 200.0),
            ],
        )

    def test_full_multigrid_fractions(self):
        schedule = plan_schedule(CycleKind.FULL_MULTIGRID, 2, self.BUDGET)
        self.assertEqual(
            allocations(schedule),
            [
                (0, 0, "recurse", 100.0),
                (1, 1, "solve", 100.0),
                (0, 0, "vcycle", 300.0),
                (1, 0, "solve", 75.0),
                (1, 0, "recurse", 75.0),
                (2, 1, "solve", 75.0),
                (1, 0, "solve", 150.0),
            ],
        )

    def test_render(self):
        schedule = plan_schedule(CycleKind.NESTED_ITERATION, 2, self.BUDGET)
        self.assertExpectedInline(
            schedule.render(),
            """\
schedule for work:400
recurse level 0  100
  solve   level 1  100
solve   level 0  300""",
        )

    def test_budget_conservation(self):
        for cycle in CycleKind:
            for levels in range(1, 5):
                schedule = plan_schedule(cycle, levels, Budget(BudgetMode.WORK, 1234.5))
                self.assertLessEqual(
                    abs(schedule.total_solved() - 1234.5), 1e-9 * 1234.5, (cycle, levels)
                )

    def test_every_cycle_ends_on_the_finest_level(self):
        for cycle in CycleKind:
            for levels in range(1, 5):
                schedule = plan_schedule(cycle, levels, self.BUDGET)
                last = schedule.allocations[-1]
                self.assertEqual((last.level, last.phase), (0, Phase.SOLVE))

    def test_single_level_is_one_solve(self):
        for cycle in CycleKind:
            schedule = plan_schedule(cycle, 1, self.BUDGET)
            self.assertEqual(allocations(schedule), [(0, 0, "solve", 400.0)])

    def test_per_level_totals(self):
        schedule = plan_schedule(CycleKind.NESTED_ITERATION, 3, self.BUDGET)
        self.assertEqual(schedule.per_level(), {0: 300.0, 1: 75.0, 2: 25.0})

    def test_invalid_levels(self):
        with self.assertRaises(InvalidArgumentError):
            plan_schedule(CycleKind.V_CYCLE, 0, self.BUDGET)

    def test_iterations_per_level(self):
        schedule = plan_schedule(CycleKind.NESTED_ITERATION, 2, self.BUDGET)
        self.assertEqual(iterations_per_level(schedule, [1.0, 0.3]), [300, 333])


class LevelCostsTest(unittest.TestCase):
    def test_costs_shrink_with_rows(self):
        costs = level_costs(SolverKind.MU, [81, 25, 9], 10, 3)
        self.assertEqual(costs[0], 1.0)
        self.assertTrue(costs[0] > costs[1] > costs[2] > 0)

    def test_s_r_only_changes_anls(self):
        rows = [81, 25, 9]
        self.assertEqual(
            level_costs(SolverKind.MU, rows, 10, 3, 1.0),
            level_costs(SolverKind.MU, rows, 10, 3),
        )
        measured = level_costs(SolverKind.ANLS, rows, 10, 3, 1.0)
        params = CostParams(81, 10, 3, s_r=1.0)
        self.assertEqual(measured, [level_cost_ratio(SolverKind.ANLS, params, m) for m in rows])
        self.assertNotEqual(measured, level_costs(SolverKind.ANLS, rows, 10, 3))


class CycleExecutionTest(unittest.TestCase):
    def setUp(self):
        self.grid = ImageGrid(9, 9)
        self.m = smooth_data(self.grid, 6, 0)
        self.hierarchy = build_hierarchy(self.m, self.grid, 3)
        self.v0, self.w0 = random_init(81, 6, 2, 1)

    def run_cycle(self, fn, kind=SolverKind.MU, amount=40.0, schedule=None):
        return fn(
            self.hierarchy,
            3,
            self.v0,
            self.w0,
            kind,
            Budget(BudgetMode.WORK, amount),
            schedule=schedule,
            settings=SETTINGS,
        )

    def test_work_is_spent_but_never_exceeded(self):
        for fn in (nested_iteration, v_cycle, full_multigrid):
            for kind in SolverKind:
                _, _, trace = self.run_cycle(fn, kind)
                self.assertLessEqual(trace.total_work, 40.0 + 1e-9, (fn, kind))
                self.assertGreater(trace.total_work, 39.0 - 1e-9, (fn, kind))

    def test_ends_on_finest_level_with_nonnegative_factors(self):
        for fn in (nested_iteration, v_cycle, full_multigrid):
            v, w, trace = self.run_cycle(fn)
            self.assertEqual(trace.samples[-1].level, 0)
            self.assertEqual(v.shape, (81, 2))
            self.assertEqual(w.shape, (2, 6))
            self.assertAlmostEqual(trace.final_error, frobenius_error(self.m, v, w))

    def test_nested_iteration_visits_coarse_levels_first(self):
        _, _, trace = self.run_cycle(nested_iteration)
        levels = [s.level for s in trace.samples]
        self.assertEqual(levels[0], 2)
        self.assertEqual(sorted(set(levels)), [0, 1, 2])
        self.assertEqual(levels, sorted(levels, reverse=True))

    def test_work_and_iterations_are_cumulative(self):
        _, _, trace = self.run_cycle(full_multigrid)
        work = [s.work_units for s in trace.samples]
        iterations = [s.iteration for s in trace.samples]
        self.assertEqual(work, sorted(work))
        self.assertEqual(iterations, sorted(iterations))

    def test_schedule_log_is_nominal(self):
        schedule = Schedule(Budget(BudgetMode.WORK, 40.0))
        self.run_cycle(v_cycle, schedule=schedule)
        expected = plan_schedule(CycleKind.V_CYCLE, 3, Budget(BudgetMode.WORK, 40.0))
        self.assertEqual(schedule.allocations, expected.allocations)

    def test_deterministic(self):
        a = self.run_cycle(full_multigrid, SolverKind.HALS)
        b = self.run_cycle(full_multigrid, SolverKind.HALS)
        np.testing.assert_array_equal(a[0].data, b[0].data)
        np.testing.assert_array_equal(a[1].data, b[1].data)
        self.assertEqual(
            [s.error for s in a[2].samples], [s.error for s in b[2].samples]
        )

    def test_starting_below_the_top(self):
        v0, _ = random_init(25, 6, 2, 1)
        v, _, trace = v_cycle(
            self.hierarchy,
            2,
            v0,
            self.w0,
            SolverKind.MU,
            Budget(BudgetMode.WORK, 10),
            settings=SETTINGS,
        )
        self.assertEqual(v.shape, (25, 2))
        self.assertEqual({s.level for s in trace.samples}, {1, 2})

    def test_level_one_is_a_plain_solve(self):
        v0, _ = random_init(9, 6, 2, 1)
        v, _, trace = nested_iteration(
            self.hierarchy,
            1,
            v0,
            self.w0,
            SolverKind.MU,
            Budget(BudgetMode.WORK, 2),
            settings=SETTINGS,
        )
        self.assertEqual(v.shape, (9, 2))
        self.assertEqual({s.level for s in trace.samples}, {2})

    def test_invalid_level(self):
        with self.assertRaises(InvalidArgumentError):
            v_cycle(
                self.hierarchy,
                4,
                self.v0,
                self.w0,
                SolverKind.MU,
                Budget(BudgetMode.WORK, 1),
                settings=SETTINGS,
            )
        with self.assertRaises(InvalidArgumentError):
            v_cycle(
                self.hierarchy,
                2,
                self.v0,
                self.w0,
                SolverKind.MU,
                Budget(BudgetMode.WORK, 1),
                settings=SETTINGS,
            )

    def test_time_budget_runs(self):
        _, _, trace = full_multigrid(
            self.hierarchy,
            3,
            self.v0,
            self.w0,
            SolverKind.MU,
            Budget(BudgetMode.TIME, 0.05),
            settings=SETTINGS,
        )
        self.assertEqual(trace.samples[-1].level, 0)
        self.assertFalse(math.isnan(trace.final_error))

    def test_anls_steps_set_the_coarse_charge(self):
        settings = SolverSettings(anls_steps=1.0)
        _, _, trace = nested_iteration(
            self.hierarchy,
            3,
            self.v0,
            self.w0,
            SolverKind.ANLS,
            Budget(BudgetMode.WORK, 40.0),
            settings=settings,
        )
        costs = level_costs(SolverKind.ANLS, [81, 25, 9], 6, 2, 1.0)
        coarse = [s for s in trace.samples if s.level == 2]
        self.assertGreater(len(coarse), 1)
        for a, b in zip(coarse, coarse[1:]):
            self.assertAlmostEqual(b.work_units - a.work_units, costs[2])

    def test_leftover_work_goes_to_the_final_fine_solve(self):
        _, _, trace = self.run_cycle(nested_iteration)
        costs = level_costs(SolverKind.MU, [81, 25, 9], 6, 2)
        last_iteration = {}
        coarse_work = 0.0
        for s in trace.samples:
            last_iteration[s.level] = s.iteration
            if s.level > 0:
                coarse_work = max(coarse_work, s.work_units)
        # coarse solves keep their nominal shares: 2.5 on level 2, 7.5 on level 1
        self.assertEqual(last_iteration[2], math.floor(2.5 / costs[2] + 1e-9))
        self.assertEqual(
            last_iteration[1] - last_iteration[2], math.floor(7.5 / costs[1] + 1e-9)
        )
        fine_steps = last_iteration[0] - last_iteration[1]
        self.assertEqual(fine_steps, math.floor(40.0 - coarse_work + 1e-9))
        self.assertGreaterEqual(fine_steps, 30)
        self.assertLessEqual(trace.total_work, 40.0 + 1e-9)
        self.assertLess(40.0 - trace.total_work, 1.0)

    def test_sample_start_injects_the_random_start(self):
        h = self.hierarchy
        for sample_start, descend in ((True, h.sample_from), (False, h.restrict_from)):
            v, w, _ = nested_iteration(
                h,
                3,
                self.v0,
                self.w0,
                SolverKind.MU,
                Budget(BudgetMode.WORK, 0.0),
                settings=SETTINGS,
                sample_start=sample_start,
            )
            coarse = descend(1, descend(0, self.v0))
            expected = h.prolong_to(0, h.prolong_to(1, coarse))
            np.testing.assert_array_equal(v.data, expected.data)
            np.testing.assert_array_equal(w.data, self.w0.data)

    def test_sample_start_only_affects_the_first_descent(self):
        a = self.run_cycle(v_cycle)
        v, w, trace = v_cycle(
            self.hierarchy,
            3,
            self.v0,
            self.w0,
            SolverKind.MU,
            Budget(BudgetMode.WORK, 40.0),
            settings=SETTINGS,
            sample_start=True,
        )
        # the V-cycle solves on the fine grid before descending
        np.testing.assert_array_equal(v.data, a[0].data)
        np.testing.assert_array_equal(w.data, a[1].data)
        self.assertEqual(trace.final_error, a[2].final_error)


class RunConfigurationTest(unittest.TestCase):
    def setUp(self):
        self.grid = ImageGrid(9, 8)
        self.m = smooth_data(self.grid, 5, 3)

    def test_one_level_equals_plain_solver(self):
        budget = Budget(BudgetMode.WORK, 15)
        v0, w0 = random_init(72, 5, 3, 11)
        expected = run_solver(self.m, v0, w0, SolverKind.HALS, budget, settings=SETTINGS)
        for cycle in CycleKind:
            v, w, _ = run_configuration(
                self.m,
                self.grid,
                1,
                SolverKind.HALS,
                cycle,
                3,
                11,
                budget,
                settings=SETTINGS,
            )
            np.testing.assert_array_equal(v.data, expected[0].data)
            np.testing.assert_array_equal(w.data, expected[1].data)

    def test_multilevel_run(self):
        schedule = Schedule(Budget(BudgetMode.WORK, 20))
        v, w, trace = run_configuration(
            self.m,
            self.grid,
            3,
            SolverKind.ANLS,
            CycleKind.FULL_MULTIGRID,
            2,
            0,
            Budget(BudgetMode.WORK, 20),
            schedule=schedule,
            settings=SETTINGS,
        )
        self.assertEqual(v.shape, (72, 2))
        self.assertGreater(len(trace.nnls_iteration_counts), 0)
        self.assertEqual(schedule.allocations[0].phase, Phase.RECURSE)

    def test_single_level_cycle_needs_one_level(self):
        with self.assertRaises(InvalidArgumentError):
            run_configuration(
                self.m,
                self.grid,
                2,
                SolverKind.MU,
                CycleKind.SINGLE_LEVEL,
                2,
                0,
                Budget(BudgetMode.WORK, 5),
            )

    def test_multilevel_needs_grid(self):
        with self.assertRaises(UnsupportedOperationError):
            run_configuration(
                self.m,
                None,
                2,
                SolverKind.MU,
                CycleKind.V_CYCLE,
                2,
                0,
                Budget(BudgetMode.WORK, 5),
            )

    def test_rank_out_of_range(self):
        with self.assertRaises(InvalidArgumentError):
            run_configuration(
                self.m,
                self.grid,
                1,
                SolverKind.MU,
                CycleKind.SINGLE_LEVEL,
                6,
                0,
                Budget(BudgetMode.WORK, 5),
                settings=SETTINGS,
            )


class LevelComparisonTest(unittest.TestCase):
    def test_errors_are_measured_on_the_finest_grid(self):
        grid = ImageGrid(9, 9)
        m = smooth_data(grid, 6, 2)
        h = build_hierarchy(m, grid, 3)
        v0, w0 = random_init(81, 6, 2, 4)
        results = level_comparison(h, v0, w0, SolverKind.MU, 5, settings=SETTINGS)
        self.assertEqual([r.level for r in results], [0, 1, 2])
        for result in results:
            self.assertEqual(result.v_fine.shape, (81, 2))
            self.assertEqual(len(result.trace), 6)
            self.assertAlmostEqual(
                result.trace.final_error, frobenius_error(m, result.v_fine, result.w)
            )
        self.assertEqual(results[0].trace.samples[0].error, frobenius_error(m, v0, w0))
        self.assertLess(results[2].trace.total_work, results[0].trace.total_work)

    def test_negative_iterations(self):
        grid = ImageGrid(4, 4)
        h = build_hierarchy(np.ones((16, 3)), grid, 2)
        v0, w0 = random_init(16, 3, 1, 0)
        with self.assertRaises(InvalidArgumentError):
            level_comparison(h, v0, w0, SolverKind.MU, -1, settings=SETTINGS)


if __name__ == "__main__":
    unittest.main()
