#!/usr/bin/env python3

"""Unit tests for the benchmark harness."""

import os
import tempfile
import unittest

import numpy as np
from expecttest import TestCase

from mlnmf.bench import (
    SUMMARY_COLUMNS,
    BenchConfig,
    BenchSummary,
    Configuration,
    SkippedConfiguration,
    SummaryRow,
    configurations,
    render_summary,
    run_bench,
    save_summary_csv,
)
from mlnmf.common import Budget, BudgetMode, CycleKind, SolverKind
from mlnmf.config import SolverSettings
from mlnmf.datasets import Dataset, synth_smooth_dataset
from mlnmf.errors import InvalidArgumentError
from mlnmf.matrix import NonnegMatrix
from mlnmf.multilevel import run_configuration
from mlnmf.transfer import ImageGrid

SETTINGS = SolverSettings()
WORK_20 = Budget(BudgetMode.WORK, 20)


def config(**overrides):
    values = dict(
        algorithms=(SolverKind.MU,),
        cycles=(CycleKind.SINGLE_LEVEL, CycleKind.FULL_MULTIGRID),
        level_counts=(1, 2),
        rank=2,
        runs=3,
        budget=WORK_20,
    )
    values.update(overrides)
    return BenchConfig(**values)


class BenchConfigTest(unittest.TestCase):
    def test_validation(self):
        with self.assertRaises(InvalidArgumentError):
            config(runs=0)
        with self.assertRaises(InvalidArgumentError):
            config(algorithms=())
        with self.assertRaises(InvalidArgumentError):
            config(level_counts=(1, 0))

    def test_single_level_runs_once_per_algorithm(self):
        runnable, skipped = configurations(
            config(level_counts=(1, 2, 3)), ImageGrid(8, 8)
        )
        self.assertEqual(
            runnable,
            [
                Configuration(SolverKind.MU, CycleKind.SINGLE_LEVEL, 1),
                Configuration(SolverKind.MU, CycleKind.FULL_MULTIGRID, 1),
                Configuration(SolverKind.MU, CycleKind.FULL_MULTIGRID, 2),
                Configuration(SolverKind.MU, CycleKind.FULL_MULTIGRID, 3),
            ],
        )
        self.assertEqual(skipped, [])

    def test_infeasible_levels_are_skipped(self):
        with self.assertLogs(level="WARNING"):
            runnable, skipped = configurations(config(level_counts=(2, 3)), ImageGrid(2, 4))
        self.assertEqual(
            runnable,
            [
                Configuration(SolverKind.MU, CycleKind.SINGLE_LEVEL, 1),
                Configuration(SolverKind.MU, CycleKind.FULL_MULTIGRID, 2),
            ],
        )
        self.assertEqual(len(skipped), 1)
        self.assertEqual(skipped[0][:3], (SolverKind.MU, CycleKind.FULL_MULTIGRID, 3))

    def test_no_grid_skips_multilevel(self):
        with self.assertLogs(level="WARNING"):
            runnable, skipped = configurations(config(level_counts=(1, 2)), None)
        self.assertEqual(len(runnable), 2)
        self.assertEqual(skipped[0].reason, "no grid metadata for a multilevel cycle")


class RunBenchTest(unittest.TestCase):
    def setUp(self):
        self.dataset = synth_smooth_dataset(9, 9, 6, 2, 1)

    def test_summary_rows(self):
        summary = run_bench(self.dataset, config(), workers=2, settings=SETTINGS)
        self.assertEqual(
            [(r.algorithm, r.cycle, r.levels) for r in summary.rows],
            [
                (SolverKind.MU, CycleKind.SINGLE_LEVEL, 1),
                (SolverKind.MU, CycleKind.FULL_MULTIGRID, 1),
                (SolverKind.MU, CycleKind.FULL_MULTIGRID, 2),
            ],
        )
        for row in summary.rows:
            self.assertEqual(row.runs, 3)
            self.assertLessEqual(row.min_error, row.mean_error)
            self.assertLessEqual(row.mean_error, row.max_error)
            self.assertGreaterEqual(row.std_error, 0.0)
            self.assertLessEqual(row.mean_work, 20.0 + 1e-9)

    def test_single_run_mean_is_the_run_error(self):
        cfg = config(cycles=(CycleKind.V_CYCLE,), level_counts=(2,), runs=1, base_seed=5)
        summary = run_bench(self.dataset, cfg, workers=1, settings=SETTINGS)
        _, _, trace = run_configuration(
            self.dataset.matrix,
            self.dataset.grid,
            2,
            SolverKind.MU,
            CycleKind.V_CYCLE,
            2,
            5,
            WORK_20,
            1000,
            settings=SETTINGS,
        )
        row = summary.row(SolverKind.MU, CycleKind.V_CYCLE, 2)
        self.assertIsNotNone(row)
        self.assertEqual(row.mean_error, trace.final_error)
        self.assertEqual(row.std_error, 0.0)

    def test_population_standard_deviation(self):
        cfg = config(cycles=(CycleKind.SINGLE_LEVEL,), runs=4)
        summary = run_bench(self.dataset, cfg, workers=1, settings=SETTINGS)
        errors = []
        for seed in range(4):
            _, _, trace = run_configuration(
                self.dataset.matrix,
                self.dataset.grid,
                1,
                SolverKind.MU,
                CycleKind.SINGLE_LEVEL,
                2,
                seed,
                WORK_20,
                1000,
                settings=SETTINGS,
            )
            errors.append(trace.final_error)
        row = summary.rows[0]
        self.assertAlmostEqual(row.mean_error, float(np.mean(errors)), places=12)
        self.assertAlmostEqual(row.std_error, float(np.std(errors)), places=12)

    def test_worker_count_does_not_change_results(self):
        a = run_bench(self.dataset, config(), workers=1, settings=SETTINGS)
        b = run_bench(self.dataset, config(), workers=3, settings=SETTINGS)
        self.assertEqual(a.rows, b.rows)

    def test_rank_out_of_range(self):
        with self.assertRaises(InvalidArgumentError):
            run_bench(self.dataset, config(rank=7), workers=1, settings=SETTINGS)

    def test_skipped_configurations_are_recorded(self):
        dataset = Dataset(NonnegMatrix.from_array(np.ones((4, 3))), ImageGrid(2, 2), "tiny")
        with self.assertLogs(level="WARNING"):
            summary = run_bench(
                dataset, config(level_counts=(3,), rank=1, runs=1), workers=1, settings=SETTINGS
            )
        self.assertEqual(len(summary.rows), 1)
        self.assertEqual(len(summary.skipped), 1)


class RenderSummaryTest(TestCase):
    def summary(self):
        def row(algorithm, cycle, levels, mean, std):
            return SummaryRow(algorithm, cycle, levels, 2, mean, std, mean - std, mean + std, 0.5, 20.0)

        return BenchSummary(
            budget=WORK_20,
            runs=2,
            rows=[
                row(SolverKind.MU, CycleKind.SINGLE_LEVEL, 1, 12.5, 0.25),
                row(SolverKind.MU, CycleKind.FULL_MULTIGRID, 3, 10.125, 0.5),
                row(SolverKind.HALS, CycleKind.SINGLE_LEVEL, 1, 11.0, 0.0),
            ],
            skipped=[
                SkippedConfiguration(
                    SolverKind.HALS, CycleKind.FULL_MULTIGRID, 3, "too small"
                )
            ],
        )

    def test_render(self):
        self.assertExpectedInline(
            render_summary(self.summary()),
            """\
||M-VW||_F: mean +/- std over 2 run(s), budget work:20
cycle  levels  MU              HALS
NMF    1       12.5 +/- 0.25   11 +/- 0
FMG    3       10.125 +/- 0.5  -
skipped hals/fmg/L=3: too small
""",
        )

    def test_save_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "s.csv")
            save_summary_csv(self.summary(), path)
            with open(path) as f:
                lines = f.read().splitlines()
        self.assertEqual(lines[0], ",".join(SUMMARY_COLUMNS))
        self.assertEqual(lines[1], "mu,none,1,2,12.5,0.25,12.25,12.75,0.5,20.0")
        self.assertEqual(len(lines), 4)


if __name__ == "__main__":
    unittest.main()
