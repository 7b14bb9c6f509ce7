#!/usr/bin/env python3

"""Tests for the smoothing command."""

import os
import unittest

from mlnmf.datasets import save_pgm_dir, synth_smooth_dataset
from mlnmf.pgm import read_pgm
from mlnmf.reports import load_trace_csv
from mlnmf.testing import CLIEndToEndTestCase


class SmoothingTest(CLIEndToEndTestCase):
    """Test the per-level comparison."""

    def setUp(self):
        super().setUp()
        save_pgm_dir(synth_smooth_dataset(9, 8, 3, 2, 1), self.path("data"))

    def test_heatmaps_and_trace(self):
        output = self.invoke_assert_success(
            "smoothing", "--data", "data", "--algo", "hals", "--levels", "3",
            "--rank", "2", "--iterations", "4", "--column", "2", "--out", "cmp",
        )
        lines = output.splitlines()
        self.assertEqual(lines[0], "||M-VW||_F on the finest grid after 4 iterations")
        self.assertEqual(len(lines), 4)
        self.assertTrue(lines[1].startswith("level 0 (9x8): "))
        self.assertEqual(
            sorted(os.listdir(self.path("cmp"))),
            [
                "level_0.heatmap.pgm",
                "level_1.heatmap.pgm",
                "level_2.heatmap.pgm",
                "levels.trace.csv",
            ],
        )
        heatmap = read_pgm(self.path("cmp", "level_2.heatmap.pgm"))
        self.assertEqual((heatmap.height, heatmap.width), (9, 8))
        trace = load_trace_csv(self.path("cmp", "levels.trace.csv"))
        self.assertEqual({s.level for s in trace.samples}, {0, 1, 2})

    def test_column_out_of_range(self):
        self.invoke_assert_error(
            "smoothing", "--data", "data", "--algo", "mu", "--levels", "2",
            "--rank", "2", "--iterations", "1", "--column", "3", "--out", "cmp",
            exit_code=2,
        )


if __name__ == "__main__":
    unittest.main()
