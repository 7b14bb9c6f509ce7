#!/usr/bin/env python3

"""Unit tests for image grids and transfer operators."""

import unittest

import numpy as np

from mlnmf.errors import (
    CannotCoarsenError,
    InvalidArgumentError,
    UndefinedSmoothnessError,
)
from mlnmf.matrix import NonnegMatrix
from mlnmf.transfer import (
    ImageGrid,
    build_hierarchy,
    build_prolongation,
    build_restriction,
    coarse_pixels,
    coarsen_grid,
    devectorize,
    factor_smoothness,
    initialization_bound,
    operator_diagnostics,
    prolong,
    restrict,
    smoothness,
    vectorize_image,
)

GOLDEN_PATTERN = np.array(
    [
        [4, 2, 0, 2, 1, 0, 0, 0, 0],
        [0, 2, 4, 0, 1, 2, 0, 0, 0],
        [0, 0, 0, 2, 1, 0, 4, 2, 0],
        [0, 0, 0, 0, 1, 2, 0, 2, 4],
    ],
    dtype=np.float64,
)


class ImageGridTest(unittest.TestCase):
    def test_column_vectorization_index(self):
        g = ImageGrid(3, 4)
        self.assertEqual(g.index(0, 0), 0)
        self.assertEqual(g.index(2, 0), 2)
        self.assertEqual(g.index(0, 1), 3)
        self.assertEqual(g.index(2, 3), 11)
        self.assertEqual(g.size, 12)

    def test_coarsen_rounds_up(self):
        self.assertEqual(coarsen_grid(ImageGrid(3, 3)), ImageGrid(2, 2))
        self.assertEqual(coarsen_grid(ImageGrid(112, 92)), ImageGrid(56, 46))
        self.assertEqual(coarsen_grid(ImageGrid(5, 2)), ImageGrid(3, 1))

    def test_coarsen_too_small(self):
        with self.assertRaises(CannotCoarsenError):
            coarsen_grid(ImageGrid(1, 5))
        with self.assertRaises(CannotCoarsenError):
            coarsen_grid(ImageGrid(4, 1))

    def test_rejects_empty_grid(self):
        with self.assertRaises(InvalidArgumentError):
            ImageGrid(0, 3)

    def test_devectorize_inverts_vectorize(self):
        image = np.arange(12, dtype=np.float64).reshape(3, 4)
        v = vectorize_image(image)
        self.assertEqual(list(v[:4]), [0.0, 4.0, 8.0, 1.0])
        np.testing.assert_array_equal(devectorize(v, ImageGrid(3, 4)), image)
        with self.assertRaises(InvalidArgumentError):
            devectorize(v, ImageGrid(3, 3))


class OperatorTest(unittest.TestCase):
    def test_restriction_golden_3x3(self):
        r = build_restriction(ImageGrid(3, 3))
        np.testing.assert_allclose(r.to_dense(), GOLDEN_PATTERN / 9.0, atol=1e-15)

    def test_prolongation_golden_3x3(self):
        p = build_prolongation(ImageGrid(3, 3))
        np.testing.assert_allclose(p.to_dense().T, GOLDEN_PATTERN / 4.0, atol=1e-15)

    def test_interior_stencil_5x5(self):
        r = build_restriction(ImageGrid(5, 5)).to_dense()
        fine = ImageGrid(5, 5)
        coarse_center = ImageGrid(3, 3).index(1, 1)
        row = r[coarse_center]
        stencil = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]]) / 16.0
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                self.assertAlmostEqual(
                    row[fine.index(2 + di, 2 + dj)], stencil[di + 1, dj + 1], places=15
                )
        self.assertAlmostEqual(row.sum(), 1.0, places=15)

    def test_row_sums_and_nonnegativity(self):
        for h in range(2, 34):
            for w in (2, 3, h):
                g = ImageGrid(h, w)
                for op in (build_restriction(g), build_prolongation(g)):
                    dense = op.to_dense()
                    self.assertTrue((dense >= 0).all())
                    np.testing.assert_allclose(dense.sum(axis=1), 1.0, atol=1e-12)
                    min_weight, max_dev = operator_diagnostics(op)
                    self.assertGreater(min_weight, 0.0)
                    self.assertLessEqual(max_dev, 1e-12)

    def test_odd_sizes_coarsen_to_odd_sizes(self):
        for a in range(2, 7):
            size = 2**a + 1
            self.assertEqual(
                coarsen_grid(ImageGrid(size, size)),
                ImageGrid(2 ** (a - 1) + 1, 2 ** (a - 1) + 1),
            )

    def test_restrict_example(self):
        image = np.array([[1, 2, 3], [4, 5, 6], [7, 8, 9]], dtype=np.float64)
        r = build_restriction(ImageGrid(3, 3))
        got = restrict(r, vectorize_image(image)).data[:, 0]
        np.testing.assert_allclose(got, [7 / 3, 19 / 3, 11 / 3, 23 / 3], rtol=1e-14)

    def test_prolong_center_is_mean_of_corners(self):
        p = build_prolongation(ImageGrid(3, 3))
        got = prolong(p, np.array([1.0, 2.0, 3.0, 4.0])).data[:, 0]
        self.assertAlmostEqual(got[ImageGrid(3, 3).index(1, 1)], 2.5, places=15)
        self.assertEqual(got[0], 1.0)
        self.assertEqual(got[8], 4.0)

    def test_apply_rejects_wrong_height(self):
        r = build_restriction(ImageGrid(3, 3))
        with self.assertRaises(InvalidArgumentError):
            restrict(r, np.ones((4, 2)))


class SmoothnessTest(unittest.TestCase):
    def test_constant_image_is_perfectly_smooth(self):
        g = ImageGrid(7, 6)
        r, p = build_restriction(g), build_prolongation(g)
        m = np.full((g.size, 3), 0.5)
        self.assertLess(smoothness(m, r, p), 1e-14)

    def test_checkerboard_is_rough(self):
        g = ImageGrid(8, 8)
        r, p = build_restriction(g), build_prolongation(g)
        image = np.indices((8, 8)).sum(axis=0) % 2
        self.assertGreater(smoothness(vectorize_image(image), r, p), 0.3)

    def test_zero_matrix_is_undefined(self):
        g = ImageGrid(3, 3)
        with self.assertRaises(UndefinedSmoothnessError):
            smoothness(np.zeros((9, 2)), build_restriction(g), build_prolongation(g))

    def test_factor_smoothness_matches_smoothness(self):
        g = ImageGrid(5, 4)
        r, p = build_restriction(g), build_prolongation(g)
        v = np.random.default_rng(1).random((20, 3))
        self.assertEqual(factor_smoothness(v, r, p), smoothness(v, r, p))


class InitializationBoundTest(unittest.TestCase):
    def test_bound_holds_on_random_instances(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            h, w = (int(x) for x in rng.integers(2, 9, size=2))
            n, k = int(rng.integers(1, 6)), int(rng.integers(1, 4))
            g = ImageGrid(h, w)
            r, p = build_restriction(g), build_prolongation(g)
            m = rng.random((g.size, n))
            v_coarse = rng.random((coarsen_grid(g).size, k))
            wk = rng.random((k, n))
            check = initialization_bound(m, r, p, v_coarse, wk)
            self.assertTrue(check.holds, check)

    def test_dimension_mismatch(self):
        g = ImageGrid(3, 3)
        r, p = build_restriction(g), build_prolongation(g)
        with self.assertRaises(InvalidArgumentError):
            initialization_bound(np.ones((9, 2)), r, p, np.ones((9, 1)), np.ones((1, 2)))


class HierarchyTest(unittest.TestCase):
    def test_levels_and_cached_data(self):
        g = ImageGrid(9, 9)
        m = NonnegMatrix.from_array(np.random.default_rng(0).random((81, 4)))
        hierarchy = build_hierarchy(m, g, 3)
        self.assertEqual(hierarchy.num_levels, 3)
        self.assertEqual(
            hierarchy.levels, [ImageGrid(9, 9), ImageGrid(5, 5), ImageGrid(3, 3)]
        )
        self.assertEqual([hierarchy.level_rows(i) for i in range(3)], [81, 25, 9])
        expected = restrict(hierarchy.restrictions[1], restrict(hierarchy.restrictions[0], m))
        np.testing.assert_allclose(hierarchy.data(2).data, expected.data)
        self.assertEqual(hierarchy.prolong_to_finest(2, np.ones((9, 2))).shape, (81, 2))

    def test_single_level(self):
        m = np.ones((6, 2))
        hierarchy = build_hierarchy(m, ImageGrid(2, 3), 1)
        self.assertEqual(hierarchy.num_levels, 1)
        self.assertEqual(hierarchy.restrictions, [])

    def test_too_many_levels(self):
        with self.assertRaises(CannotCoarsenError):
            build_hierarchy(np.ones((4, 1)), ImageGrid(2, 2), 3)

    def test_grid_mismatch(self):
        with self.assertRaises(InvalidArgumentError):
            build_hierarchy(np.ones((5, 1)), ImageGrid(2, 2), 1)

    def test_coarse_pixels_keep_even_rows_and_columns(self):
        self.assertEqual(coarse_pixels(ImageGrid(5, 4)).tolist(), [0, 2, 4, 10, 12, 14])
        self.assertEqual(coarse_pixels(ImageGrid(2, 2)).tolist(), [0])

    def test_sample_from_keeps_coarse_pixel_rows(self):
        g = ImageGrid(5, 4)
        x = np.arange(40, dtype=np.float64).reshape(20, 2)
        hierarchy = build_hierarchy(np.ones((20, 1)), g, 2)
        sampled = hierarchy.sample_from(0, x)
        self.assertEqual(sampled.shape, (6, 2))
        np.testing.assert_array_equal(sampled.data, x[[0, 2, 4, 10, 12, 14]])


if __name__ == "__main__":
    unittest.main()
