import unittest

import numpy as np

from core.mesh_builder import build_dof_map, generate_structured, refine_uniform
from core.pattern import (
    SparsityPattern, build_pattern, build_pattern_naive, nnz, pattern_from_rows, values_size_mb
)
from models.mesh import DofMap


class TestBuildPattern(unittest.TestCase):
    def test_single_element_is_dense(self):
        pattern = build_pattern(build_dof_map(generate_structured(1), 1, 1))
        self.assertEqual(nnz(pattern), 16)
        for r in range(4):
            self.assertEqual(pattern.row(r).tolist(), [0, 1, 2, 3])

    def test_small_structured(self):
        self.assertEqual(nnz(build_pattern(build_dof_map(generate_structured(6), 1, 1))), 361)

    def test_row_pointer_invariants(self):
        pattern = build_pattern(build_dof_map(generate_structured(4), 2, 3))
        self.assertEqual(pattern.row_ptr[0], 0)
        self.assertEqual(pattern.row_ptr[-1], pattern.nnz)
        self.assertTrue((np.diff(pattern.row_ptr) >= 0).all())
        for r in range(pattern.n_rows):
            self.assertTrue((np.diff(pattern.row(r)) > 0).all())

    def test_symmetric_with_diagonal(self):
        pattern = build_pattern(build_dof_map(refine_uniform(generate_structured(2)), 2, 2))
        pairs = set()
        for r in range(pattern.n_rows):
            pairs.update((r, int(c)) for c in pattern.row(r))
        for r, c in pairs:
            self.assertIn((c, r), pairs)
        for r in range(pattern.n_rows):
            self.assertIn((r, r), pairs)

    def test_matches_naive_oracle(self):
        meshes = [generate_structured(1), generate_structured(3), refine_uniform(generate_structured(2))]
        for mesh in meshes:
            for p in (1, 2, 3):
                for d in (1, 2, 3):
                    dof_map = build_dof_map(mesh, p, d)
                    fast = build_pattern(dof_map)
                    naive = build_pattern_naive(dof_map.element_dof_array, dof_map.global_dof_count)
                    self.assertTrue(fast.same_as(naive), f"p={p} d={d} {mesh!r}")

    def test_deterministic(self):
        dof_map = build_dof_map(generate_structured(5), 3, 2)
        first, second = build_pattern(dof_map), build_pattern(dof_map)
        self.assertEqual(first.row_ptr.tobytes(), second.row_ptr.tobytes())
        self.assertEqual(first.cols.tobytes(), second.cols.tobytes())

    def test_d_scaling(self):
        mesh = generate_structured(6)
        for p in (1, 2, 4):
            base = nnz(build_pattern(build_dof_map(mesh, p, 1)))
            for d in (2, 4, 8):
                self.assertEqual(nnz(build_pattern(build_dof_map(mesh, p, d))), d * d * base)

    def test_duplicate_node_in_element_rejected(self):
        mesh = generate_structured(1)
        dof_map = DofMap(mesh=mesh, p=1, d=1, element_nodes=np.array([[0, 1, 1, 2]]), n_global_nodes=4)
        with self.assertRaises(AssertionError):
            build_pattern(dof_map)


class TestNnzReproduction(unittest.TestCase):
    """Entry counts of the structured benchmark meshes"""

    def test_h_suite_finest_d1(self):
        self.assertEqual(nnz(build_pattern(build_dof_map(generate_structured(768), 1, 1))), 5313025)

    def test_p_suite_p8_d1(self):
        self.assertEqual(nnz(build_pattern(build_dof_map(generate_structured(48), 8, 1))), 14753281)

    def test_h_suite_d4(self):
        self.assertEqual(nnz(build_pattern(build_dof_map(generate_structured(192), 1, 4))), 5326864)

    def test_p_suite_final_d4(self):
        # With d=4 the p-suite stops at p=4
        self.assertEqual(nnz(build_pattern(build_dof_map(generate_structured(48), 4, 4))), 21270544)

    def test_d_suite_d8(self):
        self.assertEqual(nnz(build_pattern(build_dof_map(generate_structured(192), 1, 8))), 21307456)


class TestPatternHelpers(unittest.TestCase):
    def test_values_size(self):
        self.assertEqual(values_size_mb(2000000), 16.0)
        self.assertEqual(values_size_mb(0), 0.0)
        self.assertAlmostEqual(values_size_mb(14753281), 118.026248, places=9)

    def test_values_size_of_pattern(self):
        pattern = build_pattern(build_dof_map(generate_structured(6), 1, 1))
        self.assertAlmostEqual(values_size_mb(pattern), 8 * 361 / 1e6)

    def test_from_rows_sorts_and_dedups(self):
        pattern = pattern_from_rows([[3, 1, 1], [], [0]], n_cols=4)
        self.assertEqual(pattern.row_ptr.tolist(), [0, 2, 2, 3])
        self.assertEqual(pattern.cols.tolist(), [1, 3, 0])
        self.assertEqual(pattern.n_cols, 4)

    def test_empty_pattern(self):
        pattern = pattern_from_rows([])
        self.assertEqual(pattern.n_rows, 0)
        self.assertEqual(pattern.row_ptr.tolist(), [0])
        self.assertEqual(nnz(pattern), 0)

    def test_inconsistent_row_ptr(self):
        with self.assertRaises(ValueError):
            SparsityPattern(n_rows=2, row_ptr=np.array([0, 1, 3]), cols=np.array([0, 1]))


if __name__ == "__main__":
    unittest.main()
