import unittest

from core.formats import coordinates
from core.mesh_builder import generate_structured, refine_uniform
from core.verification import verify_assembly
from models.bench import MatrixFormat, Method


class TestVerifyAssembly(unittest.TestCase):
    def test_vector_problem_many_threads(self):
        result = verify_assembly(generate_structured(16), 1, 4, 8)
        self.assertTrue(result.ok, result.report())
        self.assertEqual(result.checked, 10)
        self.assertEqual(result.expected_sum, 256 * 16.0 * 16.0)

    def test_single_element(self):
        result = verify_assembly(generate_structured(1), 1, 1, 4)
        self.assertTrue(result.ok)
        self.assertIn("OK", result.report())

    def test_refined_high_order(self):
        self.assertTrue(verify_assembly(refine_uniform(generate_structured(2)), 3, 1, 4).ok)

    def test_injected_fault_is_located(self):
        hit = {}

        def corrupt(method, matrix_format, target):
            if method is Method.ATOMIC and matrix_format is MatrixFormat.CSR:
                target.values[5] += 0.5
                rows, cols = coordinates(target)
                hit["at"] = (int(rows[5]), int(cols[5]))

        result = verify_assembly(generate_structured(3), 1, 1, 4, fault_hook=corrupt)
        self.assertFalse(result.ok)
        kinds = {(d.method, d.matrix_format, d.kind) for d in result.discrepancies}
        self.assertEqual(kinds, {(Method.ATOMIC, MatrixFormat.CSR, "value"),
                                 (Method.ATOMIC, MatrixFormat.CSR, "conservation")})
        value = next(d for d in result.discrepancies if d.kind == "value")
        self.assertEqual((value.row, value.col), hit["at"])
        self.assertEqual(value.actual, value.expected + 0.5)
        self.assertIn("atomic/csr", result.report())

    def test_locked_row_reported(self):
        def leave_locked(method, matrix_format, target):
            if method is Method.SPIN and matrix_format is MatrixFormat.CRAC:
                target.rows.lock_row(0)

        result = verify_assembly(generate_structured(2), 1, 1, 2, fault_hook=leave_locked)
        self.assertEqual([d.kind for d in result.discrepancies], ["locked rows"])


if __name__ == "__main__":
    unittest.main()
