import threading
import unittest

import numpy as np

from core.assembly import (
    AssemblyJob, assemble_coloured_vectorized, assemble_sequential, parallel_for, random_supplier,
    required_variant, reset_values, run_method
)
from core.colouring import greedy_colouring
from core.errors import (
    ColouringConflictError, PatternEntryMissingError, SliceNotContiguousError, VariantMismatchError
)
from core.formats import crac_from_pattern, csr_from_pattern, get, to_dense
from core.mesh_builder import (
    build_dof_map, encode_runs, generate_structured, mesh_from_arrays, refine_uniform
)
from core.pattern import build_pattern, pattern_from_rows
from models.bench import Method, Variant
from models.colouring import Colouring
from models.mesh import ElementDofs, ElementMatrix

BUILDERS = (csr_from_pattern, crac_from_pattern)


def assemble(mesh, p, d, method, build, threads, supplier=None):
    dof_map = build_dof_map(mesh, p, d)
    target = build(build_pattern(dof_map), required_variant(method))
    job = AssemblyJob.from_dof_map(dof_map, target, threads, supplier)
    colouring = greedy_colouring(mesh, dof_map) if method is Method.COLOUR_VEC else None
    run_method(method, job, colouring)
    return target


def random_grid_mesh(rng):
    """Rectangular grid of at most 32 quads with shuffled vertex and element numbering"""
    nx = int(rng.integers(1, 9))
    ny = int(rng.integers(1, 32 // nx + 1))
    xs, ys = np.meshgrid(np.arange(nx + 1, dtype=np.float64), np.arange(ny + 1, dtype=np.float64))
    nodes = np.stack([xs.reshape(-1), ys.reshape(-1)], axis=1)
    j, i = np.divmod(np.arange(nx * ny), nx)
    v0 = j * (nx + 1) + i
    quads = np.stack([v0, v0 + 1, v0 + nx + 2, v0 + nx + 1], axis=1)

    relabel = rng.permutation(nodes.shape[0])
    moved = np.empty_like(nodes)
    moved[relabel] = nodes
    quads = relabel[quads]
    # Rotating the vertex list keeps each quad counter-clockwise
    quads = np.array([np.roll(q, -int(rng.integers(0, 4))) for q in quads])
    quads = quads[rng.permutation(quads.shape[0])]
    return mesh_from_arrays(moved, quads)


def dense_assembly(dof_map, supplier):
    n = dof_map.global_dof_count
    dense = np.zeros((n, n))
    for e, dofs in enumerate(dof_map.element_dof_array):
        k_e = supplier(e).values
        for a, row in enumerate(dofs):
            for b, col in enumerate(dofs):
                dense[row, col] += k_e[a, b]
    return dense


class TestSmallAssemblies(unittest.TestCase):
    def test_single_element(self):
        mesh = generate_structured(1)
        for build in BUILDERS:
            for method in Method:
                target = assemble(mesh, 1, 1, method, build, 4)
                self.assertTrue((target.values == 1.0).all(), f"{method} {build.__name__}")
                self.assertEqual(target.nnz, 16)

    def test_node_multiplicity_on_diagonal(self):
        mesh = generate_structured(2)
        for build in BUILDERS:
            for method in Method:
                target = assemble(mesh, 1, 1, method, build, 4)
                # corner, edge midpoint, centre
                self.assertEqual(get(target, 0, 0), 1.0)
                self.assertEqual(get(target, 1, 1), 2.0)
                self.assertEqual(get(target, 4, 4), 4.0)
                self.assertEqual(float(target.values.sum()), 64.0)

    def test_no_reset_accumulates(self):
        mesh = generate_structured(2)
        dof_map = build_dof_map(mesh, 1, 1)
        target = csr_from_pattern(build_pattern(dof_map))
        job = AssemblyJob.from_dof_map(dof_map, target)
        run_method(Method.SEQUENTIAL, job)
        first = target.values.copy()
        run_method(Method.SEQUENTIAL, job)
        np.testing.assert_array_equal(target.values, 2 * first)
        reset_values(target)
        self.assertEqual(float(target.values.sum()), 0.0)


class TestCrossMethod(unittest.TestCase):
    def check_identical(self, mesh, p, d, thread_counts=(1, 4, 8)):
        dof_map = build_dof_map(mesh, p, d)
        pattern = build_pattern(dof_map)
        colouring = greedy_colouring(mesh, dof_map)
        m = dof_map.dofs_per_element
        total = float(mesh.n_elements * m * m)

        reference = csr_from_pattern(pattern)
        run_method(Method.SEQUENTIAL, AssemblyJob.from_dof_map(dof_map, reference))
        self.assertEqual(float(reference.values.sum()), total)
        for build in BUILDERS:
            for method in Method:
                target = build(pattern, required_variant(method))
                for threads in thread_counts:
                    reset_values(target)
                    job = AssemblyJob.from_dof_map(dof_map, target, threads)
                    run_method(method, job, colouring)
                    label = f"{method.value} {build.__name__} p={p} d={d} threads={threads}"
                    self.assertTrue(np.array_equal(target.values, reference.values), label)
                    self.assertEqual(float(target.values.sum()), total, label)

    def test_structured_48(self):
        mesh = generate_structured(48)
        for p in (1, 3):
            for d in (1, 4):
                self.check_identical(mesh, p, d)

    def test_refined_mesh(self):
        self.check_identical(refine_uniform(generate_structured(3)), 2, 2)

    def test_random_element_matrices(self):
        mesh = generate_structured(6)
        dof_map = build_dof_map(mesh, 2, 2)
        supplier = random_supplier(dof_map, seed=3)
        reference = assemble(mesh, 2, 2, Method.SEQUENTIAL, csr_from_pattern, 1, supplier).values
        for build in BUILDERS:
            for method in Method:
                values = assemble(mesh, 2, 2, method, build, 8, supplier).values
                np.testing.assert_allclose(values, reference, rtol=1e-12, atol=1e-12)

    def test_conservation(self):
        mesh = generate_structured(5)
        for p, d in ((1, 1), (2, 3), (4, 1)):
            m = d * (p + 1) ** 2
            for build in BUILDERS:
                for method in Method:
                    target = assemble(mesh, p, d, method, build, 4)
                    self.assertEqual(float(target.values.sum()), 25.0 * m * m)

    def test_pattern_left_untouched(self):
        mesh = generate_structured(4)
        dof_map = build_dof_map(mesh, 2, 1)
        pattern = build_pattern(dof_map)
        crac = crac_from_pattern(pattern, Variant.LOCKABLE)
        before = crac.col_align.copy(), crac.rows.offsets()
        run_method(Method.SPIN_VEC, AssemblyJob.from_dof_map(dof_map, crac, 4))
        np.testing.assert_array_equal(crac.col_align, before[0])
        np.testing.assert_array_equal(crac.rows.offsets(), before[1])
        self.assertTrue(crac.rows.all_unlocked())


class TestDenseOracle(unittest.TestCase):
    def check_random_meshes(self, make_supplier, exact):
        rng = np.random.default_rng(2024)
        for trial in range(100):
            mesh = random_grid_mesh(rng)
            p, d = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            dof_map = build_dof_map(mesh, p, d)
            supplier = make_supplier(dof_map, trial)
            expected = dense_assembly(dof_map, supplier)
            pattern = build_pattern(dof_map)
            for build in BUILDERS:
                target = build(pattern)
                assemble_sequential(AssemblyJob.from_dof_map(dof_map, target, 1, supplier))
                label = f"trial {trial} {build.__name__} p={p} d={d} Q={mesh.n_elements}"
                if exact:
                    np.testing.assert_array_equal(to_dense(target), expected, label)
                else:
                    np.testing.assert_allclose(to_dense(target), expected, rtol=1e-12, atol=0,
                                               err_msg=label)

    def test_integer_element_matrices(self):
        def integer_supplier(dof_map, trial):
            m = dof_map.dofs_per_element
            stack = np.random.default_rng(trial).integers(-9, 10, size=(dof_map.n_elements, m, m))
            return lambda e: ElementMatrix(stack[e].astype(np.float64))

        self.check_random_meshes(integer_supplier, exact=True)

    def test_random_element_matrices(self):
        self.check_random_meshes(lambda dof_map, trial: random_supplier(dof_map, seed=trial),
                                 exact=False)


class TestVectorizedRuns(unittest.TestCase):
    def setUp(self):
        flat = [52, 53, 54, 55, 96, 97, 98, 99, 100, 101, 102, 103, 48, 49, 50, 51]
        self.dofs = ElementDofs(flat=flat, runs=encode_runs(flat))
        rows = [sorted(flat) if r in flat else [] for r in range(104)]
        self.pattern = pattern_from_rows(rows, n_cols=104)
        self.matrix = ElementMatrix(np.arange(256, dtype=np.float64).reshape(16, 16))

    def test_runs_packed_per_element(self):
        job = AssemblyJob.from_pairs([(self.dofs, self.matrix)], csr_from_pattern(self.pattern))
        self.assertEqual(job.run_count.tolist(), [3])
        self.assertEqual(job.runs[0].tolist(), [[52, 4], [96, 8], [48, 4]])

    def test_slice_adds_follow_runs(self):
        # First stored row is 48 (local 12): columns 48..51, 52..55, 96..103
        k_row = self.matrix.values[12]
        expected = np.concatenate([k_row[12:16], k_row[0:4], k_row[4:12]])
        for method, variant in ((Method.SPIN_VEC, Variant.LOCKABLE), (Method.COLOUR_VEC, Variant.PLAIN)):
            for build in BUILDERS:
                target = build(self.pattern, variant)
                job = AssemblyJob.from_pairs([(self.dofs, self.matrix)], target, debug_checks=True)
                run_method(method, job, Colouring([0]))
                np.testing.assert_array_equal(target.values[0:16], expected)
                self.assertEqual(float(target.values.sum()), float(self.matrix.values.sum()))

    def test_run_split_in_target_row(self):
        # Column 98 missing from every row: the 96..103 run is not contiguous
        rows = [[c for c in sorted(self.dofs.flat.tolist()) if c != 98] if r in self.dofs.flat else []
                for r in range(104)]
        pattern = pattern_from_rows(rows, n_cols=104)
        for method, variant in ((Method.SPIN_VEC, Variant.LOCKABLE), (Method.COLOUR_VEC, Variant.PLAIN)):
            for build in BUILDERS:
                target = build(pattern, variant)
                job = AssemblyJob.from_pairs([(self.dofs, self.matrix)], target, debug_checks=True)
                with self.assertRaises(SliceNotContiguousError) as ctx:
                    run_method(method, job, Colouring([0]))
                self.assertEqual((ctx.exception.col_start, ctx.exception.length), (96, 8))
                self.assertEqual(ctx.exception.element, 0)
                if target.rows is not None:
                    self.assertTrue(target.rows.all_unlocked())


class TestErrors(unittest.TestCase):
    def setUp(self):
        self.mesh = generate_structured(2)
        self.dof_map = build_dof_map(self.mesh, 1, 1)
        self.pattern = build_pattern(self.dof_map)

    def test_variant_mismatch(self):
        target = csr_from_pattern(self.pattern)
        job = AssemblyJob.from_dof_map(self.dof_map, target, 2)
        for method in (Method.ATOMIC, Method.SPIN, Method.SPIN_VEC):
            with self.assertRaises(VariantMismatchError):
                run_method(method, job)
        locked = AssemblyJob.from_dof_map(self.dof_map, crac_from_pattern(self.pattern, Variant.LOCKABLE))
        with self.assertRaises(VariantMismatchError):
            assemble_sequential(locked)

    def test_missing_pattern_entry(self):
        diagonal = pattern_from_rows([[r] for r in range(9)], n_cols=9)
        for build in BUILDERS:
            for method in (Method.SEQUENTIAL, Method.ATOMIC, Method.SPIN):
                target = build(diagonal, required_variant(method))
                with self.assertRaises(PatternEntryMissingError) as ctx:
                    run_method(method, AssemblyJob.from_dof_map(self.dof_map, target, 1))
                self.assertEqual(ctx.exception.element, 0)
                self.assertEqual(ctx.exception.row, 0)
                if target.rows is not None:
                    self.assertTrue(target.rows.all_unlocked())

    def test_missing_entry_many_threads(self):
        diagonal = pattern_from_rows([[r] for r in range(9)], n_cols=9)
        target = csr_from_pattern(diagonal, Variant.LOCKABLE)
        with self.assertRaises(PatternEntryMissingError):
            run_method(Method.SPIN, AssemblyJob.from_dof_map(self.dof_map, target, 4))
        self.assertTrue(target.rows.all_unlocked())

    def test_conflicting_colouring(self):
        job = AssemblyJob.from_dof_map(self.dof_map, csr_from_pattern(self.pattern), 2)
        with self.assertRaises(ColouringConflictError):
            assemble_coloured_vectorized(job, Colouring([0, 0, 0, 0]), check=True)
        self.assertEqual(float(job.target.values.sum()), 0.0)

    def test_unchecked_job_skips_colouring_validation(self):
        job = AssemblyJob.from_dof_map(self.dof_map, csr_from_pattern(self.pattern), 1,
                                       debug_checks=False)
        # One colour, one thread: wrong colouring, still a sequential order
        assemble_coloured_vectorized(job, Colouring([0, 0, 0, 0]))
        self.assertEqual(float(job.target.values.sum()), 64.0)

    def test_colour_method_needs_colouring(self):
        job = AssemblyJob.from_dof_map(self.dof_map, csr_from_pattern(self.pattern))
        with self.assertRaises(ValueError):
            run_method(Method.COLOUR_VEC, job)

    def test_dofs_beyond_target(self):
        small = csr_from_pattern(pattern_from_rows([[0]], n_cols=1))
        with self.assertRaises(ValueError):
            AssemblyJob.from_dof_map(self.dof_map, small)

    def test_matrix_order_checked(self):
        target = csr_from_pattern(self.pattern)
        with self.assertRaises(ValueError):
            AssemblyJob.from_dof_map(self.dof_map, target,
                                     supplier=lambda e: ElementMatrix(np.ones((3, 3))))

    def test_thread_count(self):
        with self.assertRaises(ValueError):
            AssemblyJob.from_dof_map(self.dof_map, csr_from_pattern(self.pattern), 0)


class TestParallelFor(unittest.TestCase):
    def test_every_index_once(self):
        seen = np.zeros(1000, dtype=np.int64)
        lock = threading.Lock()

        def body(start, stop):
            with lock:
                seen[start:stop] += 1

        parallel_for(1000, 8, body)
        self.assertTrue((seen == 1).all())

    def test_single_thread_runs_one_chunk(self):
        chunks = []
        parallel_for(10, 1, lambda start, stop: chunks.append((start, stop)))
        self.assertEqual(chunks, [(0, 10)])
        parallel_for(0, 4, lambda start, stop: chunks.append((start, stop)))
        self.assertEqual(len(chunks), 1)

    def test_exception_propagates(self):
        def body(start, stop):
            if start <= 37 < stop:
                raise RuntimeError("boom")

        with self.assertRaises(RuntimeError):
            parallel_for(100, 4, body)


class TestStress(unittest.TestCase):
    def test_repeated_contended_assembly(self):
        # Every element of the 2x2 mesh shares the centre node
        mesh = generate_structured(2)
        dof_map = build_dof_map(mesh, 1, 1)
        pattern = build_pattern(dof_map)
        reference = assemble(mesh, 1, 1, Method.SEQUENTIAL, csr_from_pattern, 1).values
        for method, build in ((Method.SPIN, crac_from_pattern), (Method.ATOMIC, csr_from_pattern)):
            target = build(pattern, required_variant(method))
            job = AssemblyJob.from_dof_map(dof_map, target, 8)
            for _ in range(10000):
                reset_values(target)
                run_method(method, job)
                self.assertEqual(float(target.values.sum()), 64.0, method.value)
                self.assertTrue(np.array_equal(target.values, reference), method.value)
                if target.rows is not None:
                    self.assertTrue(target.rows.all_unlocked())


if __name__ == "__main__":
    unittest.main()
