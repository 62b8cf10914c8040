"""
Assembly of element matrices into a global sparse matrix.

Five algorithms: sequential, atomic (per-coefficient atomic add), spin
(row lock from the signed row pointers), spin-vectorized (row lock plus one
contiguous slice add per DOF run) and coloured-vectorized (no locks; colours
run one after another, elements of a colour in parallel).

The element loops are compiled kernels (core.kernels) that release the GIL;
worker threads claim chunks of elements and run a kernel over each chunk.
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from config.settings import config
from core.colouring import validate_colouring
from core.errors import PatternEntryMissingError, SliceNotContiguousError, VariantMismatchError
from core.formats import CracMatrix, SparseMatrix
from core.kernels import (
    ATOMIC_ADD, FAULT_MISSING, FAULT_NOT_CONTIGUOUS, LOCKED_ADD, PLAIN_ADD, new_fault,
    scalar_add_kernel, slice_add_kernel
)
from core.sync import AtomicCounter
from models.bench import Method, Variant
from models.colouring import Colouring
from models.mesh import DofMap, ElementDofs, ElementMatrix

logger = logging.getLogger("cracbench.assembly")

ElementSupplier = Callable[[int], ElementMatrix]
ChunkBody = Callable[[int, int], None]


def _pack_elements(elements: Sequence[ElementDofs]) -> Tuple[np.ndarray, ...]:
    """Padded (dofs, dof_count, runs, run_count) arrays of the element table"""
    n = len(elements)
    width = max((d.size for d in elements), default=0)
    n_runs = max((d.n_runs for d in elements), default=0)
    dofs = np.zeros((n, width), dtype=np.int64)
    runs = np.zeros((n, n_runs, 2), dtype=np.int64)
    dof_count = np.zeros(n, dtype=np.int64)
    run_count = np.zeros(n, dtype=np.int64)
    for e, element in enumerate(elements):
        dofs[e, :element.size] = element.flat
        runs[e, :element.n_runs] = element.runs
        dof_count[e] = element.size
        run_count[e] = element.n_runs
    return dofs, dof_count, runs, run_count


def _stack_matrices(matrices: Sequence[ElementMatrix], dof_count: np.ndarray) -> np.ndarray:
    width = int(dof_count.max(initial=0))
    stack = np.zeros((len(matrices), width, width), dtype=np.float64)
    for e, matrix in enumerate(matrices):
        if matrix.order != dof_count[e]:
            raise ValueError(f"element {e}: matrix order {matrix.order} != {dof_count[e]} DOFs")
        stack[e, :matrix.order, :matrix.order] = matrix.values
    return stack


@dataclass
class AssemblyJob:
    """
    Elements to assemble into target, packed for the kernels.

    matrices holds one element matrix shared by every element (shape (1, M, M))
    or one per element (shape (Q, M, M)).
    """
    dofs: np.ndarray        # (Q, M) flat DOF arrays, zero padded
    dof_count: np.ndarray   # (Q,)
    runs: np.ndarray        # (Q, R, 2) (start, length) runs, zero padded
    run_count: np.ndarray   # (Q,)
    matrices: np.ndarray
    target: SparseMatrix
    thread_count: int = 1
    debug_checks: Optional[bool] = None

    def __post_init__(self):
        if self.thread_count < 1:
            raise ValueError(f"thread_count must be >= 1, got {self.thread_count}")
        if self.debug_checks is None:
            self.debug_checks = config.assembly.debug_checks
        highest = int(self.dofs.max(initial=-1)) if self.dofs.size else -1
        if highest >= self.target.n_rows:
            raise ValueError(f"DOF {highest} is beyond the last row {self.target.n_rows - 1}")

    @classmethod
    def from_dof_map(cls, dof_map: DofMap, target: SparseMatrix, thread_count: int = 1,
                     supplier: Optional[ElementSupplier] = None,
                     debug_checks: Optional[bool] = None) -> "AssemblyJob":
        dofs, dof_count, runs, run_count = _pack_elements(dof_map.element_dofs_table)
        if supplier is None:
            m = dof_map.dofs_per_element
            matrices = np.ones((1, m, m), dtype=np.float64)
        else:
            matrices = _stack_matrices([supplier(e) for e in range(dof_map.n_elements)], dof_count)
        return cls(dofs, dof_count, runs, run_count, matrices, target, thread_count, debug_checks)

    @classmethod
    def from_pairs(cls, pairs: Sequence[Tuple[ElementDofs, ElementMatrix]], target: SparseMatrix,
                   thread_count: int = 1, debug_checks: Optional[bool] = None) -> "AssemblyJob":
        dofs, dof_count, runs, run_count = _pack_elements([element for element, _ in pairs])
        matrices = _stack_matrices([matrix for _, matrix in pairs], dof_count)
        return cls(dofs, dof_count, runs, run_count, matrices, target, thread_count, debug_checks)

    @property
    def n_elements(self) -> int:
        return int(self.dof_count.size)

    def element_dofs(self, e: int) -> np.ndarray:
        return self.dofs[e, :self.dof_count[e]]

    def target_arrays(self) -> tuple:
        """(ptr, signed, index, is_crac, threshold) lookup arguments of the kernels"""
        target = self.target
        if target.rows is not None:
            ptr, signed = target.rows.entries, True
        else:
            ptr, signed = target.row_ptr, False
        is_crac = isinstance(target, CracMatrix)
        index = target.col_align if is_crac else target.cols
        return ptr, signed, index, is_crac, config.formats.linear_search_threshold


def random_supplier(dof_map: DofMap, seed: int = 0) -> ElementSupplier:
    """Uniform [0, 1) element matrices, identical for an element on every call"""
    m = dof_map.dofs_per_element

    def supply(e: int) -> ElementMatrix:
        return ElementMatrix(np.random.default_rng([seed, e]).random((m, m)))

    return supply


def parallel_for(n: int, threads: int, body: ChunkBody,
                 pool: Optional[ThreadPoolExecutor] = None) -> None:
    """
    Run body(start, stop) over chunks covering 0..n-1 on threads workers.

    Workers claim chunks from a shared counter until the range is exhausted;
    the first exception stops further claims and is re-raised here.
    """
    if threads <= 1 or n <= 1:
        if n > 0:
            body(0, n)
        return

    chunk = max(1, n // (threads * config.assembly.chunks_per_thread))
    next_index = AtomicCounter()
    failed = threading.Event()

    def worker():
        while not failed.is_set():
            start = next_index.fetch_add(chunk)
            if start >= n:
                return
            try:
                body(start, min(n, start + chunk))
            except BaseException:
                failed.set()
                raise

    if pool is None:
        with ThreadPoolExecutor(max_workers=threads) as own_pool:
            futures = [own_pool.submit(worker) for _ in range(threads)]
    else:
        futures = [pool.submit(worker) for _ in range(threads)]
    for future in futures:
        future.result()


def _require_variant(job: AssemblyJob, variant: Variant, method: str) -> None:
    if job.target.variant is not variant:
        raise VariantMismatchError(
            f"{method} needs a {variant.value} target, got {job.target.variant.value}")


def _raise_fault(fault: np.ndarray) -> None:
    kind, e, row, col, length = (int(v) for v in fault)
    if kind == FAULT_MISSING:
        raise PatternEntryMissingError(e, row, col)
    if kind == FAULT_NOT_CONTIGUOUS:
        raise SliceNotContiguousError(row, col, length, e)


def _scalar_body(job: AssemblyJob, order: np.ndarray, mode: int) -> ChunkBody:
    lookup = job.target_arrays()
    values = job.target.values
    bits = job.target.atomic.bits if mode == ATOMIC_ADD else values.view(np.int64)

    def body(start: int, stop: int):
        fault = new_fault()
        scalar_add_kernel(order, start, stop, job.dofs, job.dof_count, job.matrices,
                          *lookup, values, bits, mode, fault)
        _raise_fault(fault)

    return body


def _slice_body(job: AssemblyJob, order: np.ndarray, locked: bool) -> ChunkBody:
    lookup = job.target_arrays()
    values = job.target.values
    check = bool(job.debug_checks)

    def body(start: int, stop: int):
        fault = new_fault()
        slice_add_kernel(order, start, stop, job.dofs, job.dof_count, job.runs, job.run_count,
                         job.matrices, *lookup, values, locked, check, fault)
        _raise_fault(fault)

    return body


def _all_elements(job: AssemblyJob) -> np.ndarray:
    return np.arange(job.n_elements, dtype=np.int64)


def assemble_sequential(job: AssemblyJob) -> None:
    """G(D(r), D(c)) += K(r, c) element by element on one thread"""
    _require_variant(job, Variant.PLAIN, "sequential assembly")
    _scalar_body(job, _all_elements(job), PLAIN_ADD)(0, job.n_elements)


def assemble_atomic(job: AssemblyJob) -> None:
    """Parallel over elements; every coefficient goes through an atomic add"""
    _require_variant(job, Variant.ATOMIC, "atomic assembly")
    parallel_for(job.n_elements, job.thread_count,
                 _scalar_body(job, _all_elements(job), ATOMIC_ADD))


def assemble_spin(job: AssemblyJob) -> None:
    """Parallel over elements; each coefficient of a local row is added under the row lock"""
    _require_variant(job, Variant.LOCKABLE, "spin assembly")
    parallel_for(job.n_elements, job.thread_count,
                 _scalar_body(job, _all_elements(job), LOCKED_ADD))


def assemble_spin_vectorized(job: AssemblyJob) -> None:
    """Like spin, but each DOF run of the element is one contiguous slice add"""
    _require_variant(job, Variant.LOCKABLE, "vectorized spin assembly")
    parallel_for(job.n_elements, job.thread_count,
                 _slice_body(job, _all_elements(job), locked=True))


def assemble_coloured_vectorized(job: AssemblyJob, colouring: Colouring,
                                 check: Optional[bool] = None) -> None:
    """
    Colours in sequence, elements of one colour in parallel, slice adds without
    locks. With check (default: the job's debug checks) the colouring is
    validated against the job's DOF arrays first.
    """
    _require_variant(job, Variant.PLAIN, "coloured assembly")
    if colouring.n_elements != job.n_elements:
        raise ValueError(
            f"colouring covers {colouring.n_elements} elements, job has {job.n_elements}")
    if job.debug_checks if check is None else check:
        validate_colouring(colouring, [job.element_dofs(e) for e in range(job.n_elements)])

    with ThreadPoolExecutor(max_workers=job.thread_count) as pool:
        for members in colouring.colour_classes:
            order = np.ascontiguousarray(members, dtype=np.int64)
            # parallel_for joins all workers: the barrier between colours
            parallel_for(order.size, job.thread_count, _slice_body(job, order, locked=False), pool)


def reset_values(target: SparseMatrix) -> None:
    """Zero the values array; pattern arrays are left untouched"""
    target.values.fill(0.0)


# Method -> (assembler, required target variant)
ASSEMBLERS: Dict[Method, Tuple[Callable, Variant]] = {
    Method.SEQUENTIAL: (assemble_sequential, Variant.PLAIN),
    Method.ATOMIC: (assemble_atomic, Variant.ATOMIC),
    Method.SPIN: (assemble_spin, Variant.LOCKABLE),
    Method.SPIN_VEC: (assemble_spin_vectorized, Variant.LOCKABLE),
    Method.COLOUR_VEC: (assemble_coloured_vectorized, Variant.PLAIN),
}


def required_variant(method: Method) -> Variant:
    return ASSEMBLERS[method][1]


def run_method(method: Method, job: AssemblyJob, colouring: Optional[Colouring] = None) -> None:
    """Dispatch to the assembler of method"""
    assembler, _ = ASSEMBLERS[method]
    if method is Method.COLOUR_VEC:
        if colouring is None:
            raise ValueError("coloured assembly needs a colouring")
        assembler(job, colouring)
    else:
        assembler(job)
