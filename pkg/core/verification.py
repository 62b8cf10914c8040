"""
Cross-method verification: every assembly method on both formats must give
the same values array as sequential CSR assembly, bit for bit, when the
element matrices are all ones.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from core.assembly import AssemblyJob, required_variant, reset_values, run_method
from core.colouring import greedy_colouring
from core.formats import SparseMatrix, coordinates, crac_from_pattern, csr_from_pattern
from core.mesh_builder import build_dof_map
from core.pattern import build_pattern
from models.bench import MatrixFormat, Method
from models.mesh import Mesh

logger = logging.getLogger("cracbench.verify")

# Called after each assembly with (method, format, target); used to inject faults
FaultHook = Callable[[Method, MatrixFormat, SparseMatrix], None]


@dataclass
class Discrepancy:
    method: Method
    matrix_format: MatrixFormat
    row: Optional[int]
    col: Optional[int]
    expected: float
    actual: float
    kind: str = "value"

    def describe(self) -> str:
        where = f"({self.row}, {self.col})" if self.row is not None else "matrix"
        return (f"{self.method.value}/{self.matrix_format.value}: {self.kind} mismatch at {where}: "
                f"expected {self.expected!r}, got {self.actual!r}")


@dataclass
class VerificationResult:
    expected_sum: float
    checked: int = 0
    discrepancies: List[Discrepancy] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.discrepancies

    def report(self) -> str:
        if self.ok:
            return f"OK: {self.checked} assemblies bitwise identical, sum {self.expected_sum!r}"
        return "\n".join(d.describe() for d in self.discrepancies)


def verify_assembly(mesh: Mesh, p: int, d: int, threads: int,
                    fault_hook: Optional[FaultHook] = None) -> VerificationResult:
    """
    Assemble with all five methods on CSR and CRAC and compare against the
    sequential CSR result. Also checks conservation: the values sum must equal
    the sum of all element matrix entries.
    """
    dof_map = build_dof_map(mesh, p, d)
    pattern = build_pattern(dof_map)
    colouring = greedy_colouring(mesh, dof_map)
    m = dof_map.dofs_per_element
    expected_sum = float(dof_map.n_elements * m * m)

    reference = csr_from_pattern(pattern)
    reference_job = AssemblyJob.from_dof_map(dof_map, reference, 1, debug_checks=True)
    run_method(Method.SEQUENTIAL, reference_job)
    rows, cols = coordinates(reference)

    result = VerificationResult(expected_sum=expected_sum)
    builders = {MatrixFormat.CSR: csr_from_pattern, MatrixFormat.CRAC: crac_from_pattern}

    for matrix_format, build in builders.items():
        for method in Method:
            target = build(pattern, required_variant(method))
            job = AssemblyJob.from_dof_map(dof_map, target, 1 if method is Method.SEQUENTIAL else threads,
                                           debug_checks=True)
            reset_values(target)
            run_method(method, job, colouring)
            if fault_hook is not None:
                fault_hook(method, matrix_format, target)
            result.checked += 1

            # Both formats order values by row then column, so arrays compare directly
            differs = np.flatnonzero(target.values.view(np.int64) != reference.values.view(np.int64))
            if differs.size:
                k = int(differs[0])
                result.discrepancies.append(Discrepancy(
                    method, matrix_format, int(rows[k]), int(cols[k]),
                    float(reference.values[k]), float(target.values[k])))

            total = float(target.values.sum())
            if total != expected_sum:
                result.discrepancies.append(Discrepancy(
                    method, matrix_format, None, None, expected_sum, total, kind="conservation"))

            if target.rows is not None and not target.rows.all_unlocked():
                locked = int((target.rows.entries < 0).sum())
                result.discrepancies.append(Discrepancy(
                    method, matrix_format, None, None, 0, locked, kind="locked rows"))

    if result.ok:
        logger.info(f"Verification passed for p={p} d={d} threads={threads}: {result.checked} assemblies")
    else:
        logger.error(f"Verification failed: {len(result.discrepancies)} discrepancies")
    return result
