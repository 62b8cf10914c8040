"""
Exceptions raised by the assembly library
"""
from typing import Optional


class CracBenchError(Exception):
    """Base class for library errors"""


class PatternEntryMissingError(CracBenchError):
    """An element contributes to a coefficient the sparsity pattern does not hold"""

    def __init__(self, element: int, row: int, col: int):
        self.element = element
        self.row = row
        self.col = col
        super().__init__(f"element {element}: coefficient ({row}, {col}) not in sparsity pattern")


class SliceNotContiguousError(CracBenchError):
    """A column run is not stored contiguously in the target row"""

    def __init__(self, row: int, col_start: int, length: int, element: Optional[int] = None):
        self.row = row
        self.col_start = col_start
        self.length = length
        self.element = element
        where = f"element {element}: " if element is not None else ""
        super().__init__(
            f"{where}columns {col_start}..{col_start + length - 1} not contiguous in row {row}")


class ColouringConflictError(CracBenchError):
    """Two elements of one colour share a node"""

    def __init__(self, colour: int, element_a: int, element_b: int, node: int):
        self.colour = colour
        self.element_a = element_a
        self.element_b = element_b
        self.node = node
        super().__init__(
            f"colour {colour}: elements {element_a} and {element_b} share node {node}")


class VariantMismatchError(CracBenchError):
    """Assembly algorithm called on a matrix variant it cannot synchronise"""


class BenchError(CracBenchError):
    """Invalid benchmark input (timings, empty patterns)"""
