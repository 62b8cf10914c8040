"""
Core module for cracbench: pattern, formats, assembly, colouring and benchmarks
"""
from .errors import (
    CracBenchError, PatternEntryMissingError, SliceNotContiguousError,
    ColouringConflictError, VariantMismatchError, BenchError
)

__all__ = [
    'CracBenchError', 'PatternEntryMissingError', 'SliceNotContiguousError',
    'ColouringConflictError', 'VariantMismatchError', 'BenchError'
]
