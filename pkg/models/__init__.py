"""
Models module for cracbench
"""
from .mesh import Mesh, DofMap, ElementDofs, ElementMatrix
from .colouring import Colouring
from .bench import (
    Suite, Method, MatrixFormat, Variant,
    BenchConfig, BenchRecord, BenchFailure, BenchReport
)

__all__ = [
    'Mesh', 'DofMap', 'ElementDofs', 'ElementMatrix', 'Colouring',
    'Suite', 'Method', 'MatrixFormat', 'Variant',
    'BenchConfig', 'BenchRecord', 'BenchFailure', 'BenchReport'
]
