"""
Global sparsity pattern: rows with strictly ascending column indices.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from models.mesh import DofMap

logger = logging.getLogger("cracbench.pattern")

BYTES_PER_VALUE = 8


@dataclass(frozen=True, eq=False)
class SparsityPattern:
    """CSR-style structure without values"""
    n_rows: int
    row_ptr: np.ndarray
    cols: np.ndarray
    n_cols: Optional[int] = None

    def __post_init__(self):
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        cols = np.ascontiguousarray(self.cols, dtype=np.int64)
        if row_ptr.shape != (self.n_rows + 1,):
            raise ValueError(f"row_ptr must hold {self.n_rows + 1} offsets, got {row_ptr.shape}")
        if row_ptr[0] != 0 or row_ptr[-1] != cols.size:
            raise ValueError("row_ptr must start at 0 and end at NNZ")
        row_ptr.setflags(write=False)
        cols.setflags(write=False)
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "cols", cols)
        if self.n_cols is None:
            object.__setattr__(self, "n_cols", self.n_rows)

    @property
    def nnz(self) -> int:
        return int(self.cols.size)

    def row(self, r: int) -> np.ndarray:
        return self.cols[self.row_ptr[r]:self.row_ptr[r + 1]]

    def same_as(self, other: "SparsityPattern") -> bool:
        return (self.n_rows == other.n_rows
                and np.array_equal(self.row_ptr, other.row_ptr)
                and np.array_equal(self.cols, other.cols))


def pattern_from_rows(rows: Sequence[Iterable[int]], n_cols: Optional[int] = None) -> SparsityPattern:
    """Pattern from explicit per-row column lists (deduplicated and sorted)"""
    sorted_rows = [sorted(set(int(c) for c in row)) for row in rows]
    counts = np.array([len(row) for row in sorted_rows], dtype=np.int64)
    row_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    cols = np.fromiter((c for row in sorted_rows for c in row), dtype=np.int64, count=int(row_ptr[-1]))
    return SparsityPattern(n_rows=len(sorted_rows), row_ptr=row_ptr, cols=cols, n_cols=n_cols)


def build_pattern_naive(element_dof_arrays: Iterable[Sequence[int]], n_rows: int) -> SparsityPattern:
    """Per-row set accumulation over every element's DOF cross product"""
    rows = [set() for _ in range(n_rows)]
    for dofs in element_dof_arrays:
        dofs = [int(x) for x in dofs]
        for r in dofs:
            rows[r].update(dofs)
    return pattern_from_rows(rows)


def _expand_node_blocks(node_row_ptr: np.ndarray, node_cols: np.ndarray, d: int):
    """
    Expand a node-level pattern to DOF level: node pair (u, w) becomes the
    d x d block of DOFs u*d..u*d+d-1 by w*d..w*d+d-1.
    """
    n_nodes = node_row_ptr.size - 1
    counts = np.diff(node_row_ptr)
    if d == 1:
        return node_row_ptr.copy(), node_cols.copy()

    row_lengths = np.repeat(counts * d, d)
    row_ptr = np.concatenate([[0], np.cumsum(row_lengths)]).astype(np.int64)

    # Column segment shared by all d rows of a node
    segment = (node_cols[:, None] * d + np.arange(d)[None, :]).reshape(-1)
    seg_start = node_row_ptr[:-1] * d
    offset_in_segment = np.arange(segment.size) - np.repeat(seg_start, counts * d)
    cols = np.empty(row_ptr[-1], dtype=np.int64)
    for k in range(d):
        row_start = row_ptr[np.arange(n_nodes) * d + k]
        dest = np.repeat(row_start, counts * d) + offset_in_segment
        cols[dest] = segment
    return row_ptr, cols


def build_pattern(dof_map: DofMap) -> SparsityPattern:
    """
    Union over elements of all (row, col) DOF pairs, deduplicated and sorted.

    Pairs are formed between nodes and then expanded by d, since the DOFs of a
    node are contiguous; the arrays equal the per-row set construction.
    """
    element_nodes = dof_map.element_nodes
    n_nodes = dof_map.n_global_nodes

    if element_nodes.size:
        ordered = np.sort(element_nodes, axis=1)
        assert not (np.diff(ordered, axis=1) == 0).any(), "element lists a node twice"

        keys = (element_nodes[:, :, None] * n_nodes + element_nodes[:, None, :]).reshape(-1)
        keys = np.unique(keys)
        node_rows = keys // n_nodes
        node_cols = keys % n_nodes
        del keys
    else:
        node_rows = np.empty(0, dtype=np.int64)
        node_cols = np.empty(0, dtype=np.int64)

    node_counts = np.bincount(node_rows, minlength=n_nodes)
    node_row_ptr = np.concatenate([[0], np.cumsum(node_counts)]).astype(np.int64)
    row_ptr, cols = _expand_node_blocks(node_row_ptr, node_cols, dof_map.d)

    pattern = SparsityPattern(n_rows=dof_map.global_dof_count, row_ptr=row_ptr, cols=cols)
    logger.debug(f"Pattern for {dof_map!r}: NNZ={pattern.nnz}")
    return pattern


def nnz(pattern: SparsityPattern) -> int:
    return pattern.nnz


def values_size_mb(pattern_or_nnz) -> float:
    """Size of the values array in megabytes: 8 bytes per stored entry / 10^6"""
    count = pattern_or_nnz if isinstance(pattern_or_nnz, (int, np.integer)) else pattern_or_nnz.nnz
    return BYTES_PER_VALUE * int(count) / 1_000_000
