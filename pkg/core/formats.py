"""
CSR and CRAC sparse matrix storage.

CSR keeps one column index per stored value. CRAC (compressed row, aligned
columns) keeps one (column_start, values_position) pair per maximal run of
consecutive columns in a row, plus a final pair (n_cols, NNZ) closing the
values array. Both lay out the values array identically: row by row,
ascending column.

Each format comes in three variants: PLAIN, ATOMIC (values addable from
many threads) and LOCKABLE (row pointers double as spin locks; no separate
plain row pointer array is kept).
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Tuple, Union

import numpy as np
import scipy.io
import scipy.sparse

from config.settings import config
from core.errors import SliceNotContiguousError
from core.pattern import SparsityPattern
from core.sync import AtomicValues, LockableRows, atomic_add, lock_row, read_offset, unlock_row
from models.bench import Variant

logger = logging.getLogger("cracbench.formats")

# Lock storage a row-lock array would cost per row, for memory comparisons
MUTEX_BYTES_PER_ROW = 80
SPIN_MUTEX_BYTES_PER_ROW = 4

__all__ = [
    "CsrMatrix", "CracMatrix", "SparseMatrix", "Variant",
    "csr_from_pattern", "crac_from_pattern", "csr_locate", "crac_locate",
    "linear_row_search", "binary_row_search", "locate",
    "row_slice_add", "get", "coordinates", "entries", "to_dense",
    "write_matrix_market", "memory_footprint",
    "lock_row", "unlock_row", "read_offset", "atomic_add",
]


@dataclass(eq=False)
class _Storage:
    """State shared by both formats"""
    n_rows: int
    n_cols: int
    values: np.ndarray
    variant: Variant
    row_ptr: Optional[np.ndarray] = None
    rows: Optional[LockableRows] = None
    atomic: Optional[AtomicValues] = None

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def row_bounds(self, r: int) -> Tuple[int, int]:
        """Start and end of row r in the index array (cols or col_align)"""
        if self.rows is not None:
            return self.rows.read_offset(r), self.rows.read_offset(r + 1)
        return int(self.row_ptr[r]), int(self.row_ptr[r + 1])

    def plain_row_ptr(self) -> np.ndarray:
        if self.rows is not None:
            return self.rows.offsets()
        return self.row_ptr.copy()


@dataclass(eq=False)
class CsrMatrix(_Storage):
    """Compressed sparse row"""
    cols: np.ndarray = None

    def __repr__(self) -> str:
        return f"CsrMatrix(rows={self.n_rows}, nnz={self.nnz}, variant={self.variant.value})"


@dataclass(eq=False)
class CracMatrix(_Storage):
    """Compressed row, aligned columns"""
    col_align: np.ndarray = None

    @property
    def n_runs(self) -> int:
        return (int(self.col_align.size) - 2) // 2

    def __repr__(self) -> str:
        return (f"CracMatrix(rows={self.n_rows}, nnz={self.nnz}, runs={self.n_runs}, "
                f"variant={self.variant.value})")


SparseMatrix = Union[CsrMatrix, CracMatrix]


def _variant_storage(row_ptr: np.ndarray, nnz: int, variant: Variant) -> dict:
    storage = {"variant": variant}
    if variant is Variant.ATOMIC:
        atomic = AtomicValues(nnz)
        storage.update(values=atomic.values, atomic=atomic)
    else:
        storage["values"] = np.zeros(nnz, dtype=np.float64)

    if variant is Variant.LOCKABLE:
        storage["rows"] = LockableRows(row_ptr)
    else:
        plain = np.array(row_ptr, dtype=np.int64)
        plain.setflags(write=False)
        storage["row_ptr"] = plain
    return storage


def csr_from_pattern(pattern: SparsityPattern, variant: Variant = Variant.PLAIN) -> CsrMatrix:
    """CSR matrix over the pattern with all values 0.0"""
    return CsrMatrix(
        n_rows=pattern.n_rows,
        n_cols=pattern.n_cols,
        cols=pattern.cols,
        **_variant_storage(pattern.row_ptr, pattern.nnz, variant),
    )


def crac_from_pattern(pattern: SparsityPattern, variant: Variant = Variant.PLAIN) -> CracMatrix:
    """CRAC matrix over the pattern with all values 0.0; runs are maximal per row"""
    cols = pattern.cols
    counts = np.diff(pattern.row_ptr)
    row_of = np.repeat(np.arange(pattern.n_rows, dtype=np.int64), counts)

    starts_run = np.ones(cols.size, dtype=bool)
    if cols.size > 1:
        starts_run[1:] = (cols[1:] != cols[:-1] + 1) | (row_of[1:] != row_of[:-1])
    run_positions = np.flatnonzero(starts_run)
    runs_per_row = np.bincount(row_of[run_positions], minlength=pattern.n_rows)

    n_runs = run_positions.size
    col_align = np.empty(2 * n_runs + 2, dtype=np.int64)
    col_align[0:2 * n_runs:2] = cols[run_positions]
    col_align[1:2 * n_runs:2] = run_positions
    col_align[-2] = pattern.n_cols
    col_align[-1] = pattern.nnz
    col_align.setflags(write=False)

    row_ptr = np.concatenate([[0], np.cumsum(2 * runs_per_row)]).astype(np.int64)
    return CracMatrix(
        n_rows=pattern.n_rows,
        n_cols=pattern.n_cols,
        col_align=col_align,
        **_variant_storage(row_ptr, pattern.nnz, variant),
    )


def linear_row_search(cols: np.ndarray, start: int, end: int, c: int) -> Optional[int]:
    for k in range(start, end):
        found = int(cols[k])
        if found == c:
            return k
        if found > c:
            break
    return None


def binary_row_search(cols: np.ndarray, start: int, end: int, c: int) -> Optional[int]:
    k = start + int(np.searchsorted(cols[start:end], c))
    if k < end and cols[k] == c:
        return k
    return None


def csr_locate(m: CsrMatrix, r: int, c: int) -> Optional[int]:
    """Values position of (r, c), or None when not stored"""
    start, end = m.row_bounds(r)
    if end - start <= config.formats.linear_search_threshold:
        return linear_row_search(m.cols, start, end, c)
    return binary_row_search(m.cols, start, end, c)


def crac_locate(m: CracMatrix, r: int, c: int) -> Optional[int]:
    """
    Linear block search over the row's (column_start, values_position) pairs.

    Moves to the next pair while it belongs to the row and starts at or before
    c; the pair after the candidate bounds the candidate's run.
    """
    start, end = m.row_bounds(r)
    if start == end:
        return None
    ca = m.col_align
    i = start
    while i + 2 < end and ca[i + 2] <= c:
        i += 2
    col_start = int(ca[i])
    values_start = int(ca[i + 1])
    run_length = int(ca[i + 3]) - values_start
    if col_start <= c < col_start + run_length:
        return values_start + c - col_start
    return None


def locate(m: SparseMatrix, r: int, c: int) -> Optional[int]:
    if isinstance(m, CracMatrix):
        return crac_locate(m, r, c)
    return csr_locate(m, r, c)


def row_slice_add(m: SparseMatrix, r: int, col_start: int, length: int,
                  src: np.ndarray, element: Optional[int] = None) -> None:
    """
    Add src to the values of columns col_start..col_start+length-1 of row r.

    The run is located once through its first column and updated as one
    contiguous slice. Caller holds the row lock where the variant needs one.
    """
    pos = locate(m, r, col_start)
    if config.assembly.debug_checks:
        last = locate(m, r, col_start + length - 1) if length > 1 else pos
        if pos is None or last is None or last - pos != length - 1:
            raise SliceNotContiguousError(r, col_start, length, element)
    elif pos is None:
        raise SliceNotContiguousError(r, col_start, length, element)
    m.values[pos:pos + length] += src


def get(m: SparseMatrix, r: int, c: int) -> float:
    """Coefficient (r, c); 0.0 when not stored"""
    pos = locate(m, r, c)
    return 0.0 if pos is None else float(m.values[pos])


def coordinates(m: SparseMatrix) -> Tuple[np.ndarray, np.ndarray]:
    """Row and column of every values position"""
    row_ptr = m.plain_row_ptr()
    if isinstance(m, CsrMatrix):
        rows = np.repeat(np.arange(m.n_rows, dtype=np.int64), np.diff(row_ptr))
        return rows, np.asarray(m.cols, dtype=np.int64)

    ca = m.col_align
    run_cols = ca[0:-2:2]
    run_values = ca[1::2]
    lengths = np.diff(run_values)
    run_rows = np.repeat(np.arange(m.n_rows, dtype=np.int64), np.diff(row_ptr) // 2)
    rows = np.repeat(run_rows, lengths)
    offsets = np.arange(m.nnz, dtype=np.int64) - np.repeat(run_values[:-1], lengths)
    cols = np.repeat(run_cols, lengths) + offsets
    return rows, cols


def entries(m: SparseMatrix) -> Iterator[Tuple[int, int, float]]:
    rows, cols = coordinates(m)
    for r, c, v in zip(rows.tolist(), cols.tolist(), m.values.tolist()):
        yield r, c, v


def to_scipy(m: SparseMatrix) -> scipy.sparse.coo_matrix:
    rows, cols = coordinates(m)
    return scipy.sparse.coo_matrix((m.values.copy(), (rows, cols)), shape=(m.n_rows, m.n_cols))


def to_dense(m: SparseMatrix) -> np.ndarray:
    dense = np.zeros((m.n_rows, m.n_cols), dtype=np.float64)
    rows, cols = coordinates(m)
    dense[rows, cols] = m.values
    return dense


def write_matrix_market(m: SparseMatrix, path: str) -> None:
    """Coordinate real general dump for external cross-checks"""
    scipy.io.mmwrite(path, to_scipy(m), field="real", symmetry="general")
    logger.info(f"Wrote {m!r} to {path}")


def memory_footprint(m: SparseMatrix) -> Dict[str, int]:
    """
    Bytes held per array, plus the lock storage a separate mutex or spin-mutex
    array would need next to the row pointers (the signed entries need none).
    """
    row_ptr_bytes = 8 * (m.n_rows + 1)
    index_bytes = 8 * (m.cols.size if isinstance(m, CsrMatrix) else m.col_align.size)
    footprint = {
        "row_ptr": row_ptr_bytes,
        "index": index_bytes,
        "values": 8 * m.nnz,
        "mutex_array": MUTEX_BYTES_PER_ROW * m.n_rows,
        "spin_mutex_array": SPIN_MUTEX_BYTES_PER_ROW * m.n_rows,
        "spin_int": 0,
    }
    footprint["total"] = row_ptr_bytes + index_bytes + footprint["values"]
    return footprint
