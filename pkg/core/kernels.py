"""
Compiled element loops of the assembly algorithms.

Every kernel assembles the elements order[lo:hi] and runs without the GIL.
Pattern faults are not raised inside a kernel: the first one is written to
fault as (kind, element, row, col, length) and the kernel returns early,
releasing any row lock it holds.
"""
import numpy as np
from numba import njit

from core.sync import fetch_add_bits, spin_lock_entry, spin_unlock_entry

FAULT_NONE = 0
FAULT_MISSING = 1
FAULT_NOT_CONTIGUOUS = 2

# Scalar add modes
PLAIN_ADD = 0
LOCKED_ADD = 1
ATOMIC_ADD = 2

FAULT_FIELDS = 5


def new_fault() -> np.ndarray:
    return np.zeros(FAULT_FIELDS, dtype=np.int64)


@njit(nogil=True, cache=True)
def row_start(ptr, signed, r):
    if signed:
        return abs(ptr[r]) - 1
    return ptr[r]


@njit(nogil=True, cache=True)
def locate_entry(ptr, signed, index, is_crac, threshold, r, c):
    """Values position of (r, c) or -1; same strategies as core.formats"""
    start = row_start(ptr, signed, r)
    end = row_start(ptr, signed, r + 1)
    if start == end:
        return -1

    if is_crac:
        i = start
        while i + 2 < end and index[i + 2] <= c:
            i += 2
        col_start = index[i]
        length = index[i + 3] - index[i + 1]
        if col_start <= c and c < col_start + length:
            return index[i + 1] + c - col_start
        return -1

    if end - start <= threshold:
        for k in range(start, end):
            if index[k] == c:
                return k
            if index[k] > c:
                return -1
        return -1

    lo = start
    hi = end
    while lo < hi:
        mid = (lo + hi) // 2
        if index[mid] < c:
            lo = mid + 1
        else:
            hi = mid
    if lo < end and index[lo] == c:
        return lo
    return -1


@njit(nogil=True, cache=True)
def _set_fault(fault, kind, e, row, col, length):
    fault[0] = kind
    fault[1] = e
    fault[2] = row
    fault[3] = col
    fault[4] = length


@njit(nogil=True, cache=True)
def scalar_add_kernel(order, lo, hi, dofs, dof_count, matrices,
                      ptr, signed, index, is_crac, threshold,
                      values, bits, mode, fault):
    """One lookup and one add per coefficient; mode picks plain, row-locked or atomic adds"""
    shared = matrices.shape[0] == 1
    for i in range(lo, hi):
        e = order[i]
        k_e = matrices[0] if shared else matrices[e]
        m = dof_count[e]
        for a in range(m):
            row = dofs[e, a]
            if mode == LOCKED_ADD:
                spin_lock_entry(ptr, row)
            for b in range(m):
                col = dofs[e, b]
                pos = locate_entry(ptr, signed, index, is_crac, threshold, row, col)
                if pos < 0:
                    if mode == LOCKED_ADD:
                        spin_unlock_entry(ptr, row)
                    _set_fault(fault, FAULT_MISSING, e, row, col, 1)
                    return
                if mode == ATOMIC_ADD:
                    fetch_add_bits(bits, pos, k_e[a, b])
                else:
                    values[pos] += k_e[a, b]
            if mode == LOCKED_ADD:
                spin_unlock_entry(ptr, row)


@njit(nogil=True, cache=True)
def slice_add_kernel(order, lo, hi, dofs, dof_count, runs, run_count, matrices,
                     ptr, signed, index, is_crac, threshold,
                     values, locked, check, fault):
    """
    One lookup per DOF run of the element and one contiguous slice add of the
    run's length; with check the run's last column is located too and must
    sit length - 1 positions after the first.
    """
    shared = matrices.shape[0] == 1
    for i in range(lo, hi):
        e = order[i]
        k_e = matrices[0] if shared else matrices[e]
        for a in range(dof_count[e]):
            row = dofs[e, a]
            if locked:
                spin_lock_entry(ptr, row)
            b = 0
            for k in range(run_count[e]):
                col = runs[e, k, 0]
                length = runs[e, k, 1]
                pos = locate_entry(ptr, signed, index, is_crac, threshold, row, col)
                ok = pos >= 0
                if ok and check and length > 1:
                    last = locate_entry(ptr, signed, index, is_crac, threshold,
                                        row, col + length - 1)
                    ok = last - pos == length - 1
                if not ok:
                    if locked:
                        spin_unlock_entry(ptr, row)
                    _set_fault(fault, FAULT_NOT_CONTIGUOUS, e, row, col, length)
                    return
                for t in range(length):
                    values[pos + t] += k_e[a, b + t]
                b += length
            if locked:
                spin_unlock_entry(ptr, row)
