"""
Synchronisation primitives for parallel assembly.

Compare-exchange is the LLVM cmpxchg instruction on an int64 numpy slot,
emitted through a numba intrinsic. Atomic float add is a compare-exchange
loop over the bit pattern of a float64 slot. A row lock (spin_int) is the
sign bit of its row pointer entry: negative while held.

The compiled primitives release the GIL, so they synchronise real threads.
"""

import numpy as np
from numba import njit, types
from numba.core import cgutils
from numba.extending import intrinsic


@intrinsic
def _cmpxchg(typingctx, ptr, expected, desired):
    """Store desired at ptr iff it holds expected; returns the previous value"""
    if isinstance(ptr, types.CPointer):
        valtype = ptr.dtype
        sig = valtype(ptr, valtype, valtype)

        def codegen(context, builder, signature, args):
            [ptr, expected, desired] = args
            res = builder.cmpxchg(ptr, expected, desired, ordering="seq_cst")
            old, _ = cgutils.unpack_tuple(builder, res)
            return old
        return sig, codegen


@intrinsic
def _int64_ptr(typingctx, address):
    sig = types.CPointer(types.int64)(types.intp)

    def codegen(context, builder, signature, args):
        [address] = args
        return builder.inttoptr(address, context.get_value_type(signature.return_type))
    return sig, codegen


@intrinsic
def _bits_as_float(typingctx, bits):
    sig = types.float64(types.int64)

    def codegen(context, builder, signature, args):
        return builder.bitcast(args[0], context.get_value_type(signature.return_type))
    return sig, codegen


@intrinsic
def _float_as_bits(typingctx, value):
    sig = types.int64(types.float64)

    def codegen(context, builder, signature, args):
        return builder.bitcast(args[0], context.get_value_type(signature.return_type))
    return sig, codegen


@njit(nogil=True, cache=True)
def cas_slot(slots, i, expected, desired):
    """Previous value of slots[i]; the store happened iff it equals expected"""
    return _cmpxchg(_int64_ptr(slots[i:].ctypes.data), expected, desired)


@njit(nogil=True, cache=True)
def fetch_add_slot(slots, i, delta):
    old = slots[i]
    while True:
        seen = cas_slot(slots, i, old, old + delta)
        if seen == old:
            return old
        old = seen


@njit(nogil=True, cache=True)
def fetch_add_bits(bits, i, x):
    """Atomic float add on the float64 whose bit pattern is bits[i]"""
    old = bits[i]
    while True:
        seen = cas_slot(bits, i, old, _float_as_bits(_bits_as_float(old) + x))
        if seen == old:
            return _bits_as_float(old)
        old = seen


@njit(nogil=True, cache=True)
def add_many_bits(bits, positions, xs):
    for k in range(positions.shape[0]):
        fetch_add_bits(bits, positions[k], xs[k])


@njit(nogil=True, cache=True)
def spin_lock_entry(entries, r):
    """Spin until the sign flip of entries[r] from +v to -v succeeds"""
    expected = abs(entries[r])
    while True:
        seen = cas_slot(entries, r, expected, -expected)
        if seen == expected:
            return
        expected = abs(seen)


@njit(nogil=True, cache=True)
def spin_unlock_entry(entries, r):
    held = abs(entries[r])
    cas_slot(entries, r, -held, held)


class AtomicCounter:
    """Integer counter with atomic fetch-and-add"""

    def __init__(self, value: int = 0):
        self._slot = np.array([value], dtype=np.int64)

    def fetch_add(self, delta: int = 1) -> int:
        return int(fetch_add_slot(self._slot, 0, delta))

    @property
    def value(self) -> int:
        return int(self._slot[0])


class LockableRows:
    """
    Row pointer array whose entries double as spin locks (spin_int).

    Entry r holds offset(r) + 1, so offset 0 is representable with a sign.
    A negative entry means row r is locked; |entry| - 1 is always the offset.
    """

    def __init__(self, offsets: np.ndarray):
        self.entries = np.asarray(offsets, dtype=np.int64) + 1

    def __len__(self) -> int:
        return int(self.entries.size)

    def load(self, r: int) -> int:
        return int(self.entries[r])

    def compare_exchange(self, r: int, expected: int, desired: int) -> bool:
        """Store desired in entry r iff it still holds expected"""
        return int(cas_slot(self.entries, r, expected, desired)) == expected

    def lock_row(self, r: int) -> None:
        spin_lock_entry(self.entries, r)

    def unlock_row(self, r: int) -> None:
        spin_unlock_entry(self.entries, r)

    def read_offset(self, r: int) -> int:
        return abs(int(self.entries[r])) - 1

    def is_locked(self, r: int) -> bool:
        return int(self.entries[r]) < 0

    def offsets(self) -> np.ndarray:
        """Snapshot of the plain row pointer array"""
        return np.abs(self.entries) - 1

    def all_unlocked(self) -> bool:
        return bool((self.entries > 0).all())


class AtomicValues:
    """Values array with atomic per-slot addition; bits aliases values as int64"""

    def __init__(self, size: int):
        self.values = np.zeros(size, dtype=np.float64)
        self.bits = self.values.view(np.int64)

    def __len__(self) -> int:
        return int(self.values.size)

    def fetch_add(self, pos: int, x: float) -> float:
        return float(fetch_add_bits(self.bits, pos, x))

    def atomic_add(self, pos: int, x: float) -> None:
        fetch_add_bits(self.bits, pos, x)

    def add_many(self, positions: np.ndarray, xs: np.ndarray) -> None:
        """Atomic add of xs[k] to positions[k] for every k"""
        add_many_bits(self.bits, np.asarray(positions, dtype=np.int64),
                      np.asarray(xs, dtype=np.float64))


def lock_row(rows: LockableRows, r: int) -> None:
    rows.lock_row(r)


def unlock_row(rows: LockableRows, r: int) -> None:
    rows.unlock_row(r)


def read_offset(rows: LockableRows, r: int) -> int:
    return rows.read_offset(r)


def atomic_add(values: AtomicValues, pos: int, x: float) -> None:
    values.atomic_add(pos, x)
