import threading
import unittest
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from core.sync import (
    AtomicCounter, AtomicValues, LockableRows, atomic_add, cas_slot, lock_row, unlock_row
)


def run_threads(count, target):
    threads = [threading.Thread(target=target, args=(i,)) for i in range(count)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()


class TestLockableRows(unittest.TestCase):
    def test_sign_is_lock_state(self):
        rows = LockableRows(np.array([0, 4, 8]))
        self.assertEqual(rows.entries.tolist(), [1, 5, 9])
        lock_row(rows, 1)
        self.assertTrue(rows.is_locked(1))
        self.assertEqual(rows.load(1), -5)
        self.assertEqual(rows.read_offset(1), 4)
        self.assertFalse(rows.all_unlocked())
        unlock_row(rows, 1)
        self.assertEqual(rows.load(1), 5)
        self.assertTrue(rows.all_unlocked())

    def test_offset_zero(self):
        rows = LockableRows(np.array([0, 0, 3]))
        lock_row(rows, 0)
        self.assertEqual(rows.load(0), -1)
        self.assertEqual(rows.read_offset(0), 0)
        self.assertEqual(rows.offsets().tolist(), [0, 0, 3])

    def test_compare_exchange(self):
        rows = LockableRows(np.array([0, 2]))
        self.assertFalse(rows.compare_exchange(1, 2, -2))
        self.assertTrue(rows.compare_exchange(1, 3, -3))
        self.assertEqual(rows.load(1), -3)

    def test_compare_exchange_slot(self):
        slots = np.array([7, -3], dtype=np.int64)
        self.assertEqual(cas_slot(slots, 1, -3, 4), -3)
        self.assertEqual(slots.tolist(), [7, 4])
        self.assertEqual(cas_slot(slots, 0, 6, 0), 7)
        self.assertEqual(slots.tolist(), [7, 4])

    def test_unlock_of_free_row_is_noop(self):
        rows = LockableRows(np.array([0, 2]))
        rows.unlock_row(1)
        self.assertEqual(rows.load(1), 3)

    def test_lock_excludes(self):
        rows = LockableRows(np.array([0, 1]))
        shared = {"value": 0}

        def body(_):
            for _ in range(5000):
                rows.lock_row(0)
                try:
                    current = shared["value"]
                    shared["value"] = current + 1
                finally:
                    rows.unlock_row(0)

        run_threads(8, body)
        self.assertEqual(shared["value"], 40000)
        self.assertTrue(rows.all_unlocked())

    def test_blocked_until_released(self):
        rows = LockableRows(np.array([0, 1]))
        rows.lock_row(0)
        acquired = threading.Event()

        def contender():
            rows.lock_row(0)
            acquired.set()
            rows.unlock_row(0)

        with ThreadPoolExecutor(max_workers=1) as pool:
            future = pool.submit(contender)
            self.assertFalse(acquired.wait(0.2))
            rows.unlock_row(0)
            future.result(timeout=10)
        self.assertTrue(acquired.is_set())


class TestAtomicValues(unittest.TestCase):
    def test_concurrent_adds(self):
        values = AtomicValues(3)

        def body(_):
            for _ in range(1000):
                atomic_add(values, 1, 1.0)

        run_threads(8, body)
        self.assertEqual(values.values[1], 8000.0)
        self.assertEqual(values.values[0], 0.0)

    def test_fetch_add_returns_previous(self):
        values = AtomicValues(2)
        self.assertEqual(values.fetch_add(0, 2.5), 0.0)
        self.assertEqual(values.fetch_add(0, 1.0), 2.5)
        self.assertEqual(values.values[0], 3.5)

    def test_add_many_contended(self):
        values = AtomicValues(40)
        positions = np.array([0, 5, 17, 39])

        def body(_):
            for _ in range(200):
                values.add_many(positions, np.array([1.0, 2.0, 3.0, 4.0]))

        run_threads(6, body)
        self.assertEqual(values.values[positions].tolist(), [1200.0, 2400.0, 3600.0, 4800.0])
        self.assertEqual(float(values.values.sum()), 12000.0)
        self.assertEqual(len(values), 40)

    def test_bits_alias_values(self):
        values = AtomicValues(2)
        values.values[1] = 1.5
        self.assertEqual(values.bits[1], np.float64(1.5).view(np.int64))
        values.atomic_add(1, 0.25)
        self.assertEqual(values.values[1], 1.75)

    def test_fractional_adds_from_many_threads(self):
        values = AtomicValues(1)

        def body(_):
            values.add_many(np.zeros(20000, dtype=np.int64), np.full(20000, 0.5))

        run_threads(8, body)
        self.assertEqual(values.values[0], 80000.0)


class TestAtomicCounter(unittest.TestCase):
    def test_claims_are_unique(self):
        counter = AtomicCounter()
        claimed = []
        lock = threading.Lock()

        def body(_):
            mine = [counter.fetch_add(1) for _ in range(500)]
            with lock:
                claimed.extend(mine)

        run_threads(8, body)
        self.assertEqual(sorted(claimed), list(range(4000)))
        self.assertEqual(counter.value, 4000)


if __name__ == "__main__":
    unittest.main()
