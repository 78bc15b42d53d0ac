"""Queue whose cell updates are DCSS operations validated against a counter.

An enqueue at ``e`` installs its element only if the cell is empty *and*
``enqueues`` still equals ``e``; a dequeue clears the cell only if it still
holds the snapshot element and ``dequeues`` still equals ``d``.  DCSS is
built from CAS with a pool of ``2n`` recyclable descriptors.
"""

from __future__ import annotations

from typing import Any

from .base import BoundedQueue
from .descriptors import Dcss
from .memory import BOTTOM, Kind, cas, read, restart


class DcssQueue(BoundedQueue):
    name = "dcss"

    def __init__(self, capacity: int, processes: int = 1):
        super().__init__(capacity, processes)
        self.a = self.memory.allocate_array(Kind.VALUE, capacity, BOTTOM, "a")
        self.dcss = Dcss(self.memory, processes)

    def enq_steps(self, x: Any, pid: int):
        C, a, dcss = self.C, self.a, self.dcss
        enqueues, dequeues = self.enqueues, self.dequeues
        while True:
            yield restart()
            e = yield read(enqueues)
            d = yield read(dequeues)
            if e != (yield read(enqueues)):
                continue
            if e == d + C:
                return False
            done = yield from dcss.dcss(pid, a[e % C], BOTTOM, x, enqueues, e)
            # On failure this is the help the retry needs: the counter may
            # still sit at e because the winner has not bumped it yet.
            yield cas(enqueues, e, e + 1)
            if done:
                return True

    def deq_steps(self, pid: int):
        C, a, dcss = self.C, self.a, self.dcss
        enqueues, dequeues = self.enqueues, self.dequeues
        while True:
            yield restart()
            d = yield read(dequeues)
            e = yield read(enqueues)
            x = yield from dcss.read(a[d % C])
            if d != (yield read(dequeues)):
                continue
            if e == d:
                return None
            # An empty cell means the enqueue for d has not landed yet.
            done = x != BOTTOM and (yield from dcss.dcss(pid, a[d % C], x, BOTTOM, dequeues, d))
            yield cas(dequeues, d, d + 1)
            if done:
                return x

    def descriptor_pool_size(self) -> int:
        return self.dcss.pool.size

    def contents(self) -> tuple:
        e, d = self.counters()
        cells = self.memory.cells
        return tuple(cells[self.a[i % self.C]] for i in range(d, e))
