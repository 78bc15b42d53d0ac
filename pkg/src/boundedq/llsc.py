"""O(1)-overhead queue over load-linked/store-conditional.

Cells are read with LL inside the counter snapshot and updated with SC, so
an update fails whenever the cell changed since the snapshot, even if it
changed back to the same value.  One empty marker suffices.
"""

from __future__ import annotations

from typing import Any

from .base import BoundedQueue
from .memory import BOTTOM, Kind, ll, read, restart, sc


class LlscQueue(BoundedQueue):
    name = "llsc"
    llsc = True

    def __init__(self, capacity: int, processes: int = 1):
        super().__init__(capacity, processes)
        self.a = self.memory.allocate_array(Kind.VALUE, capacity, BOTTOM, "a")

    def enq_steps(self, x: Any, pid: int):
        C, a = self.C, self.a
        enqueues, dequeues = self.enqueues, self.dequeues
        while True:
            yield restart()
            e = yield read(enqueues)
            d = yield read(dequeues)
            state = yield ll(a[e % C])
            if e != (yield read(enqueues)):
                continue
            if e == d + C:
                return False
            done = state == BOTTOM and (yield sc(a[e % C], x))
            if (yield ll(enqueues)) == e:
                yield sc(enqueues, e + 1)
            if done:
                return True

    def deq_steps(self, pid: int):
        C, a = self.C, self.a
        enqueues, dequeues = self.enqueues, self.dequeues
        while True:
            yield restart()
            d = yield read(dequeues)
            e = yield read(enqueues)
            x = yield ll(a[d % C])
            if d != (yield read(dequeues)):
                continue
            if e == d:
                return None
            done = x != BOTTOM and (yield sc(a[d % C], BOTTOM))
            if (yield ll(dequeues)) == d:
                yield sc(dequeues, d + 1)
            if done:
                return x

    def contents(self) -> tuple:
        e, d = self.counters()
        cells = self.memory.cells
        return tuple(cells[self.a[i % self.C]] for i in range(d, e))
