"""O(1)-overhead queue for distinct elements, using versioned empty markers.

Cell ``a[i]`` holds either an element or ``Null(r)``.  An enqueue at counter
value ``e`` swaps ``Null(e // C)`` for its element; a dequeue at ``d`` swaps
the element for ``Null(d // C + 1)``, the marker the next round's enqueue
expects.  As long as no element is enqueued twice while still present, no
CAS on a cell can succeed against a stale expectation.
"""

from __future__ import annotations

from typing import Any

from .base import BoundedQueue
from .memory import ContractViolation, Kind, Null, cas, read, restart


class DistinctQueue(BoundedQueue):
    """Bounded queue correct under the distinct-elements contract.

    ``literal=True`` keeps the dequeue snapshot exactly as first published
    (re-validating ``enqueues``); that variant lets a dequeuer that slept
    through a round take an element of the next round, see the notes in
    the README.  The default re-validates ``dequeues`` instead.

    ``strict=True`` makes native ``enq`` reject an element that is already
    stored in the array (a best-effort scan, for debugging).
    """

    name = "distinct"
    allows_duplicates = False

    def __init__(self, capacity: int, processes: int = 1, literal: bool = False, strict: bool = False):
        super().__init__(capacity, processes)
        self.literal = literal
        self.strict = strict
        self.a = self.memory.allocate_array(Kind.VALUE, capacity, Null(0), "a")

    def enq(self, x: Any, pid: int | None = None) -> bool:
        if self.strict and x in [self.memory.cells[loc] for loc in self.a]:
            raise ContractViolation(f"duplicate element {x!r} enqueued into a distinct queue")
        return super().enq(x, pid)

    def enq_steps(self, x: Any, pid: int):
        C, a = self.C, self.a
        enqueues, dequeues = self.enqueues, self.dequeues
        while True:
            yield restart()
            e = yield read(enqueues)
            d = yield read(dequeues)
            if e != (yield read(enqueues)):
                continue
            if e == d + C:
                return False
            done = yield cas(a[e % C], Null(e // C), x)
            yield cas(enqueues, e, e + 1)
            if done:
                return True

    def deq_steps(self, pid: int):
        C, a = self.C, self.a
        enqueues, dequeues = self.enqueues, self.dequeues
        while True:
            yield restart()
            if self.literal:
                e = yield read(enqueues)
                d = yield read(dequeues)
                x = yield read(a[d % C])
                if e != (yield read(enqueues)):
                    continue
            else:
                d = yield read(dequeues)
                e = yield read(enqueues)
                x = yield read(a[d % C])
                if d != (yield read(dequeues)):
                    continue
            if e == d:
                return None
            empty = Null(d // C + 1)
            # a marker other than ``empty`` at d < e only shows up when the
            # distinctness contract was broken; never hand it to the caller
            done = not isinstance(x, Null) and (yield cas(a[d % C], x, empty))
            yield cas(dequeues, d, d + 1)
            if done:
                return x

    def contents(self) -> tuple:
        e, d = self.counters()
        cells = self.memory.cells
        return tuple(cells[self.a[i % self.C]] for i in range(d, e))
