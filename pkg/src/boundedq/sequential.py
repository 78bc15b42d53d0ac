"""Sequential bounded queue: an array of C cells and two counters."""

from __future__ import annotations

from typing import Any

from .memory import BOTTOM, Null, OverheadReport


class SeqBoundedQueue:
    """Single-threaded bounded FIFO queue.

    ``deq`` returns ``None`` when the queue is empty.  The checkers use the
    hashable-state form :func:`seq_apply`, which is tested against this
    class.
    """

    name = "seq"

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.C = capacity
        self.a: list[Any] = [BOTTOM] * capacity
        self.enqueues = 0
        self.dequeues = 0

    def enq(self, x: Any) -> bool:
        if x is None or isinstance(x, Null):
            raise ValueError("cannot enqueue the empty marker")
        if self.enqueues == self.dequeues + self.C:
            return False
        self.a[self.enqueues % self.C] = x
        self.enqueues += 1
        return True

    def deq(self) -> Any:
        if self.dequeues == self.enqueues:
            return None
        i = self.dequeues % self.C
        x = self.a[i]
        self.a[i] = BOTTOM
        self.dequeues += 1
        return x

    def __len__(self) -> int:
        return self.enqueues - self.dequeues

    def items(self) -> tuple:
        return tuple(self.a[i % self.C] for i in range(self.dequeues, self.enqueues))

    def account(self) -> OverheadReport:
        # C cells plus the two counters.
        return OverheadReport(value_locations=self.C, metadata_locations=2)


def seq_apply(state: tuple, capacity: int, op: str, arg: Any) -> tuple[tuple, Any]:
    """Pure transition function over the abstract content ``state``.

    Equivalent to running ``op`` on a :class:`SeqBoundedQueue` holding
    ``state``; used by the checkers where states must be hashable.
    """
    if op == "enq":
        if len(state) == capacity:
            return state, False
        return state + (arg,), True
    if not state:
        return state, None
    return state[1:], state[0]

