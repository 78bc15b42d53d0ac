"""Non-blocking bounded FIFO queues with a model-checking harness.

Five concurrent queues share one interface (``enq(x) -> bool``,
``deq() -> value | None``) and are written against the abstract shared
memory of :mod:`boundedq.memory`, so the same code runs on real threads and
under the deterministic scheduler of :mod:`boundedq.harness`.
"""

from __future__ import annotations

from .base import BoundedQueue, ProcessLimitError
from .dcss import DcssQueue
from .distinct import DistinctQueue
from .llsc import LlscQueue
from .memory import BOTTOM, ContractViolation, Kind, Memory, Null, OverheadReport
from .optimal import OptimalQueue
from .segment import SegmentQueue
from .sequential import SeqBoundedQueue, seq_apply

IMPLEMENTATIONS = {
    "segment": SegmentQueue,
    "distinct": DistinctQueue,
    "llsc": LlscQueue,
    "dcss": DcssQueue,
    "optimal": OptimalQueue,
}


def make_queue(impl: str, capacity: int, processes: int = 1, **kw) -> BoundedQueue:
    try:
        cls = IMPLEMENTATIONS[impl]
    except KeyError:
        raise ValueError(f"unknown implementation {impl!r}; pick one of {sorted(IMPLEMENTATIONS)}") from None
    return cls(capacity, processes, **kw)


__all__ = [
    "BOTTOM",
    "BoundedQueue",
    "ContractViolation",
    "DcssQueue",
    "DistinctQueue",
    "IMPLEMENTATIONS",
    "Kind",
    "LlscQueue",
    "Memory",
    "Null",
    "OptimalQueue",
    "OverheadReport",
    "ProcessLimitError",
    "SegmentQueue",
    "SeqBoundedQueue",
    "make_queue",
    "seq_apply",
]
