"""Common plumbing for the concurrent bounded queues."""

from __future__ import annotations

import threading
from typing import Any, Generator

from .memory import Kind, Memory, Null, OverheadReport


class ProcessLimitError(RuntimeError):
    """More execution contexts tried to use a queue than it was built for."""


class BoundedQueue:
    """Base class: owns the memory, the two counters and process binding.

    Subclasses implement ``enq_steps(x, pid)`` and ``deq_steps(pid)`` as
    generators over the primitives of :mod:`boundedq.memory`.  The plain
    ``enq``/``deq`` methods drive those generators natively.

    ``deq`` reports an empty queue as ``None``.
    """

    name = "abstract"
    allows_duplicates = True
    llsc = False

    def __init__(self, capacity: int, processes: int = 1):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        if processes < 1:
            raise ValueError("need at least one process")
        self.C = capacity
        self.n = processes
        self.memory = Memory(llsc=self.llsc)
        self.enqueues = self.memory.allocate(Kind.METADATA, 0, "enqueues")
        self.dequeues = self.memory.allocate(Kind.METADATA, 0, "dequeues")
        self._local = threading.local()
        self._next_pid = 0
        self._pid_lock = threading.Lock()

    # -- process identity -------------------------------------------------

    def register(self) -> int:
        """Bind the calling thread to a fresh process id and return it."""
        with self._pid_lock:
            if self._next_pid >= self.n:
                raise ProcessLimitError(f"{self.name} queue was built for {self.n} processes")
            pid = self._next_pid
            self._next_pid += 1
        self._local.pid = pid
        return pid

    def _pid(self, pid: int | None) -> int:
        if pid is not None:
            if not 0 <= pid < self.n:
                raise ValueError(f"pid {pid} out of range for n={self.n}")
            return pid
        bound = getattr(self._local, "pid", None)
        return self.register() if bound is None else bound

    # -- native operations ------------------------------------------------

    def enq(self, x: Any, pid: int | None = None) -> bool:
        self._check_value(x)
        p = self._pid(pid)
        return self.memory.run(self.enq_steps(x, p), p)

    def deq(self, pid: int | None = None) -> Any:
        p = self._pid(pid)
        return self.memory.run(self.deq_steps(p), p)

    @staticmethod
    def _check_value(x: Any) -> None:
        if x is None or isinstance(x, Null):
            raise ValueError("cannot enqueue the empty marker")

    def enq_steps(self, x: Any, pid: int) -> Generator:
        raise NotImplementedError

    def deq_steps(self, pid: int) -> Generator:
        raise NotImplementedError

    # -- introspection ------------------------------------------------------

    def counters(self) -> tuple[int, int]:
        """``(enqueues, dequeues)`` read directly from memory."""
        cells = self.memory.cells
        return cells[self.enqueues], cells[self.dequeues]

    def account(self) -> OverheadReport:
        return self.memory.report(self.descriptor_pool_size())

    def descriptor_pool_size(self) -> int:
        return 0

    def contents(self) -> tuple:
        """Logical queue content, read while the queue is quiescent."""
        raise NotImplementedError

    def __repr__(self) -> str:
        e, d = self.counters()
        return f"<{type(self).__name__} C={self.C} n={self.n} enqueues={e} dequeues={d}>"
