"""Naive interleaving counter used to cross-check the explorer.

Every node of the schedule tree is rebuilt by replaying its whole schedule
on a fresh queue, with no generator reuse and no local-state tries.  Counts
are memoised on (memory, results each process has received), which is the
plain definition of a global state.
"""

from __future__ import annotations

from typing import Any, Callable

from ..memory import RESTART
from .explorer import Workload


def _replay(factory: Callable[[], Any], workload: Workload, schedule: list[int]):
    queue = factory()
    mem = queue.memory
    n = workload.n
    index = [0] * n
    gens: list = [None] * n
    reqs: list = [None] * n
    seen: list[list] = [[] for _ in range(n)]

    def start(p):
        while index[p] < len(workload.programs[p]):
            op = workload.programs[p][index[p]]
            gens[p] = queue.enq_steps(op[1], p) if op[0] == "enq" else queue.deq_steps(p)
            seen[p] = []
            if _next(p, None, True):
                return

    def _next(p, value, first=False):
        try:
            req = next(gens[p]) if first else gens[p].send(value)
            while req[0] >= RESTART:
                if req[0] == RESTART:
                    mem.unlink(p)
                req = next(gens[p])
        except StopIteration:
            mem.unlink(p)
            gens[p] = None
            index[p] += 1
            return False
        reqs[p] = req
        return True

    for p in range(n):
        start(p)
    for p in schedule:
        result = mem.apply(p, reqs[p])
        seen[p].append(result)
        if not _next(p, result):
            start(p)
    enabled = [p for p in range(n) if gens[p] is not None]
    local = tuple((index[p], tuple(seen[p])) for p in range(n))
    return mem.snapshot(), local, enabled


def count_interleavings(factory: Callable[[], Any], workload: Workload, limit: int = 10_000) -> int:
    """Number of complete schedules (sequences of primitive steps)."""
    memo: dict = {}
    schedule: list[int] = []

    def rec() -> int:
        if len(schedule) > limit:
            raise RuntimeError(f"a schedule exceeded {limit} steps")
        snap, local, enabled = _replay(factory, workload, schedule)
        if not enabled:
            return 1
        key = (snap, local)
        hit = memo.get(key)
        if hit is not None:
            return hit
        total = 0
        for p in enabled:
            schedule.append(p)
            total += rec()
            schedule.pop()
        memo[key] = total
        return total

    return rec()
