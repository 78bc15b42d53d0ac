"""Progress probes.

* Obstruction-freedom: from every state the explorer reaches, each process
  running alone finishes its operation within a step bound (computed by
  :class:`~boundedq.harness.explorer.Explorer` with ``solo=True``).
* Lock-freedom (starvation probe): one process is frozen in the middle of
  an operation while the others run a random schedule; the number of
  completed operations must grow in every window of ``window`` steps.

:class:`SingleLockQueue` is a deliberately blocking queue used to show that
the starvation probe does catch a stall.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .. import memory as m
from ..base import BoundedQueue
from ..memory import BOTTOM, Kind, cas, read, write
from .explorer import Workload, explore, workloads
from .scheduler import Driver, random_ops


class SingleLockQueue(BoundedQueue):
    """Ring buffer guarded by one spin lock (blocking, for probe tests)."""

    name = "single-lock"

    def __init__(self, capacity: int, processes: int = 1):
        super().__init__(capacity, processes)
        self.lock = self.memory.allocate(Kind.METADATA, 0, "lock")
        self.a = self.memory.allocate_array(Kind.VALUE, capacity, BOTTOM, "a")

    def _acquire(self, pid: int):
        while True:
            yield m.restart()
            if (yield cas(self.lock, 0, pid + 1)):
                return

    def enq_steps(self, x, pid: int):
        yield from self._acquire(pid)
        e = yield read(self.enqueues)
        d = yield read(self.dequeues)
        ok = e < d + self.C
        if ok:
            yield write(self.a[e % self.C], x)
            yield write(self.enqueues, e + 1)
        yield write(self.lock, 0)
        return ok

    def deq_steps(self, pid: int):
        yield from self._acquire(pid)
        e = yield read(self.enqueues)
        d = yield read(self.dequeues)
        x = None
        if d < e:
            x = yield read(self.a[d % self.C])
            yield write(self.dequeues, d + 1)
        yield write(self.lock, 0)
        return x

    def contents(self) -> tuple:
        e, d = self.counters()
        return tuple(self.memory.cells[self.a[p % self.C]] for p in range(d, e))


@dataclass
class StarvationReport:
    ok: bool
    probes: int = 0
    windows: int = 0
    min_progress: int | None = None  # fewest completions seen in one window
    stalls: list = field(default_factory=list)  # descriptions of stalled probes

    def summary(self) -> str:
        status = "ok" if self.ok else f"{len(self.stalls)} stalled"
        return f"{self.probes} probes, {self.windows} windows, min progress {self.min_progress}: {status}"


def starvation_probe(factory: Callable[[], BoundedQueue], freeze_points: Iterable[int] = range(1, 64, 3),
                     window: int = 10_000, windows: int = 3, seed: int = 0, warmup: int = 200,
                     ratio: float = 0.5, frozen: int = 0) -> StarvationReport:
    """Freeze process ``frozen`` after ``k`` steps of an enq and of a deq for
    every ``k`` in ``freeze_points``, then require the others to complete
    operations in every window of ``window`` steps."""
    report = StarvationReport(ok=True)
    rng = random.Random(seed)
    for kind in ("enq", "deq"):
        for k in freeze_points:
            queue = factory()
            n = queue.n
            if n < 2:
                raise ValueError("the starvation probe needs at least two processes")
            drv = Driver(queue, monitors=True, record=False)
            streams = [random_ops(random.Random(rng.random()), ratio) for _ in range(n)]
            others = [p for p in range(n) if p != frozen]

            def tick(pid):
                if not drv.busy(pid):
                    op = next(streams[pid])
                    if op[0] == "enq":
                        op = ("enq", (pid + 1) * 1_000_000_000 + op[1])
                    drv.start(pid, op)
                    if not drv.busy(pid):
                        return
                drv.step(pid)

            for _ in range(warmup):
                tick(rng.choice(others))
            # let the others finish what they started so the freeze begins
            # from a quiescent state
            for _ in range(n):
                for p in others:
                    if drv.busy(p):
                        drv.run_solo(p, window)
            drv.start(frozen, ("enq", -1 - k) if kind == "enq" else ("deq", None))
            for _ in range(k):
                if not drv.busy(frozen) or drv.step(frozen):
                    break
            if not drv.busy(frozen):
                continue  # finished before reaching the freeze point
            report.probes += 1
            for w in range(windows):
                before = drv.completed
                for _ in range(window):
                    tick(rng.choice(others))
                done = drv.completed - before
                report.windows += 1
                if report.min_progress is None or done < report.min_progress:
                    report.min_progress = done
                if done == 0:
                    report.ok = False
                    report.stalls.append(f"{kind} frozen after {k} steps: no completion in window {w}")
                    break
    return report


@dataclass
class ObstructionReport:
    ok: bool
    workloads: int = 0
    states: int = 0
    max_solo_steps: int = 0
    failures: list = field(default_factory=list)


def obstruction_probe(factory: Callable[[int], BoundedQueue], bound: int = 10_000,
                      cases: Iterable[Workload] | None = None, **kw) -> ObstructionReport:
    """Solo-termination check over explored states.  ``factory(n)`` builds a
    queue for ``n`` processes."""
    report = ObstructionReport(ok=True)
    for wl in (cases if cases is not None else workloads(2, 2)):
        res = explore(lambda: factory(wl.n), wl, solo=True, check_linearizability=False, **kw)
        report.workloads += 1
        report.states += res.states
        solo = res.max_solo_steps
        if res.violations or solo is None or solo > bound:
            report.ok = False
            report.failures.append((str(wl), solo, [v.message for v in res.violations]))
        else:
            report.max_solo_steps = max(report.max_solo_steps, solo)
    return report
