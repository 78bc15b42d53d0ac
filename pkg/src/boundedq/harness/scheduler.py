"""Step-by-step drivers: random schedules and the shared process driver."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from ..memory import CAS, LABEL, RESTART, SC, WRITE
from .history import History
from .monitors import Monitor, MonitorViolation, default_monitors, is_update


class _Proc:
    __slots__ = ("gen", "req", "op", "steps", "updates", "cases", "labels", "index")

    def __init__(self):
        self.gen = None
        self.req = None
        self.op = None
        self.steps = 0
        self.updates = 0
        self.cases = 0
        self.labels: list[str] = []
        self.index = -1


class Driver:
    """Runs queue operations primitive by primitive on behalf of ``n`` processes.

    Every step is checked by the monitors; the history of invocations and
    responses is recorded if ``record`` is set.
    """

    def __init__(self, queue, monitors: bool | list = True, record: bool = True):
        self.queue = queue
        self.mem = queue.memory
        self.n = queue.n
        if monitors is True:
            self.monitors: list[Monitor] = default_monitors(queue)
        elif monitors:
            self.monitors = list(monitors)
        else:
            self.monitors = []
        self._watch = [m.watch for m in self.monitors]
        self.mstate = [m.initial() for m in self.monitors]
        self.history = History() if record else None
        self.procs = [_Proc() for _ in range(self.n)]
        self.steps = 0
        self.completed = 0
        self.completed_by = [0] * self.n
        self.results: list = []

    def busy(self, pid: int) -> bool:
        return self.procs[pid].gen is not None

    def start(self, pid: int, op: tuple) -> None:
        p = self.procs[pid]
        if p.gen is not None:
            raise RuntimeError(f"p{pid} already runs {p.op}")
        p.op = op
        p.index += 1
        p.steps = p.updates = p.cases = 0
        p.labels = []
        if op[0] == "enq":
            p.gen = self.queue.enq_steps(op[1], pid)
        else:
            p.gen = self.queue.deq_steps(pid)
        if self.history is not None:
            self.history.invoke(pid, op[0], op[1])
        for k, m in enumerate(self.monitors):
            self.mstate[k] = m.invoke(self.mstate[k], pid, p.index, op)
        self._advance(pid, None, first=True)

    def _advance(self, pid: int, value, first: bool = False):
        p = self.procs[pid]
        gen = p.gen
        try:
            req = next(gen) if first else gen.send(value)
            while req[0] >= RESTART:
                if req[0] == RESTART:
                    self.mem.unlink(pid)
                else:
                    p.labels.append(req[1])
                req = next(gen)
        except StopIteration as stop:
            self._finish(pid, stop.value)
            return
        p.req = req

    def _finish(self, pid: int, result) -> None:
        p = self.procs[pid]
        op = p.op
        p.gen = p.req = None
        self.mem.unlink(pid)
        self.completed += 1
        self.completed_by[pid] += 1
        self.results.append((pid, op, result))
        if self.history is not None:
            self.history.respond(pid, op[0], op[1], result)
        for k, m in enumerate(self.monitors):
            self.mstate[k] = m.respond(self.mstate[k], pid, p.index, op, result)

    def next_request(self, pid: int):
        return self.procs[pid].req

    def step(self, pid: int) -> bool:
        """One primitive of ``pid``'s current operation; True if it completed."""
        p = self.procs[pid]
        req = p.req
        mem = self.mem
        update = is_update(req)
        tokens = None
        mons = self.monitors
        if update and mons:
            tokens = [m.before(s, mem, pid, req) if (w is None or req[1] in w) else None
                      for m, s, w in zip(mons, self.mstate, self._watch)]
        result = mem.apply(pid, req)
        self.steps += 1
        p.steps += 1
        if update:
            p.updates += 1
            if req[0] == CAS or req[0] == SC:
                p.cases += 1
            if mons:
                for k, m in enumerate(mons):
                    w = self._watch[k]
                    if w is None or req[1] in w:
                        self.mstate[k] = m.after(self.mstate[k], tokens[k], mem, pid, req, result)
        self._advance(pid, result)
        return p.gen is None

    def run_solo(self, pid: int, budget: int = 10_000) -> bool:
        """Run ``pid`` alone until its operation completes; False if out of budget."""
        for _ in range(budget):
            if self.step(pid):
                return True
        return False

    def final_checks(self) -> None:
        for m, s in zip(self.monitors, self.mstate):
            m.final(s, self.mem)


@dataclass
class RandomRun:
    seed: int
    steps: int
    completed: int
    history: History | None
    violations: list = field(default_factory=list)
    counter_checks: int = 0


def random_ops(rng: random.Random, ratio: float, values: str = "unique"):
    """Endless operation stream: enqueue with probability ``ratio``."""
    v = 0
    while True:
        if rng.random() < ratio:
            v += 1
            yield ("enq", v if values == "unique" else 1 + v % 3)
        else:
            yield ("deq", None)


def run_random(factory: Callable, steps: int, seed: int, ratio: float = 0.5, burst: float = 4.0,
               monitors: bool | list = True, record: bool = False, values: str = "unique") -> RandomRun:
    """Random schedule of ``steps`` primitives over ``queue.n`` processes.

    Each process runs an endless random mix of operations.  The scheduler
    keeps running the same process for a geometric number of steps (mean
    ``burst``) before switching to a uniformly chosen one.
    """
    queue = factory()
    rng = random.Random(seed)
    drv = Driver(queue, monitors, record)
    n = queue.n
    streams = [random_ops(random.Random(rng.random()), ratio, values) for _ in range(n)]
    # offset enqueued values per process so they stay globally distinct
    stride = 1_000_000_000
    switch = 1.0 / burst
    pid = rng.randrange(n)
    violations = []
    try:
        for _ in range(steps):
            if rng.random() < switch:
                pid = rng.randrange(n)
            if not drv.busy(pid):
                op = next(streams[pid])
                if op[0] == "enq":
                    op = ("enq", pid * stride + op[1])
                drv.start(pid, op)
                if not drv.busy(pid):
                    continue
            drv.step(pid)
        drv.final_checks()
    except MonitorViolation as exc:
        violations.append(str(exc))
    checks = sum(getattr(m, "checks", 0) for m in drv.monitors)
    return RandomRun(seed, drv.steps, drv.completed, drv.history, violations, checks)
