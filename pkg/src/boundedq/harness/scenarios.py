"""Scripted schedules: pause operations at chosen points and resume them later.

Script format, one command per line (``#`` starts a comment)::

    p0 enq 5                run p0's enq(5) alone to completion
    p1 deq @update:1        start p1's deq and pause it before its 1st update
    p1 resume               finish p1's pending operation
    p1 resume @cas:2        continue p1 up to a further pause point
    p2 step 3               let p2 take exactly 3 primitive steps

Pause points: ``@step:K`` (before the K-th primitive), ``@update:K``
(before the K-th write/CAS/SC), ``@cas:K`` (before the K-th CAS/SC) and
``@label:name`` (at a named point of the algorithm, e.g. ``apply``).
Counts are per operation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Iterable

from ..memory import CAS, SC, is_update
from .history import History
from .scheduler import Driver

_LINE = re.compile(r"^p(\d+)\s+(enq|deq|resume|step)(?:\s+([^@\s]+))?\s*(?:@(\w+):(\S+))?$")


@dataclass(frozen=True)
class Command:
    pid: int
    action: str  # "enq", "deq", "resume", "step"
    arg: Any = None
    pause: tuple | None = None  # (kind, value)

    def __str__(self) -> str:
        s = f"p{self.pid} {self.action}"
        if self.arg is not None:
            s += f" {self.arg}"
        if self.pause:
            s += f" @{self.pause[0]}:{self.pause[1]}"
        return s


class ScriptError(ValueError):
    pass


def _value(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


def parse_script(text: str) -> list[Command]:
    cmds = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ScriptError(f"line {lineno}: cannot parse {raw.strip()!r}")
        pid, action, arg, pkind, pval = m.groups()
        if action == "enq" and arg is None:
            raise ScriptError(f"line {lineno}: enq needs a value")
        if action == "deq" and arg is not None:
            raise ScriptError(f"line {lineno}: deq takes no value")
        if action == "step":
            if arg is None or not arg.isdigit():
                raise ScriptError(f"line {lineno}: step needs a count")
            arg = int(arg)
        elif arg is not None:
            arg = _value(arg)
        pause = None
        if pkind is not None:
            if pkind not in ("step", "update", "cas", "label"):
                raise ScriptError(f"line {lineno}: unknown pause point @{pkind}")
            if action == "step":
                raise ScriptError(f"line {lineno}: step takes no pause point")
            pause = (pkind, pval if pkind == "label" else int(pval))
        cmds.append(Command(int(pid), action, arg, pause))
    return cmds


@dataclass
class ScriptResult:
    history: History
    results: list = field(default_factory=list)  # (command, result or "paused"/"stuck")
    stuck: list = field(default_factory=list)  # commands whose operation ran out of budget
    driver: Driver | None = None

    def result_of(self, k: int):
        return self.results[k][1]


def _reached(driver: Driver, pid: int, pause) -> bool:
    p = driver.procs[pid]
    kind, value = pause
    if kind == "label":
        return value in p.labels
    if kind == "step":
        return p.steps >= value - 1
    req = p.req
    if kind == "update":
        return p.updates >= value - 1 and is_update(req)
    return p.cases >= value - 1 and req[0] in (CAS, SC)


def run_script(queue, script: str | Iterable[Command], monitors: bool | list = True,
               budget: int = 10_000) -> ScriptResult:
    """Execute a script against ``queue``; every unpaused operation runs alone."""
    cmds = parse_script(script) if isinstance(script, str) else list(script)
    for c in cmds:
        if not 0 <= c.pid < queue.n:
            raise ScriptError(f"{c}: queue has only {queue.n} processes")
    drv = Driver(queue, monitors, record=True)
    out = ScriptResult(drv.history, driver=drv)
    for c in cmds:
        pid = c.pid
        if c.action in ("enq", "deq"):
            drv.start(pid, (c.action, c.arg))
        elif not drv.busy(pid):
            raise ScriptError(f"{c}: p{pid} has no pending operation")
        if c.action == "step":
            for _ in range(c.arg):
                if not drv.busy(pid) or drv.step(pid):
                    break
            out.results.append((c, drv.results[-1][2] if not drv.busy(pid) else "paused"))
            continue
        if c.action == "resume":
            # a resumed operation is past its old pause point: count labels afresh
            drv.procs[pid].labels = []
        out.results.append((c, _drive(drv, pid, c.pause, budget, out, c)))
    return out


def _drive(drv: Driver, pid: int, pause, budget: int, out: ScriptResult, cmd):
    for _ in range(budget):
        if not drv.busy(pid):
            return drv.results[-1][2]
        if pause is not None and _reached(drv, pid, pause):
            return "paused"
        drv.step(pid)
    if not drv.busy(pid):
        return drv.results[-1][2]
    out.stuck.append(cmd)
    return "stuck"


# A dequeue is poised on its cell update while the same value leaves and
# re-enters the queue; afterwards one more enqueue probes the state.
ABA_SCRIPT = """\
p0 enq 5
p1 deq @update:1
p0 deq
p0 enq 5
p1 resume
p0 enq 7
"""


def aba_scenario(queue) -> ScriptResult:
    """Cross-round paused dequeue with a duplicate value (capacity 1)."""
    return run_script(queue, ABA_SCRIPT)


# The covering enqueue stalls before writing its element; a next-round
# enqueue replaces its descriptor and the staller writes that element.
REPLACEMENT_SCRIPT = """\
p0 enq 1 @label:complete
p1 enq 9
p1 deq
p2 enq 2
p0 resume
p1 deq
"""


def replacement_scenario(queue) -> ScriptResult:
    return run_script(queue, REPLACEMENT_SCRIPT)


@dataclass(frozen=True)
class Pause:
    """An operation of ``pid`` poised at ``point`` from cycle ``start`` until
    it is resumed after the fill of cycle ``resume``.  ``when`` says whether
    it starts before the fill (``"fill"``) or before the empty (``"empty"``)
    of its start cycle."""

    pid: int
    op: str
    value: Any = None
    point: str = "update:1"
    start: int = 0
    resume: int = 1
    when: str = "fill"


def fill_empty_script(capacity: int, pauses: Iterable[Pause] = (), cycles: int = 2,
                      filler: int = 0, values: Iterable | None = None) -> str:
    """Script of ``cycles`` fill/empty rounds by ``filler`` with poised operations.

    A fill enqueues ``capacity`` values in isolation; an empty dequeues
    ``capacity`` times.  ``values`` (cycled) supplies the enqueued values;
    by default every value is distinct.
    """
    pauses = list(pauses)
    vals = list(values) if values is not None else None
    lines = []
    counter = 0

    def begin(cycle, phase):
        for pz in pauses:
            if pz.start == cycle and pz.when == phase:
                arg = f" {pz.value}" if pz.op == "enq" else ""
                lines.append(f"p{pz.pid} {pz.op}{arg} @{pz.point}")

    for cycle in range(cycles):
        begin(cycle, "fill")
        for _ in range(capacity):
            v = vals[counter % len(vals)] if vals else 100 + counter
            counter += 1
            lines.append(f"p{filler} enq {v}")
        for pz in pauses:
            if pz.resume == cycle:
                lines.append(f"p{pz.pid} resume")
        begin(cycle, "empty")
        for _ in range(capacity):
            lines.append(f"p{filler} deq")
    for pz in pauses:
        if pz.resume >= cycles:
            lines.append(f"p{pz.pid} resume")
    return "\n".join(lines) + "\n"


def fill_empty_scenario(queue, pauses: Iterable[Pause] = (), cycles: int = 2, filler: int = 0,
                        values: Iterable | None = None) -> ScriptResult:
    return run_script(queue, fill_empty_script(queue.C, pauses, cycles, filler, values))
