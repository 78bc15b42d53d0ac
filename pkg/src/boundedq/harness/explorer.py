"""Exhaustive exploration of interleavings at primitive-step granularity.

The explorer runs a fixed workload (a list of operations per process) on
one queue instance and enumerates every interleaving of the processes'
shared-memory primitives, depth first.  Global states are cached, so each
distinct state is expanded once:

    state = (memory, per-process position, history so far, monitor states)

A process position is a node of a per-operation trie of local states: a
node knows the next primitive the operation will issue, and its children are
keyed by the primitive's result.  Generators are resumed where possible and
re-created by replaying the result path otherwise.  Each operation's retry
loop is marked with :func:`~boundedq.memory.restart`, so all retries of an
operation share the trie node at the loop head.

The history component is canonical: for every operation, the number of
operations each process had completed when it was invoked, plus its result.
Two paths with equal canonical histories agree on real-time order and
results, hence on linearizability.  By default (``track="configs"``) the
history component is replaced by the set of linearization configurations
it admits (see :mod:`boundedq.harness.linconfig`), which merges far more
states; violations are still confirmed with :func:`check` on the concrete
history of the offending path.
"""

from __future__ import annotations

import itertools
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from ..memory import LABEL, RESTART, ContractViolation, describe
from .history import PENDING, History, check
from .linconfig import LinTracker
from .monitors import Monitor, MonitorViolation, default_monitors, is_update

Op = tuple  # ("enq", x) or ("deq", None)


@dataclass(frozen=True)
class Workload:
    """Operations per process, run in order by that process."""

    programs: tuple

    @classmethod
    def from_codes(cls, codes: Sequence[str], first_value: int = 1) -> "Workload":
        """``["EE", "DE"]`` -> p0: enq, enq; p1: deq, enq.  Values are distinct."""
        v = first_value
        progs = []
        for code in codes:
            prog = []
            for ch in code.upper():
                if ch == "E":
                    prog.append(("enq", v))
                    v += 1
                elif ch == "D":
                    prog.append(("deq", None))
                else:
                    raise ValueError(f"bad op code {ch!r}")
            progs.append(tuple(prog))
        return cls(tuple(progs))

    @property
    def n(self) -> int:
        return len(self.programs)

    def codes(self) -> list[str]:
        return ["".join("E" if op[0] == "enq" else "D" for op in prog) for prog in self.programs]

    def __str__(self) -> str:
        return ",".join(self.codes())


def start_op(queue, pid: int, op: Op):
    if op[0] == "enq":
        return queue.enq_steps(op[1], pid)
    return queue.deq_steps(pid)


def advance(gen, value=None, first=False):
    """Send ``value`` (or start the generator) and skip markers.

    Returns ``(request, restarted, done, result)``.
    """
    restarted = False
    try:
        req = next(gen) if first else gen.send(value)
        while req[0] >= RESTART:
            if req[0] == RESTART:
                restarted = True
            req = next(gen)
    except StopIteration as stop:
        return None, restarted, True, stop.value
    return req, restarted, False, None


class _Pruned(Exception):
    """The current step produced a violation that has been recorded."""


class _Node:
    __slots__ = ("uid", "req", "children", "gen", "parent", "edge", "done", "result", "restart")

    def __init__(self, uid, req=None, gen=None, parent=None, edge=None, done=False, result=None):
        self.uid = uid
        self.req = req
        self.children: dict = {}
        self.gen = gen
        self.parent = parent
        self.edge = edge
        self.done = done
        self.result = result
        self.restart = False  # entering this node restarts the retry loop


def frame_key(gen):
    """Hashable summary of a suspended generator chain: code position and
    local variables of every frame.  The operations are written so that this
    determines the rest of the run (no live temporaries across a yield
    beyond loop iterators over ranges, whose position the loop variable
    fixes)."""
    parts = []
    while gen is not None:
        frame = gen.gi_frame
        if frame is None:
            return None
        try:
            local = tuple(sorted(frame.f_locals.items()))
            hash(local)
        except TypeError:
            return None
        parts.append((frame.f_code, frame.f_lasti, local))
        gen = gen.gi_yieldfrom
    return tuple(parts)


class _Trie:
    """Local states of one operation of one process."""

    def __init__(self, explorer: "Explorer", pid: int, op: Op):
        self.x = explorer
        self.pid = pid
        self.op = op
        self.loop_head: _Node | None = None
        self.by_frame: dict = {}
        gen = start_op(explorer.queue, pid, op)
        req, restarted, done, result = advance(gen, first=True)
        self.root = self._new(req, gen, None, None, done, result)
        if restarted:
            self.loop_head = self.root

    def _new(self, req, gen, parent, edge, done=False, result=None) -> _Node:
        self.x._uid += 1
        return _Node(self.x._uid, req, gen, parent, edge, done, result)

    def _replay(self, node: _Node):
        path = []
        while node.parent is not None:
            path.append(node.edge)
            node = node.parent
        gen = start_op(self.x.queue, self.pid, self.op)
        advance(gen, first=True)
        for value in reversed(path):
            advance(gen, value)
        self.x.replays += 1
        return gen

    def child(self, node: _Node, result) -> _Node:
        kid = node.children.get(result)
        if kid is not None:
            return kid
        gen = node.gen if node.gen is not None else self._replay(node)
        node.gen = None
        req, restarted, done, res = advance(gen, result)
        if restarted and not done and self.loop_head is not None:
            kid = self.loop_head
        elif not restarted and not done and self.x.merge_frames and (fk := frame_key(gen)) is not None:
            kid = self.by_frame.get(fk)
            if kid is None:
                kid = self.by_frame[fk] = self._new(req, gen, node, result)
            elif kid.gen is None:
                kid.gen = gen
        else:
            kid = self._new(req, None if done else gen, node, result, done, res)
            if restarted and not done:
                self.loop_head = kid
        node.children[result] = kid
        return kid


@dataclass
class Violation:
    kind: str  # "monitor", "linearizability", "contract", "livelock", "budget", "error"
    message: str
    trace: list = field(default_factory=list)
    history: History | None = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "message": self.message,
            "trace": [list(step) for step in self.trace],
            "history": self.history.to_json() if self.history is not None else None,
        }


@dataclass
class ExplorationResult:
    workload: Workload
    states: int = 0
    transitions: int = 0
    terminals: int = 0
    executions: int = 0  # number of distinct complete schedules
    histories: set = field(default_factory=set)  # distinct terminal History objects
    verdicts: dict = field(default_factory=dict)  # canonical history -> bool
    violations: list = field(default_factory=list)
    max_solo_steps: int | None = None
    solo_checked: int = 0
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def linearizability_violations(self) -> int:
        return sum(1 for v in self.violations if v.kind == "linearizability")

    def summary(self) -> str:
        return (f"{self.workload}: states={self.states} transitions={self.transitions} "
                f"terminals={self.terminals} histories={len(self.verdicts)} "
                f"violations={len(self.violations)} {self.elapsed:.2f}s")


class Explorer:
    """Depth-first exhaustive explorer with state caching.

    ``monitors``: ``True`` for the implementation's default monitors, or a
    callable ``queue -> list[Monitor]``, or ``False``.
    ``step_budget`` bounds the length of any single execution; a longer
    one is reported as potential non-termination.
    ``solo`` computes, for every explored state and process, how many steps
    that process needs to finish its current operation running alone.
    """

    def __init__(self, factory: Callable[[], Any], workload: Workload, monitors=True,
                 step_budget: int = 5_000, solo: bool = False, check_linearizability: bool = True,
                 max_violations: int = 1, max_states: int | None = None, keep_histories: bool = True,
                 track: str = "configs", merge_frames: bool = True):
        if track not in ("configs", "histories"):
            raise ValueError("track must be 'configs' or 'histories'")
        self.track = track
        # local states with equal frames (code position and locals) are merged
        self.merge_frames = merge_frames
        self.factory = factory
        self.workload = workload
        self.queue = factory()
        self.mem = self.queue.memory
        if monitors is True:
            self.monitors: list[Monitor] = default_monitors(self.queue)
        elif monitors:
            self.monitors = list(monitors(self.queue))
        else:
            self.monitors = []
        self.step_budget = step_budget
        self.solo = solo
        self.check_lin = check_linearizability
        self.max_violations = max_violations
        self.max_states = max_states
        self.keep_histories = keep_histories
        self.replays = 0
        self._uid = 0
        self.lin = LinTracker(workload.n, self.queue.C)
        self._tries: dict = {}
        self._watch = [m.watch for m in self.monitors]

    def _trie(self, pid: int, index: int) -> _Trie:
        key = (pid, index)
        t = self._tries.get(key)
        if t is None:
            t = self._tries[key] = _Trie(self, pid, self.workload.programs[pid][index])
        return t

    # -------------------------------------------------------------------------

    def run(self) -> ExplorationResult:
        t0 = time.perf_counter()
        wl = self.workload
        n = wl.n
        self.res = res = ExplorationResult(wl)
        self.lengths = [len(p) for p in wl.programs]
        self.pos = [(0, self._trie(p, 0).root if self.lengths[p] else None) for p in range(n)]
        self.hist = tuple(() for _ in range(n))
        self.configs = self.lin.initial
        self.open_ops = (None,) * n
        self.mstate = tuple(m.initial() for m in self.monitors)
        self.events: list = []
        self.trace: list = []
        self.ids: dict = {}
        self.paths: list[int] = []
        self.edges: list = []
        self.onstack: set = set()
        self._stop = False
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 4 * self.step_budget + 1000))
        try:
            self._dfs(0)
        finally:
            sys.setrecursionlimit(limit)
        res.states = len(self.ids)
        res.executions = self.paths[0] if self.paths else 0
        if self.solo and not self._stop:
            self._solo_distances()
        res.elapsed = time.perf_counter() - t0
        return res

    def _key(self):
        return (self.mem.snapshot(), tuple((i, node.uid if node is not None else 0) for i, node in self.pos),
                self.configs if self.track == "configs" else self.hist, self.mstate)

    def _violate(self, kind: str, message: str, history: History | None = None) -> None:
        trace = [(pid, describe(req), repr(result)) for pid, req, result in self.trace]
        self.res.violations.append(Violation(kind, message, trace, history))
        if len(self.res.violations) >= self.max_violations:
            self._stop = True

    def _dfs(self, depth: int) -> int:
        key = self._key()
        sid = self.ids.get(key)
        if sid is not None:
            if sid in self.onstack:
                self._violate("livelock", "a cycle of states: some execution never terminates")
            return sid
        sid = len(self.ids)
        self.ids[key] = sid
        self.paths.append(0)
        if self.solo:
            self.edges.append([None] * self.workload.n)
        if self.max_states is not None and sid >= self.max_states:
            self._violate("budget", f"state limit {self.max_states} reached")
            return sid
        if depth > self.step_budget:
            self._violate("budget", f"an execution exceeded {self.step_budget} steps")
            return sid

        active = [p for p in range(self.workload.n) if self.pos[p][0] < self.lengths[p]]
        if not active:
            self._terminal(sid)
            return sid

        self.onstack.add(sid)
        snap = self.mem.snapshot()
        total = 0
        for pid in active:
            if self._stop:
                break
            saved = (self.pos[pid], self.hist, self.mstate, len(self.events), len(self.trace),
                     self.configs, self.open_ops)
            try:
                completes = self._step(pid)
            except _Pruned:
                completes = None
            except (MonitorViolation, ContractViolation, AssertionError) as exc:
                kind = "monitor" if isinstance(exc, MonitorViolation) else "contract"
                self._violate(kind, str(exc))
                completes = None
            if completes is not None:
                self.res.transitions += 1
                child = self._dfs(depth + 1)
                total += self.paths[child]
                if self.solo:
                    self.edges[sid][pid] = (child, completes)
            self.mem.restore(snap)
            self.pos[pid], self.hist, self.mstate = saved[0], saved[1], saved[2]
            self.configs, self.open_ops = saved[5], saved[6]
            del self.events[saved[3]:]
            del self.trace[saved[4]:]
        self.onstack.discard(sid)
        self.paths[sid] = total
        return sid

    def _step(self, pid: int) -> bool:
        """Execute one primitive of ``pid``; returns whether its operation completed."""
        index, node = self.pos[pid]
        op = self.workload.programs[pid][index]
        mem = self.mem
        hist = self.hist
        if len(hist[pid]) == index:
            vec = tuple(i for i, _ in self.pos)
            hist = hist[:pid] + (hist[pid] + ((vec, PENDING),),) + hist[pid + 1:]
            self.events.append(("invoke", pid, op))
            if self.track == "configs":
                ops = self.open_ops
                self.open_ops = ops = ops[:pid] + (op,) + ops[pid + 1:]
                self.configs = self.lin.invoke(self.configs, pid, op, ops)
            if self.monitors:
                self.mstate = tuple(m.invoke(s, pid, index, op) for m, s in zip(self.monitors, self.mstate))
        req = node.req
        tokens = None
        update = is_update(req)
        if update and self.monitors:
            tokens = [m.before(s, mem, pid, req) if (w is None or req[1] in w) else None
                      for m, s, w in zip(self.monitors, self.mstate, self._watch)]
        result = mem.apply(pid, req)
        self.trace.append((pid, req, result))
        if update and self.monitors:
            self.mstate = tuple(
                m.after(s, tok, mem, pid, req, result) if (w is None or req[1] in w) else s
                for m, s, w, tok in zip(self.monitors, self.mstate, self._watch, tokens))
        trie = self._tries[(pid, index)]
        kid = trie.child(node, result)
        if kid.done:
            vec = hist[pid][index][0]
            hist = hist[:pid] + (hist[pid][:index] + ((vec, kid.result),),) + hist[pid + 1:]
            self.events.append(("respond", pid, op, kid.result))
            if self.track == "configs":
                self.open_ops = self.open_ops[:pid] + (None,) + self.open_ops[pid + 1:]
                self.configs = self.lin.respond(self.configs, pid, kid.result)
                if not self.configs:
                    self._lin_failure()
            if self.monitors:
                self.mstate = tuple(m.respond(s, pid, index, op, kid.result)
                                    for m, s in zip(self.monitors, self.mstate))
            mem.unlink(pid)
            nxt = index + 1
            self.pos[pid] = (nxt, self._trie(pid, nxt).root if nxt < self.lengths[pid] else None)
            self.hist = hist
            return True
        if kid is trie.loop_head:
            mem.unlink(pid)
        self.pos[pid] = (index, kid)
        self.hist = hist
        return False

    def history(self) -> History:
        h = History()
        for ev in self.events:
            if ev[0] == "invoke":
                h.invoke(ev[1], ev[2][0], ev[2][1])
            else:
                h.respond(ev[1], ev[2][0], ev[2][1], ev[3])
        return h

    def _lin_failure(self) -> None:
        h = self.history()
        v = check(h, self.queue.C)
        if v.linearizable:
            raise AssertionError("configuration tracking disagrees with check()")
        self.res.histories.add(h)
        self.res.verdicts[h] = False
        self._violate("linearizability", "history is not linearizable", v.violation or h)
        raise _Pruned

    def _terminal(self, sid: int) -> None:
        res = self.res
        res.terminals += 1
        self.paths[sid] = 1
        for m, s in zip(self.monitors, self.mstate):
            try:
                m.final(s, self.mem)
            except MonitorViolation as exc:
                self._violate("monitor", str(exc))
        for per in self.hist:
            for _, result in per:
                if result is not None and type(result).__name__ in ("Null", "DescRef"):
                    self._violate("linearizability", f"internal marker {result!r} returned to a caller")
        if not self.check_lin:
            return
        if self.track == "configs":
            # every response was matched by some configuration on the way here
            if self.keep_histories and self.configs not in res.verdicts:
                res.verdicts[self.configs] = True
                res.histories.add(self.history())
            return
        verdict = res.verdicts.get(self.hist)
        if verdict is None:
            h = self.history()
            v = check(h, self.queue.C)
            verdict = res.verdicts[self.hist] = v.linearizable
            if self.keep_histories:
                res.histories.add(h)
            if v.linearizable is None:
                self._violate("linearizability", "checker inconclusive", h)
            elif not v.linearizable:
                self._violate("linearizability", "history is not linearizable", v.violation or h)

    def _solo_distances(self) -> None:
        """Longest solo completion distance over all explored states."""
        edges = self.edges
        best = 0
        checked = 0
        n = self.workload.n
        for pid in range(n):
            dist: dict[int, int] = {}
            for start in range(len(edges)):
                if edges[start][pid] is None or start in dist:
                    continue
                chain = []
                s = start
                seen = set()
                while True:
                    if s in dist:
                        d = dist[s]
                        break
                    e = edges[s][pid]
                    if e is None:
                        # unexplored (pruned by a violation) -- do not count
                        d = None
                        break
                    if s in seen:
                        self._violate("livelock", f"p{pid} running alone never finishes its operation")
                        return
                    seen.add(s)
                    chain.append(s)
                    child, completes = e
                    if completes:
                        d = 0
                        break
                    s = child
                for s in reversed(chain):
                    if d is None:
                        break
                    d += 1
                    dist[s] = d
                    if d > best:
                        best = d
                checked += len(chain)
        self.res.max_solo_steps = best
        self.res.solo_checked = checked


def explore(factory: Callable[[], Any], workload: Workload | Sequence[str], **kw) -> ExplorationResult:
    if not isinstance(workload, Workload):
        workload = Workload.from_codes(workload)
    return Explorer(factory, workload, **kw).run()


def workloads(max_procs: int = 3, ops_per_proc: int = 2, min_procs: int = 1) -> list[Workload]:
    """All process programs up to symmetry: multisets of op strings."""
    out = []
    programs = ["".join(p) for k in range(1, ops_per_proc + 1) for p in itertools.product("ED", repeat=k)]
    for n in range(min_procs, max_procs + 1):
        for combo in itertools.combinations_with_replacement(programs, n):
            out.append(Workload.from_codes(combo))
    return out


@dataclass
class SuiteResult:
    """Outcome of exploring a grid of workloads and capacities."""

    impl: str
    runs: list = field(default_factory=list)  # (capacity, workload, ExplorationResult)
    skipped: list = field(default_factory=list)  # (capacity, workload) not reached in time
    elapsed: float = 0.0

    @property
    def violations(self) -> list:
        return [(c, str(w), v) for c, w, r in self.runs for v in r.violations if v.kind != "budget"]

    @property
    def incomplete(self) -> list:
        """Cases that were not explored to the end (state cap or time)."""
        cut = [(c, str(w)) for c, w, r in self.runs if any(v.kind == "budget" for v in r.violations)]
        return cut + [(c, str(w)) for c, w in self.skipped]

    @property
    def complete(self) -> bool:
        return not self.incomplete

    @property
    def states(self) -> int:
        return sum(r.states for _, _, r in self.runs)

    @property
    def max_solo_steps(self) -> int | None:
        vals = [r.max_solo_steps for _, _, r in self.runs if r.max_solo_steps is not None]
        return max(vals) if vals else None

    def summary(self) -> str:
        done = len(self.runs) - len([1 for _, _, r in self.runs if any(v.kind == "budget" for v in r.violations)])
        total = len(self.runs) + len(self.skipped)
        return (f"{self.impl}: {done}/{total} cases explored completely, {self.states} states, "
                f"{len(self.violations)} violations, {self.elapsed:.0f}s")


def explore_suite(impl: str, factory: Callable[[int, int], Any], capacities: Iterable[int] = (1, 2, 3),
                  max_procs: int = 3, ops_per_proc: int = 2, time_budget: float | None = None,
                  max_states: int | None = 2_000_000, progress: Callable | None = None, **kw) -> SuiteResult:
    """Explore every workload up to the bounds for every capacity.

    ``factory(capacity, n)`` builds a queue.  Cases run from the smallest
    (fewest operations) up; once ``time_budget`` seconds are spent the
    remaining cases are recorded as skipped.
    """
    t0 = time.perf_counter()
    out = SuiteResult(impl)
    cases = [(c, wl) for wl in workloads(max_procs, ops_per_proc) for c in capacities]
    cases.sort(key=lambda cw: (sum(len(p) for p in cw[1].programs), cw[1].n, cw[0]))
    for c, wl in cases:
        if time_budget is not None and time.perf_counter() - t0 > time_budget:
            out.skipped.append((c, wl))
            continue
        res = explore(lambda: factory(c, wl.n), wl, max_states=max_states, **kw)
        out.runs.append((c, wl, res))
        if progress is not None:
            progress(c, wl, res)
    out.elapsed = time.perf_counter() - t0
    return out
