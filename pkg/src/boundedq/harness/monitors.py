"""Runtime invariant monitors driven by the schedulers.

A monitor sees every primitive that updates one of the locations it
watches.  ``before`` runs just before the primitive (and may return a token
describing the pre-state), ``after`` runs just after it and returns the new
monitor state.  Monitor states must be hashable: the exhaustive explorer
folds them into its state key.  Violations raise :class:`MonitorViolation`.
"""

from __future__ import annotations

from ..memory import ALLOC, CAS, FREE, SC, WRITE, DescRef


class MonitorViolation(AssertionError):
    def __init__(self, monitor: str, message: str):
        super().__init__(f"[{monitor}] {message}")
        self.monitor = monitor
        self.message = message


class Monitor:
    name = "monitor"
    #: locations whose updates trigger ``before``/``after``; ``None`` means all
    watch: frozenset | None = frozenset()

    def initial(self):
        return None

    def before(self, state, mem, pid, req):
        return None

    def after(self, state, token, mem, pid, req, result):
        return state

    def invoke(self, state, pid, index, op):
        return state

    def respond(self, state, pid, index, op, result):
        return state

    def final(self, state, mem) -> None:
        pass

    def fail(self, message: str):
        raise MonitorViolation(self.name, message)


class CounterMonitor(Monitor):
    """``dequeues <= enqueues <= dequeues + C`` after every counter update."""

    name = "counters"

    def __init__(self, queue):
        self.e, self.d, self.C = queue.enqueues, queue.dequeues, queue.C
        self.watch = frozenset((self.e, self.d))
        self.checks = 0

    def initial(self):
        return None

    def verify(self, cells) -> None:
        self.checks += 1
        e, d = cells[self.e], cells[self.d]
        if not d <= e <= d + self.C:
            self.fail(f"counter sandwich broken: enqueues={e} dequeues={d} C={self.C}")

    def after(self, state, token, mem, pid, req, result):
        self.verify(mem.cells)
        return state

    def final(self, state, mem) -> None:
        self.verify(mem.cells)


def _status(cells, succ, ref):
    if ref is None:
        return "empty"
    seq, ok = cells[succ[ref.idx]]
    if seq != ref.seq:
        return "stale"
    return {None: "undecided", True: "successful", False: "failed"}[ok]


# Slot life-cycle automaton: (from, to) pairs; "successful->successful" means
# the slot moved to a *different* successful descriptor.
SLOT_EDGES = frozenset({
    ("empty", "undecided"),
    ("undecided", "failed"),
    ("undecided", "successful"),
    ("failed", "empty"),
    ("successful", "empty"),
    ("successful", "successful"),
})


class SlotLifecycleMonitor(Monitor):
    """Every change of an announcement slot must be an edge of the life-cycle."""

    name = "slot-lifecycle"

    def __init__(self, queue):
        self.ops = list(queue.ops)
        self.succ = queue.pool.words["succ"]
        self.watch = frozenset(self.ops) | frozenset(self.succ)
        self.transitions: dict[tuple[str, str], int] = {}

    def _abstract(self, cells):
        return [(cells[s], _status(cells, self.succ, cells[s])) for s in self.ops]

    def before(self, state, mem, pid, req):
        return self._abstract(mem.cells)

    def after(self, state, token, mem, pid, req, result):
        now = self._abstract(mem.cells)
        for slot, ((r0, s0), (r1, s1)) in enumerate(zip(token, now)):
            if s1 == "stale":
                self.fail(f"slot {slot} holds recycled descriptor {r1}")
            if r0 == r1 and s0 == s1:
                continue
            edge = (s0, s1)
            if edge not in SLOT_EDGES or (edge == ("successful", "successful") and r0 == r1):
                self.fail(f"slot {slot}: illegal transition {s0}({r0}) -> {s1}({r1}) by p{pid}")
            if r0 != r1 and edge[0] == edge[1] == "undecided":
                self.fail(f"slot {slot}: descriptor swapped while undecided")
            self.transitions[edge] = self.transitions.get(edge, 0) + 1
        return state


class UniquenessMonitor(Monitor):
    """Each counter position is bound to exactly one successful descriptor.

    A descriptor is *bound* to its position ``e`` when it is successful and
    in ``ops`` (decided successful while announced, or swapped in already
    successful).  Per enqueue, the number of bound descriptors it created
    must be 1 if it returned ``True`` and 0 otherwise.

    State: ``(bindings, per-process (acquired refs, bound count))``.
    """

    name = "descriptor-uniqueness"

    def __init__(self, queue):
        self.q = queue
        self.ops = list(queue.ops)
        self.succ = queue.pool.words["succ"]
        self.payload = queue.pool.words["payload"]
        self.header = list(queue.pool.header)
        self.hdr_idx = {loc: k for k, loc in enumerate(self.header)}
        self.succ_idx = {loc: k for k, loc in enumerate(self.succ)}
        self.watch = frozenset(self.ops) | frozenset(self.succ) | frozenset(self.header)
        self.enqueues = queue.enqueues

    def initial(self):
        return (frozenset(), tuple((frozenset(), 0) for _ in range(self.q.n)))

    def invoke(self, state, pid, index, op):
        bindings, procs = state
        procs = list(procs)
        procs[pid] = (frozenset(), 0)
        return bindings, tuple(procs)

    def respond(self, state, pid, index, op, result):
        if op[0] == "enq":
            count = state[1][pid][1]
            want = 1 if result is True else 0
            if count != want:
                self.fail(f"p{pid} enq({op[1]!r}) -> {result!r} had {count} successful descriptors")
        return state

    def _bind(self, state, cells, ref: DescRef):
        bindings, procs = state
        _, e, _, _ = cells[self.payload[ref.idx]]
        for pos, other in bindings:
            if pos == e and other != ref:
                self.fail(f"position {e} bound to both {other} and {ref}")
            if other == ref:
                return state
        procs = list(procs)
        for p, (refs, count) in enumerate(procs):
            if ref in refs:
                procs[p] = (refs, count + 1)
                break
        else:
            self.fail(f"{ref} bound outside its creator's operation")
        return bindings | {(e, ref)}, tuple(procs)

    def after(self, state, token, mem, pid, req, result):
        cells = mem.cells
        op, loc = req[0], req[1]
        if op == CAS and result and loc in self.hdr_idx and req[2][1] == 0:
            # acquisition: (seq, 0) -> (seq + 1, refs)
            bindings, procs = state
            ref = DescRef(self.hdr_idx[loc], req[3][0])
            procs = list(procs)
            refs, count = procs[pid]
            procs[pid] = (refs | {ref}, count)
            return bindings, tuple(procs)
        if loc in self.succ_idx and op in (CAS, WRITE) and (op == WRITE or result):
            seq, ok = req[2] if op == WRITE else req[3]
            ref = DescRef(self.succ_idx[loc], seq)
            announced = any(cells[s] == ref for s in self.ops)
            if op == WRITE and announced:
                self.fail(f"plain write to the status of announced descriptor {ref}")
            if ok is True and announced:
                return self._bind(state, cells, ref)
            return state
        if op == CAS and result and loc in self.ops:
            ref = req[3]
            if ref is not None:
                seq, ok = cells[self.succ[ref.idx]]
                if ok is True and seq == ref.seq:
                    return self._bind(state, cells, ref)
        return state

    def final(self, state, mem) -> None:
        bound = {pos for pos, _ in state[0]}
        for pos in range(mem.cells[self.enqueues]):
            if pos not in bound:
                self.fail(f"position {pos} < enqueues has no successful descriptor")


class SegmentBoundMonitor(Monitor):
    """Chain plus pooled segments stay within ``ceil(C/K) + 1 + 2n``."""

    name = "segment-bound"
    watch = None

    def __init__(self, queue):
        self.q = queue
        self.bound = queue.segment_bound()
        self.locs = frozenset([queue.head, *queue.pool])
        self.peak = 0

    def after(self, state, token, mem, pid, req, result):
        op = req[0]
        if op in (ALLOC, FREE) or (op == CAS and result and (req[1] in self.locs or req[2] is None)):
            seg = self.q.segments()
            total = seg["chain"] + seg["pooled"]
            self.peak = max(self.peak, total)
            if total > self.bound:
                self.fail(f"{total} live segments exceed the bound {self.bound}")
        return state


class DescriptorOwnershipMonitor(Monitor):
    """Each process holds at most one DCSS descriptor at a time."""

    name = "dcss-ownership"

    def __init__(self, queue):
        self.header = {loc: k for k, loc in enumerate(queue.dcss.pool.header)}
        self.watch = frozenset(self.header)
        self.n = queue.n

    def initial(self):
        return (None,) * self.n

    def after(self, state, token, mem, pid, req, result):
        op, loc = req[0], req[1]
        held = list(state)
        if op == CAS and result and req[2][1] == 0:
            if held[pid] is not None:
                self.fail(f"p{pid} acquired a second DCSS descriptor")
            held[pid] = self.header[loc]
        elif op == WRITE and req[2][1] == 0:
            held[pid] = None
        return tuple(held)


def default_monitors(queue) -> list[Monitor]:
    """The monitors that apply to ``queue``'s implementation."""
    mons: list[Monitor] = [CounterMonitor(queue)]
    name = getattr(queue, "name", "")
    if name == "optimal":
        mons += [SlotLifecycleMonitor(queue), UniquenessMonitor(queue)]
    elif name == "dcss":
        mons.append(DescriptorOwnershipMonitor(queue))
    elif name == "segment":
        mons.append(SegmentBoundMonitor(queue))
    return mons


def is_update(req) -> bool:
    return req[0] in (WRITE, CAS, SC, ALLOC, FREE)
