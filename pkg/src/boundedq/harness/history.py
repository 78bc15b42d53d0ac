"""Histories and linearizability checking against the sequential queue."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from ..sequential import seq_apply

INVOKE, RESPOND = "invoke", "respond"
PENDING = "pending"


@dataclass(frozen=True)
class Event:
    pid: int
    kind: str  # INVOKE or RESPOND
    op: str  # "enq" or "deq"
    arg: Any = None
    result: Any = None

    def __str__(self) -> str:
        call = f"enq({self.arg!r})" if self.op == "enq" else "deq()"
        if self.kind == INVOKE:
            return f"p{self.pid} {call}"
        return f"p{self.pid} {call} -> {self.result!r}"


@dataclass(frozen=True)
class Operation:
    """One operation with its interval.  ``responded`` is ``None`` if pending."""

    pid: int
    op: str
    arg: Any
    result: Any
    invoked: int
    responded: int | None

    @property
    def pending(self) -> bool:
        return self.responded is None

    def __str__(self) -> str:
        call = f"enq({self.arg!r})" if self.op == "enq" else "deq()"
        res = "pending" if self.pending else repr(self.result)
        return f"p{self.pid}:{call}->{res}"


class MalformedHistory(ValueError):
    pass


@dataclass
class History:
    events: list[Event] = field(default_factory=list)

    def invoke(self, pid: int, op: str, arg: Any = None) -> None:
        self.events.append(Event(pid, INVOKE, op, arg))

    def respond(self, pid: int, op: str, arg: Any, result: Any) -> None:
        self.events.append(Event(pid, RESPOND, op, arg, result))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __eq__(self, other) -> bool:
        return isinstance(other, History) and self.events == other.events

    def __hash__(self) -> int:
        return hash(tuple(self.events))

    def operations(self) -> list[Operation]:
        """Pair invocations with responses; raises if the history is ill formed."""
        open_ops: dict[int, tuple[int, Event]] = {}
        ops: list[Operation | None] = []
        slot_of: dict[int, int] = {}
        for t, ev in enumerate(self.events):
            if ev.kind == INVOKE:
                if ev.pid in open_ops:
                    raise MalformedHistory(f"p{ev.pid} invoked {ev.op} with an operation still open")
                open_ops[ev.pid] = (t, ev)
                slot_of[ev.pid] = len(ops)
                ops.append(None)
            elif ev.kind == RESPOND:
                if ev.pid not in open_ops:
                    raise MalformedHistory(f"p{ev.pid} responded without an open operation")
                t0, inv = open_ops.pop(ev.pid)
                if inv.op != ev.op or inv.arg != ev.arg:
                    raise MalformedHistory(f"p{ev.pid} response does not match its invocation")
                ops[slot_of[ev.pid]] = Operation(ev.pid, ev.op, ev.arg, ev.result, t0, t)
            else:
                raise MalformedHistory(f"unknown event kind {ev.kind!r}")
        for pid, (t0, inv) in open_ops.items():
            ops[slot_of[pid]] = Operation(pid, inv.op, inv.arg, None, t0, None)
        return [op for op in ops if op is not None]

    def well_formed(self) -> bool:
        try:
            self.operations()
        except MalformedHistory:
            return False
        return True

    def prefix(self, k: int) -> "History":
        return History(list(self.events[:k]))

    def to_json(self) -> list:
        return [{"pid": e.pid, "kind": e.kind, "op": e.op, "arg": _plain(e.arg),
                 "result": _plain(e.result)} for e in self.events]

    def __str__(self) -> str:
        return "\n".join(str(e) for e in self.events)


def _plain(v):
    if v is None or isinstance(v, (bool, int, float, str)):
        return v
    return repr(v)


@dataclass
class Verdict:
    """Outcome of :func:`check`.

    ``linearizable`` is ``None`` when the search hit its cap (inconclusive).
    ``witness`` is a sequential order of operations; ``violation`` is the
    shortest non-linearizable prefix of the checked history.
    """

    linearizable: bool | None
    witness: list[Operation] | None = None
    violation: History | None = None
    explored: int = 0

    @property
    def inconclusive(self) -> bool:
        return self.linearizable is None

    def __bool__(self) -> bool:
        return self.linearizable is True


class _Cap(Exception):
    pass


def _search(ops: Sequence[Operation], capacity: int, max_nodes: int, init: tuple = ()):
    """Wing-Gong style search.  Returns (order or None, nodes explored)."""
    n = len(ops)
    must = 0
    for k, op in enumerate(ops):
        if not op.pending:
            must |= 1 << k
    INF = float("inf")
    resp = [INF if op.pending else op.responded for op in ops]
    inv = [op.invoked for op in ops]
    seen: set = set()
    order: list[int] = []
    nodes = 0

    def rec(mask: int, state: tuple) -> bool:
        nonlocal nodes
        if mask & must == must:
            return True
        key = (mask, state)
        if key in seen:
            return False
        nodes += 1
        if nodes > max_nodes:
            raise _Cap
        # An op may go next only if no other remaining op finished before it began.
        horizon = min((resp[k] for k in range(n) if not mask >> k & 1), default=INF)
        for k in range(n):
            if mask >> k & 1 or inv[k] > horizon:
                continue
            op = ops[k]
            new_state, res = seq_apply(state, capacity, op.op, op.arg)
            if not op.pending and res != op.result:
                continue
            order.append(k)
            if rec(mask | 1 << k, new_state):
                return True
            order.pop()
        seen.add(key)
        return False

    try:
        ok = rec(0, tuple(init))
    except _Cap:
        return None, nodes, True
    return (list(order) if ok else None), nodes, False


def check(h: History | Sequence[Operation], capacity: int, max_nodes: int = 1_000_000,
          minimize: bool = True, initial: Iterable = ()) -> Verdict:
    """Decide whether ``h`` is linearizable w.r.t. a bounded queue of ``capacity``.

    Pending operations may be linearized (with whatever result the
    sequential queue gives) or left out.
    """
    ops = h.operations() if isinstance(h, History) else list(h)
    order, nodes, capped = _search(ops, capacity, max_nodes, tuple(initial))
    if capped:
        return Verdict(None, explored=nodes)
    if order is not None:
        return Verdict(True, witness=[ops[k] for k in order], explored=nodes)
    violation = None
    if minimize and isinstance(h, History):
        violation = h
        for k in range(1, len(h.events) + 1):
            pre = h.prefix(k)
            sub, _, sub_capped = _search(pre.operations(), capacity, max_nodes, tuple(initial))
            if sub is None and not sub_capped:
                violation = pre
                break
    return Verdict(False, violation=violation, explored=nodes)


def brute_force_linearizable(h: History, capacity: int) -> bool:
    """Exhaustive decision: try every subset of pending operations and every
    permutation that respects real time.  Only for tiny histories."""
    ops = h.operations()
    done = [op for op in ops if not op.pending]
    pending = [op for op in ops if op.pending]
    for r in range(len(pending) + 1):
        for chosen in itertools.combinations(pending, r):
            for perm in itertools.permutations(done + list(chosen)):
                if _respects_real_time(perm) and _legal(perm, capacity):
                    return True
    return False


def _respects_real_time(seq: Sequence[Operation]) -> bool:
    for a, b in itertools.combinations(seq, 2):
        # b is placed after a, so b must not have finished before a started
        if b.responded is not None and b.responded < a.invoked:
            return False
    return True


def _legal(seq: Sequence[Operation], capacity: int) -> bool:
    items: list = []
    for op in seq:
        if op.op == "enq":
            res = len(items) < capacity
            if res:
                items.append(op.arg)
        else:
            res = items.pop(0) if items else None
        if not op.pending and res != op.result:
            return False
    return True


def all_histories(max_events: int, processes: int = 3, values: Sequence = (1, 2)):
    """Every well-formed history with at most ``max_events`` events.

    Invocations are ``enq(v)`` for ``v`` in ``values`` or ``deq()``; an enq
    responds with True/False and a deq with ``None`` or one of ``values``.
    """
    deq_results = (None,) + tuple(values)

    def rec(events: list, open_ops: dict):
        yield History(list(events))
        if len(events) == max_events:
            return
        for pid in range(processes):
            if pid in open_ops:
                op, arg = open_ops[pid]
                del open_ops[pid]
                for res in ((True, False) if op == "enq" else deq_results):
                    events.append(Event(pid, RESPOND, op, arg, res))
                    yield from rec(events, open_ops)
                    events.pop()
                open_ops[pid] = (op, arg)
            else:
                for op, arg in [("enq", v) for v in values] + [("deq", None)]:
                    open_ops[pid] = (op, arg)
                    events.append(Event(pid, INVOKE, op, arg))
                    yield from rec(events, open_ops)
                    events.pop()
                    del open_ops[pid]

    yield from rec([], {})
