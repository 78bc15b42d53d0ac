"""Incremental linearizability tracking for the explorer.

Instead of keeping the history and checking it at the end, the explorer can
keep the set of *configurations* the history admits: pairs of

* the abstract content of the sequential queue, and
* per process: idle, pending-and-not-yet-linearized, or
  linearized-with-result.

The set is closed under linearizing any pending operation.  A response with
result ``r`` keeps only configurations in which that operation has been
linearized with ``r``; an empty set means the history is not linearizable.
Histories with the same configuration set have the same linearizable
extensions, so the explorer can merge them.
"""

from __future__ import annotations

from ..sequential import seq_apply

IDLE = None
OPEN = "open"


class LinTracker:
    def __init__(self, n: int, capacity: int):
        self.n = n
        self.C = capacity
        self.initial = frozenset([((), (IDLE,) * n)])
        self._inv: dict = {}
        self._resp: dict = {}

    def invoke(self, configs: frozenset, pid: int, op: tuple, ops: tuple) -> frozenset:
        """``ops[p]`` is the operation process ``p`` has open (after this invoke)."""
        key = (configs, pid, ops)
        hit = self._inv.get(key)
        if hit is None:
            start = set()
            for content, status in configs:
                st = list(status)
                st[pid] = OPEN
                start.add((content, tuple(st)))
            hit = self._inv[key] = self._close(start, ops)
        return hit

    def respond(self, configs: frozenset, pid: int, result) -> frozenset:
        key = (configs, pid, result)
        hit = self._resp.get(key)
        if hit is None:
            want = ("done", result)
            out = set()
            for content, status in configs:
                if status[pid] == want:
                    st = list(status)
                    st[pid] = IDLE
                    out.add((content, tuple(st)))
            hit = self._resp[key] = frozenset(out)
        return hit

    def _close(self, configs: set, ops: tuple) -> frozenset:
        todo = list(configs)
        seen = set(configs)
        while todo:
            content, status = todo.pop()
            for p, s in enumerate(status):
                if s != OPEN:
                    continue
                kind, arg = ops[p]
                new_content, res = seq_apply(content, self.C, kind, arg)
                st = list(status)
                st[p] = ("done", res)
                cfg = (new_content, tuple(st))
                if cfg not in seen:
                    seen.add(cfg)
                    todo.append(cfg)
        return frozenset(seen)
