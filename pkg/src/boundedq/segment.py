"""Bounded queue over an infinite array simulated by a list of segments.

Counter value ``i`` addresses cell ``i % K`` of the segment with id
``i // K``.  Every cell is written at most once by an enqueue (empty ->
element) and once by a dequeue (element -> ``TAKEN``), so cells never see
ABA.  Segments live in a singly linked list starting at ``head``; appends
CAS the ``next`` field.  Once ``dequeues`` passes the end of the head
segment, head moves on and the old segment goes to a pool of ``2n`` spares.

Reclamation uses hazard pointers (two per process).  A segment reached
through ``next`` is announced and then validated by re-reading ``dequeues``:
a segment is only retired after ``dequeues`` moved past its range, so if the
re-read is still inside the range the retirement comes later and sees the
announcement.  A pooled segment is reused only if no hazard points to it.
"""

from __future__ import annotations

from typing import Any

from .base import BoundedQueue
from .memory import (ALLOC, BOTTOM, FREE, TAKEN, Kind, alloc, cas, free, read,
                     restart, write)

ID, NEXT, CELLS = 0, 1, 2


class SegmentQueue(BoundedQueue):
    name = "segment"

    def __init__(self, capacity: int, processes: int = 1, segment_size: int = 16):
        super().__init__(capacity, processes)
        if segment_size < 1:
            raise ValueError("segment size must be positive")
        self.K = segment_size
        mem = self.memory
        self.layout = ((Kind.METADATA, 0), (Kind.METADATA, None)) + ((Kind.VALUE, BOTTOM),) * segment_size
        first = mem.apply(0, (ALLOC, self.layout))
        self.head = mem.allocate(Kind.METADATA, first, "head")
        self.hazards = [mem.allocate_array(Kind.METADATA, 2, None, f"hp{p}") for p in range(processes)]
        self._all_hazards = [loc for pair in self.hazards for loc in pair]
        self.pool = mem.allocate_array(Kind.METADATA, 2 * processes, None, "pool")

    # -- public operations ----------------------------------------------------

    def enq_steps(self, x: Any, pid: int):
        C = self.C
        enqueues, dequeues = self.enqueues, self.dequeues
        while True:
            yield restart()
            e = yield read(enqueues)
            d = yield read(dequeues)
            if e != (yield read(enqueues)):
                continue
            if e == d + C:
                yield from self._unprotect(pid)
                return False
            cell = yield from self.locate(e, pid)
            if cell is None:
                continue  # the segment is gone, so enqueues has moved past e
            done = yield cas(cell, BOTTOM, x)
            yield cas(enqueues, e, e + 1)
            if done:
                yield from self._unprotect(pid)
                return True

    def deq_steps(self, pid: int):
        enqueues, dequeues = self.enqueues, self.dequeues
        while True:
            yield restart()
            d = yield read(dequeues)
            e = yield read(enqueues)
            if d != (yield read(dequeues)):
                continue
            if e == d:
                yield from self._unprotect(pid)
                return None
            cell = yield from self.locate(d, pid)
            if cell is None:
                continue
            x = yield read(cell)
            done = x != BOTTOM and x != TAKEN and (yield cas(cell, x, TAKEN))
            yield cas(dequeues, d, d + 1)
            if done:
                yield from self._unprotect(pid)
                return x

    # -- segment list ---------------------------------------------------------

    def locate(self, i: int, pid: int):
        """Location of the cell for counter value ``i``, appending segments as
        needed; ``None`` if that segment has already been reclaimed."""
        K = self.K
        target = i // K
        hp = self.hazards[pid]
        while True:
            seg = yield from self._protect_head(pid)
            sid = yield read(seg + ID)
            if sid > target:
                return None
            if (yield read(self.dequeues)) >= (sid + 1) * K:
                yield from self._advance_head(seg, sid, pid)
                if target == sid:
                    return None
                continue
            slot = 0
            while sid < target:
                nxt = yield read(seg + NEXT)
                if nxt is None:
                    nxt = yield from self._append(seg, sid + 1, pid)
                slot ^= 1
                yield write(hp[slot], nxt)
                if (yield read(self.dequeues)) >= (sid + 2) * K:
                    break  # nxt may already be retired; start over from head
                seg, sid = nxt, sid + 1
            else:
                return seg + CELLS + i % K
            if (yield read(self.dequeues)) >= (target + 1) * K:
                return None

    def _protect_head(self, pid: int):
        hp = self.hazards[pid][0]
        while True:
            seg = yield read(self.head)
            yield write(hp, seg)
            if (yield read(self.head)) == seg:
                return seg

    def _advance_head(self, seg: int, sid: int, pid: int):
        # seg is protected by the caller.
        nxt = yield read(seg + NEXT)
        if nxt is None:
            nxt = yield from self._append(seg, sid + 1, pid)
        if (yield cas(self.head, seg, nxt)):
            yield from self._retire(seg)

    def _append(self, seg: int, new_id: int, pid: int):
        fresh = yield from self._new_segment(new_id)
        if (yield cas(seg + NEXT, None, fresh)):
            return fresh
        # Lost the race; our segment was never visible.
        yield from self._retire(fresh)
        return (yield read(seg + NEXT))

    def _new_segment(self, new_id: int):
        for slot in self.pool:
            seg = yield read(slot)
            if seg is None or (yield from self._hazardous(seg)):
                continue
            if (yield cas(slot, seg, None)):
                yield write(seg + ID, new_id)
                yield write(seg + NEXT, None)
                for k in range(self.K):
                    yield write(seg + CELLS + k, BOTTOM)
                return seg
        layout = ((Kind.METADATA, new_id),) + self.layout[1:]
        return (yield alloc(layout))

    def _retire(self, seg: int):
        """Put an unlinked segment into the pool, evicting a spare if full."""
        while True:
            for slot in self.pool:
                if (yield cas(slot, None, seg)):
                    return
            for slot in self.pool:
                old = yield read(slot)
                if old is not None and not (yield from self._hazardous(old)) and (yield cas(slot, old, seg)):
                    yield free(old, len(self.layout))
                    return

    def _hazardous(self, seg: int):
        for loc in self._all_hazards:
            if (yield read(loc)) == seg:
                return True
        return False

    def _unprotect(self, pid: int):
        for loc in self.hazards[pid]:
            yield write(loc, None)

    # -- introspection --------------------------------------------------------

    def segments(self) -> dict:
        """Live segment accounting: ``chain`` from head, ``pooled`` spares."""
        cells = self.memory.cells
        chain = 0
        seg = cells[self.head]
        while seg is not None:
            chain += 1
            seg = cells[seg + NEXT]
        pooled = sum(1 for slot in self.pool if cells[slot] is not None)
        return {"chain": chain, "pooled": pooled}

    def segment_bound(self) -> int:
        return -(-self.C // self.K) + 1 + 2 * self.n

    def contents(self) -> tuple:
        e, d = self.counters()
        cells = self.memory.cells
        out = []
        seg = cells[self.head]
        while seg is not None:
            sid = cells[seg + ID]
            for k in range(self.K):
                pos = sid * self.K + k
                if d <= pos < e:
                    out.append(cells[seg + CELLS + k])
            seg = cells[seg + NEXT]
        return tuple(out)
