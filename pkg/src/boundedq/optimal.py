"""Bounded queue with Theta(n) overhead and disjoint value/metadata memory.

Elements live only in the ``C`` value-locations of ``a``.  Everything else is
metadata sized by the number of processes ``n``:

* ``ops[n]``: announcement slots holding references to enqueue descriptors;
* ``activeOp``: the descriptor whose logical put is being decided;
* a pool of ``2n`` descriptors.  Each descriptor has a header
  ``(seq, refs)``, a payload word ``(seq, e, x, i)`` written once per
  incarnation and a status word ``(seq, successful)`` with
  ``successful`` in ``{None, True, False}``.

A successful descriptor in ``ops`` *covers* cell ``i``: only the process that
placed it there writes ``a[i]``.  A next-round enqueue that finds the cell
still covered swaps its own (already successful) descriptor into the slot,
and the covering process writes that element too before freeing the slot.

Descriptor references are :class:`~boundedq.memory.DescRef` values stamped
with the incarnation; a holder of a stale reference sees the stamp mismatch
on its next status/payload read, and any CAS it attempts through that
reference fails.  Reference counting: ``acquire`` grants two references,
one for the creating attempt and one for ``ops``.  The ops reference is
dropped by whoever takes the descriptor out of ``ops`` (or by the creator
if it never got in).
"""

from __future__ import annotations

from typing import Any

from .base import BoundedQueue
from .descriptors import DescriptorPool
from .memory import BOTTOM, DescRef, Kind, cas, label, read, restart, write


class OptimalQueue(BoundedQueue):
    name = "optimal"

    def __init__(self, capacity: int, processes: int = 1):
        super().__init__(capacity, processes)
        mem = self.memory
        self.a = mem.allocate_array(Kind.VALUE, capacity, BOTTOM, "a")
        self.ops = mem.allocate_array(Kind.METADATA, processes, None, "ops")
        self.active = mem.allocate(Kind.METADATA, None, "activeOp")
        self.pool = DescriptorPool(mem, 2 * processes, ("payload", "succ"), "enqop")
        self._payload = self.pool.words["payload"]
        self._succ = self.pool.words["succ"]

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
                return False
            op = yield from self.pool.acquire(pid, refs=2)
            payload = (op.seq, e, x, e % C)
            yield write(self._payload[op.idx], payload)
            yield write(self._succ[op.idx], (op.seq, None))
            yield label("apply")
            published, covered = yield from self.apply(op, payload, pid)
            _, ok = yield read(self._succ[op.idx])
            if ok is True or covered:
                # position e holds a visible element: help move the counter on
                yield cas(enqueues, e, e + 1)
            yield from self.pool.release(op, 1 if published else 2)
            if ok is True:
                return True

    def deq_steps(self, pid: int):
        C = self.C
        enqueues, dequeues = self.enqueues, self.dequeues
        while True:
            yield restart()
            d = yield read(dequeues)
            e = yield read(enqueues)
            x = yield from self.read_elem(d % C)
            if d != (yield read(dequeues)):
                continue
            if e == d:
                return None
            if (yield cas(dequeues, d, d + 1)):
                return x

    # -- routines -------------------------------------------------------------

    def apply(self, op: DescRef, payload: tuple, pid: int):
        """Try to apply ``op``.  Returns ``(published, covered)``: whether ``op``
        ever entered ``ops`` and whether another successful descriptor was
        seen covering the same position."""
        seq, e, _, i = payload
        found = yield from self.find_op(i)
        if found is None:
            slot = yield from self.put_op(op, pid)
            if slot != -1:
                yield from self.complete_op(slot)
            return True, False
        cur, cur_payload, slot = found
        if cur_payload[1] >= e:
            # op is outdated: the cell is covered by this round or a later one
            yield write(self._succ[op.idx], (seq, False))
            return False, cur_payload[1] == e
        yield write(self._succ[op.idx], (seq, True))
        yield label("replace")
        if (yield cas(self.ops[slot], cur, op)):
            yield from self.pool.release(cur, 1)
            return True, False
        # cur left the slot first; position e is still empty
        yield write(self._succ[op.idx], (seq, False))
        return False, False

    def put_op(self, op: DescRef, pid: int):
        """Occupy a free slot with ``op`` and decide it; slot index or -1."""
        n, ops = self.n, self.ops
        j = pid
        while True:
            slot = j % n
            j += 1
            if not (yield cas(ops[slot], None, op)):
                continue
            yield from self.start_put_op(op)
            yield from self.try_put(op)
            yield cas(self.active, op, None)
            _, ok = yield read(self._succ[op.idx])
            if ok is not True:
                yield write(ops[slot], None)
                yield from self.pool.release(op, 1)
                return -1
            return slot

    def start_put_op(self, op: DescRef):
        active = self.active
        while True:
            cur = yield read(active)
            if cur is not None:
                yield from self.try_put(cur)
                yield cas(active, cur, None)
            if (yield cas(active, None, op)):
                return

    def try_put(self, op: DescRef):
        """Decide ``op``: fails if another successful descriptor covers its cell,
        otherwise succeeds iff ``enqueues`` still equals ``op.e``."""
        seq = op.seq
        payload = yield read(self._payload[op.idx])
        if payload[0] != seq:
            return  # recycled, so long decided
        _, e, _, i = payload
        succ = self._succ[op.idx]
        found = yield from self.find_op(i)
        if found is not None and found[0] != op:
            yield cas(succ, (seq, None), (seq, False))
        valid = e == (yield read(self.enqueues))
        yield cas(succ, (seq, None), (seq, valid))

    def complete_op(self, slot: int):
        """Write out whatever successful descriptor sits in our slot, then free it."""
        yield label("complete")
        while True:
            found = yield from self.read_op(slot)
            assert found is not None, f"covering slot {slot} lost its descriptor"
            op, (_, e, x, i) = found
            yield write(self.a[i], x)
            yield cas(self.enqueues, e, e + 1)
            if (yield cas(self.ops[slot], op, None)):
                yield from self.pool.release(op, 1)
                return

    def read_elem(self, i: int):
        found = yield from self.find_op(i)
        if found is not None:
            return found[1][2]
        return (yield read(self.a[i]))

    def read_op(self, slot: int):
        """``(ref, payload)`` of the descriptor in ``slot`` if it is successful."""
        loc = self.ops[slot]
        while True:
            op = yield read(loc)
            if op is None:
                return None
            seq, ok = yield read(self._succ[op.idx])
            if seq != op.seq:
                continue  # recycled after we read the slot, which has changed since
            if ok is not True:
                return None
            payload = yield read(self._payload[op.idx])
            if payload[0] != op.seq:
                continue
            return op, payload

    def find_op(self, i: int):
        """``(ref, payload, slot)`` of a successful descriptor covering ``i``."""
        for slot in range(self.n):
            found = yield from self.read_op(slot)
            if found is not None and found[1][3] == i:
                return found[0], found[1], slot
        return None

    # -- introspection --------------------------------------------------------

    def descriptor_pool_size(self) -> int:
        return self.pool.size

    def contents(self) -> tuple:
        e, d = self.counters()
        cells = self.memory.cells
        covering = {}
        for slot in self.ops:
            ref = cells[slot]
            if ref is None:
                continue
            seq, ok = cells[self._succ[ref.idx]]
            if ok is True:
                _, pe, px, pi = cells[self._payload[ref.idx]]
                covering[pe] = px
        return tuple(covering.get(pos, cells[self.a[pos % self.C]]) for pos in range(d, e))

    def slot_states(self, cells=None) -> tuple:
        """Per-slot ``(ref, status)`` with status ``None``/``True``/``False``."""
        cells = self.memory.cells if cells is None else cells
        out = []
        for slot in self.ops:
            ref = cells[slot]
            if ref is None:
                out.append(None)
            else:
                seq, ok = cells[self._succ[ref.idx]]
                out.append((ref, ok if seq == ref.seq else "stale"))
        return tuple(out)
