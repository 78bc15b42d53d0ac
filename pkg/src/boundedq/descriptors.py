"""Recyclable descriptor pools and a descriptor-based DCSS.

Descriptors live in preallocated metadata locations.  A reference to a
descriptor is a :class:`~boundedq.memory.DescRef` carrying the incarnation
number (``seq``) current when it was handed out.  Every mutable field word is
stored as ``(seq, ...)``, so a process holding a stale reference notices the
reuse on its next field read and every CAS it attempts through that
reference fails.
"""

from __future__ import annotations

from .memory import DescRef, Kind, Memory, cas, read, write

UNDECIDED, SUCCEEDED, FAILED = "undecided", "succeeded", "failed"


class DescriptorPool:
    """A fixed pool of descriptors with reference counts.

    Each descriptor owns a header word ``(seq, refs)`` plus one word per
    field.  ``acquire`` bumps ``seq`` and claims a descriptor whose count
    is zero; the descriptor becomes free again when the count drops back to
    zero.
    """

    def __init__(self, memory: Memory, size: int, fields: tuple[str, ...], name: str = "desc"):
        self.memory = memory
        self.size = size
        self.fields = fields
        self.header = memory.allocate_array(Kind.METADATA, size, (0, 0), f"{name}.hdr")
        self.words: dict[str, list[int]] = {
            f: memory.allocate_array(Kind.METADATA, size, (0, None), f"{name}.{f}") for f in fields
        }

    @property
    def locations(self) -> int:
        return self.size * (1 + len(self.fields))

    def field(self, name: str, ref: DescRef) -> int:
        return self.words[name][ref.idx]

    def acquire(self, pid: int, refs: int = 1):
        size = self.size
        start = (2 * pid) % size
        while True:
            for k in range(size):
                idx = (start + k) % size
                seq, count = yield read(self.header[idx])
                if count == 0 and (yield cas(self.header[idx], (seq, 0), (seq + 1, refs))):
                    return DescRef(idx, seq + 1)

    def release(self, ref: DescRef, refs: int = 1):
        loc = self.header[ref.idx]
        while True:
            seq, count = yield read(loc)
            assert seq == ref.seq and count >= refs, f"over-release of {ref}: header {(seq, count)}"
            if (yield cas(loc, (seq, count), (seq, count - refs))):
                return count - refs

    def occupancy(self) -> int:
        """Number of descriptors currently held (read directly, for monitors)."""
        return sum(1 for loc in self.header if self.memory.cells[loc][1] > 0)


class Dcss:
    """Double-compare single-swap over CAS, with helping.

    ``dcss(a, expected_a, new_a, b, expected_b)`` installs a descriptor in
    ``a``, decides the outcome from a read of ``b`` taken while the
    descriptor is installed, then swings ``a`` to its final value.  Any
    process that meets a descriptor while reading ``a`` completes it first.
    """

    def __init__(self, memory: Memory, processes: int):
        self.memory = memory
        self.pool = DescriptorPool(memory, 2 * processes, ("args", "state"), "dcss")
        self._args = self.pool.words["args"]
        self._state = self.pool.words["state"]

    def dcss(self, pid: int, a: int, expected_a, new_a, b: int, expected_b):
        pool = self.pool
        ref = yield from pool.acquire(pid)
        seq = ref.seq
        yield write(self._args[ref.idx], (seq, a, expected_a, new_a, b, expected_b))
        yield write(self._state[ref.idx], (seq, UNDECIDED))
        while True:
            cur = yield read(a)
            if type(cur) is DescRef:
                yield from self._help(cur)
                continue
            if cur != expected_a:
                ok = False
                break
            if (yield cas(a, expected_a, ref)):
                ok = yield from self._complete(ref, a, expected_a, new_a, b, expected_b)
                break
        # Only the creator ever holds a DCSS descriptor.
        yield write(pool.header[ref.idx], (seq, 0))
        return ok

    def read(self, a: int):
        """Logical value of ``a``: completes any descriptor found there."""
        while True:
            cur = yield read(a)
            if type(cur) is not DescRef:
                return cur
            yield from self._help(cur)

    def _help(self, ref: DescRef):
        args = yield read(self._args[ref.idx])
        if args[0] != ref.seq:
            return  # recycled: the described DCSS has already finished
        yield from self._complete(ref, *args[1:])

    def _complete(self, ref: DescRef, a, expected_a, new_a, b, expected_b):
        seq = ref.seq
        state_loc = self._state[ref.idx]
        observed = yield read(b)
        verdict = SUCCEEDED if observed == expected_b else FAILED
        yield cas(state_loc, (seq, UNDECIDED), (seq, verdict))
        st_seq, state = yield read(state_loc)
        if st_seq != seq:
            return False
        ok = state == SUCCEEDED
        yield cas(a, ref, new_a if ok else expected_a)
        return ok
