"""Shared-memory substrate for the queue algorithms.

Every algorithm is written as a generator that yields primitive requests
(``read``, ``write``, ``cas``, ``ll``, ``sc``, ``alloc``, ``free``) and
receives the primitive's result back through ``send``.  The same generator
is driven two ways:

* natively, by :meth:`Memory.run`, which executes each request at once
  (atomicity of CAS/SC is provided by striped locks), and
* step by step, by the schedulers in :mod:`boundedq.harness`, which decide
  which process performs the next primitive.

Locations are plain integers indexing into a :class:`Memory`.  Each one is
classified at allocation time as a value-location or a metadata-location so
the overhead of a queue instance can be counted exactly.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from typing import Any, Generator, Hashable, Iterable

__all__ = [
    "Null",
    "BOTTOM",
    "TAKEN",
    "Kind",
    "DescRef",
    "Memory",
    "OverheadReport",
    "ContractViolation",
    "read",
    "write",
    "cas",
    "ll",
    "sc",
    "alloc",
    "free",
    "restart",
    "label",
    "READ",
    "WRITE",
    "CAS",
    "LL",
    "SC",
    "ALLOC",
    "FREE",
    "RESTART",
    "LABEL",
    "is_update",
]


@dataclass(frozen=True, slots=True)
class Null:
    """A versioned empty marker.  ``Null(0)`` is the initial cell content."""

    round: int

    def __repr__(self) -> str:
        return f"⊥{self.round}"


BOTTOM = Null(0)
# Marker left behind by a dequeue in the infinite-array queue; never equal to
# BOTTOM so a stale enqueue cannot refill a consumed cell.
TAKEN = Null(-1)


@dataclass(frozen=True, slots=True)
class DescRef:
    """Reference to descriptor ``idx`` of a pool, stamped with its incarnation."""

    idx: int
    seq: int

    def __repr__(self) -> str:
        return f"D{self.idx}.{self.seq}"


class Kind(enum.Enum):
    VALUE = "value"
    METADATA = "metadata"


class ContractViolation(AssertionError):
    """Raised when a primitive is used outside its contract (e.g. SC without LL)."""


# Request opcodes.  Opcodes >= RESTART are markers: they carry no memory
# effect and are not scheduling points.
READ, WRITE, CAS, LL, SC, ALLOC, FREE = range(7)
RESTART, LABEL = 10, 11

_OPNAMES = {READ: "read", WRITE: "write", CAS: "cas", LL: "ll", SC: "sc",
            ALLOC: "alloc", FREE: "free", RESTART: "restart", LABEL: "label"}

Request = tuple


def read(loc: int) -> Request:
    return (READ, loc)


def write(loc: int, value: Any) -> Request:
    return (WRITE, loc, value)


def cas(loc: int, expected: Any, new: Any) -> Request:
    return (CAS, loc, expected, new)


def ll(loc: int) -> Request:
    return (LL, loc)


def sc(loc: int, new: Any) -> Request:
    return (SC, loc, new)


def alloc(layout: tuple) -> Request:
    """Allocate a contiguous block; ``layout`` is a tuple of ``(Kind, init)``."""
    return (ALLOC, layout)


def free(base: int, size: int) -> Request:
    return (FREE, base, size)


_RESTART = (RESTART,)


def restart() -> Request:
    """Marks the head of an operation's retry loop.

    Everything the operation computed in the previous iteration is dead at
    this point, which lets the explorer fold retried attempts into one
    process-local state.
    """
    return _RESTART


def label(name: str) -> Request:
    """A named pause point for scripted scenarios."""
    return (LABEL, name)


def is_update(req: Request) -> bool:
    return req[0] in (WRITE, CAS, SC)


def describe(req: Request) -> str:
    name = _OPNAMES.get(req[0], "?")
    return f"{name}{tuple(req[1:])!r}"


@dataclass(frozen=True)
class OverheadReport:
    value_locations: int
    metadata_locations: int
    descriptor_pool_size: int = 0
    emulation_locations: int = 0

    @property
    def total(self) -> int:
        return self.value_locations + self.metadata_locations

    def as_dict(self) -> dict:
        return {
            "value_locations": self.value_locations,
            "metadata_locations": self.metadata_locations,
            "descriptor_pool_size": self.descriptor_pool_size,
            "emulation_locations": self.emulation_locations,
        }


_NLOCKS = 64


class Memory:
    """A flat array of abstract words with atomic primitives.

    ``llsc=True`` enables the LL/SC emulation: every location then carries a
    hidden modification counter, bumped by every successful write, CAS or SC,
    and each process remembers the counter it observed at its last LL.  SC
    succeeds iff the counter is unchanged, so a same-value rewrite still makes
    a pending SC fail.
    """

    def __init__(self, llsc: bool = False):
        self.cells: list = []
        self.kinds: list[Kind] = []
        self.names: list[str] = []
        self.live: list[bool] = []
        self.llsc = llsc
        self.versions: list[int] = []
        self.links: dict[tuple[int, int], int] = {}
        self._locks = [threading.Lock() for _ in range(_NLOCKS)]
        self._alloc_lock = threading.Lock()

    # -- allocation -------------------------------------------------------

    def allocate(self, kind: Kind, init: Any = BOTTOM, name: str = "") -> int:
        with self._alloc_lock:
            loc = len(self.cells)
            self.cells.append(init)
            self.kinds.append(kind)
            self.names.append(name)
            self.live.append(True)
            self.versions.append(0)
            return loc

    def allocate_array(self, kind: Kind, count: int, init: Any = BOTTOM, name: str = "") -> list[int]:
        return [self.allocate(kind, init, f"{name}[{i}]") for i in range(count)]

    def _alloc_block(self, layout: tuple) -> int:
        with self._alloc_lock:
            base = len(self.cells)
            for offset, (kind, init) in enumerate(layout):
                loc = base + offset
                self.cells.append(init)
                if self.llsc:
                    self.versions.append(0)
                if loc < len(self.kinds):
                    # Re-allocation after the explorer rolled memory back.
                    self.kinds[loc] = kind
                    self.live[loc] = True
                else:
                    self.kinds.append(kind)
                    self.names.append("")
                    self.live.append(True)
                    if not self.llsc:
                        self.versions.append(0)
            return base

    def _free_block(self, base: int, size: int) -> None:
        for loc in range(base, base + size):
            self.live[loc] = False

    # -- primitives ---------------------------------------------------------

    def apply(self, pid: int, req: Request) -> Any:
        """Execute one request without locking (caller serializes)."""
        op = req[0]
        if op == READ:
            return self.cells[req[1]]
        cells = self.cells
        if op == CAS:
            loc = req[1]
            if cells[loc] == req[2]:
                cells[loc] = req[3]
                if self.llsc:
                    self.versions[loc] += 1
                return True
            return False
        if op == WRITE:
            loc = req[1]
            cells[loc] = req[2]
            if self.llsc:
                self.versions[loc] += 1
            return None
        if op == LL:
            loc = req[1]
            self.links[(pid, loc)] = self.versions[loc]
            return cells[loc]
        if op == SC:
            loc = req[1]
            linked = self.links.pop((pid, loc), None)
            if linked is None:
                raise ContractViolation(f"process {pid}: SC on location {loc} without a prior LL")
            if linked == self.versions[loc]:
                cells[loc] = req[2]
                self.versions[loc] += 1
                return True
            return False
        if op == ALLOC:
            return self._alloc_block(req[1])
        if op == FREE:
            self._free_block(req[1], req[2])
            return None
        raise ValueError(f"unknown request {req!r}")

    def execute(self, pid: int, req: Request) -> Any:
        """Execute one request atomically with respect to other threads."""
        op = req[0]
        if op == READ or op >= ALLOC:
            return self.apply(pid, req)
        with self._locks[req[1] % _NLOCKS]:
            return self.apply(pid, req)

    def run(self, gen: Generator, pid: int) -> Any:
        """Drive an algorithm generator to completion in native mode."""
        execute = self.execute
        try:
            req = next(gen)
            while True:
                if req[0] >= RESTART:
                    req = next(gen)
                else:
                    req = gen.send(execute(pid, req))
        except StopIteration as stop:
            return stop.value

    def unlink(self, pid: int) -> None:
        """Forget the LL links of ``pid`` (used when its retry loop restarts)."""
        if self.links:
            for key in [k for k in self.links if k[0] == pid]:
                del self.links[key]

    # -- snapshots (used by the explorer) ------------------------------------

    def snapshot(self) -> Hashable:
        if self.llsc:
            return (tuple(self.cells), tuple(self.versions), frozenset(self.links.items()))
        return tuple(self.cells)

    def restore(self, snap: Hashable) -> None:
        if self.llsc:
            cells, versions, links = snap
            self.cells = list(cells)
            self.versions = list(versions)
            self.links = dict(links)
        else:
            self.cells = list(snap)

    # -- accounting -----------------------------------------------------------

    def count(self, kind: Kind, locations: Iterable[int] | None = None) -> int:
        locs = range(len(self.cells)) if locations is None else locations
        return sum(1 for loc in locs if self.live[loc] and self.kinds[loc] is kind)

    def report(self, descriptor_pool_size: int = 0) -> OverheadReport:
        values = self.count(Kind.VALUE)
        meta = self.count(Kind.METADATA)
        emulation = values + meta if self.llsc else 0
        return OverheadReport(values, meta, descriptor_pool_size, emulation)
