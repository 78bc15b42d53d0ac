from __future__ import annotations

import itertools

import pytest

from boundedq.descriptors import Dcss, DescriptorPool
from boundedq.memory import (BOTTOM, ContractViolation, DescRef, Kind, Memory, Null, cas, ll, read, sc,
                             write)


def run(mem, gen, pid=0):
    return mem.run(gen, pid)


def prim(mem, req, pid=0):
    return mem.apply(pid, req)


def test_fresh_value_location_is_null0():
    mem = Memory()
    loc = mem.allocate(Kind.VALUE)
    assert prim(mem, read(loc)) == Null(0) == BOTTOM


def test_write_then_read():
    mem = Memory()
    loc = mem.allocate(Kind.VALUE)
    prim(mem, write(loc, 7))
    assert prim(mem, read(loc)) == 7


def test_cas_success_and_failure():
    mem = Memory()
    loc = mem.allocate(Kind.VALUE)
    assert prim(mem, cas(loc, BOTTOM, 5)) is True
    assert prim(mem, read(loc)) == 5
    assert prim(mem, cas(loc, BOTTOM, 6)) is False
    assert prim(mem, read(loc)) == 5


def test_null_rounds_are_distinct():
    assert Null(0) != Null(1)
    assert Null(2) == Null(2)


def test_two_concurrent_cas_exactly_one_wins():
    # every order of the two single-step operations
    for order in itertools.permutations([0, 1]):
        mem = Memory()
        loc = mem.allocate(Kind.VALUE)
        wins = [prim(mem, cas(loc, BOTTOM, 10 + p), p) for p in order]
        assert sorted(wins) == [False, True]


def test_ll_sc_no_interference():
    mem = Memory(llsc=True)
    loc = mem.allocate(Kind.VALUE)
    assert prim(mem, ll(loc)) == BOTTOM
    assert prim(mem, sc(loc, 1)) is True
    assert prim(mem, read(loc)) == 1


def test_sc_fails_after_foreign_cas():
    mem = Memory(llsc=True)
    loc = mem.allocate(Kind.VALUE)
    prim(mem, ll(loc), 0)
    assert prim(mem, cas(loc, BOTTOM, 3), 1)
    assert prim(mem, sc(loc, 1), 0) is False


def test_sc_fails_after_same_value_rewrite():
    mem = Memory(llsc=True)
    loc = mem.allocate(Kind.VALUE, 2)
    assert prim(mem, ll(loc), 0) == 2
    prim(mem, write(loc, 2), 1)
    assert prim(mem, sc(loc, 9), 0) is False
    assert prim(mem, read(loc)) == 2


def test_sc_without_ll_is_contract_violation():
    mem = Memory(llsc=True)
    loc = mem.allocate(Kind.VALUE)
    with pytest.raises(ContractViolation):
        prim(mem, sc(loc, 1))


def test_links_are_per_process():
    mem = Memory(llsc=True)
    loc = mem.allocate(Kind.VALUE)
    prim(mem, ll(loc), 0)
    with pytest.raises(ContractViolation):
        prim(mem, sc(loc, 1), 1)
    assert prim(mem, sc(loc, 1), 0) is True


def test_accounting_classifies_every_allocation():
    mem = Memory()
    mem.allocate_array(Kind.VALUE, 5)
    mem.allocate_array(Kind.METADATA, 3, 0)
    rep = mem.report()
    assert (rep.value_locations, rep.metadata_locations) == (5, 3)
    assert rep.total == len(mem.cells)


def test_snapshot_restore_roundtrip():
    mem = Memory(llsc=True)
    loc = mem.allocate(Kind.VALUE)
    snap = mem.snapshot()
    prim(mem, ll(loc), 0)
    prim(mem, sc(loc, 4), 0)
    mem.restore(snap)
    assert prim(mem, read(loc)) == BOTTOM
    assert mem.snapshot() == snap


def test_descriptor_pool_acquire_release_recycles_with_new_stamp():
    mem = Memory()
    pool = DescriptorPool(mem, 2, ("w",))
    r1 = run(mem, pool.acquire(0))
    r2 = run(mem, pool.acquire(0))
    assert r1.idx != r2.idx
    assert pool.occupancy() == 2
    run(mem, pool.release(r1))
    r3 = run(mem, pool.acquire(0))
    assert r3.idx == r1.idx and r3.seq == r1.seq + 1
    assert r3 != r1


def test_dcss_examples():
    mem = Memory()
    d = Dcss(mem, 2)
    a = mem.allocate(Kind.VALUE)
    b = mem.allocate(Kind.METADATA, 0)
    assert run(mem, d.dcss(0, a, BOTTOM, 9, b, 0)) is True
    assert run(mem, d.read(a)) == 9
    a2 = mem.allocate(Kind.VALUE)
    prim(mem, write(b, 1))
    assert run(mem, d.dcss(0, a2, BOTTOM, 9, b, 0)) is False
    assert prim(mem, read(a2)) == BOTTOM
    # the pool is back to empty after both calls
    assert d.pool.occupancy() == 0


def _interleavings(counts):
    """All sequences of process ids with ``counts[p]`` occurrences of ``p``."""
    total = sum(counts)
    if total == 0:
        yield ()
        return
    for p, c in enumerate(counts):
        if c:
            rest = list(counts)
            rest[p] -= 1
            for tail in _interleavings(rest):
                yield (p,) + tail


def _drive(mem, gens, schedule):
    """Run generators following ``schedule``; a finished process's turns are skipped."""
    results = [None] * len(gens)
    reqs = [None] * len(gens)
    live = [True] * len(gens)

    def advance(p, value, first=False):
        try:
            req = next(gens[p]) if first else gens[p].send(value)
            while req[0] >= 10:
                req = next(gens[p])
            reqs[p] = req
        except StopIteration as stop:
            live[p] = False
            results[p] = stop.value

    for p in range(len(gens)):
        advance(p, None, True)
    for p in schedule:
        if live[p]:
            advance(p, mem.apply(p, reqs[p]))
    # finish the rest solo
    for p in range(len(gens)):
        while live[p]:
            advance(p, mem.apply(p, reqs[p]))
    return results


@pytest.mark.parametrize("b_value", [0, 1])
def test_dcss_read_never_exposes_descriptor(b_value):
    # p0 runs a DCSS on cell a while p1 reads a; try every prefix schedule
    seen = set()
    for steps0 in range(0, 12):
        for sched in _interleavings([steps0, 4]):
            mem = Memory()
            d = Dcss(mem, 2)
            a = mem.allocate(Kind.VALUE)
            b = mem.allocate(Kind.METADATA, b_value)
            res = _drive(mem, [d.dcss(0, a, BOTTOM, 9, b, 0), d.read(a)], sched)
            ok, got = res
            assert not isinstance(got, DescRef)
            assert got in (BOTTOM, 9)
            if got == 9:
                assert ok is True
            final = mem.cells[a]
            assert final == (9 if ok else BOTTOM)
            assert ok is (b_value == 0)
            seen.add(got)
    assert seen == ({BOTTOM, 9} if b_value == 0 else {BOTTOM})


def test_dcss_linearizes_against_ideal_dcss():
    # two DCSS on the same cell with different expected counters, plus a reader
    ideal_results = set()
    for order in itertools.permutations([0, 1]):
        cell, out = BOTTOM, {}
        for p in order:
            ok = cell == BOTTOM and (0 if p == 0 else 1) == 0
            if ok:
                cell = 10 + p
            out[p] = ok
        ideal_results.add((out[0], out[1], cell))
    for sched in _interleavings([7, 7]):
        mem = Memory()
        d = Dcss(mem, 2)
        a = mem.allocate(Kind.VALUE)
        b = mem.allocate(Kind.METADATA, 0)
        r0, r1 = _drive(mem, [d.dcss(0, a, BOTTOM, 10, b, 0), d.dcss(1, a, BOTTOM, 11, b, 1)], sched)
        assert (r0, r1, mem.cells[a]) in ideal_results
