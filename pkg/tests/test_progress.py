from __future__ import annotations

import pytest

from boundedq import IMPLEMENTATIONS
from boundedq.harness.explorer import Workload
from boundedq.harness.progress import SingleLockQueue, obstruction_probe, starvation_probe


def test_single_lock_queue_is_a_queue():
    q = SingleLockQueue(2, 1)
    assert [q.enq(1), q.enq(2), q.enq(3)] == [True, True, False]
    assert q.contents() == (1, 2)
    assert [q.deq(), q.deq(), q.deq()] == [1, 2, None]


def test_starvation_probe_catches_a_lock():
    rep = starvation_probe(lambda: SingleLockQueue(2, 3), freeze_points=range(1, 30, 3), window=1_000, windows=2)
    assert not rep.ok and rep.stalls
    assert rep.min_progress == 0


@pytest.mark.parametrize("impl", list(IMPLEMENTATIONS))
def test_starvation_probe_small(impl):
    rep = starvation_probe(lambda: IMPLEMENTATIONS[impl](2, 3), freeze_points=range(1, 20, 4),
                           window=2_000, windows=2)
    assert rep.ok, rep.stalls
    assert rep.probes > 0 and rep.min_progress > 0


def test_starvation_probe_needs_two_processes():
    with pytest.raises(ValueError):
        starvation_probe(lambda: SingleLockQueue(1, 1), freeze_points=[1])


@pytest.mark.parametrize("impl", list(IMPLEMENTATIONS))
def test_obstruction_probe_small(impl):
    cases = [Workload.from_codes(c) for c in (["E", "D"], ["ED", "E"])]
    rep = obstruction_probe(lambda n: IMPLEMENTATIONS[impl](1, n), cases=cases)
    assert rep.ok, rep.failures
    assert 0 < rep.max_solo_steps <= 10_000


def test_obstruction_probe_flags_lock():
    rep = obstruction_probe(lambda n: SingleLockQueue(1, n), cases=[Workload.from_codes(["E", "E"])])
    assert not rep.ok
