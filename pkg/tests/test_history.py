from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundedq.harness.history import (History, MalformedHistory, all_histories, brute_force_linearizable,
                                      check)


def H(*events):
    h = History()
    for ev in events:
        if len(ev) == 3:
            h.invoke(*ev)
        else:
            h.respond(*ev)
    return h


def test_sequential_history_linearizable():
    h = H((0, "enq", 1), (0, "enq", 1, True), (0, "deq", None), (0, "deq", None, 1))
    v = check(h, 1)
    assert v.linearizable is True
    assert [str(o) for o in v.witness] == ["p0:enq(1)->True", "p0:deq()->1"]


def test_overlapping_ops_may_reorder():
    h = H((0, "enq", 1), (1, "deq", None), (1, "deq", None, 1), (0, "enq", 1, True))
    assert check(h, 1).linearizable


def test_real_time_order_is_respected():
    # deq finished before enq started yet returned its value
    h = H((1, "deq", None), (1, "deq", None, 1), (0, "enq", 1), (0, "enq", 1, True))
    v = check(h, 1)
    assert v.linearizable is False
    assert len(v.violation) == 2


def test_full_queue_result():
    h = H((0, "enq", 1), (0, "enq", 1, True), (0, "enq", 2), (0, "enq", 2, True))
    assert check(h, 1).linearizable is False
    assert check(h, 2).linearizable is True


def test_pending_ops_included_or_excluded():
    # pending enq may take effect
    h = H((0, "enq", 1), (1, "deq", None), (1, "deq", None, 1))
    assert check(h, 1).linearizable
    # or not
    h2 = H((0, "enq", 1), (1, "deq", None), (1, "deq", None, None))
    assert check(h2, 1).linearizable


def test_minimal_violation_is_shortest_prefix():
    h = H((0, "deq", None), (0, "deq", None, 5), (0, "enq", 1), (0, "enq", 1, True))
    v = check(h, 1)
    assert v.violation == h.prefix(2)


def test_malformed_histories():
    with pytest.raises(MalformedHistory):
        H((0, "enq", 1), (0, "enq", 2)).operations()
    with pytest.raises(MalformedHistory):
        H((0, "deq", None, None)).operations()
    assert not H((0, "enq", 1), (0, "deq", None, 1)).well_formed()


def test_inconclusive_on_cap():
    events = []
    for p in range(6):
        events.append((p, "enq", p))
    h = H(*events, *[(p, "enq", p, True) for p in range(6)])
    v = check(h, 1, max_nodes=3)
    assert v.linearizable is None and v.inconclusive


def test_all_histories_generator_counts():
    # 1 empty + 3 pids * 3 invocations
    assert sum(1 for h in all_histories(1)) == 10
    assert all(h.well_formed() for h in all_histories(3))


@st.composite
def histories(draw):
    h = History()
    open_ops = {}
    for _ in range(draw(st.integers(0, 8))):
        pid = draw(st.integers(0, 2))
        if pid in open_ops:
            op, arg = open_ops.pop(pid)
            res = draw(st.booleans()) if op == "enq" else draw(st.sampled_from([None, 1, 2, 3]))
            h.respond(pid, op, arg, res)
        else:
            if draw(st.booleans()):
                op, arg = "enq", draw(st.integers(1, 3))
            else:
                op, arg = "deq", None
            open_ops[pid] = (op, arg)
            h.invoke(pid, op, arg)
    return h


@settings(max_examples=300, deadline=None)
@given(histories(), st.integers(1, 2))
def test_checker_agrees_with_brute_force(h, capacity):
    assert check(h, capacity).linearizable == brute_force_linearizable(h, capacity)
