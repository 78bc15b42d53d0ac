from __future__ import annotations

import pytest

from boundedq import IMPLEMENTATIONS, DcssQueue, DistinctQueue, LlscQueue, Null, OptimalQueue
from boundedq.harness import check
from boundedq.harness.scenarios import (Pause, ScriptError, aba_scenario, fill_empty_scenario,
                                        fill_empty_script, parse_script, run_script)


def test_parse_script():
    cmds = parse_script("""
        p0 enq 5      # comment
        p1 deq @update:1
        p1 step 3
        p2 enq x @label:complete
        p1 resume
    """)
    assert [str(c) for c in cmds] == ["p0 enq 5", "p1 deq @update:1", "p1 step 3",
                                      "p2 enq x @label:complete", "p1 resume"]
    assert cmds[0].arg == 5 and cmds[3].arg == "x"


@pytest.mark.parametrize("line", ["p0 enq", "p0 deq 3", "p0 step", "p0 step 2 @cas:1",
                                  "p0 enq 1 @nowhere:1", "q0 enq 1", "p0 fly"])
def test_parse_errors(line):
    with pytest.raises(ScriptError):
        parse_script(line)


def test_run_script_errors():
    with pytest.raises(ScriptError):
        run_script(LlscQueue(1, 1), "p1 enq 1")
    with pytest.raises(ScriptError):
        run_script(LlscQueue(1, 1), "p0 resume")


@pytest.mark.parametrize("impl", list(IMPLEMENTATIONS))
def test_fill_empty_without_pauses_is_fifo(impl):
    q = IMPLEMENTATIONS[impl](3, 2)
    res = fill_empty_scenario(q, cycles=3)
    outs = [r for c, r in res.results if c.action == "deq"]
    ins = [c.arg for c, _ in res.results if c.action == "enq"]
    assert outs == ins
    assert check(res.history, 3).linearizable


def test_fill_empty_script_layout():
    text = fill_empty_script(2, [Pause(1, "enq", 9, point="update:1", start=0, resume=1)], cycles=2)
    lines = text.splitlines()
    assert lines[0] == "p1 enq 9 @update:1"
    assert lines.index("p1 resume") == 7  # after the second fill
    assert len(lines) == 1 + 2 * 4 + 1


@pytest.mark.parametrize("impl", ["llsc", "dcss", "optimal"])
@pytest.mark.parametrize("op", ["enq", "deq"])
def test_paused_operation_across_a_cycle(impl, op):
    q = IMPLEMENTATIONS[impl](2, 2)
    pause = Pause(1, op, 77 if op == "enq" else None, point="update:1", start=0, resume=1,
                  when="fill" if op == "enq" else "empty")
    res = fill_empty_scenario(q, [pause], cycles=3)
    assert not res.stuck
    assert check(res.history, 2).linearizable


@pytest.mark.parametrize("impl,expected", [("distinct", False), ("llsc", True), ("dcss", True), ("optimal", True)])
def test_aba_discrimination(impl, expected):
    res = aba_scenario(IMPLEMENTATIONS[impl](1, 2))
    assert check(res.history, 1).linearizable is expected


def test_duplicates_in_fill_empty_break_distinct_only():
    pause = Pause(1, "deq", point="update:1", start=0, resume=1, when="empty")
    # the filler enqueues the same value every time
    for cls, expected in [(DistinctQueue, False), (LlscQueue, True), (DcssQueue, True), (OptimalQueue, True)]:
        # one more enqueue probes the state the duplicates left behind
        script = fill_empty_script(1, [pause], cycles=2, values=[5]) + "p0 enq 7\n"
        res = run_script(cls(1, 2), script)
        assert check(res.history, 1).linearizable is expected, cls.__name__
        assert all(not isinstance(r, Null) for _, r in res.results)
