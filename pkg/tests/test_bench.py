from __future__ import annotations

import json

import pytest

from boundedq import IMPLEMENTATIONS
from boundedq.bench import (BenchConfig, ConfigError, from_csv, from_json, operation_sequence,
                            overhead_csv, overhead_json, report_overhead, run, to_csv, to_json)
from boundedq.cli import main


@pytest.mark.parametrize("impl", list(IMPLEMENTATIONS))
def test_single_thread_accounting(impl):
    r = run(BenchConfig(impl=impl, capacity=8, threads=1, ops=1000, seed=1))
    assert r.ops == 1000 and r.accounting_ok
    assert r.enq_ok + r.deq_ok == r.successes
    assert r.p50_us <= r.p99_us


def test_single_thread_matches_replay():
    cfg = BenchConfig(impl="optimal", capacity=4, threads=1, ops=500, seed=7, ratio=0.6)
    r = run(cfg)
    size = full = empty = 0
    for is_enq, _ in operation_sequence(cfg, 0, 500):
        if is_enq:
            if size == 4:
                full += 1
            else:
                size += 1
        elif size == 0:
            empty += 1
        else:
            size -= 1
    assert (r.full, r.empty) == (full, empty)


def test_operation_sequence_is_deterministic():
    cfg = BenchConfig(impl="llsc", seed=3)
    assert operation_sequence(cfg, 1, 50) == operation_sequence(cfg, 1, 50)
    assert operation_sequence(cfg, 0, 50) != operation_sequence(cfg, 1, 50)


@pytest.mark.parametrize("impl", list(IMPLEMENTATIONS))
def test_threads_accounting(impl):
    r = run(BenchConfig(impl=impl, capacity=4, threads=3, ops=3000, seed=2))
    assert r.ops == 3000 and r.accounting_ok


def test_duration_mode():
    r = run(BenchConfig(impl="segment", capacity=4, threads=2, ops=None, duration=0.2))
    assert r.ops > 0 and r.accounting_ok and r.elapsed >= 0.2


def test_instrumented_mode():
    r = run(BenchConfig(impl="optimal", capacity=2, threads=3, ops=300, mode="instrumented"))
    assert r.mode == "instrumented" and r.ops == 300 and r.accounting_ok


@pytest.mark.parametrize("kw", [dict(impl="nope"), dict(impl="llsc", capacity=0), dict(impl="llsc", threads=0),
                                dict(impl="llsc", ratio=1.5), dict(impl="llsc", ops=None),
                                dict(impl="llsc", mode="fast"), dict(impl="distinct", values="repeat")])
def test_bad_configs(kw):
    with pytest.raises(ConfigError):
        BenchConfig(**kw).validate()


def test_repeat_values_allowed_elsewhere():
    BenchConfig(impl="optimal", values="repeat").validate()
    r = run(BenchConfig(impl="llsc", values="repeat", ops=200))
    assert r.accounting_ok


def test_csv_and_json_round_trip():
    rs = [run(BenchConfig(impl=i, capacity=4, ops=200, seed=5)) for i in ("dcss", "optimal")]
    assert from_csv(to_csv(rs)) == rs
    assert from_json(to_json(rs)) == rs


def test_overhead_grid():
    t = report_overhead()
    assert t.slopes["optimal"]["vs_C"] == 0
    assert t.slopes["oracle"]["vs_n"] == t.slopes["oracle"]["vs_C"] == 0
    assert t.metadata("oracle", 16, 2) == 2
    slope = t.slopes["optimal"]["vs_n"]
    base = t.metadata("optimal", 16, 2) - 2 * slope
    assert all(t.metadata("optimal", c, n) == base + slope * n for c in (16, 256, 4096) for n in (2, 4, 8, 16))
    doc = json.loads(overhead_json(t))
    assert len(doc["rows"]) == 6 * 3 * 4
    assert overhead_csv(t).splitlines()[0].startswith("impl,capacity,processes")


def test_cli_run_csv(capsys):
    assert main(["run", "--impl", "llsc,optimal", "--ops", "300", "--threads", "2"]) == 0
    rows = from_csv(capsys.readouterr().out)
    assert [r.impl for r in rows] == ["llsc", "optimal"]
    assert all(r.accounting_ok for r in rows)


def test_cli_run_json_to_file(tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", "--impl", "all", "--ops", "100", "--format", "json", "--out", str(out)]) == 0
    assert [r.impl for r in from_json(out.read_text())] == list(IMPLEMENTATIONS)


def test_cli_errors(capsys):
    assert main(["run", "--impl", "distinct", "--values", "repeat"]) == 2
    assert "distinct" in capsys.readouterr().err
    assert main(["run", "--impl", "bogus"]) == 2
    with pytest.raises(SystemExit):
        main(["overhead", "--capacities", "a,b"])


def test_cli_overhead(capsys):
    assert main(["overhead", "--capacities", "16,256", "--processes", "2,4", "--impl", "optimal"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1 + 4


def test_cli_mode_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("BOUNDEDQ_MODE", "instrumented")
    assert main(["run", "--impl", "dcss", "--ops", "100", "--threads", "2"]) == 0
    assert from_csv(capsys.readouterr().out)[0].mode == "instrumented"
    monkeypatch.setenv("BOUNDEDQ_MODE", "warp")
    assert main(["run", "--impl", "dcss", "--ops", "10"]) == 2
