"""Acceptance criteria, one test and one PASS/FAIL line each.

``BOUNDEDQ_ACCEPTANCE=full`` runs every criterion at its stated size (the
exhaustive explorer gets 600 s per implementation, stress runs are 10^6
steps, oracle runs 10^5 operations).  The default ``quick`` scale shrinks
those three knobs so the suite finishes in minutes; the printed lines say
which scale was used.
"""

from __future__ import annotations

import os
import random
import time

import pytest

from boundedq import IMPLEMENTATIONS, SeqBoundedQueue
from boundedq.bench import from_csv, from_json, report_overhead, to_json
from boundedq.cli import main
from boundedq.harness import check
from boundedq.harness.explorer import explore_suite
from boundedq.harness.history import all_histories, brute_force_linearizable
from boundedq.harness.progress import starvation_probe
from boundedq.harness.scenarios import aba_scenario
from boundedq.harness.scheduler import run_random

pytestmark = pytest.mark.acceptance

SCALE = os.environ.get("BOUNDEDQ_ACCEPTANCE", "quick").strip().lower()
FULL = SCALE == "full"
SUITE_BUDGET = 600.0 if FULL else 45.0  # seconds per implementation
SUITE_STATES = 1_500_000  # per workload, keeps memory below a few GB
STRESS_STEPS = 1_000_000 if FULL else 100_000
STRESS_SEEDS = 10
ORACLE_OPS = 100_000 if FULL else 10_000
ORACLE_SEEDS = 20
SOLO_BOUND = 10_000
WINDOW = 10_000
BENCH_SECONDS = 10.0

IMPLS = list(IMPLEMENTATIONS)
_suites: dict = {}
_stress: dict = {}


def _line(report, k: int, ok: bool, text: str) -> None:
    report(f"criterion {k:2d} {'PASS' if ok else 'FAIL'} [{SCALE}] {text}")


def suite(impl: str):
    if impl not in _suites:
        _suites[impl] = explore_suite(impl, lambda c, n: IMPLEMENTATIONS[impl](c, n), capacities=(1, 2, 3),
                                      max_procs=3, ops_per_proc=2, time_budget=SUITE_BUDGET,
                                      max_states=SUITE_STATES, solo=True)
    return _suites[impl]


def stress(impl: str) -> list:
    if impl not in _stress:
        _stress[impl] = [run_random(lambda: IMPLEMENTATIONS[impl](1 + seed % 4, 3), STRESS_STEPS, seed)
                         for seed in range(STRESS_SEEDS)]
    return _stress[impl]


def monitor_hits(name: str, impls=IMPLS) -> tuple[int, int]:
    """(violations in explored runs, violations in stress runs) of one monitor."""
    tag = f"[{name}]"
    explored = sum(1 for impl in impls for _, _, v in suite(impl).violations if tag in v.message)
    stressed = sum(1 for impl in impls for r in stress(impl) for msg in r.violations if tag in msg)
    return explored, stressed


def test_c01_exhaustive_linearizability(report):
    parts, bad, incomplete = [], 0, 0
    for impl in IMPLS:
        s = suite(impl)
        total = len(s.runs) + len(s.skipped)
        done = total - len(s.incomplete)
        bad += len(s.violations)
        incomplete += len(s.incomplete)
        parts.append(f"{impl} {done}/{total} in {s.elapsed:.0f}s, {len(s.violations)} violations")
    ok = bad == 0 and incomplete == 0
    _line(report, 1, ok, "; ".join(parts))
    assert bad == 0, [v for impl in IMPLS for v in suite(impl).violations][:3]
    if incomplete:
        pytest.xfail(f"{incomplete} workload/capacity cases not explored to the end within "
                     f"{SUITE_BUDGET:.0f}s and {SUITE_STATES} states per case")


def test_c02_counter_invariant(report):
    explored, stressed = monitor_hits("counters")
    checks = sum(r.counter_checks for impl in IMPLS for r in stress(impl))
    ok = explored == stressed == 0 and checks > 0
    _line(report, 2, ok, f"explored violations {explored}, stress violations {stressed} "
                         f"({STRESS_SEEDS} seeds x {STRESS_STEPS} steps x {len(IMPLS)} queues, {checks} checks)")
    assert ok


def test_c03_descriptor_uniqueness(report):
    explored, stressed = monitor_hits("descriptor-uniqueness", ["optimal"])
    done = sum(r.completed for r in stress("optimal"))
    ok = explored == stressed == 0 and done > 0
    _line(report, 3, ok, f"optimal: explored violations {explored}, stress violations {stressed}, "
                         f"{done} stress operations checked")
    assert ok


def test_c04_slot_lifecycle(report):
    explored, stressed = monitor_hits("slot-lifecycle", ["optimal"])
    ok = explored == stressed == 0
    _line(report, 4, ok, f"optimal: explored violations {explored}, stress violations {stressed}")
    assert ok


def test_c05_overhead_independence(report):
    caps, procs = (16, 256, 4096), (2, 4, 8, 16)
    t = report_overhead(caps, procs, ["optimal"])
    at4 = [t.metadata("optimal", c, 4) for c in caps]
    ys = [t.metadata("optimal", 16, n) for n in procs]
    slope = (ys[-1] - ys[0]) / (procs[-1] - procs[0])
    residual = max(abs(y - (ys[0] + slope * (n - procs[0]))) for n, y in zip(procs, ys))
    ok = len(set(at4)) == 1 and residual == 0
    _line(report, 5, ok, f"optimal n=4 metadata over C {caps}: {at4}; over n {procs}: {ys}, "
                         f"slope {slope:g}, residual {residual:g}")
    assert ok


def test_c06_aba_discrimination(report):
    verdicts = {impl: check(aba_scenario(IMPLEMENTATIONS[impl](1, 2)).history, 1).linearizable
                for impl in ("distinct", "llsc", "dcss", "optimal")}
    ok = verdicts == {"distinct": False, "llsc": True, "dcss": True, "optimal": True}
    _line(report, 6, ok, ", ".join(f"{k} {'linearizable' if v else 'NOT linearizable'}" for k, v in verdicts.items()))
    assert ok


def test_c07_progress(report):
    solo, stuck, probes = {}, 0, {}
    for impl in IMPLS:
        s = suite(impl)
        solo[impl] = s.max_solo_steps
        stuck += sum(1 for _, _, v in s.violations if v.kind == "livelock")
        rep = starvation_probe(lambda: IMPLEMENTATIONS[impl](2, 3), window=WINDOW, windows=3)
        probes[impl] = rep
    obstruction_ok = stuck == 0 and all(v is not None and v <= SOLO_BOUND for v in solo.values())
    lock_ok = all(r.ok and r.probes > 0 for r in probes.values())
    ok = obstruction_ok and lock_ok
    _line(report, 7, ok, "max solo steps " + ", ".join(f"{k} {v}" for k, v in solo.items())
          + f" (bound {SOLO_BOUND}); starvation min progress per {WINDOW}-step window "
          + ", ".join(f"{k} {r.min_progress}" for k, r in probes.items()))
    assert ok


def test_c08_oracle_equivalence(report):
    mismatches = []
    for impl in IMPLS:
        for seed in range(ORACLE_SEEDS):
            rng = random.Random(seed)
            cap = rng.randint(1, 8)
            q, oracle = IMPLEMENTATIONS[impl](cap, 1), SeqBoundedQueue(cap)
            for k in range(ORACLE_OPS):
                if rng.random() < 0.5:
                    got, want = q.enq(k), oracle.enq(k)
                else:
                    got, want = q.deq(), oracle.deq()
                if got != want:
                    mismatches.append((impl, seed, k))
                    break
    ok = not mismatches
    _line(report, 8, ok, f"{ORACLE_SEEDS} seeds x {ORACLE_OPS} ops x {len(IMPLS)} queues, "
                         f"{len(mismatches)} mismatching runs")
    assert ok, mismatches[:5]


def test_c09_checker_cross_validation(report):
    total = disagree = positive = 0
    for h in all_histories(6):
        total += 1
        fast = check(h, 1).linearizable
        positive += fast
        if fast != brute_force_linearizable(h, 1):
            disagree += 1
    ok = disagree == 0 and total > 0
    _line(report, 9, ok, f"{total} histories of <=6 events, C=1: {positive} linearizable, {disagree} disagreements")
    assert ok


def test_c10_bench_smoke(report, tmp_path):
    rows, issues = [], []
    for impl in IMPLS:
        out = tmp_path / f"{impl}.csv"
        t0 = time.perf_counter()
        code = main(["run", "--impl", impl, "--threads", "4", "--duration", str(BENCH_SECONDS),
                     "--out", str(out)])
        wall = time.perf_counter() - t0
        if code != 0:
            issues.append(f"{impl} exit {code}")
            continue
        [r] = from_csv(out.read_text())
        if from_json(to_json([r])) != [r]:
            issues.append(f"{impl} json round trip")
        if not r.accounting_ok or r.threads != 4 or r.elapsed < BENCH_SECONDS:
            issues.append(f"{impl} accounting/threads/duration")
        rows.append(f"{impl} {r.ops} ops {r.ops_per_sec:.0f}/s ({wall:.1f}s)")
    # the JSON emitter of the command itself
    jout = tmp_path / "all.json"
    if main(["run", "--impl", "all", "--threads", "4", "--ops", "2000", "--format", "json", "--out", str(jout)]) != 0:
        issues.append("json run")
    elif not all(r.accounting_ok for r in from_json(jout.read_text())):
        issues.append("json accounting")
    ok = not issues
    _line(report, 10, ok, "; ".join(rows) + (f"; problems: {issues}" if issues else ""))
    assert ok
