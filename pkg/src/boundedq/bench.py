"""Throughput/latency benchmark and overhead reports.

``run`` drives one queue with ``threads`` worker threads (native mode) or
with the deterministic step scheduler (instrumented mode, chosen with the
``BOUNDEDQ_MODE`` environment variable).  ``report_overhead`` tabulates
``account()`` over a grid of capacities and process counts.
"""

from __future__ import annotations

import csv
import io
import json
import os
import random
import threading
import time
from dataclasses import asdict, dataclass, field, fields

from . import IMPLEMENTATIONS, make_queue
from .memory import OverheadReport
from .sequential import SeqBoundedQueue

MODES = ("native", "instrumented")
LATENCY_SAMPLES = 1_000_000  # per run; beyond this latencies are sampled


class ConfigError(ValueError):
    """A benchmark configuration that cannot be run."""


@dataclass
class BenchConfig:
    impl: str
    capacity: int = 64
    threads: int = 1
    ops: int | None = 10_000  # total measured operations (None: use duration)
    duration: float | None = None  # seconds of measured phase
    ratio: float = 0.5  # probability that an operation is an enqueue
    warmup: int = 0  # operations per thread before measuring
    seed: int = 0
    values: str = "unique"  # or "repeat"
    mode: str = "native"

    def validate(self) -> None:
        if self.impl not in IMPLEMENTATIONS:
            raise ConfigError(f"unknown implementation {self.impl!r}; pick one of {sorted(IMPLEMENTATIONS)}")
        if self.capacity < 1:
            raise ConfigError("capacity must be at least 1")
        if self.threads < 1:
            raise ConfigError("need at least one thread")
        if not 0.0 <= self.ratio <= 1.0:
            raise ConfigError("ratio must lie in [0, 1]")
        if self.ops is None and self.duration is None:
            raise ConfigError("give an operation count or a duration")
        if self.ops is not None and self.ops < 0:
            raise ConfigError("ops must be non-negative")
        if self.values not in ("unique", "repeat"):
            raise ConfigError("values must be 'unique' or 'repeat'")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.values == "repeat" and not IMPLEMENTATIONS[self.impl].allows_duplicates:
            raise ConfigError(f"{self.impl} requires every enqueued value to be distinct; "
                              "a workload that repeats values breaks its contract")


@dataclass
class BenchResult:
    impl: str
    capacity: int
    threads: int
    mode: str
    seed: int
    ops: int
    successes: int
    full: int  # enqueues that found the queue full
    empty: int  # dequeues that found it empty
    enq_ok: int
    deq_ok: int
    elapsed: float
    ops_per_sec: float
    p50_us: float
    p99_us: float
    value_locations: int
    metadata_locations: int
    descriptor_pool_size: int
    emulation_locations: int

    @property
    def accounting_ok(self) -> bool:
        return self.ops == self.successes + self.full + self.empty

    def overhead(self) -> OverheadReport:
        return OverheadReport(self.value_locations, self.metadata_locations,
                              self.descriptor_pool_size, self.emulation_locations)


def _op_stream(seed: int, tid: int, ratio: float, values: str):
    rng = random.Random(f"{seed}:{tid}")
    k = 0
    while True:
        if rng.random() < ratio:
            k += 1
            yield True, (tid + 1) * 10**12 + k if values == "unique" else 1 + k % 7
        else:
            yield False, None


def operation_sequence(config: BenchConfig, tid: int, count: int) -> list:
    """The first ``count`` operations thread ``tid`` issues (for replays)."""
    stream = _op_stream(config.seed, tid, config.ratio, config.values)
    return [next(stream) for _ in range(count)]


def _percentile(sorted_vals: list, q: float) -> float:
    if not sorted_vals:
        return 0.0
    k = min(len(sorted_vals) - 1, max(0, round(q * (len(sorted_vals) - 1))))
    return sorted_vals[k]


class _Tally:
    __slots__ = ("ops", "enq_ok", "deq_ok", "full", "empty", "lat")

    def __init__(self):
        self.ops = self.enq_ok = self.deq_ok = self.full = self.empty = 0
        self.lat: list[float] = []


def _quota(config: BenchConfig, tid: int) -> int | None:
    if config.ops is None:
        return None
    base, extra = divmod(config.ops, config.threads)
    return base + (1 if tid < extra else 0)


def run(config: BenchConfig) -> BenchResult:
    config.validate()
    queue = make_queue(config.impl, config.capacity, config.threads)
    if config.mode == "instrumented":
        tallies, elapsed = _run_instrumented(queue, config)
    else:
        tallies, elapsed = _run_native(queue, config)
    total = _Tally()
    for t in tallies:
        total.ops += t.ops
        total.enq_ok += t.enq_ok
        total.deq_ok += t.deq_ok
        total.full += t.full
        total.empty += t.empty
        total.lat.extend(t.lat)
    lat = sorted(total.lat)
    acct = queue.account()
    return BenchResult(
        impl=config.impl, capacity=config.capacity, threads=config.threads, mode=config.mode,
        seed=config.seed, ops=total.ops, successes=total.enq_ok + total.deq_ok, full=total.full,
        empty=total.empty, enq_ok=total.enq_ok, deq_ok=total.deq_ok, elapsed=elapsed,
        ops_per_sec=total.ops / elapsed if elapsed > 0 else 0.0,
        p50_us=_percentile(lat, 0.50) * 1e6, p99_us=_percentile(lat, 0.99) * 1e6,
        value_locations=acct.value_locations, metadata_locations=acct.metadata_locations,
        descriptor_pool_size=acct.descriptor_pool_size, emulation_locations=acct.emulation_locations,
    )


def _run_native(queue, config: BenchConfig):
    n = config.threads
    tallies = [_Tally() for _ in range(n)]
    ready = threading.Barrier(n + 1)
    go = threading.Barrier(n + 1)
    stop = threading.Event()
    sample_every = max(1, (config.ops or 0) // LATENCY_SAMPLES + 1) if config.ops else 1
    errors = []

    def worker(tid):
        try:
            pid = queue.register()
            stream = _op_stream(config.seed, tid, config.ratio, config.values)
            for _ in range(config.warmup):
                is_enq, v = next(stream)
                queue.enq(v, pid) if is_enq else queue.deq(pid)
            ready.wait()
            go.wait()
            tally = tallies[tid]
            quota = _quota(config, tid)
            clock = time.perf_counter
            lat = tally.lat
            while quota is None or tally.ops < quota:
                if stop.is_set():
                    break
                is_enq, v = next(stream)
                t0 = clock()
                if is_enq:
                    ok = queue.enq(v, pid)
                    if ok:
                        tally.enq_ok += 1
                    else:
                        tally.full += 1
                else:
                    x = queue.deq(pid)
                    if x is None:
                        tally.empty += 1
                    else:
                        tally.deq_ok += 1
                t1 = clock()
                tally.ops += 1
                if tally.ops % sample_every == 0 and len(lat) < LATENCY_SAMPLES:
                    lat.append(t1 - t0)
        except BaseException as exc:  # surface worker failures in the caller
            errors.append(exc)
            stop.set()
            ready.abort()
            go.abort()

    threads = [threading.Thread(target=worker, args=(t,), daemon=True) for t in range(n)]
    start = time.monotonic()
    for th in threads:
        th.start()
    try:
        ready.wait()
        start = time.monotonic()
        go.wait()
    except threading.BrokenBarrierError:
        pass
    if config.duration is not None:
        deadline = start + config.duration if not errors else time.monotonic()
        while time.monotonic() < deadline and any(th.is_alive() for th in threads):
            time.sleep(0.01)
        stop.set()
    for th in threads:
        th.join()
    elapsed = time.monotonic() - start if not errors else 0.0
    if errors:
        raise errors[0]
    return tallies, elapsed


def _run_instrumented(queue, config: BenchConfig):
    """One controller interleaves the processes step by step (seeded)."""
    from .harness.scheduler import Driver

    n = config.threads
    drv = Driver(queue, monitors=True, record=False)
    rng = random.Random(config.seed)
    streams = [_op_stream(config.seed, t, config.ratio, config.values) for t in range(n)]
    tallies = [_Tally() for _ in range(n)]
    quotas = [(_quota(config, t) or 0) + config.warmup if config.ops is not None else None for t in range(n)]
    issued = [0] * n
    started = [0.0] * n
    t_begin = time.monotonic()
    deadline = t_begin + config.duration if config.duration is not None else None
    seen = 0

    def live(t):
        return drv.busy(t) or quotas[t] is None or issued[t] < quotas[t]

    while True:
        pids = [t for t in range(n) if live(t)]
        if not pids or (deadline is not None and time.monotonic() >= deadline):
            break
        t = rng.choice(pids)
        if not drv.busy(t):
            is_enq, v = next(streams[t])
            issued[t] += 1
            started[t] = time.perf_counter()
            drv.start(t, ("enq", v) if is_enq else ("deq", None))
        else:
            drv.step(t)
        while seen < len(drv.results):
            pid, op, result = drv.results[seen]
            seen += 1
            if issued[pid] <= config.warmup:
                continue
            tally = tallies[pid]
            tally.ops += 1
            tally.lat.append(time.perf_counter() - started[pid])
            if op[0] == "enq":
                if result:
                    tally.enq_ok += 1
                else:
                    tally.full += 1
            elif result is None:
                tally.empty += 1
            else:
                tally.deq_ok += 1
    drv.final_checks()
    return tallies, time.monotonic() - t_begin


# -- serialisation ---------------------------------------------------------------

RESULT_FIELDS = [f.name for f in fields(BenchResult)]
_TYPES = {f.name: f.type for f in fields(BenchResult)}


def to_csv(results: list[BenchResult]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=RESULT_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in asdict(r).items()})
    return buf.getvalue()


def _coerce(name: str, raw: str):
    kind = _TYPES[name]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def from_csv(text: str) -> list[BenchResult]:
    rows = csv.DictReader(io.StringIO(text))
    return [BenchResult(**{k: _coerce(k, v) for k, v in row.items()}) for row in rows]


def to_json(results: list[BenchResult]) -> str:
    doc = {"results": [{
        "config": {k: getattr(r, k) for k in ("impl", "capacity", "threads", "mode", "seed")},
        "counts": {k: getattr(r, k) for k in ("ops", "successes", "full", "empty", "enq_ok", "deq_ok")},
        "timing": {k: getattr(r, k) for k in ("elapsed", "ops_per_sec", "p50_us", "p99_us")},
        "overhead": r.overhead().as_dict(),
    } for r in results]}
    return json.dumps(doc, indent=2)


def from_json(text: str) -> list[BenchResult]:
    out = []
    for item in json.loads(text)["results"]:
        flat = {}
        for part in ("config", "counts", "timing", "overhead"):
            flat.update(item[part])
        out.append(BenchResult(**flat))
    return out


# -- overhead grid ---------------------------------------------------------------

@dataclass
class OverheadRow:
    impl: str
    capacity: int
    processes: int
    value_locations: int
    metadata_locations: int
    descriptor_pool_size: int
    emulation_locations: int


@dataclass
class OverheadTable:
    rows: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)  # impl -> {"vs_n": .., "vs_C": ..}

    def metadata(self, impl: str, capacity: int, processes: int) -> int:
        for r in self.rows:
            if (r.impl, r.capacity, r.processes) == (impl, capacity, processes):
                return r.metadata_locations
        raise KeyError((impl, capacity, processes))


def _slope(xs: list, ys: list) -> float | None:
    if len(set(xs)) < 2:
        return None
    mx = sum(xs) / len(xs)
    my = sum(ys) / len(ys)
    den = sum((x - mx) ** 2 for x in xs)
    return sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / den


def report_overhead(capacities=(16, 256, 4096), processes=(2, 4, 8, 16), impls=None) -> OverheadTable:
    """``account()`` of fresh queues on the grid, with least-squares slopes of
    metadata against ``n`` (at the smallest capacity) and against ``C`` (at the
    smallest process count)."""
    impls = list(impls) if impls is not None else ["oracle"] + list(IMPLEMENTATIONS)
    table = OverheadTable()
    for impl in impls:
        for c in capacities:
            for n in processes:
                acct = SeqBoundedQueue(c).account() if impl == "oracle" else make_queue(impl, c, n).account()
                table.rows.append(OverheadRow(impl, c, n, acct.value_locations, acct.metadata_locations,
                                              acct.descriptor_pool_size, acct.emulation_locations))
        c0, n0 = min(capacities), min(processes)
        ns = sorted(processes)
        cs = sorted(capacities)
        table.slopes[impl] = {
            "vs_n": _slope(ns, [table.metadata(impl, c0, n) for n in ns]),
            "vs_C": _slope(cs, [table.metadata(impl, c, n0) for c in cs]),
        }
    return table


def overhead_csv(table: OverheadTable) -> str:
    buf = io.StringIO()
    names = [f.name for f in fields(OverheadRow)]
    w = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    w.writeheader()
    for r in table.rows:
        w.writerow(asdict(r))
    return buf.getvalue()


def overhead_json(table: OverheadTable) -> str:
    return json.dumps({"rows": [asdict(r) for r in table.rows], "slopes": table.slopes}, indent=2)


def default_mode() -> str:
    mode = os.environ.get("BOUNDEDQ_MODE", "native").strip().lower() or "native"
    if mode not in MODES:
        raise ConfigError(f"BOUNDEDQ_MODE must be one of {MODES}, got {mode!r}")
    return mode
