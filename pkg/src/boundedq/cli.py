"""Command line: ``boundedq run`` benchmarks a queue, ``boundedq overhead``
prints the memory-overhead grid."""

from __future__ import annotations

import argparse
import sys

from . import IMPLEMENTATIONS
from .bench import (BenchConfig, ConfigError, default_mode, overhead_csv, overhead_json, report_overhead,
                    run, to_csv, to_json)


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="boundedq", description="Benchmark the bounded queues.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="throughput and latency of one or more implementations")
    r.add_argument("--impl", default="optimal",
                   help=f"implementation, comma separated list or 'all' ({', '.join(IMPLEMENTATIONS)})")
    r.add_argument("--capacity", type=int, default=64)
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--ops", type=int, default=None, help="total measured operations (default 10000)")
    r.add_argument("--duration", type=float, default=None, help="seconds of measured phase instead of --ops")
    r.add_argument("--ratio", type=float, default=0.5, help="fraction of enqueues")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--warmup", type=int, default=0, help="operations per thread before measuring")
    r.add_argument("--values", choices=["unique", "repeat"], default="unique")
    r.add_argument("--format", choices=["csv", "json"], default="csv")
    r.add_argument("--out", default="-", help="output file ('-' for stdout)")

    o = sub.add_parser("overhead", help="metadata/value location counts over a grid")
    o.add_argument("--capacities", type=_ints, default=[16, 256, 4096])
    o.add_argument("--processes", type=_ints, default=[2, 4, 8, 16])
    o.add_argument("--impl", default="all")
    o.add_argument("--format", choices=["csv", "json"], default="csv")
    o.add_argument("--out", default="-")
    return p


def _impls(spec: str, allow_oracle: bool = False) -> list[str]:
    names = list(IMPLEMENTATIONS) if spec == "all" else [s.strip() for s in spec.split(",") if s.strip()]
    known = set(IMPLEMENTATIONS) | ({"oracle"} if allow_oracle else set())
    for name in names:
        if name not in known:
            raise ConfigError(f"unknown implementation {name!r}; pick from {sorted(known)}")
    if allow_oracle and spec == "all":
        names = ["oracle"] + names
    return names


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            mode = default_mode()
            ops = args.ops if args.ops is not None or args.duration is not None else 10_000
            results = []
            for impl in _impls(args.impl):
                cfg = BenchConfig(impl=impl, capacity=args.capacity, threads=args.threads, ops=ops,
                                  duration=args.duration, ratio=args.ratio, warmup=args.warmup,
                                  seed=args.seed, values=args.values, mode=mode)
                cfg.validate()
                results.append(run(cfg))
            _emit(to_csv(results) if args.format == "csv" else to_json(results) + "\n", args.out)
        else:
            table = report_overhead(args.capacities, args.processes, _impls(args.impl, allow_oracle=True))
            _emit(overhead_csv(table) if args.format == "csv" else overhead_json(table) + "\n", args.out)
    except ConfigError as exc:
        print(f"boundedq: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
