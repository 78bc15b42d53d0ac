"""Verification harness: exhaustive and random schedulers, scripted
scenarios, linearizability checking and invariant monitors."""

from __future__ import annotations

from .brute import count_interleavings
from .explorer import (ExplorationResult, Explorer, SuiteResult, Violation, Workload, explore, explore_suite,
                       workloads)
from .history import Event, History, Operation, Verdict, all_histories, brute_force_linearizable, check
from .monitors import (CounterMonitor, Monitor, MonitorViolation, SegmentBoundMonitor,
                       SlotLifecycleMonitor, UniquenessMonitor, default_monitors)
from .progress import SingleLockQueue, obstruction_probe, starvation_probe
from .scenarios import aba_scenario, fill_empty_scenario, run_script
from .scheduler import Driver, run_random

__all__ = [
    "aba_scenario",
    "all_histories",
    "brute_force_linearizable",
    "check",
    "count_interleavings",
    "CounterMonitor",
    "default_monitors",
    "Driver",
    "Event",
    "ExplorationResult",
    "explore",
    "explore_suite",
    "Explorer",
    "fill_empty_scenario",
    "History",
    "Monitor",
    "MonitorViolation",
    "obstruction_probe",
    "Operation",
    "run_random",
    "run_script",
    "SegmentBoundMonitor",
    "SingleLockQueue",
    "SlotLifecycleMonitor",
    "starvation_probe",
    "SuiteResult",
    "UniquenessMonitor",
    "Verdict",
    "Violation",
    "Workload",
    "workloads",
]
