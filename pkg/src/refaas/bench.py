"""Closed-loop micro-benchmark of a built function.

Each repetition starts one warm worker pinned to a single CPU, feeds it the
test events round-robin as fast as it answers, and brackets the measured
invocations (warmup excluded) with one probe window.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import statistics
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from typing import Any

from refaas.energy.probes import EnergyProbe, _task_cpu_seconds, probe_lease, sample_window
from refaas.errors import ArtifactCrash
from refaas.runner.build import Artifact
from refaas.runner.invoke import Limits, WarmWorker

log = logging.getLogger(__name__)

METRICS = ("joules_total", "joules_per_invocation", "cpu_seconds", "peak_memory", "wall_time")


@dataclass(frozen=True)
class BenchmarkConfig:
    invocations: int = 1000
    repetitions: int = 5
    warmup_invocations: int = 50
    probe: str = "process"
    cpu: int | None = None  # None picks the first CPU this process may use
    timeout: float = 30.0  # per invocation

    def __post_init__(self) -> None:
        if self.invocations < 1:
            raise ValueError("invocations must be >= 1")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.warmup_invocations < 0:
            raise ValueError("warmup_invocations must be >= 0")


@dataclass(frozen=True)
class Repetition:
    joules_total: float
    joules_per_invocation: float
    cpu_seconds: float
    peak_memory: int
    wall_time: float


@dataclass(frozen=True)
class BenchmarkReport:
    invocations: int
    warmup_invocations: int
    probe: str
    per_repetition: tuple[Repetition, ...]
    aggregate: dict[str, dict[str, float]] = field(default_factory=dict)

    @classmethod
    def from_repetitions(cls, reps: Sequence[Repetition], invocations: int, warmup: int, probe: str) -> BenchmarkReport:
        agg = {}
        for name in METRICS:
            values = [float(getattr(r, name)) for r in reps]
            agg[name] = {
                "mean": statistics.fmean(values),
                "std": statistics.stdev(values) if len(values) > 1 else 0.0,
            }
        return cls(invocations, warmup, probe, tuple(reps), agg)

    @property
    def repetitions(self) -> int:
        return len(self.per_repetition)

    @property
    def mean_joules_per_invocation(self) -> float:
        return self.aggregate["joules_per_invocation"]["mean"]

    @property
    def std_joules_per_invocation(self) -> float:
        return self.aggregate["joules_per_invocation"]["std"]

    def to_json(self) -> dict[str, Any]:
        return {
            "invocations": self.invocations,
            "repetitions": self.repetitions,
            "warmup_invocations": self.warmup_invocations,
            "probe": self.probe,
            "per_repetition": [asdict(r) for r in self.per_repetition],
            "aggregate": self.aggregate,
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> BenchmarkReport:
        reps = [Repetition(**r) for r in doc["per_repetition"]]
        return cls.from_repetitions(reps, doc["invocations"], doc.get("warmup_invocations", 0), doc.get("probe", ""))

    def to_csv(self, label: str = "") -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["label", "repetition", *METRICS])
        for i, r in enumerate(self.per_repetition):
            writer.writerow([label, i, *(getattr(r, m) for m in METRICS)])
        return buf.getvalue()


def _pick_cpu(requested: int | None) -> int | None:
    if requested is not None:
        return requested
    if hasattr(os, "sched_getaffinity"):
        return min(os.sched_getaffinity(0))
    return None


def _check_pinned(pid: int, cpu: int | None) -> None:
    if cpu is None or not hasattr(os, "sched_getaffinity"):
        log.warning("benchmark worker runs unpinned (CPU affinity unsupported)")
        return
    try:
        if os.sched_getaffinity(pid) != {cpu}:
            log.warning("could not pin benchmark worker %d to CPU %d", pid, cpu)
    except OSError:
        pass


def run_benchmark(
    artifact: Artifact,
    events: Sequence[Any],
    cfg: BenchmarkConfig,
    probe: EnergyProbe,
    on_invocation: Callable[[int], None] | None = None,
) -> BenchmarkReport:
    """Benchmark ``artifact`` on ``events`` cycled round-robin.

    ``on_invocation`` is called with the measured-invocation index after each
    measured call. ArtifactCrash carries the 0-based position in the
    repetition's call sequence (warmup included); no partial report is
    returned.
    """
    if not events:
        raise ValueError("benchmark needs at least one event")
    cpu = _pick_cpu(cfg.cpu)
    limits = Limits(timeout=cfg.timeout, cpu=cpu)
    k = len(events)
    reps = []
    attach = getattr(probe, "attach", None)
    for _ in range(cfg.repetitions):
        with probe_lease(probe):
            worker = WarmWorker(artifact, limits)
            try:
                _check_pinned(worker.pid, cpu)
                index = 0
                for w in range(cfg.warmup_invocations):
                    worker.call(events[w % k], index)
                    index += 1
                if attach is not None:
                    attach(worker.pid)
                cpu_start = _task_cpu_seconds(worker.pid)
                start = probe.mark()
                for i in range(cfg.invocations):
                    worker.call(events[i % k], index)
                    index += 1
                    if on_invocation is not None:
                        on_invocation(i)
                stop = probe.mark()
                cpu_stop = _task_cpu_seconds(worker.pid)
            except ArtifactCrash:
                worker.close(timeout=1.0)
                raise
            finally:
                if attach is not None:
                    attach(None)
            worker.close()
            if worker.returncode not in (0, None):
                raise ArtifactCrash(index, f"exit status {worker.returncode} after last invocation")
        joules = sample_window(probe, (start, stop))
        if cpu_start is not None and cpu_stop is not None:
            cpu_seconds = cpu_stop - cpu_start
        else:
            cpu_seconds = worker.usage.ru_utime + worker.usage.ru_stime if worker.usage else 0.0
        reps.append(
            Repetition(
                joules_total=joules,
                joules_per_invocation=joules / cfg.invocations,
                cpu_seconds=cpu_seconds,
                peak_memory=worker.usage.ru_maxrss * 1024 if worker.usage else 0,
                wall_time=stop.time - start.time,
            )
        )
    return BenchmarkReport.from_repetitions(reps, cfg.invocations, cfg.warmup_invocations, probe.id)


@dataclass(frozen=True)
class SavingsRow:
    original_joules_per_invocation: float
    translated_joules_per_invocation: float
    saving_per_invocation: float  # original minus translated; negative means the original was cheaper
    saving_std: float
    reduction_percent: float | None

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def savings_report(original: BenchmarkReport, translated: BenchmarkReport) -> SavingsRow:
    o = original.mean_joules_per_invocation
    t = translated.mean_joules_per_invocation
    saving = o - t
    std = math.hypot(original.std_joules_per_invocation, translated.std_joules_per_invocation)
    pct = saving * 100.0 / o if o != 0 else (0.0 if saving == 0 else None)
    return SavingsRow(o, t, saving, std, pct)
