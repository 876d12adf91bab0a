"""Cumulative energy counters and measurement windows."""

from __future__ import annotations

import bisect
import contextlib
import glob
import json
import os
import threading
import time
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass
from pathlib import Path

import psutil

from refaas.errors import CounterWrapUndeclared, InvalidWindow, ProbeUnavailable

Clock = Callable[[], float]

DOMAINS = ("cpu-package", "gpu", "process", "synthetic")


class VirtualClock:
    """Manually advanced clock for deterministic measurements."""

    def __init__(self, start: float = 0.0):
        self._now = start
        self._lock = threading.Lock()

    def __call__(self) -> float:
        return self._now

    def advance(self, dt: float) -> None:
        if dt < 0:
            raise ValueError("clock cannot go backwards")
        with self._lock:
            self._now += dt


@dataclass(frozen=True)
class ProbeMarker:
    time: float
    counter: float  # cumulative joules as read from the probe


class EnergyProbe:
    """Base class: ``read()`` returns a cumulative joule counter.

    Counters never decrease except by wrapping at ``max_counter`` (joules);
    a probe that cannot wrap leaves it as None.
    """

    domain: str = "synthetic"
    max_counter: float | None = None

    def __init__(self, id: str, clock: Clock = time.monotonic):
        self.id = id
        self.clock = clock

    def read(self) -> float:
        raise NotImplementedError

    def mark(self) -> ProbeMarker:
        return ProbeMarker(self.clock(), self.read())


def sample_window(probe: EnergyProbe, window: tuple[ProbeMarker, ProbeMarker]) -> float:
    """Joules consumed between two markers, corrected for one counter wrap."""
    start, stop = window
    if stop.time < start.time:
        raise InvalidWindow(f"stop marker ({stop.time}) precedes start marker ({start.time})")
    delta = stop.counter - start.counter
    if delta < 0:
        if probe.max_counter is None:
            raise CounterWrapUndeclared(f"probe {probe.id} counter went backwards without a declared range")
        delta += probe.max_counter
    return delta


class SyntheticProbe(EnergyProbe):
    """Scripted counter: piecewise-linear cumulative joules over clock time.

    Time is measured from construction (or ``reset``). Past the last script
    point the counter keeps the slope of the final segment.
    """

    domain = "synthetic"

    def __init__(
        self,
        script: Sequence[tuple[float, float]],
        clock: Clock = time.monotonic,
        id: str = "synthetic",
        max_counter: float | None = None,
    ):
        super().__init__(id, clock)
        pts = sorted((float(t), float(j)) for t, j in script)
        if not pts:
            raise ValueError("synthetic probe needs at least one script point")
        if any(b[1] < a[1] for a, b in zip(pts, pts[1:])):
            raise ValueError("scripted cumulative joules must be non-decreasing")
        self._times = [t for t, _ in pts]
        self._joules = [j for _, j in pts]
        self.max_counter = max_counter
        self.t0 = clock()

    @classmethod
    def constant_power(cls, watts: float, clock: Clock = time.monotonic, id: str = "synthetic") -> SyntheticProbe:
        return cls([(0.0, 0.0), (1.0, float(watts))], clock=clock, id=id)

    @classmethod
    def from_file(cls, path: str | Path, clock: Clock = time.monotonic) -> SyntheticProbe:
        """Load ``{"id": ..., "samples": [[t, joules], ...], "max_counter": ...}``."""
        doc = json.loads(Path(path).read_text("utf-8"))
        return cls(
            [tuple(p) for p in doc["samples"]],
            clock=clock,
            id=doc.get("id", Path(path).stem),
            max_counter=doc.get("max_counter"),
        )

    def reset(self) -> None:
        self.t0 = self.clock()

    def energy_at(self, t: float) -> float:
        ts, js = self._times, self._joules
        if len(ts) == 1:
            return js[0]
        if t <= ts[0]:
            return js[0]
        i = bisect.bisect_right(ts, t)
        if i >= len(ts):
            i = len(ts) - 1
        t1, t2, j1, j2 = ts[i - 1], ts[i], js[i - 1], js[i]
        if t2 == t1:
            return j2
        return j1 + (j2 - j1) * (t - t1) / (t2 - t1)

    def read(self) -> float:
        value = self.energy_at(self.clock() - self.t0)
        if self.max_counter is not None:
            value %= self.max_counter
        return value


class RaplProbe(EnergyProbe):
    """Reads a powercap zone (``energy_uj`` plus ``max_energy_range_uj``)."""

    domain = "cpu-package"

    def __init__(self, zone: str | Path, id: str | None = None, clock: Clock = time.monotonic):
        self.zone = Path(zone)
        super().__init__(id or f"rapl:{self.zone.name}", clock)
        try:
            self.max_counter = int(self._read_file("max_energy_range_uj")) / 1e6
        except ProbeUnavailable:
            self.max_counter = None

    def _read_file(self, name: str) -> str:
        try:
            return (self.zone / name).read_text().strip()
        except OSError as exc:
            raise ProbeUnavailable(f"{self.id}: cannot read {self.zone / name}: {exc}") from exc

    def read(self) -> float:
        raw = self._read_file("energy_uj")
        try:
            return int(raw) / 1e6
        except ValueError as exc:
            raise ProbeUnavailable(f"{self.id}: bad counter value {raw!r}") from exc

    @staticmethod
    def discover(root: str = "/sys/class/powercap") -> list[RaplProbe]:
        """Package-level zones (``intel-rapl:N``) that are readable."""
        probes = []
        for zone in sorted(glob.glob(os.path.join(root, "intel-rapl:*"))):
            if ":" in os.path.basename(zone).split("intel-rapl:", 1)[1]:
                continue  # subzone (core, uncore, dram)
            probe = RaplProbe(zone)
            try:
                probe.read()
            except ProbeUnavailable:
                continue
            probes.append(probe)
        return probes


def _task_cpu_seconds(pid: int) -> float | None:
    """Precise on-CPU time of every thread of ``pid`` via schedstat."""
    total = 0
    paths = glob.glob(f"/proc/{pid}/task/*/schedstat")
    if not paths:
        return None
    for path in paths:
        try:
            with open(path) as f:
                total += int(f.read().split()[0])
        except (OSError, ValueError, IndexError):
            continue
    return total / 1e9


class ProcessProbe(EnergyProbe):
    """Estimates energy as CPU time times a nominal per-CPU power.

    Unattached it covers this process plus its reaped children; attached to
    a pid it follows that process only. This is a model, not a meter: use it
    where hardware counters are absent.
    """

    domain = "process"

    def __init__(self, watts_per_cpu: float = 15.0, id: str = "process", clock: Clock = time.monotonic):
        super().__init__(id, clock)
        if watts_per_cpu <= 0:
            raise ValueError("watts_per_cpu must be positive")
        self.watts_per_cpu = watts_per_cpu
        self._pid: int | None = None
        self._last = 0.0
        self._lock = threading.Lock()

    def attach(self, pid: int | None) -> None:
        with self._lock:
            self._pid = pid
            self._last = 0.0

    def _cpu_seconds(self) -> float:
        if self._pid is None:
            t = os.times()
            return t.user + t.system + t.children_user + t.children_system
        secs = _task_cpu_seconds(self._pid)
        if secs is None:
            try:
                ct = psutil.Process(self._pid).cpu_times()
                secs = ct.user + ct.system
            except psutil.Error:
                secs = None
        return self._last if secs is None else secs

    def read(self) -> float:
        with self._lock:
            # Exited processes keep their last reading so the counter stays monotone.
            self._last = max(self._last, self._cpu_seconds())
            return self._last * self.watts_per_cpu


_leases: dict[str, threading.Lock] = {}
_leases_guard = threading.Lock()


@contextlib.contextmanager
def probe_lease(probe: EnergyProbe, timeout: float | None = None) -> Iterator[None]:
    """Exclusive use of a probe for one measurement window at a time."""
    with _leases_guard:
        lock = _leases.setdefault(probe.id, threading.Lock())
    if not lock.acquire(timeout=-1 if timeout is None else timeout):
        raise ProbeUnavailable(f"probe {probe.id} is leased by another benchmark")
    try:
        yield
    finally:
        lock.release()


def build_probe(spec: str | dict, clock: Clock = time.monotonic) -> EnergyProbe:
    """Create a probe from a short config string or mapping.

    Accepted forms: ``"process"``, ``"process:20"`` (watts per CPU),
    ``"rapl"`` (first package zone), ``"rapl:/sys/class/powercap/intel-rapl:0"``,
    ``"synthetic:10"`` (constant watts), ``"synthetic-file:<path>"``.
    """
    if isinstance(spec, dict):
        kind = spec.get("kind", "process")
        arg = spec.get("arg")
    else:
        kind, _, arg = spec.partition(":")
        arg = arg or None
    if kind == "process":
        return ProcessProbe(float(arg) if arg else 15.0, clock=clock)
    if kind == "rapl":
        if arg:
            return RaplProbe(arg, clock=clock)
        found = RaplProbe.discover()
        if not found:
            raise ProbeUnavailable("no readable RAPL package zone")
        return found[0]
    if kind == "synthetic":
        return SyntheticProbe.constant_power(float(arg or 0.0), clock=clock)
    if kind == "synthetic-file":
        return SyntheticProbe.from_file(arg, clock=clock)
    raise ProbeUnavailable(f"unknown probe kind {kind!r}")
