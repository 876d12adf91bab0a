from __future__ import annotations

import glob
import threading
import time
from collections.abc import Callable, Sequence
from pathlib import Path

from refaas.energy.probes import Clock
from refaas.errors import ProbeUnavailable


class TemperatureSensor:
    domain = "cpu"

    def __init__(self, id: str, clock: Clock = time.monotonic):
        self.id = id
        self.clock = clock

    def read(self) -> float:
        """Current temperature in degrees Celsius."""
        raise NotImplementedError


class ThermalZoneSensor(TemperatureSensor):
    """Reads ``/sys/class/thermal/thermal_zone*/temp`` (millidegrees)."""

    def __init__(self, zone: str | Path, id: str | None = None, domain: str = "cpu", clock: Clock = time.monotonic):
        self.zone = Path(zone)
        super().__init__(id or f"thermal:{self.zone.name}", clock)
        self.domain = domain

    def read(self) -> float:
        try:
            return int((self.zone / "temp").read_text().strip()) / 1000.0
        except (OSError, ValueError) as exc:
            raise ProbeUnavailable(f"{self.id}: {exc}") from exc

    @staticmethod
    def discover(root: str = "/sys/class/thermal") -> list[ThermalZoneSensor]:
        found = []
        for zone in sorted(glob.glob(f"{root}/thermal_zone*")):
            sensor = ThermalZoneSensor(zone)
            try:
                sensor.read()
            except ProbeUnavailable:
                continue
            found.append(sensor)
        return found


class ScriptedSensor(TemperatureSensor):
    """Temperature as a function of seconds since construction."""

    def __init__(self, fn: Callable[[float], float], id: str = "scripted", domain: str = "cpu", clock: Clock = time.monotonic):
        super().__init__(id, clock)
        self.domain = domain
        self.fn = fn
        self.t0 = clock()

    def read(self) -> float:
        return float(self.fn(self.clock() - self.t0))


class TemperatureRecorder:
    """Collects (time, temperature) samples per sensor during a job."""

    def __init__(self, sensors: Sequence[TemperatureSensor]):
        self.sensors = list(sensors)
        self.samples: dict[str, list[tuple[float, float]]] = {s.id: [] for s in self.sensors}
        self._lock = threading.Lock()

    def sample(self) -> None:
        for sensor in self.sensors:
            try:
                value = sensor.read()
            except ProbeUnavailable:
                continue
            with self._lock:
                self.samples[sensor.id].append((sensor.clock(), value))
