from __future__ import annotations

import math
import statistics
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any

from refaas.errors import InsufficientSamples

JOULES_PER_WH = 3600.0


@dataclass
class ConversionMetrics:
    """Cost of one translation job, failed attempts included."""

    runtime: float = 0.0  # seconds
    tokens: int = 0
    energy: float = 0.0  # watt-hours
    temperature_load: float = 0.0  # degree-hours, summed over sensors
    energy_by_probe: dict[str, float] = field(default_factory=dict)  # Wh
    temperature_by_sensor: dict[str, float] = field(default_factory=dict)  # °h

    @property
    def energy_joules(self) -> float:
        return self.energy * JOULES_PER_WH

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


@dataclass
class FunctionMetrics:
    """Original-versus-translated deltas (translated minus original)."""

    validation: bool = False
    tests_passed: int = 0
    tests_total: int = 0
    buildable: bool = False
    delta_energy: float | None = None  # Wh per invocation
    delta_cpu: float | None = None  # seconds per invocation
    delta_memory: int | None = None  # bytes
    delta_cold_start: float | None = None  # seconds

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class AmortizationReport:
    conversion_energy: float  # joules
    saving_per_invocation: float  # joules, positive means the translation is cheaper
    breakeven_invocations: int | None
    amortizable: bool

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def amortization(conversion_energy: float, saving_per_invocation: float) -> AmortizationReport:
    """Invocations needed before accumulated savings cover the conversion.

    Computed in exact rational arithmetic on the given floats, so the result
    is the true ceiling rather than one perturbed by division rounding.
    """
    if conversion_energy < 0:
        raise ValueError("conversion energy must be non-negative")
    if not saving_per_invocation > 0:
        return AmortizationReport(conversion_energy, saving_per_invocation, None, False)
    ratio = Fraction(conversion_energy) / Fraction(saving_per_invocation)
    return AmortizationReport(conversion_energy, saving_per_invocation, math.ceil(ratio), True)


def integrate_temperature(samples: Sequence[tuple[float, float]], baseline: float) -> float:
    """Trapezoidal integral of the above-baseline temperature, in °C·h.

    ``samples`` are (seconds, °C) pairs in time order.
    """
    if len(samples) < 2:
        raise InsufficientSamples(f"need at least 2 samples, got {len(samples)}")
    total = 0.0
    for (t1, c1), (t2, c2) in zip(samples, samples[1:]):
        if t2 < t1:
            raise ValueError("samples must be time-ordered")
        e1 = max(c1 - baseline, 0.0)
        e2 = max(c2 - baseline, 0.0)
        total += (e1 + e2) / 2.0 * (t2 - t1)
    return total / 3600.0


@dataclass(frozen=True)
class GateResult:
    passed: bool
    original_mean: float
    translated_mean: float
    margin: float

    @property
    def detail(self) -> str:
        verb = "within" if self.passed else "exceeds"
        return (
            f"translated {self.translated_mean:.6g} J/inv {verb} original "
            f"{self.original_mean:.6g} J/inv (margin {self.margin:.0%})"
        )


def _mean_energy(stats: Any) -> float:
    if hasattr(stats, "mean_joules_per_invocation"):
        return float(stats.mean_joules_per_invocation)
    values = list(stats) if isinstance(stats, Iterable) else [stats]
    if not values:
        raise ValueError("no energy samples")
    return statistics.fmean(values)


def regression_gate(original: Any, translated: Any, margin: float = 0.0) -> GateResult:
    """Fail when the translation uses more energy per invocation than the original.

    Inputs are benchmark reports or sequences of joules-per-invocation
    values. ``margin`` tolerates a relative increase (0.05 allows +5%).
    """
    orig = _mean_energy(original)
    trans = _mean_energy(translated)
    return GateResult(passed=not trans > orig * (1.0 + margin), original_mean=orig, translated_mean=trans, margin=margin)
