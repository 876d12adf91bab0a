"""Energy probes, temperature integration, regression gate, amortization."""

from refaas.energy.export import MetricsSink, job_lines, line_protocol
from refaas.energy.metrics import (
    JOULES_PER_WH,
    AmortizationReport,
    ConversionMetrics,
    FunctionMetrics,
    GateResult,
    amortization,
    integrate_temperature,
    regression_gate,
)
from refaas.energy.probes import (
    EnergyProbe,
    ProbeMarker,
    ProcessProbe,
    RaplProbe,
    SyntheticProbe,
    VirtualClock,
    build_probe,
    probe_lease,
    sample_window,
)
from refaas.energy.thermal import ScriptedSensor, TemperatureRecorder, TemperatureSensor, ThermalZoneSensor

__all__ = [
    "JOULES_PER_WH",
    "AmortizationReport",
    "ConversionMetrics",
    "EnergyProbe",
    "FunctionMetrics",
    "GateResult",
    "MetricsSink",
    "ProbeMarker",
    "ProcessProbe",
    "RaplProbe",
    "ScriptedSensor",
    "SyntheticProbe",
    "TemperatureRecorder",
    "TemperatureSensor",
    "ThermalZoneSensor",
    "VirtualClock",
    "amortization",
    "build_probe",
    "integrate_temperature",
    "job_lines",
    "line_protocol",
    "probe_lease",
    "regression_gate",
    "sample_window",
]
