"""Per-job metrics documents and an InfluxDB-style line-protocol rendering."""

from __future__ import annotations

import re
import threading
import time
from typing import Any

_TAG_ESCAPE = re.compile(r"([,= ])")


def _tag(value: Any) -> str:
    return _TAG_ESCAPE.sub(r"\\\1", str(value))


def _field(value: Any) -> str | None:
    if value is None:
        return None
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return f"{value}i"
    if isinstance(value, float):
        return repr(value)
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def line_protocol(measurement: str, tags: dict[str, Any], fields: dict[str, Any], ts_ns: int | None = None) -> str:
    rendered = {k: _field(v) for k, v in fields.items()}
    body = ",".join(f"{_tag(k)}={v}" for k, v in sorted(rendered.items()) if v is not None)
    if not body:
        raise ValueError("line protocol needs at least one field")
    head = ",".join([_tag(measurement)] + [f"{_tag(k)}={_tag(v)}" for k, v in sorted(tags.items()) if v is not None])
    return f"{head} {body} {ts_ns if ts_ns is not None else time.time_ns()}"


def job_lines(doc: dict[str, Any]) -> list[str]:
    """Lines for one job metrics document (see ``TranslationJob.metrics_document``)."""
    ts = doc.get("finished_ns")
    tags = {"job_id": doc["job_id"], "verdict": doc.get("verdict"), "pipeline": doc.get("pipeline")}
    conv = doc.get("conversion", {})
    lines = [
        line_protocol(
            "refaas_conversion",
            tags,
            {
                "runtime_s": float(conv.get("runtime", 0.0)),
                "tokens": int(conv.get("tokens", 0)),
                "energy_wh": float(conv.get("energy", 0.0)),
                "temperature_dh": float(conv.get("temperature_load", 0.0)),
            },
            ts,
        )
    ]
    for probe, wh in sorted(conv.get("energy_by_probe", {}).items()):
        lines.append(line_protocol("refaas_conversion_energy", {**tags, "probe": probe}, {"energy_wh": float(wh)}, ts))
    for sensor, dh in sorted(conv.get("temperature_by_sensor", {}).items()):
        lines.append(line_protocol("refaas_conversion_temperature", {**tags, "sensor": sensor}, {"temperature_dh": float(dh)}, ts))
    fn = doc.get("function")
    if fn:
        lines.append(line_protocol("refaas_function", tags, fn, ts))
    am = doc.get("amortization")
    if am:
        lines.append(line_protocol("refaas_amortization", tags, am, ts))
    return lines


class MetricsSink:
    """Append-only store of job metric documents, safe for concurrent writers."""

    def __init__(self) -> None:
        self._docs: list[dict[str, Any]] = []
        self._lock = threading.Lock()

    def append(self, doc: dict[str, Any]) -> None:
        with self._lock:
            self._docs.append(doc)

    def documents(self) -> list[dict[str, Any]]:
        with self._lock:
            return list(self._docs)

    def render(self) -> str:
        lines = []
        for doc in self.documents():
            lines.extend(job_lines(doc))
        return "\n".join(lines) + ("\n" if lines else "")
