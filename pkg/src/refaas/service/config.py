"""Service configuration: one YAML file plus ``REFAAS_*`` environment overrides."""

from __future__ import annotations

import json
import os
from collections.abc import Mapping
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from refaas.errors import SchemaError

# scalar overrides: env var -> (field, parser)
_ENV_SCALARS: dict[str, tuple[str, Any]] = {
    "REFAAS_HOST": ("host", str),
    "REFAAS_PORT": ("port", int),
    "REFAAS_WORKERS": ("workers", int),
    "REFAAS_QUEUE_BOUND": ("queue_bound", int),
    "REFAAS_STORE_DIR": ("store_dir", str),
    "REFAAS_PIPELINES_DIR": ("pipelines_dir", str),
    "REFAAS_WORKDIR_ROOT": ("workdir_root", str),
    "REFAAS_BENCH_PROBE": ("bench_probe", str),
    "REFAAS_TOKEN": ("token", str),
    "REFAAS_HOOK_TARGET": ("hook_target", str),
    "REFAAS_PUBLIC_URL": ("public_url", str),
}


@dataclass
class BackendConfig:
    kind: str  # replay | openai | ollama
    models: list[str] = field(default_factory=lambda: ["*"])
    path: str | None = None  # replay transcript
    base_url: str | None = None
    api_key_env: str | None = None
    permits: int = 1
    timeout: float = 600.0

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> BackendConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise SchemaError(f"llm_backends.{sorted(unknown)[0]}", "unknown field")
        cfg = cls(**raw)
        if cfg.kind not in ("replay", "openai", "ollama"):
            raise SchemaError("llm_backends.kind", f"unknown backend kind {cfg.kind!r}")
        if cfg.kind == "replay" and not cfg.path:
            raise SchemaError("llm_backends.path", "replay backends need a transcript path")
        if cfg.kind != "replay" and not cfg.base_url:
            raise SchemaError("llm_backends.base_url", f"{cfg.kind} backends need a base_url")
        if isinstance(cfg.models, str):
            cfg.models = [cfg.models]
        return cfg


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    workers: int = 2
    queue_bound: int = 64
    store_dir: str = "./refaas-store"
    pipelines_dir: str | None = None  # None: bundled presets
    workdir_root: str | None = None
    keep_workdir: bool = False
    token: str | None = None  # shared-token header value; None disables the check
    llm_backends: list[BackendConfig] = field(default_factory=list)
    # conversion-energy probes by measurement-point label, e.g. {"service-host": "process"}
    conversion_probes: dict[str, str] = field(default_factory=lambda: {"service-host": "process"})
    thermal_zones: list[str] = field(default_factory=list)  # empty: autodiscover
    bench_probe: str = "process"
    bench_cpu: int | None = None
    invocation_timeout: float = 30.0
    # platform build hook
    hook_target: str = "go"
    public_url: str = ""  # prefix for artifact URLs in callbacks
    callback_attempts: int = 5
    callback_backoff: float = 0.5  # first retry delay, doubled per attempt
    callback_backoff_max: float = 8.0
    callback_timeout: float = 10.0

    def validate(self) -> ServiceConfig:
        if self.workers < 1:
            raise SchemaError("workers", "must be >= 1")
        if self.queue_bound < 1:
            raise SchemaError("queue_bound", "must be >= 1")
        if self.callback_attempts < 1:
            raise SchemaError("callback_attempts", "must be >= 1")
        if self.callback_backoff < 0 or self.callback_backoff_max < 0:
            raise SchemaError("callback_backoff", "must be non-negative")
        return self


def config_from_dict(doc: Mapping[str, Any]) -> ServiceConfig:
    known = {f.name for f in fields(ServiceConfig)}
    unknown = set(doc) - known
    if unknown:
        raise SchemaError(sorted(unknown)[0], "unknown configuration key")
    values = dict(doc)
    values["llm_backends"] = [BackendConfig.from_dict(b) for b in doc.get("llm_backends") or []]
    return ServiceConfig(**values).validate()


def _parse_probe_list(text: str) -> dict[str, str]:
    """``label=spec,label=spec`` as used by REFAAS_CONVERSION_PROBES."""
    out = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        label, sep, spec = item.partition("=")
        if not sep:
            raise SchemaError("REFAAS_CONVERSION_PROBES", f"expected label=spec, got {item!r}")
        out[label.strip()] = spec.strip()
    return out


def load_config(path: str | Path | None = None, environ: Mapping[str, str] | None = None) -> ServiceConfig:
    env = os.environ if environ is None else environ
    doc: dict[str, Any] = {}
    if path is not None:
        loaded = yaml.safe_load(Path(path).read_text("utf-8"))
        if loaded is not None and not isinstance(loaded, dict):
            raise SchemaError("config", "top level must be a mapping")
        doc = dict(loaded or {})
        # relative paths in the file are relative to the file
        base = Path(path).resolve().parent
        for key in ("store_dir", "pipelines_dir", "workdir_root"):
            if doc.get(key):
                doc[key] = str(base / doc[key])
        for b in doc.get("llm_backends") or []:
            if b.get("path"):
                b["path"] = str(base / b["path"])
    for var, (key, parse) in _ENV_SCALARS.items():
        if var in env:
            try:
                doc[key] = parse(env[var])
            except ValueError as exc:
                raise SchemaError(var, str(exc)) from exc
    if "REFAAS_CONVERSION_PROBES" in env:
        doc["conversion_probes"] = _parse_probe_list(env["REFAAS_CONVERSION_PROBES"])
    if "REFAAS_LLM_BACKENDS" in env:
        try:
            doc["llm_backends"] = json.loads(env["REFAAS_LLM_BACKENDS"])
        except ValueError as exc:
            raise SchemaError("REFAAS_LLM_BACKENDS", f"not valid JSON: {exc}") from exc
    return config_from_dict(doc)
