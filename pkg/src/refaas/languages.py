"""Language registry backed by declarative adapter profiles.

Each registered language carries exactly one profile, and the profile holds
both halves of the adapter: how to build a package and how to invoke the
resulting artifact. Built-in profiles live in ``refaas/adapters/*.yaml``.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, NewType

import yaml

from refaas.errors import AdapterMissing, SchemaError, UnknownLanguage

LanguageId = NewType("LanguageId", str)


@dataclass(frozen=True)
class BuildStep:
    command: tuple[str, ...]
    when_exists: str | None = None


@dataclass(frozen=True)
class LanguageAdapter:
    name: LanguageId
    environment: str
    extension: str
    default_entrypoint: str
    fence_tags: tuple[str, ...]
    comment_prefixes: tuple[str, ...]
    code_anchor: re.Pattern[str]
    interface: str
    shim_source: str
    shim_name: str
    build_steps: tuple[BuildStep, ...]
    build_timeout: float
    build_env: dict[str, str] = field(default_factory=dict)
    artifact_mode: str = "copy-source"
    scaffold: dict[str, str] = field(default_factory=dict)
    run_command: tuple[str, ...] = ()
    loop_args: tuple[str, ...] = ()
    run_env: dict[str, str] = field(default_factory=dict)


def _require(doc: dict[str, Any], key: str, where: str) -> Any:
    if key not in doc:
        raise SchemaError(f"{where}.{key}", "required")
    return doc[key]


def load_adapter_profile(text: str, shim_dir: Path | None = None, shim_source: str | None = None) -> LanguageAdapter:
    """Parse a YAML adapter profile.

    The shim is read from ``shim_dir`` unless ``shim_source`` is given.
    """
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise SchemaError("profile", "must be a mapping")
    name = _require(doc, "name", "profile")
    build = _require(doc, "build", "profile")
    run = _require(doc, "run", "profile")
    if shim_source is None:
        shim_file = _require(doc, "shim", "profile")
        if shim_dir is None:
            raise SchemaError("profile.shim", "no directory to resolve shim from")
        shim_source = (shim_dir / shim_file).read_text(encoding="utf-8")
    artifact_mode = build.get("artifact", "copy-source")
    if artifact_mode not in ("copy-source", "output"):
        raise SchemaError("build.artifact", f"unknown mode {artifact_mode!r}")
    steps = []
    for i, raw in enumerate(_require(build, "steps", "build")):
        cmd = _require(raw, "command", f"build.steps[{i}]")
        if not cmd:
            raise SchemaError(f"build.steps[{i}].command", "empty")
        steps.append(BuildStep(tuple(str(c) for c in cmd), raw.get("when_exists")))
    return LanguageAdapter(
        name=LanguageId(str(name)),
        environment=str(doc.get("environment", name)),
        extension=str(_require(doc, "extension", "profile")),
        default_entrypoint=str(_require(doc, "default_entrypoint", "profile")),
        fence_tags=tuple(str(t).lower() for t in doc.get("fence_tags", [name])),
        comment_prefixes=tuple(doc.get("comment_prefixes", [])),
        code_anchor=re.compile(_require(doc, "code_anchor", "profile")),
        interface=str(doc.get("interface", "")).strip(),
        shim_source=shim_source,
        shim_name=str(_require(doc, "shim_name", "profile")),
        build_steps=tuple(steps),
        build_timeout=float(build.get("timeout", 300)),
        build_env={k: str(v) for k, v in (build.get("env") or {}).items()},
        artifact_mode=artifact_mode,
        scaffold={k: str(v) for k, v in (doc.get("scaffold") or {}).items()},
        run_command=tuple(str(c) for c in _require(run, "command", "run")),
        loop_args=tuple(str(c) for c in run.get("loop_args", [])),
        run_env={k: str(v) for k, v in (run.get("env") or {}).items()},
    )


_registry: dict[str, LanguageAdapter] = {}
_lock = threading.Lock()


def register(adapter: LanguageAdapter, *, replace: bool = False) -> None:
    with _lock:
        if adapter.name in _registry and not replace:
            raise ValueError(f"language {adapter.name!r} already has an adapter")
        _registry[adapter.name] = adapter


def is_registered(name: str) -> bool:
    return name in _registry


def registered() -> list[str]:
    return sorted(_registry)


def language_id(name: str) -> LanguageId:
    if name not in _registry:
        raise UnknownLanguage(name)
    return LanguageId(name)


def get_adapter(name: str) -> LanguageAdapter:
    try:
        return _registry[name]
    except KeyError:
        raise AdapterMissing(f"no adapter registered for language {name!r}") from None


def _load_builtin() -> None:
    base = resources.files("refaas") / "adapters"
    for entry in sorted(base.iterdir(), key=lambda p: p.name):
        if entry.name.endswith(".yaml"):
            text = entry.read_text(encoding="utf-8")
            shim_name = yaml.safe_load(text)["shim"]
            adapter = load_adapter_profile(text, shim_source=(base / shim_name).read_text(encoding="utf-8"))
            register(adapter)


_load_builtin()
