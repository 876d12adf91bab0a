"""Declarative pipeline specifications (YAML)."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from refaas.errors import SchemaError, UnboundedRecovery

PRESET_SUFFIX = ".pipeline.yaml"


class StageKind(str, Enum):
    LLM = "llm"
    BUILD = "build"
    TEST = "test"
    GATE = "gate"
    BENCHMARK = "benchmark"


class FailAction(str, Enum):
    RECOVER = "recover"
    ABORT = "abort"
    ACCEPT_ORIGINAL = "accept-original"


@dataclass(frozen=True)
class OnFail:
    action: FailAction
    target: str | None = None  # recovery stage for RECOVER

    def __str__(self) -> str:
        return f"recover:{self.target}" if self.action is FailAction.RECOVER else self.action.value


@dataclass(frozen=True)
class StageSpec:
    name: str
    kind: StageKind
    max_attempts: int = 1
    on_fail: OnFail = OnFail(FailAction.ABORT)
    model: str | None = None
    temperature: float | None = None
    prompt_template: str | None = None
    recovery: bool = False  # only entered through another stage's on_fail
    resume: str | None = None  # where control goes after this stage passes


@dataclass(frozen=True)
class RegressionGateSpec:
    enabled: bool = True
    margin: float = 0.0
    warmup_invocations: int = 50


@dataclass(frozen=True)
class PipelineSpec:
    name: str
    stages: tuple[StageSpec, ...]
    global_attempt_budget: int
    default_model: str = "qwen2.5-coder:32b"
    default_temperature: float = 0.1
    max_output_tokens: int = 4096
    precheck: bool = True
    regression: RegressionGateSpec = field(default_factory=RegressionGateSpec)
    tolerance: float = 1e-9

    def stage(self, name: str) -> StageSpec:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    def index(self, name: str) -> int:
        for i, s in enumerate(self.stages):
            if s.name == name:
                return i
        raise KeyError(name)

    @property
    def gate_executions(self) -> int:
        return int(self.precheck) + int(self.regression.enabled)

    @property
    def max_executions(self) -> int:
        """Upper bound on stage executions: every stage at most max_attempts times."""
        return sum(s.max_attempts for s in self.stages) + self.gate_executions

    def with_model(self, model: str) -> PipelineSpec:
        stages = tuple(replace(s, model=model) if s.kind is StageKind.LLM else s for s in self.stages)
        return replace(self, default_model=model, stages=stages)


def _parse_on_fail(raw: Any, where: str) -> OnFail:
    if raw is None:
        return OnFail(FailAction.ABORT)
    if isinstance(raw, Mapping):
        if set(raw) != {"recover"} or not isinstance(raw["recover"], str):
            raise SchemaError(where, "expected {recover: <stage>}")
        return OnFail(FailAction.RECOVER, raw["recover"])
    if isinstance(raw, str):
        if raw.startswith("recover:"):
            return OnFail(FailAction.RECOVER, raw.split(":", 1)[1].strip())
        try:
            action = FailAction(raw)
        except ValueError:
            raise SchemaError(where, f"unknown action {raw!r}") from None
        if action is FailAction.RECOVER:
            raise SchemaError(where, "recover needs a target stage")
        return OnFail(action)
    raise SchemaError(where, "must be a string or mapping")


def _number(raw: Any, where: str, lo: float, hi: float) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise SchemaError(where, "must be a number")
    if not lo <= raw <= hi:
        raise SchemaError(where, f"must be within [{lo}, {hi}]")
    return float(raw)


def _positive_int(raw: Any, where: str) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int) or raw < 1:
        raise SchemaError(where, "must be a positive integer")
    return raw


def _parse_stage(raw: Any, i: int, defaults: Mapping[str, Any]) -> StageSpec:
    where = f"stages[{i}]"
    if not isinstance(raw, Mapping):
        raise SchemaError(where, "must be a mapping")
    known = {"name", "kind", "max_attempts", "on_fail", "model", "temperature", "prompt_template", "recovery", "resume"}
    unknown = set(raw) - known
    if unknown:
        raise SchemaError(f"{where}.{sorted(unknown)[0]}", "unknown field")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaError(f"{where}.name", "required string")
    try:
        kind = StageKind(raw.get("kind"))
    except ValueError:
        raise SchemaError(f"{where}.kind", f"must be one of {[k.value for k in StageKind]}") from None
    max_attempts = _positive_int(raw.get("max_attempts", defaults.get("max_attempts", 1)), f"{where}.max_attempts")
    temperature = raw.get("temperature")
    if temperature is not None:
        temperature = _number(temperature, f"{where}.temperature", 0.0, 2.0)
    template = raw.get("prompt_template")
    if kind is StageKind.LLM and not template:
        raise SchemaError(f"{where}.prompt_template", "required for llm stages")
    return StageSpec(
        name=name,
        kind=kind,
        max_attempts=max_attempts,
        on_fail=_parse_on_fail(raw.get("on_fail"), f"{where}.on_fail"),
        model=raw.get("model"),
        temperature=temperature,
        prompt_template=template,
        recovery=bool(raw.get("recovery", False)),
        resume=raw.get("resume"),
    )


def pipeline_from_dict(doc: Any) -> PipelineSpec:
    if not isinstance(doc, Mapping):
        raise SchemaError("pipeline", "document must be a mapping")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaError("name", "required string")
    budget = _positive_int(doc.get("global_attempt_budget"), "global_attempt_budget")
    defaults = doc.get("defaults") or {}
    if not isinstance(defaults, Mapping):
        raise SchemaError("defaults", "must be a mapping")
    raw_stages = doc.get("stages")
    if not isinstance(raw_stages, list) or not raw_stages:
        raise SchemaError("stages", "must be a non-empty list")
    stages = tuple(_parse_stage(s, i, defaults) for i, s in enumerate(raw_stages))

    names = [s.name for s in stages]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise SchemaError("stages", f"duplicate stage name {sorted(dupes)[0]!r}")
    for i, s in enumerate(stages):
        if s.on_fail.action is FailAction.RECOVER:
            if s.on_fail.target not in names:
                raise SchemaError(f"stages[{i}].on_fail", f"unknown recovery target {s.on_fail.target!r}")
            if s.on_fail.target == s.name:
                raise UnboundedRecovery(f"stages[{i}].on_fail", "a stage cannot recover into itself")
        if s.resume is not None and s.resume not in names:
            raise SchemaError(f"stages[{i}].resume", f"unknown stage {s.resume!r}")
    if all(s.recovery for s in stages):
        raise SchemaError("stages", "no stage runs outside recovery")

    gates = doc.get("gates") or {}
    reg_raw = gates.get("regression", {})
    if isinstance(reg_raw, bool):
        reg_raw = {"enabled": reg_raw}
    regression = RegressionGateSpec(
        enabled=bool(reg_raw.get("enabled", True)),
        margin=_number(reg_raw.get("margin", 0.0), "gates.regression.margin", 0.0, 10.0),
        warmup_invocations=int(reg_raw.get("warmup_invocations", 50)),
    )
    spec = PipelineSpec(
        name=name,
        stages=stages,
        global_attempt_budget=budget,
        default_model=str(defaults.get("model", PipelineSpec.default_model)),
        default_temperature=_number(defaults.get("temperature", 0.1), "defaults.temperature", 0.0, 2.0),
        max_output_tokens=_positive_int(defaults.get("max_output_tokens", 4096), "defaults.max_output_tokens"),
        precheck=bool(gates.get("precheck", True)),
        regression=regression,
        tolerance=_number(doc.get("tolerance", 1e-9), "tolerance", 0.0, 1.0),
    )
    if spec.max_executions > budget:
        raise UnboundedRecovery(
            "global_attempt_budget",
            f"stages allow up to {spec.max_executions} executions but the budget is {budget}",
        )
    return spec


def load_pipeline_spec(text: str) -> PipelineSpec:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError("document", f"not valid YAML: {exc}") from exc
    return pipeline_from_dict(doc)


def load_presets(directory: str | Path | None = None) -> dict[str, PipelineSpec]:
    """All ``*.pipeline.yaml`` files in ``directory`` (default: bundled presets)."""
    if directory is None:
        base = resources.files("refaas") / "pipelines"
        entries = [(p.name, p.read_text(encoding="utf-8")) for p in base.iterdir() if p.name.endswith(PRESET_SUFFIX)]
    else:
        entries = [(p.name, p.read_text("utf-8")) for p in Path(directory).glob(f"*{PRESET_SUFFIX}")]
    out = {}
    for _, text in sorted(entries):
        spec = load_pipeline_spec(text)
        out[spec.name] = spec
    return out


def load_preset(name: str, directory: str | Path | None = None) -> PipelineSpec:
    presets = load_presets(directory)
    try:
        return presets[name]
    except KeyError:
        raise SchemaError("pipeline", f"no preset named {name!r} (have {sorted(presets)})") from None
