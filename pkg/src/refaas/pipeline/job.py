from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from refaas.energy.metrics import AmortizationReport, ConversionMetrics, FunctionMetrics
from refaas.llm.backends import LlmExchange
from refaas.model import DeploymentPackage, JobSpec


class JobState(str, Enum):
    QUEUED = "queued"
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"

    @property
    def terminal(self) -> bool:
        return self in (JobState.SUCCEEDED, JobState.FAILED)


class Verdict(str, Enum):
    TRANSLATED = "translated"
    ORIGINAL_KEPT = "original-kept"


@dataclass(frozen=True)
class StageOutcome:
    stage: str
    kind: str
    attempt: int
    passed: bool
    detail: str = ""
    artifacts: dict[str, bytes] = field(default_factory=dict)
    llm_exchange: LlmExchange | None = None
    duration: float = 0.0

    @property
    def result(self) -> str:
        return "pass" if self.passed else "fail"

    def to_json(self, with_artifacts: bool = False) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "stage": self.stage,
            "kind": self.kind,
            "attempt": self.attempt,
            "result": self.result,
            "detail": self.detail,
            "duration": self.duration,
            "artifacts": sorted(self.artifacts),
        }
        if self.llm_exchange is not None:
            ex = self.llm_exchange
            doc["llm"] = {
                "backend": ex.backend,
                "model": ex.request.model,
                "prompt_tokens": ex.prompt_tokens,
                "completion_tokens": ex.completion_tokens,
                "wall_time": ex.wall_time,
            }
        if with_artifacts:
            doc["artifact_text"] = {k: v.decode("utf-8", "replace") for k, v in self.artifacts.items()}
        return doc


@dataclass
class TranslationJob:
    id: str
    spec: JobSpec
    state: JobState = JobState.QUEUED
    trace: list[StageOutcome] = field(default_factory=list)
    verdict: Verdict | None = None
    output_package: DeploymentPackage | None = None
    metrics: ConversionMetrics = field(default_factory=ConversionMetrics)
    function_metrics: FunctionMetrics | None = None
    amortization: AmortizationReport | None = None
    exchanges: list[LlmExchange] = field(default_factory=list)
    reason: str = ""
    workdir: str | None = None
    created: float = field(default_factory=time.time)
    started: float | None = None
    finished: float | None = None

    @classmethod
    def new(cls, spec: JobSpec, id: str | None = None) -> TranslationJob:
        return cls(id=id or uuid.uuid4().hex, spec=spec)

    @property
    def terminal(self) -> bool:
        return self.state.terminal

    def attempts(self, stage: str) -> list[int]:
        return [o.attempt for o in self.trace if o.stage == stage]

    def summary(self) -> dict[str, Any]:
        return {
            "job_id": self.id,
            "state": self.state.value,
            "verdict": self.verdict.value if self.verdict else None,
            "reason": self.reason,
            "pipeline": self.spec.pipeline,
            "source_language": self.spec.source_package.language,
            "target_language": self.spec.target_language,
            "trace": [o.to_json() for o in self.trace],
            "conversion": self.metrics.to_json(),
            "function": self.function_metrics.to_json() if self.function_metrics else None,
            "amortization": self.amortization.to_json() if self.amortization else None,
            "created": self.created,
            "started": self.started,
            "finished": self.finished,
        }

    def metrics_document(self) -> dict[str, Any]:
        return {
            "job_id": self.id,
            "pipeline": self.spec.pipeline,
            "verdict": self.verdict.value if self.verdict else None,
            "finished_ns": int((self.finished or time.time()) * 1e9),
            "conversion": self.metrics.to_json(),
            "function": self.function_metrics.to_json() if self.function_metrics else None,
            "amortization": self.amortization.to_json() if self.amortization else None,
        }
