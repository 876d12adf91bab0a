"""Runs a pipeline spec against one job.

Control flow: non-recovery stages run in order. A failing stage either
retries (attempts left), enters its recovery stage, or ends the job. A
stage that passes continues at its ``resume`` stage if it names one; a
stage entered through recovery otherwise returns to the stage that
triggered it. Every execution counts against the stage's
``max_attempts`` and the global budget, so the loop always terminates.
"""

from __future__ import annotations

import logging
import shutil
import statistics
import tempfile
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from refaas import languages
from refaas.energy.metrics import JOULES_PER_WH, FunctionMetrics, amortization, integrate_temperature
from refaas.energy.probes import EnergyProbe, ProbeMarker, sample_window
from refaas.energy.thermal import TemperatureRecorder, TemperatureSensor
from refaas.errors import ExecutorMissing, RefaasError
from refaas.llm.backends import LlmExchange
from refaas.model import DeploymentPackage
from refaas.pipeline.job import JobState, StageOutcome, TranslationJob, Verdict
from refaas.pipeline.spec import FailAction, OnFail, PipelineSpec, StageKind, StageSpec, load_presets
from refaas.runner.build import Artifact
from refaas.runner.invoke import Limits
from refaas.runner.suite import ValidationSummary

log = logging.getLogger(__name__)

PRECHECK = StageSpec("precheck", StageKind.GATE, 1, OnFail(FailAction.ABORT))
REGRESSION = StageSpec("regression-gate", StageKind.BENCHMARK, 1, OnFail(FailAction.ACCEPT_ORIGINAL))


@dataclass
class JobContext:
    """Mutable working state handed to stage executors."""

    job: TranslationJob
    pipeline: PipelineSpec
    workdir: Path
    limits: Limits = field(default_factory=Limits)
    stage: StageSpec | None = None
    attempt: int = 0
    source_code: str = ""
    documented_code: str | None = None
    current_code: str | None = None
    last_error: str = ""
    candidate_package: DeploymentPackage | None = None
    candidate_artifact: Artifact | None = None
    artifact_code: str | None = None
    buildable: bool = False
    builds: int = 0
    original_artifact: Artifact | None = None
    original_suite: ValidationSummary | None = None
    last_suite: ValidationSummary | None = None
    benchmarks: dict[str, Any] = field(default_factory=dict)

    @property
    def spec(self):
        return self.job.spec

    @property
    def target(self) -> languages.LanguageAdapter:
        return languages.get_adapter(self.spec.target_language)

    def outcome(
        self,
        passed: bool,
        detail: str = "",
        artifacts: Mapping[str, bytes | str] | None = None,
        exchange: LlmExchange | None = None,
    ) -> StageOutcome:
        arts = {k: v.encode() if isinstance(v, str) else bytes(v) for k, v in (artifacts or {}).items()}
        assert self.stage is not None
        return StageOutcome(self.stage.name, self.stage.kind.value, self.attempt, passed, detail, arts, exchange)

    def record_exchange(self, exchange: LlmExchange) -> None:
        self.job.exchanges.append(exchange)
        self.job.metrics.tokens += exchange.prompt_tokens + exchange.completion_tokens


Executor = Callable[[StageSpec, JobContext], StageOutcome]


@dataclass
class Services:
    executors: dict[str, Executor]
    pipelines: dict[str, PipelineSpec] | None = None
    probes: dict[str, EnergyProbe] = field(default_factory=dict)  # conversion-energy probes by label
    sensors: list[TemperatureSensor] = field(default_factory=list)
    temperature_baseline: float | None = None  # default: first sample per sensor
    workdir_root: Path | None = None
    keep_workdir: bool = False
    limits: Limits = field(default_factory=Limits)

    def resolve_pipeline(self, name: str) -> PipelineSpec:
        if self.pipelines is None:
            self.pipelines = load_presets()
        return self.pipelines[name]


class _Finish(Exception):
    def __init__(self, verdict: Verdict, state: JobState, reason: str):
        self.verdict = verdict
        self.state = state
        self.reason = reason


def _check_executors(pipeline: PipelineSpec, executors: Mapping[str, Executor]) -> None:
    kinds = {s.kind.value for s in pipeline.stages}
    if pipeline.precheck:
        kinds.add(PRECHECK.kind.value)
    if pipeline.regression.enabled:
        kinds.add(REGRESSION.kind.value)
    for kind in sorted(kinds):
        if kind not in executors:
            raise ExecutorMissing(kind)


def run_pipeline(job: TranslationJob, services: Services, pipeline: PipelineSpec | None = None) -> TranslationJob:
    """Drive ``job`` to a terminal state.

    Raises only ExecutorMissing (before any work starts). Every other
    failure, including budget exhaustion and executor exceptions, ends as
    an ``original-kept`` verdict.
    """
    if job.state is not JobState.QUEUED:
        raise ValueError(f"job {job.id} is {job.state.value}, expected queued")
    if pipeline is None:
        pipeline = services.resolve_pipeline(job.spec.pipeline)
    if job.spec.model:
        pipeline = pipeline.with_model(job.spec.model)
    _check_executors(pipeline, services.executors)

    job.state = JobState.RUNNING
    job.started = time.time()
    t_start = time.monotonic()
    workdir = Path(tempfile.mkdtemp(prefix=f"refaas-{job.id[:12]}-", dir=services.workdir_root))
    job.workdir = str(workdir)
    ctx = JobContext(job, pipeline, workdir, limits=services.limits)
    ctx.source_code = job.spec.source_package.source_text()

    recorder = TemperatureRecorder(services.sensors)
    recorder.sample()
    starts: dict[str, ProbeMarker] = {}
    for label, probe in services.probes.items():
        try:
            starts[label] = probe.mark()
        except RefaasError as exc:
            log.warning("conversion probe %s unavailable: %s", label, exc)

    def execute(stage: StageSpec) -> StageOutcome:
        if len(job.trace) >= pipeline.global_attempt_budget:
            raise _Finish(Verdict.ORIGINAL_KEPT, JobState.FAILED, "global attempt budget exhausted")
        ctx.stage = stage
        ctx.attempt = len(job.attempts(stage.name)) + 1
        began = time.monotonic()
        try:
            outcome = services.executors[stage.kind.value](stage, ctx)
        except Exception as exc:  # executor bugs must not escape the engine
            log.exception("stage %s attempt %d raised", stage.name, ctx.attempt)
            outcome = ctx.outcome(False, f"{type(exc).__name__}: {exc}")
        outcome = StageOutcome(
            stage.name, stage.kind.value, ctx.attempt, outcome.passed, outcome.detail,
            outcome.artifacts, outcome.llm_exchange, time.monotonic() - began,
        )
        job.trace.append(outcome)
        recorder.sample()
        return outcome

    try:
        if pipeline.precheck:
            pre = execute(PRECHECK)
            if not pre.passed:
                raise _Finish(Verdict.ORIGINAL_KEPT, JobState.FAILED, f"precheck failed: {pre.detail}")
        _run_stages(pipeline, ctx, execute)
        if pipeline.regression.enabled:
            gate = execute(REGRESSION)
            if not gate.passed:
                raise _Finish(Verdict.ORIGINAL_KEPT, JobState.SUCCEEDED, f"regression gate: {gate.detail}")
        if ctx.candidate_package is None:
            raise _Finish(Verdict.ORIGINAL_KEPT, JobState.FAILED, "pipeline produced no candidate")
        finish = _Finish(Verdict.TRANSLATED, JobState.SUCCEEDED, "all gateways passed")
    except _Finish as f:
        finish = f

    job.verdict = finish.verdict
    job.reason = finish.reason
    job.output_package = ctx.candidate_package if finish.verdict is Verdict.TRANSLATED else job.spec.source_package

    recorder.sample()
    _collect_conversion(job, services, starts, recorder, time.monotonic() - t_start)
    _collect_function_metrics(ctx)
    job.finished = time.time()
    job.state = finish.state
    if not services.keep_workdir:
        shutil.rmtree(workdir, ignore_errors=True)
    return job


def _run_stages(pipeline: PipelineSpec, ctx: JobContext, execute: Callable[[StageSpec], StageOutcome]) -> None:
    stages = pipeline.stages
    attempts: dict[str, int] = {s.name: 0 for s in stages}
    # (recovery target, stage that triggered it), innermost last
    recovering: list[tuple[int, int]] = []
    last: dict[str, StageOutcome] = {}

    def next_linear(i: int) -> int | None:
        for j in range(i + 1, len(stages)):
            if not stages[j].recovery:
                return j
        return None

    i = next_linear(-1)
    while i is not None:
        stage = stages[i]
        if attempts[stage.name] >= stage.max_attempts:
            raise _Finish(Verdict.ORIGINAL_KEPT, JobState.FAILED, f"stage {stage.name} exhausted {stage.max_attempts} attempt(s)")
        attempts[stage.name] += 1
        outcome = execute(stage)
        last[stage.name] = outcome
        if outcome.passed:
            origin = recovering.pop()[1] if recovering and recovering[-1][0] == i else None
            if stage.resume is not None:
                i = pipeline.index(stage.resume)
            elif origin is not None:
                i = origin
            else:
                i = next_linear(i)
            continue

        exhausted = attempts[stage.name] >= stage.max_attempts
        action = stage.on_fail.action
        if action is FailAction.RECOVER:
            target = pipeline.index(stage.on_fail.target)
            target_left = attempts[stages[target].name] < stages[target].max_attempts
            if exhausted or not target_left:
                raise _Finish(
                    Verdict.ORIGINAL_KEPT, JobState.FAILED,
                    f"stage {stage.name} failed after {attempts[stage.name]} attempt(s): {outcome.detail}",
                )
            recovering.append((target, i))
            i = target
        elif exhausted:
            state = JobState.SUCCEEDED if action is FailAction.ACCEPT_ORIGINAL else JobState.FAILED
            raise _Finish(
                Verdict.ORIGINAL_KEPT, state,
                f"stage {stage.name} failed after {attempts[stage.name]} attempt(s): {outcome.detail}",
            )
        # otherwise retry the same stage

    # A resume target can jump past a stage whose last attempt failed; never translate over it.
    for stage in stages:
        if not stage.recovery and stage.name in last and not last[stage.name].passed:
            raise _Finish(Verdict.ORIGINAL_KEPT, JobState.FAILED, f"stage {stage.name} did not pass")


def _collect_conversion(
    job: TranslationJob,
    services: Services,
    starts: dict[str, ProbeMarker],
    recorder: TemperatureRecorder,
    runtime: float,
) -> None:
    m = job.metrics
    m.runtime = runtime
    total_j = 0.0
    for label, start in starts.items():
        probe = services.probes[label]
        try:
            joules = sample_window(probe, (start, probe.mark()))
        except RefaasError as exc:
            log.warning("conversion probe %s failed: %s", label, exc)
            continue
        m.energy_by_probe[label] = joules / JOULES_PER_WH
        total_j += joules
    m.energy = total_j / JOULES_PER_WH
    total_dh = 0.0
    for sensor_id, samples in recorder.samples.items():
        if len(samples) < 2:
            continue
        baseline = services.temperature_baseline
        if baseline is None:
            baseline = samples[0][1]
        dh = integrate_temperature(samples, baseline)
        m.temperature_by_sensor[sensor_id] = dh
        total_dh += dh
    m.temperature_load = total_dh


def _mean_cold_start(summary: ValidationSummary | None) -> float | None:
    if summary is None:
        return None
    values = [c.record.cold_start for c in summary.per_case if c.record.exit_ok]
    return statistics.fmean(values) if values else None


def _collect_function_metrics(ctx: JobContext) -> None:
    job = ctx.job
    fm = FunctionMetrics(buildable=ctx.buildable)
    if ctx.last_suite is not None:
        fm.validation = ctx.last_suite.validation
        fm.tests_passed = ctx.last_suite.tests_passed
        fm.tests_total = ctx.last_suite.tests_total
    else:
        fm.tests_total = len(job.spec.suite)
    orig = ctx.benchmarks.get("original")
    trans = ctx.benchmarks.get("translated")
    if orig is not None and trans is not None:
        fm.delta_energy = (trans.mean_joules_per_invocation - orig.mean_joules_per_invocation) / JOULES_PER_WH
        per_inv = lambda r: r.aggregate["cpu_seconds"]["mean"] / r.invocations  # noqa: E731
        fm.delta_cpu = per_inv(trans) - per_inv(orig)
        fm.delta_memory = int(trans.aggregate["peak_memory"]["mean"] - orig.aggregate["peak_memory"]["mean"])
        job.amortization = amortization(
            job.metrics.energy_joules, orig.mean_joules_per_invocation - trans.mean_joules_per_invocation
        )
    cs_o = _mean_cold_start(ctx.original_suite)
    cs_t = _mean_cold_start(ctx.last_suite)
    if cs_o is not None and cs_t is not None:
        fm.delta_cold_start = cs_t - cs_o
    job.function_metrics = fm
