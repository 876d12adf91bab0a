"""Default stage executors, keyed by stage kind.

Each executor takes the stage spec and the job context and returns a
StageOutcome. Expected failures (bad LLM output, compile errors, failing
tests, a worse benchmark) come back as failed outcomes; the engine converts
anything raised into a failed outcome too.
"""

from __future__ import annotations

import json
import re
from collections.abc import Callable, Mapping, Sequence
from dataclasses import replace
from typing import Any

from refaas import languages
from refaas.bench import BenchmarkConfig, BenchmarkReport, run_benchmark
from refaas.energy.metrics import regression_gate
from refaas.energy.probes import build_probe
from refaas.errors import LlmError
from refaas.llm.backends import LlmExchange, LlmRequest
from refaas.llm.extract import extract_code
from refaas.llm.gateway import LlmGateway
from refaas.llm.templates import PromptTemplate, load_templates, render
from refaas.model import DeploymentPackage, Manifest
from refaas.pipeline.engine import Executor, JobContext
from refaas.pipeline.job import StageOutcome
from refaas.pipeline.spec import StageKind, StageSpec
from refaas.runner.build import Artifact, build
from refaas.runner.suite import run_suite

# (label, artifact, events, config) -> report; label is "original" or "translated"
Benchmarker = Callable[[str, Artifact, Sequence[Any], BenchmarkConfig], BenchmarkReport]

_THINK_RE = re.compile(r"<think>.*?(</think>|$)", re.DOTALL)


def llm_executor(gateway: LlmGateway, templates: Mapping[str, PromptTemplate] | None = None) -> Executor:
    templates = dict(templates) if templates is not None else load_templates()

    def execute(stage: StageSpec, ctx: JobContext) -> StageOutcome:
        template = templates.get(stage.prompt_template or "")
        if template is None:
            return ctx.outcome(False, f"unknown prompt template {stage.prompt_template!r}")
        target = ctx.target
        source = languages.get_adapter(ctx.spec.source_package.language)
        bindings = {
            "source_language": source.name,
            "target_language": target.name,
            "source_code": ctx.source_code,
            "original_code": ctx.source_code,
            "interface": target.interface.strip(),
            "documented_code": ctx.documented_code or ctx.source_code,
            "current_code": ctx.current_code or "",
            "error_output": ctx.last_error,
        }
        prompt = render(template, bindings)
        req = LlmRequest(
            model=stage.model or ctx.pipeline.default_model,
            prompt=prompt,
            temperature=ctx.pipeline.default_temperature if stage.temperature is None else stage.temperature,
            max_output_tokens=ctx.pipeline.max_output_tokens,
            template_id=template.id,
            attempt=ctx.attempt,
        )
        exchange: LlmExchange | None = None
        try:
            exchange = gateway.complete(req)
            ctx.record_exchange(exchange)
            if template.produces == "text":
                text = _THINK_RE.sub("", exchange.response_text).strip()
                if not text:
                    return ctx.outcome(False, "empty response", exchange=exchange)
                ctx.documented_code = text
                return ctx.outcome(True, f"{len(text)} chars of documentation", {"documented_source": text}, exchange)
            code = extract_code(exchange.response_text, target.name)
        except LlmError as exc:
            return ctx.outcome(False, f"{type(exc).__name__}: {exc}", exchange=exchange)
        if code == ctx.current_code:
            return ctx.outcome(False, "response repeats the current candidate unchanged", exchange=exchange)
        ctx.current_code = code
        return ctx.outcome(True, f"candidate with {code.count(chr(10)) + 1} lines", {"candidate_source": code}, exchange)

    return execute


def candidate_package(ctx: JobContext) -> DeploymentPackage:
    target = ctx.target
    assert ctx.current_code is not None
    return DeploymentPackage(
        {target.default_entrypoint: ctx.current_code.encode("utf-8")},
        Manifest(target.name, target.default_entrypoint),
    )


def build_executor(stage: StageSpec, ctx: JobContext) -> StageOutcome:
    if ctx.current_code is None:
        return ctx.outcome(False, "no candidate code to build")
    pkg = candidate_package(ctx)
    ctx.builds += 1
    result = build(pkg, ctx.workdir / f"build-{ctx.builds:02d}")
    if not result.ok:
        ctx.last_error = result.stderr
        ctx.candidate_artifact = None
        return ctx.outcome(False, _first_line(result.stderr), {"build_log": result.stderr})
    ctx.candidate_artifact = result.artifact
    ctx.artifact_code = ctx.current_code
    ctx.candidate_package = pkg
    ctx.buildable = True
    return ctx.outcome(True, f"built in {result.duration:.2f}s")


def test_executor(stage: StageSpec, ctx: JobContext) -> StageOutcome:
    if ctx.candidate_artifact is None or ctx.artifact_code != ctx.current_code:
        return ctx.outcome(False, "current candidate has not been built")
    summary = run_suite(ctx.candidate_artifact, ctx.spec.suite, ctx.pipeline.tolerance, ctx.limits)
    ctx.last_suite = summary
    report = json.dumps(summary.to_json(), indent=2)
    if summary.validation:
        return ctx.outcome(True, f"{summary.tests_passed}/{summary.tests_total} cases pass", {"validation": report})
    ctx.last_error = summary.failure_report()
    return ctx.outcome(
        False, f"{summary.tests_passed}/{summary.tests_total} cases pass", {"validation": report}
    )


test_executor.__test__ = False  # type: ignore[attr-defined]


def precheck_executor(stage: StageSpec, ctx: JobContext) -> StageOutcome:
    """Build the original and require it to pass its own suite."""
    result = build(ctx.spec.source_package, ctx.workdir / "original")
    if not result.ok:
        return ctx.outcome(False, "original does not build: " + _first_line(result.stderr), {"build_log": result.stderr})
    ctx.original_artifact = result.artifact
    summary = run_suite(result.artifact, ctx.spec.suite, ctx.pipeline.tolerance, ctx.limits)
    ctx.original_suite = summary
    if not summary.validation:
        return ctx.outcome(
            False,
            f"original passes {summary.tests_passed}/{summary.tests_total} cases",
            {"validation": summary.failure_report()},
        )
    return ctx.outcome(True, f"original passes {summary.tests_total} cases")


def probe_benchmarker(probe_spec: str = "process", cpu: int | None = None) -> Benchmarker:
    def bench(label: str, artifact: Artifact, events: Sequence[Any], cfg: BenchmarkConfig) -> BenchmarkReport:
        probe = build_probe(probe_spec)
        return run_benchmark(artifact, events, replace(cfg, probe=probe_spec, cpu=cpu), probe)

    return bench


def regression_executor(benchmarker: Benchmarker | None = None) -> Executor:
    bench = benchmarker or probe_benchmarker()

    def execute(stage: StageSpec, ctx: JobContext) -> StageOutcome:
        if ctx.candidate_artifact is None:
            return ctx.outcome(False, "no built candidate to benchmark")
        if ctx.original_artifact is None:
            result = build(ctx.spec.source_package, ctx.workdir / "original")
            if not result.ok:
                return ctx.outcome(False, "original does not build: " + _first_line(result.stderr))
            ctx.original_artifact = result.artifact
        cfg = BenchmarkConfig(
            invocations=ctx.spec.benchmark_invocations,
            repetitions=ctx.spec.benchmark_repetitions,
            warmup_invocations=ctx.pipeline.regression.warmup_invocations,
            timeout=ctx.limits.timeout,
        )
        events = ctx.spec.suite.events
        original = bench("original", ctx.original_artifact, events, cfg)
        translated = bench("translated", ctx.candidate_artifact, events, cfg)
        ctx.benchmarks = {"original": original, "translated": translated}
        gate = regression_gate(original, translated, ctx.pipeline.regression.margin)
        artifacts = {
            "benchmark_original": json.dumps(original.to_json()),
            "benchmark_translated": json.dumps(translated.to_json()),
        }
        return ctx.outcome(gate.passed, gate.detail, artifacts)

    return execute


def default_executors(
    gateway: LlmGateway,
    templates: Mapping[str, PromptTemplate] | None = None,
    benchmarker: Benchmarker | None = None,
) -> dict[str, Executor]:
    return {
        StageKind.LLM.value: llm_executor(gateway, templates),
        StageKind.BUILD.value: build_executor,
        StageKind.TEST.value: test_executor,
        StageKind.GATE.value: precheck_executor,
        StageKind.BENCHMARK.value: regression_executor(benchmarker),
    }


def _first_line(text: str) -> str:
    for line in text.splitlines():
        if line.strip() and not line.startswith("#"):
            return line.strip()[:300]
    return text.strip()[:300]

