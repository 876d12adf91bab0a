"""Command line: ``refaas serve``, ``refaas translate``, ``refaas bench run``."""

from __future__ import annotations

import json
import logging
import sys
import tempfile
from pathlib import Path

import click

from refaas import __version__, languages
from refaas.bench import BenchmarkConfig, run_benchmark, savings_report
from refaas.energy.probes import build_probe
from refaas.errors import RefaasError
from refaas.llm.backends import HttpBackend, ReplayBackend
from refaas.llm.gateway import LlmGateway
from refaas.model import JobSpec, parse_test_archive, parse_test_suite, read_package, serialize_package
from refaas.pipeline.engine import Services, run_pipeline
from refaas.pipeline.executors import default_executors, probe_benchmarker
from refaas.pipeline.job import TranslationJob, Verdict
from refaas.pipeline.spec import load_presets
from refaas.runner.build import build


def _load_suite(path: str):
    p = Path(path)
    return parse_test_suite(p) if p.is_dir() else parse_test_archive(p.read_bytes())


def _fail(exc: Exception) -> None:
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    sys.exit(2)


@click.group()
@click.version_option(__version__, prog_name="refaas")
@click.option("-v", "--verbose", count=True, help="Repeat for more log output.")
def main(verbose: int) -> None:
    """Translate serverless functions into a more energy-efficient language."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Service YAML file.")
@click.option("--host", default=None, help="Override the configured bind address.")
@click.option("--port", type=int, default=None, help="Override the configured port.")
def serve(config_path: str | None, host: str | None, port: int | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from refaas.service import RefaasService, create_app, load_config

    try:
        config = load_config(config_path)
    except RefaasError as exc:
        _fail(exc)
    service = RefaasService(config)
    try:
        uvicorn.run(create_app(service), host=host or config.host, port=port or config.port)
    finally:
        service.close()


@main.command()
@click.argument("package", type=click.Path(exists=True))
@click.option("--tests", "tests_path", required=True, type=click.Path(exists=True), help="Test directory or zip.")
@click.option("--pipeline", default="cot", show_default=True, help="Preset name.")
@click.option("--pipelines-dir", type=click.Path(exists=True, file_okay=False), help="Load presets from here.")
@click.option("--target", default="go", show_default=True, help="Target language.")
@click.option("--replay", type=click.Path(exists=True, dir_okay=False), help="Answer LLM calls from this transcript.")
@click.option("--backend-url", help="Completion endpoint base URL.")
@click.option("--profile", type=click.Choice(["openai", "ollama"]), default="ollama", show_default=True)
@click.option("--model", help="Override the pipeline's model id.")
@click.option("--invocations", type=int, default=1000, show_default=True, help="Regression-gate benchmark size.")
@click.option("--repetitions", type=int, default=5, show_default=True)
@click.option("--probe", default="process", show_default=True, help="Benchmark energy probe.")
@click.option("--conversion-probe", "conversion_probes", multiple=True, default=["service-host=process"],
              show_default=True, help="label=probe pairs measuring the conversion itself.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write the output package zip here.")
@click.option("--report", type=click.Path(dir_okay=False), help="Write the job summary JSON here.")
@click.option("--keep-workdir", is_flag=True, help="Keep build sandboxes for inspection.")
def translate(
    package: str, tests_path: str, pipeline: str, pipelines_dir: str | None, target: str, replay: str | None,
    backend_url: str | None, profile: str, model: str | None, invocations: int, repetitions: int, probe: str,
    conversion_probes: tuple[str, ...], out: str | None, report: str | None, keep_workdir: bool,
) -> None:
    """Translate PACKAGE locally, without a server.

    Exits 0 when the translation was accepted and 1 when the original was kept.
    """
    try:
        gateway = LlmGateway()
        if replay:
            gateway.add_backend(ReplayBackend.from_file(replay), "*")
        elif backend_url:
            gateway.add_backend(HttpBackend(backend_url, profile=profile), "*")
        else:
            raise click.UsageError("give --replay or --backend-url")
        spec = JobSpec(
            source_package=read_package(package),
            target_language=languages.language_id(target),
            suite=_load_suite(tests_path),
            pipeline=pipeline,
            benchmark_invocations=invocations,
            benchmark_repetitions=repetitions,
            model=model,
        )
        presets = load_presets(pipelines_dir)
        if pipeline not in presets:
            raise click.UsageError(f"unknown pipeline {pipeline!r}; have {', '.join(sorted(presets))}")
        probes = {}
        for item in conversion_probes:
            label, _, probe_spec = item.partition("=")
            probes[label] = build_probe(probe_spec or label)
        services = Services(
            executors=default_executors(gateway, benchmarker=probe_benchmarker(probe)),
            pipelines=presets,
            probes=probes,
            keep_workdir=keep_workdir,
        )
        job = run_pipeline(TranslationJob.new(spec), services)
    except (RefaasError, ValueError) as exc:
        _fail(exc)
    for o in job.trace:
        click.echo(f"{o.stage:<16} #{o.attempt} {o.result:<4} {o.detail[:100]}", err=True)
    click.echo(f"verdict: {job.verdict.value} ({job.reason})", err=True)
    summary = job.summary()
    if out:
        Path(out).write_bytes(serialize_package(job.output_package))
    if report:
        Path(report).write_text(json.dumps(summary, indent=2))
    else:
        click.echo(json.dumps(summary, indent=2))
    sys.exit(0 if job.verdict is Verdict.TRANSLATED else 1)


@main.command("pipelines")
@click.option("--pipelines-dir", type=click.Path(exists=True, file_okay=False))
def list_pipelines(pipelines_dir: str | None) -> None:
    """List pipeline presets and their stages."""
    for name, spec in sorted(load_presets(pipelines_dir).items()):
        stages = ", ".join(s.name for s in spec.stages)
        click.echo(f"{name}: budget {spec.global_attempt_budget}, temperature {spec.default_temperature}; {stages}")


@click.group("bench")
def bench() -> None:
    """Micro-benchmark built functions."""


@bench.command("run")
@click.option("--original", required=True, type=click.Path(exists=True), help="Original package (dir or zip).")
@click.option("--translated", required=True, type=click.Path(exists=True), help="Translated package (dir or zip).")
@click.option("--tests", "tests_path", required=True, type=click.Path(exists=True), help="Events come from this suite.")
@click.option("--invocations", type=int, default=1000, show_default=True)
@click.option("--repetitions", type=int, default=5, show_default=True)
@click.option("--warmup", type=int, default=50, show_default=True, help="Unmeasured invocations per repetition.")
@click.option("--probe", default="process", show_default=True, help="process[:W], rapl[:zone], synthetic:W, ...")
@click.option("--cpu", type=int, default=None, help="Pin workers to this CPU.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write the JSON report here (default stdout).")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Also write per-repetition CSV.")
def bench_run(
    original: str, translated: str, tests_path: str, invocations: int, repetitions: int, warmup: int,
    probe: str, cpu: int | None, out: str | None, csv_path: str | None,
) -> None:
    """Benchmark an original and a translated package on the same events."""
    try:
        events = _load_suite(tests_path).events
        cfg = BenchmarkConfig(invocations, repetitions, warmup, probe, cpu)
        reports = {}
        with tempfile.TemporaryDirectory(prefix="refaas-bench-") as tmp:
            for label, path in (("original", original), ("translated", translated)):
                result = build(read_package(path), Path(tmp) / label)
                if not result.ok:
                    raise RefaasError(f"{label} package does not build:\n{result.stderr}")
                reports[label] = run_benchmark(result.artifact, events, cfg, build_probe(probe))
    except (RefaasError, ValueError) as exc:
        _fail(exc)
    row = savings_report(reports["original"], reports["translated"])
    doc = {
        "original": reports["original"].to_json(),
        "translated": reports["translated"].to_json(),
        "savings": row.to_json(),
    }
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text)
    if csv_path:
        csv_text = reports["original"].to_csv("original")
        csv_text += "".join(reports["translated"].to_csv("translated").splitlines(keepends=True)[1:])
        Path(csv_path).write_text(csv_text)
    pct = "n/a" if row.reduction_percent is None else f"{row.reduction_percent:.1f}%"
    click.echo(
        f"original {row.original_joules_per_invocation:.6g} J/inv, translated "
        f"{row.translated_joules_per_invocation:.6g} J/inv, saving {pct}",
        err=True,
    )


main.add_command(bench)


def bench_main() -> None:
    bench()
