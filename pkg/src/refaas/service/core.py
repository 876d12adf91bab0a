"""Job lifecycle behind the HTTP layer: submit, run, persist, notify."""

from __future__ import annotations

import base64
import binascii
import logging
import os
import threading
import time
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import httpx

from refaas import languages
from refaas.energy.export import MetricsSink
from refaas.energy.probes import EnergyProbe, build_probe
from refaas.energy.thermal import TemperatureSensor, ThermalZoneSensor
from refaas.errors import JobNotTerminal, ProbeUnavailable, RefaasError, SchemaError
from refaas.llm.backends import HttpBackend, ReplayBackend
from refaas.llm.gateway import LlmGateway
from refaas.model import JobSpec, parse_package, parse_test_archive, serialize_package
from refaas.pipeline.engine import Executor, Services, run_pipeline
from refaas.pipeline.executors import default_executors, probe_benchmarker
from refaas.pipeline.job import JobState, TranslationJob, Verdict
from refaas.pipeline.spec import PipelineSpec, load_presets
from refaas.runner.invoke import Limits
from refaas.service.config import ServiceConfig
from refaas.service.queue import JobQueue, JobQueueEntry, WorkerPool
from refaas.service.store import ArtifactKind, ArtifactStore

log = logging.getLogger(__name__)

_OPTION_KEYS = {"target_language", "pipeline", "benchmark_invocations", "benchmark_repetitions", "model", "priority"}


def build_gateway(config: ServiceConfig) -> LlmGateway:
    gateway = LlmGateway()
    for b in config.llm_backends:
        if b.kind == "replay":
            backend = ReplayBackend.from_file(b.path)
        else:
            key = os.environ.get(b.api_key_env) if b.api_key_env else None
            backend = HttpBackend(b.base_url, profile=b.kind, api_key=key, timeout=b.timeout)
        gateway.add_backend(backend, b.models, permits=b.permits)
    return gateway


def _parse_options(raw: Mapping[str, Any]) -> dict[str, Any]:
    unknown = set(raw) - _OPTION_KEYS
    if unknown:
        raise SchemaError(f"options.{sorted(unknown)[0]}", "unknown option")
    opts = {"target_language": "go", "pipeline": "cot", "priority": 0, **raw}
    for key in ("benchmark_invocations", "benchmark_repetitions", "priority"):
        if key in opts and (isinstance(opts[key], bool) or not isinstance(opts[key], int)):
            raise SchemaError(f"options.{key}", "must be an integer")
    return opts


@dataclass
class CallbackResult:
    delivered: bool
    attempts: int
    error: str | None = None


class CallbackSender:
    """POSTs JSON to a platform callback URL with bounded exponential backoff."""

    def __init__(
        self,
        attempts: int,
        backoff: float,
        backoff_max: float,
        timeout: float,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.attempts = attempts
        self.backoff = backoff
        self.backoff_max = backoff_max
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self._sleep = sleep

    def delays(self) -> list[float]:
        return [min(self.backoff * 2**i, self.backoff_max) for i in range(self.attempts - 1)]

    def send(self, url: str, payload: dict[str, Any]) -> CallbackResult:
        error = None
        delays = self.delays()
        for attempt in range(1, self.attempts + 1):
            try:
                resp = self._client.post(url, json=payload)
                if resp.status_code < 300:
                    return CallbackResult(True, attempt)
                error = f"HTTP {resp.status_code}"
            except httpx.HTTPError as exc:
                error = f"{type(exc).__name__}: {exc}"
            log.warning("callback to %s failed (attempt %d/%d): %s", url, attempt, self.attempts, error)
            if attempt < self.attempts:
                self._sleep(delays[attempt - 1])
        return CallbackResult(False, self.attempts, error)

    def close(self) -> None:
        self._client.close()


class RefaasService:
    def __init__(
        self,
        config: ServiceConfig,
        gateway: LlmGateway | None = None,
        executors: Mapping[str, Executor] | None = None,
        probes: Callable[[], dict[str, EnergyProbe]] | None = None,
        sensors: list[TemperatureSensor] | None = None,
        callback_transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        start: bool = True,
    ):
        self.config = config
        self.store = ArtifactStore(config.store_dir)
        recovered = self.store.recover()
        if recovered:
            log.warning("marked %d interrupted job(s) failed", len(recovered))
        self.pipelines: dict[str, PipelineSpec] = load_presets(config.pipelines_dir)
        self.gateway = gateway or build_gateway(config)
        self.executors = dict(executors) if executors is not None else default_executors(
            self.gateway, benchmarker=probe_benchmarker(config.bench_probe, config.bench_cpu)
        )
        self._probe_factory = probes or self._default_probes
        if sensors is None:
            sensors = [ThermalZoneSensor(z) for z in config.thermal_zones] or ThermalZoneSensor.discover()
        self.sensors = sensors
        self.metrics = MetricsSink()
        for job_id in self.store.job_ids():
            doc = self.store.record(job_id).get("metrics")
            if doc:
                self.metrics.append(doc)
        self.callbacks = CallbackSender(
            config.callback_attempts, config.callback_backoff, config.callback_backoff_max,
            config.callback_timeout, callback_transport, sleep,
        )
        self.queue = JobQueue(config.queue_bound)
        self.pool = WorkerPool(config.workers, self.queue, self._run_entry)
        self._jobs: dict[str, TranslationJob] = {}
        self._lock = threading.Lock()
        self._hook_threads: list[threading.Thread] = []
        if start:
            self.pool.start()

    def _default_probes(self) -> dict[str, EnergyProbe]:
        out = {}
        for label, spec in self.config.conversion_probes.items():
            try:
                out[label] = build_probe(spec)
            except (ProbeUnavailable, ValueError) as exc:
                log.warning("conversion probe %s (%s) unavailable: %s", label, spec, exc)
        return out

    # --- jobs -------------------------------------------------------------

    def submit(
        self,
        package: bytes,
        tests: bytes,
        options: Mapping[str, Any] | None = None,
        hook: dict[str, Any] | None = None,
    ) -> str:
        """Validate inputs and queue a job. Raises RefaasError subclasses or QueueFull."""
        opts = _parse_options(options or {})
        pkg = parse_package(package)
        suite = parse_test_archive(tests)
        if opts["pipeline"] not in self.pipelines:
            raise SchemaError("options.pipeline", f"unknown pipeline {opts['pipeline']!r}")
        try:
            spec = JobSpec(
                source_package=pkg,
                target_language=languages.language_id(opts["target_language"]),
                suite=suite,
                pipeline=opts["pipeline"],
                benchmark_invocations=opts.get("benchmark_invocations", 1000),
                benchmark_repetitions=opts.get("benchmark_repetitions", 5),
                model=opts.get("model"),
            )
        except ValueError as exc:
            raise SchemaError("options", str(exc)) from exc
        job = TranslationJob.new(spec)
        with self._lock:
            self.store.create_job(job.id, package, tests, dict(opts))
            if hook is not None:
                self.store.update(job.id, hook=hook)
            self._jobs[job.id] = job
            try:
                self.queue.put(job.id, opts["priority"])
            except Exception:
                del self._jobs[job.id]
                self.store.delete(job.id)
                raise
        return job.id

    def _run_entry(self, entry: JobQueueEntry) -> None:
        job = self._jobs[entry.job_id]
        services = Services(
            executors=self.executors,
            pipelines=self.pipelines,
            probes=self._probe_factory(),
            sensors=self.sensors,
            workdir_root=Path(self.config.workdir_root) if self.config.workdir_root else None,
            keep_workdir=self.config.keep_workdir,
            limits=Limits(timeout=self.config.invocation_timeout),
        )
        self.store.update(job.id, summary={**job.summary(), "state": "running"})
        try:
            run_pipeline(job, services)
        except RefaasError as exc:  # ExecutorMissing: a configuration error
            log.error("job %s could not run: %s", job.id, exc)
            job.state, job.verdict = JobState.FAILED, Verdict.ORIGINAL_KEPT
            job.reason = f"{type(exc).__name__}: {exc}"
            job.output_package = job.spec.source_package
            job.finished = time.time()
        if job.verdict is Verdict.TRANSLATED:
            self.store.put_translated(job.id, serialize_package(job.output_package))
        doc = job.metrics_document()
        self.store.update(job.id, summary=job.summary(), metrics=doc, workdir=job.workdir)
        self.metrics.append(doc)
        with self._lock:
            self._jobs.pop(job.id, None)
        hook = self.store.record(job.id).get("hook")
        if hook:
            self._deliver(job.id, hook, translated=job.verdict is Verdict.TRANSLATED, reason=job.reason)

    def status(self, job_id: str) -> dict[str, Any]:
        with self._lock:
            live = self._jobs.get(job_id)
        rec = self.store.record(job_id)  # raises JobNotFound
        summary = live.summary() if live is not None and not live.terminal else rec["summary"]
        out = dict(summary)
        out["original_digest"] = rec["original"]
        out["translated_digest"] = rec["translated"]
        if rec.get("callback") is not None:
            out["callback"] = rec["callback"]
            if summary.get("state") == "succeeded" and not rec["callback"]["delivered"]:
                out["state_detail"] = "succeeded-with-undelivered-callback"
        return out

    def artifact(self, job_id: str) -> tuple[bytes, str]:
        """Archive bytes and kind for a terminal job."""
        rec = self.store.record(job_id)
        state = rec["summary"].get("state")
        if state not in ("succeeded", "failed"):
            raise JobNotTerminal(f"job {job_id} is {state}")
        if rec["summary"].get("verdict") == Verdict.TRANSLATED.value and rec["translated"]:
            return self.store.artifact(job_id, ArtifactKind.TRANSLATED).archive, "translated"
        return self.store.artifact(job_id, ArtifactKind.ORIGINAL).archive, "original"

    def wait(self, job_id: str, timeout: float = 60.0, poll: float = 0.05) -> dict[str, Any]:
        deadline = time.monotonic() + timeout
        while True:
            st = self.status(job_id)
            if st["state"] in ("succeeded", "failed") and ("callback" in st or not self.store.record(job_id).get("hook")):
                return st
            if time.monotonic() > deadline:
                raise TimeoutError(f"job {job_id} still {st['state']}")
            time.sleep(poll)

    # --- platform build hook ----------------------------------------------

    def platform_hook(self, event: Mapping[str, Any]) -> dict[str, Any]:
        """Handle a simulated platform build event.

        The build proceeds with the original environment right away; the
        rollout decision arrives later through the callback.
        """
        for key in ("function", "environment", "package", "callback_url"):
            if not isinstance(event.get(key), str) or not event[key]:
                raise SchemaError(f"event.{key}", "required string")
        env = event["environment"]
        function, namespace = event["function"], event.get("namespace", "default")
        hook = {"function": function, "namespace": namespace, "environment": env, "callback_url": event["callback_url"]}
        source = next((a for a in (languages.get_adapter(n) for n in languages.registered()) if a.environment == env), None)
        target = self.config.hook_target
        reason = None
        if source is None:
            reason = f"environment {env!r} is not a supported source language"
        elif source.name == target or not languages.is_registered(target):
            reason = f"no translation from {source.name} to {target}"
        elif not event.get("tests"):
            reason = "build event carries no tests"
        if reason is not None:
            self._spawn_callback(None, hook, translated=False, reason=reason)
            return {"action": "keep-original", "environment": env, "job_id": None, "reason": reason}
        try:
            package = base64.b64decode(event["package"], validate=True)
            tests = base64.b64decode(event["tests"], validate=True)
        except (binascii.Error, ValueError) as exc:
            raise SchemaError("event.package", f"not valid base64: {exc}") from exc
        options = {"target_language": target, **(event.get("options") or {})}
        job_id = self.submit(package, tests, options, hook=hook)
        return {"action": "deploy-original", "environment": env, "job_id": job_id}

    def _callback_payload(self, job_id: str | None, hook: Mapping[str, Any], translated: bool, reason: str) -> dict[str, Any]:
        payload = {
            "function": hook["function"],
            "namespace": hook["namespace"],
            "job_id": job_id,
            "action": "switch-environment" if translated else "keep-original",
            "environment": languages.get_adapter(self.config.hook_target).environment if translated else hook["environment"],
            "reason": reason,
        }
        if job_id is not None:
            payload["artifact_url"] = f"{self.config.public_url}/v1/jobs/{job_id}/artifact"
        return payload

    def _deliver(self, job_id: str | None, hook: Mapping[str, Any], translated: bool, reason: str) -> CallbackResult:
        payload = self._callback_payload(job_id, hook, translated, reason)
        result = self.callbacks.send(hook["callback_url"], payload)
        if not result.delivered:
            log.error("callback for %s undelivered after %d attempts: %s", job_id or hook["function"], result.attempts, result.error)
        if job_id is not None:
            self.store.update(
                job_id,
                callback={"delivered": result.delivered, "attempts": result.attempts, "error": result.error, "payload": payload},
            )
        return result

    def _spawn_callback(self, job_id: str | None, hook: Mapping[str, Any], translated: bool, reason: str) -> None:
        t = threading.Thread(target=self._deliver, args=(job_id, hook, translated, reason), daemon=True)
        self._hook_threads.append(t)
        t.start()

    def metrics_text(self) -> str:
        return self.metrics.render()

    def close(self, timeout: float | None = 30.0) -> None:
        self.pool.stop(timeout)
        for t in self._hook_threads:
            t.join(timeout)
        self.callbacks.close()
