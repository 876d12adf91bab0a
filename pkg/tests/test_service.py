import base64
import json
import threading
import time

import httpx
import pytest
from fastapi.testclient import TestClient

from refaas.energy import SyntheticProbe, probe_lease
from refaas.errors import JobNotFound, JobNotTerminal, QueueFull, SchemaError
from refaas.llm import LlmGateway, ReplayBackend
from refaas.model import parse_package
from refaas.pipeline import default_executors
from refaas.service import (
    ArtifactKind,
    ArtifactStore,
    CallbackSender,
    JobQueue,
    RefaasService,
    ServiceConfig,

    create_app,

    load_config,
)

from refaas.service.store import StoreCorrupt, digest

from conftest import REPLAYS, CallbackServer, corpus_archives, fixed_benchmarker, needs_go

# --- store ----------------------------------------------------------------


def test_store_roundtrip_and_digests(tmp_path):
    store = ArtifactStore(tmp_path)
    store.create_job("j1", b"orig", b"tests", {"pipeline": "cot"})
    with pytest.raises(ValueError):
        store.create_job("j1", b"x", b"y", {})
    rec = store.artifact("j1", ArtifactKind.ORIGINAL)
    assert rec.archive == b"orig" and rec.content_digest == digest(b"orig")
    with pytest.raises(JobNotFound):
        store.artifact("j1", ArtifactKind.TRANSLATED)
    store.put_translated("j1", b"go")
    with pytest.raises(ValueError):
        store.put_translated("j1", b"go again")
    assert ArtifactStore(tmp_path).artifact("j1", ArtifactKind.TRANSLATED).archive == b"go"
    with pytest.raises(JobNotFound):
        store.record("nope")


def test_store_detects_corruption(tmp_path):
    store = ArtifactStore(tmp_path)
    d = store.put_blob(b"payload")
    (tmp_path / "blobs" / d).write_bytes(b"tampered")
    with pytest.raises(StoreCorrupt):
        store.get_blob(d)
    (tmp_path / "index.json").write_text("{not json")
    with pytest.raises(StoreCorrupt):
        ArtifactStore(tmp_path)


def test_store_recover_marks_interrupted_jobs(tmp_path):
    store = ArtifactStore(tmp_path)
    store.create_job("a", b"1", b"2", {})
    store.create_job("b", b"1", b"2", {})
    store.update("b", summary={"state": "succeeded"})
    assert ArtifactStore(tmp_path).recover() == ["a"]
    assert ArtifactStore(tmp_path).record("a")["summary"]["state"] == "failed"


def test_store_leaves_no_temp_files(tmp_path):
    store = ArtifactStore(tmp_path)
    for i in range(5):
        store.create_job(str(i), bytes([i]), b"t", {})
    assert not [p for p in tmp_path.rglob(".*") if p.is_file()]


# --- queue ----------------------------------------------------------------


def test_queue_priority_then_fifo():
    q = JobQueue(10)
    for job, prio in [("a", 0), ("b", 1), ("c", 0), ("d", 1)]:
        q.put(job, prio)
    assert [q.get().job_id for _ in range(4)] == ["b", "d", "a", "c"]
    assert q.get(timeout=0.01) is None


def test_queue_bound_and_close():
    q = JobQueue(1)
    q.put("a")
    with pytest.raises(QueueFull):
        q.put("b")
    q.close()
    assert q.get().job_id == "a"
    assert q.get() is None
    with pytest.raises(RuntimeError):
        q.put("c")


# --- config ---------------------------------------------------------------


def test_config_file_and_env(tmp_path):
    (tmp_path / "svc.yaml").write_text(
        "port: 9000\nstore_dir: store\nllm_backends:\n  - kind: replay\n    path: r.json\n    models: qwen*\n"
    )
    cfg = load_config(tmp_path / "svc.yaml", {"REFAAS_WORKERS": "4", "REFAAS_CONVERSION_PROBES": "E=process, A=rapl"})
    assert (cfg.port, cfg.workers) == (9000, 4)
    assert cfg.store_dir == str(tmp_path / "store")
    assert cfg.llm_backends[0].path == str(tmp_path / "r.json")
    assert cfg.llm_backends[0].models == ["qwen*"]
    assert cfg.conversion_probes == {"E": "process", "A": "rapl"}
    env = {"REFAAS_LLM_BACKENDS": '[{"kind": "ollama", "base_url": "http://gpu:11434"}]'}
    assert load_config(None, env).llm_backends[0].kind == "ollama"


@pytest.mark.parametrize(
    "doc,env",
    [
        ({"colour": 1}, {}),
        ({"workers": 0}, {}),
        ({"llm_backends": [{"kind": "grpc"}]}, {}),
        ({"llm_backends": [{"kind": "openai"}]}, {}),
        ({}, {"REFAAS_PORT": "eighty"}),
        ({}, {"REFAAS_CONVERSION_PROBES": "process"}),
        ({}, {"REFAAS_LLM_BACKENDS": "[oops"}),
    ],
)
def test_config_errors(tmp_path, doc, env):
    import yaml

    (tmp_path / "c.yaml").write_text(yaml.safe_dump(doc))
    with pytest.raises(SchemaError):
        load_config(tmp_path / "c.yaml", env)


# --- callbacks ------------------------------------------------------------


def test_callback_backoff_is_bounded():
    sleeps = []
    calls = []

    def handler(request):
        calls.append(request)
        return httpx.Response(503)

    sender = CallbackSender(5, 0.5, 2.0, 1.0, httpx.MockTransport(handler), sleeps.append)
    result = sender.send("http://platform/cb", {"x": 1})
    assert (result.delivered, result.attempts, result.error) == (False, 5, "HTTP 503")
    assert sleeps == [0.5, 1.0, 2.0, 2.0]
    assert len(calls) == 5


def test_callback_succeeds_after_retry():
    statuses = iter([500, 204])
    sender = CallbackSender(3, 0.1, 1, 1, httpx.MockTransport(lambda r: httpx.Response(next(statuses))), lambda s: None)
    assert sender.send("http://p/cb", {}).attempts == 2


# --- service --------------------------------------------------------------


def _service(tmp_path, replay="fix_loop", benchmarker=None, executors=None, start=True, **cfg):
    gateway = LlmGateway()
    gateway.add_backend(ReplayBackend.from_file(REPLAYS / f"{replay}.replay.json"), "*")
    config = ServiceConfig(store_dir=str(tmp_path / "store"), conversion_probes={}, thermal_zones=[], **cfg)
    if executors is None:
        executors = default_executors(gateway, benchmarker=benchmarker or fixed_benchmarker(6.0, 2.0))
    return RefaasService(config, gateway=gateway, executors=executors, sensors=[], sleep=lambda s: None, start=start)


def _post(client, package, tests, options=None, headers=None):
    return client.post(
        "/v1/jobs",
        files={"package": ("fn.zip", package, "application/zip"), "tests": ("tests.zip", tests, "application/zip")},
        data={"options": json.dumps(options or {})},
        headers=headers or {},
    )


def _poll(client, job_id, timeout=120):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        st = client.get(f"/v1/jobs/{job_id}").json()
        if st["state"] in ("succeeded", "failed"):
            return st
        time.sleep(0.05)
    raise AssertionError(f"job {job_id} did not finish")


def _blocking_executors(gateway, release):
    executors = default_executors(gateway, benchmarker=fixed_benchmarker(6.0, 2.0))
    precheck = executors["gate"]

    def gate(stage, ctx):
        release.wait(30)
        return precheck(stage, ctx)

    executors["gate"] = gate
    return executors


def test_http_contract_errors(tmp_path):
    package, tests = corpus_archives("f02")
    svc = _service(tmp_path, start=False, queue_bound=1)
    with TestClient(create_app(svc)) as client:
        assert client.get("/healthz").json()["status"] == "ok"
        resp = _post(client, b"not a zip", tests)
        assert resp.status_code == 400 and resp.json()["error"] == "MalformedArchive"
        import io
        import zipfile

        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w") as zf:
            zf.writestr("handler.py", "def handler(e): return e\n")
        resp = _post(client, buf.getvalue(), tests)
        assert resp.status_code == 400 and resp.json()["error"] == "MissingManifest"
        assert _post(client, package, tests, {"pipeline": "nope"}).status_code == 400
        assert _post(client, package, tests, {"colour": "red"}).status_code == 400
        assert _post(client, package, tests, {"target_language": "cobol"}).status_code == 400
        assert client.post("/v1/jobs", files={"package": ("p", package)}).status_code == 422

        first = _post(client, package, tests)
        assert first.status_code == 202
        job_id = first.json()["job_id"]
        full = _post(client, package, tests)
        assert full.status_code == 429 and full.json()["error"] == "QueueFull"
        assert len(svc.store.job_ids()) == 1

        st = client.get(f"/v1/jobs/{job_id}").json()
        assert st["state"] == "queued" and st["trace"] == []
        assert st["original_digest"] == digest(package)
        assert client.get(f"/v1/jobs/{job_id}/artifact").status_code == 409
        assert client.get("/v1/jobs/unknown").status_code == 404
        assert client.get("/v1/jobs/unknown/artifact").status_code == 404
    svc.close(1)


def test_token_header(tmp_path):
    svc = _service(tmp_path, start=False, token="s3cret")
    with TestClient(create_app(svc)) as client:
        assert client.get("/v1/jobs/x").status_code == 401
        assert client.get("/v1/jobs/x", headers={"X-Refaas-Token": "wrong"}).status_code == 401
        assert client.get("/v1/jobs/x", headers={"X-Refaas-Token": "s3cret"}).status_code == 404
        assert client.get("/healthz").status_code == 200
    svc.close(1)


@needs_go
def test_translated_job_end_to_end(tmp_path):
    package, tests = corpus_archives("f05")
    svc = _service(tmp_path)
    with TestClient(create_app(svc)) as client:
        job_id = _post(client, package, tests, {"benchmark_invocations": 20}).json()["job_id"]
        st = _poll(client, job_id)
        assert st["state"] == "succeeded" and st["verdict"] == "translated"
        assert [t["stage"] for t in st["trace"]][:4] == ["precheck", "document", "translate", "build"]
        assert st["conversion"]["tokens"] > 0
        assert st["amortization"]["amortizable"] is True
        assert st["function"]["validation"] is True
        resp = client.get(f"/v1/jobs/{job_id}/artifact")
        assert resp.status_code == 200 and resp.headers["x-refaas-artifact-kind"] == "translated"
        pkg = parse_package(resp.content)
        assert pkg.language == "go"
        assert digest(resp.content) == st["translated_digest"]
        metrics = client.get("/v1/metrics").text
        assert f"job_id={job_id}" in metrics and "refaas_amortization" in metrics
    svc.close()


@needs_go
def test_failed_job_returns_original_bytes(tmp_path):
    package, tests = corpus_archives("f02")
    svc = _service(tmp_path, replay="never_compiles")
    with TestClient(create_app(svc)) as client:
        job_id = _post(client, package, tests).json()["job_id"]
        st = _poll(client, job_id)
        assert st["verdict"] == "original-kept"
        resp = client.get(f"/v1/jobs/{job_id}/artifact")
        assert resp.headers["x-refaas-artifact-kind"] == "original"
        assert resp.content == package
    svc.close()

    # durability: a fresh process serves the same bytes
    again = _service(tmp_path, replay="never_compiles")
    assert again.artifact(job_id) == (package, "original")
    assert again.status(job_id)["verdict"] == "original-kept"
    again.close()


def test_running_job_conflicts(tmp_path):
    package, tests = corpus_archives("f02")
    release = threading.Event()
    gateway = LlmGateway()
    svc = _service(tmp_path, executors=_blocking_executors(gateway, release))
    job_id = svc.submit(package, tests)
    deadline = time.monotonic() + 10
    while svc.status(job_id)["state"] != "running" and time.monotonic() < deadline:
        time.sleep(0.01)
    assert svc.status(job_id)["state"] == "running"
    with pytest.raises(JobNotTerminal):
        svc.artifact(job_id)
    release.set()
    svc.wait(job_id)
    svc.close()


def test_restart_fails_interrupted_jobs(tmp_path):
    package, tests = corpus_archives("f02")
    svc = _service(tmp_path, start=False)
    job_id = svc.submit(package, tests)
    svc.close(1)
    again = _service(tmp_path, start=False)
    st = again.status(job_id)
    assert (st["state"], st["verdict"]) == ("failed", "original-kept")
    assert again.artifact(job_id) == (package, "original")
    again.close(1)


@needs_go
def test_liveness_and_isolation(tmp_path):
    package, tests = corpus_archives("f02")
    intervals = []
    lease_probe = SyntheticProbe.constant_power(1, id="shared-bench-probe")
    base = fixed_benchmarker(6.0, 2.0)

    def bench(label, artifact, events, cfg):
        with probe_lease(lease_probe):
            t0 = time.monotonic()
            time.sleep(0.02)
            intervals.append((t0, time.monotonic()))
        return base(label, artifact, events, cfg)

    ok = _service(tmp_path / "a", workers=3, queue_bound=16, benchmarker=bench)
    ids = [ok.submit(package, tests, {"benchmark_invocations": 5}) for _ in range(4)]
    bad = _service(tmp_path / "b", replay="always_fail", workers=2, queue_bound=16)
    ids_bad = [bad.submit(package, tests) for _ in range(6)]
    for svc, jobs in ((ok, ids), (bad, ids_bad)):
        for job_id in jobs:
            assert svc.wait(job_id, timeout=180)["state"] in ("succeeded", "failed")
    workdirs = [ok.store.record(j)["workdir"] for j in ids] + [bad.store.record(j)["workdir"] for j in ids_bad]
    assert len(set(workdirs)) == len(workdirs)
    intervals.sort()
    assert all(a[1] <= b[0] for a, b in zip(intervals, intervals[1:]))
    assert len(intervals) == 8
    ok.close()
    bad.close()


# --- platform hook ----------------------------------------------------------


def _event(package_zip, tests_zip, callback_url, **over):
    event = {
        "function": "interest",
        "namespace": "finance",
        "environment": "python",
        "package": base64.b64encode(package_zip).decode(),
        "tests": base64.b64encode(tests_zip).decode(),
        "callback_url": callback_url,
        "options": {"benchmark_invocations": 10},
    }
    event.update(over)
    return event


@needs_go
def test_hook_switches_environment(tmp_path):
    package, tests = corpus_archives("f05")
    platform = CallbackServer()
    svc = _service(tmp_path, public_url="http://refaas.local")
    try:
        with TestClient(create_app(svc)) as client:
            resp = client.post("/v1/platform/fission/build-hook", json=_event(package, tests, platform.url))
            assert resp.status_code == 202
            body = resp.json()
            assert (body["action"], body["environment"]) == ("deploy-original", "python")
            st = svc.wait(body["job_id"])
        assert st["callback"]["delivered"] is True
        (cb,) = platform.received
        assert cb["action"] == "switch-environment" and cb["environment"] == "go"
        assert cb["artifact_url"] == f"http://refaas.local/v1/jobs/{body['job_id']}/artifact"
        assert (cb["function"], cb["namespace"]) == ("interest", "finance")
    finally:
        svc.close()
        platform.close()


def test_hook_unsupported_language_keeps_original(tmp_path):
    package, tests = corpus_archives("f02")
    platform = CallbackServer()
    svc = _service(tmp_path)
    try:
        with TestClient(create_app(svc)) as client:
            resp = client.post(
                "/v1/platform/fission/build-hook", json=_event(package, tests, platform.url, environment="nodejs")
            )
            assert resp.status_code == 200
            assert resp.json()["action"] == "keep-original" and resp.json()["job_id"] is None
            for bad in ({"function": ""}, {"package": "%%%"}):
                r = client.post("/v1/platform/fission/build-hook", json=_event(package, tests, platform.url, **bad))
                assert r.status_code == 400
            assert client.post("/v1/platform/fission/build-hook", json=[1]).status_code == 400
            no_tests = client.post("/v1/platform/fission/build-hook", json=_event(package, tests, platform.url, tests=""))
            assert no_tests.json()["action"] == "keep-original"
    finally:
        svc.close()
    assert sorted(cb["action"] for cb in platform.received) == ["keep-original", "keep-original"]
    assert {cb["environment"] for cb in platform.received} == {"nodejs", "python"}
    platform.close()


@needs_go
def test_hook_undelivered_callback(tmp_path):
    package, tests = corpus_archives("f02")
    platform = CallbackServer(status=503)
    svc = _service(tmp_path, callback_attempts=3)
    try:
        job_id = svc.platform_hook(_event(package, tests, platform.url))["job_id"]
        st = svc.wait(job_id)
        assert st["state"] == "succeeded"
        assert st["state_detail"] == "succeeded-with-undelivered-callback"
        assert st["callback"]["attempts"] == 3 and len(platform.received) == 3
    finally:
        svc.close()
        platform.close()
