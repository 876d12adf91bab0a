from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from refaas.model import DeploymentPackage, JobSpec, Manifest, load_package_dir, parse_test_suite

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"
REPLAYS = ROOT / "fixtures" / "replays"
PROBES = ROOT / "fixtures" / "probes"

HAVE_GO = shutil.which("go") is not None



def needs_go(obj):
    return pytest.mark.toolchain(pytest.mark.skipif(not HAVE_GO, reason="go toolchain not installed")(obj))


def corpus_dir(prefix: str) -> Path:
    matches = sorted(CORPUS.glob(f"{prefix}*"))
    assert matches, f"no corpus function {prefix}"
    return matches[0]


def offline_functions() -> list[Path]:
    return [d for d in sorted(CORPUS.iterdir()) if not json.loads((d / "meta.json").read_text())["network"]]


def corpus_spec(prefix: str, **kw) -> JobSpec:
    d = corpus_dir(prefix)
    kw.setdefault("benchmark_invocations", 50)
    kw.setdefault("benchmark_repetitions", 2)
    return JobSpec(load_package_dir(d / "original"), "go", parse_test_suite(d / "tests"), **kw)


def python_package(source: str, **extra: str) -> DeploymentPackage:
    files = {"handler.py": source.encode(), **{k: v.encode() for k, v in extra.items()}}
    return DeploymentPackage(files, Manifest("python", "handler.py"))


def go_package(source: str) -> DeploymentPackage:
    return DeploymentPackage({"main.go": source.encode()}, Manifest("go", "main.go"))


def fixed_benchmarker(original_jpi: float, translated_jpi: float, invocations: int = 10):
    """Benchmarker returning constant joules per invocation, without running anything."""
    from refaas.bench import BenchmarkReport, Repetition

    def bench(label, artifact, events, cfg):
        jpi = original_jpi if label == "original" else translated_jpi
        rep = Repetition(jpi * cfg.invocations, jpi, 0.001 * cfg.invocations, 10_000_000, 1.0)
        return BenchmarkReport.from_repetitions([rep] * cfg.repetitions, cfg.invocations, cfg.warmup_invocations, "fixed")

    return bench


def replay_services(replay: str, benchmarker=None, **kw):
    from refaas.llm import LlmGateway, ReplayBackend
    from refaas.pipeline import Services, default_executors

    gateway = LlmGateway()
    gateway.add_backend(ReplayBackend.from_file(REPLAYS / f"{replay}.replay.json"), "*")
    executors = default_executors(gateway, benchmarker=benchmarker or fixed_benchmarker(6.0, 2.0))
    return Services(executors=executors, **kw)


def corpus_archives(prefix: str) -> tuple[bytes, bytes]:
    """(package zip, tests zip) for a corpus function's original."""
    from refaas.model import serialize_package, serialize_test_suite

    d = corpus_dir(prefix)
    return serialize_package(load_package_dir(d / "original")), serialize_test_suite(parse_test_suite(d / "tests"))


class CallbackServer:
    """Loopback stand-in for the platform's callback endpoint."""

    def __init__(self, status: int = 200):
        import http.server
        import threading

        self.received: list = []
        self.status = status
        outer = self

        class Handler(http.server.BaseHTTPRequestHandler):
            def do_POST(self):
                body = self.rfile.read(int(self.headers.get("Content-Length", 0)))
                outer.received.append(json.loads(body))
                self.send_response(outer.status)
                self.end_headers()

            def log_message(self, *args):
                pass

        self.server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/callback"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


# --- acceptance reporting -----------------------------------------------------

_acceptance: dict[int, tuple[str, str, float]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    report = outcome.get_result()
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
        _acceptance[number] = (title, status, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, status, duration = _acceptance[number]
        terminalreporter.write_line(f"AC{number:<2} {status}  {title} ({duration:.2f}s)")
