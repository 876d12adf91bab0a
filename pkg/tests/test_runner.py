import json
import os
import textwrap

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refaas.errors import ArtifactCrash
from refaas.model import MatchMode, MatchOverride, TestCase, TestSuite, load_package_dir, parse_test_suite
from refaas.runner import Limits, WarmWorker, build, invoke, run_suite

from conftest import corpus_dir, go_package, needs_go, python_package

GO_ADD = textwrap.dedent(
    """\
    package main

    func Handler(event map[string]interface{}) interface{} {
    \ta, _ := event["a"].(float64)
    \tb, _ := event["b"].(float64)
    \treturn map[string]interface{}{"result": a + b}
    }
    """
)


@pytest.fixture(scope="module")
def py_echo(tmp_path_factory):
    pkg = python_package(
        textwrap.dedent(
            """\
            import sys, time

            def handler(event):
                mode = event.get("mode")
                if mode == "sleep":
                    time.sleep(5)
                if mode == "crash":
                    raise RuntimeError("boom")
                if mode == "garbage":
                    sys.stdout.write("not json")
                    sys.stdout.flush()
                    sys.exit(0)
                if mode == "exit":
                    sys.exit(3)
                return {"echo": event}
            """
        )
    )
    result = build(pkg, tmp_path_factory.mktemp("echo"))
    assert result.ok, result.stderr
    return result.artifact


def test_python_build_and_invoke(py_echo):
    rec = invoke(py_echo, {"x": 1})
    assert rec.exit_ok and rec.error is None
    assert rec.output == {"echo": {"x": 1}}
    assert 0 < rec.cold_start <= rec.wall_time
    assert rec.peak_memory > 0
    assert rec.cpu_time > 0


@pytest.mark.parametrize(
    "mode,error",
    [("crash", "NonZeroExit"), ("exit", "NonZeroExit"), ("garbage", "OutputNotJson")],
)
def test_invoke_failures_are_recorded(py_echo, mode, error):
    rec = invoke(py_echo, {"mode": mode})
    assert not rec.exit_ok
    assert rec.error == error
    assert rec.output is None


def test_invoke_timeout(py_echo):
    rec = invoke(py_echo, {"mode": "sleep"}, Limits(timeout=0.5))
    assert (rec.exit_ok, rec.error) == (False, "Timeout")
    assert rec.wall_time < 4


def test_python_syntax_error_fails_build(tmp_path):
    result = build(python_package("def handler(event)\n    return 1\n"), tmp_path)
    assert not result.ok
    assert "SyntaxError" in result.stderr or "invalid syntax" in result.stderr


def test_build_refuses_dirty_sandbox(tmp_path):
    (tmp_path / "stale").write_text("x")
    with pytest.raises(ValueError):
        build(python_package("def handler(e):\n    return e\n"), tmp_path)


def test_suite_isolates_failures(py_echo):
    suite = TestSuite(
        (
            TestCase("a", {"k": 1}, {"echo": {"k": 1}}),
            TestCase("b", {"mode": "crash"}, {"echo": {}}),
            TestCase("c", {"k": 2}, {"echo": {"k": 2}}),
            TestCase("d", {"k": 3}, {"echo": {"k": 4}}),
        )
    )
    summary = run_suite(py_echo, suite)
    assert [c.equal for c in summary.per_case] == [True, False, True, False]
    assert (summary.tests_passed, summary.tests_total, summary.validation) == (2, 4, False)
    crash = summary.per_case[1].verdict.mismatches[0]
    assert crash.kind == "invocation" and crash.detail.startswith("NonZeroExit")
    report = summary.failure_report()
    assert "test b" in report and "test d" in report and "/echo/k" in report
    assert json.loads(json.dumps(summary.to_json()))["tests_passed"] == 2


def test_suite_all_equal(py_echo):
    suite = TestSuite(
        (
            TestCase("a", {"id": "x"}, {"echo": {"id": "whatever"}}, (MatchOverride("/echo/id", MatchMode.PRESENT),)),
        )
    )
    assert run_suite(py_echo, suite).validation


def test_warm_worker(py_echo):
    with WarmWorker(py_echo) as w:
        assert [w.call({"i": i}, i) for i in range(5)] == [{"echo": {"i": i}} for i in range(5)]
        pid = w.pid
    assert w.returncode == 0
    assert w.usage is not None and w.usage.ru_utime + w.usage.ru_stime > 0
    assert pid > 0


def test_warm_worker_crash(py_echo):
    with WarmWorker(py_echo) as w:
        w.call({}, 0)
        with pytest.raises(ArtifactCrash) as err:
            w.call({"mode": "crash"}, 1)
        assert err.value.index == 1


def test_warm_worker_timeout(py_echo):
    with WarmWorker(py_echo, Limits(timeout=0.3)) as w:
        with pytest.raises(ArtifactCrash):
            w.call({"mode": "sleep"}, 0)


@pytest.mark.skipif(not hasattr(os, "sched_setaffinity"), reason="no CPU affinity")
def test_cpu_pinning(py_echo):
    rec = invoke(py_echo, {"k": 1}, Limits(cpu=0))
    assert rec.exit_ok


def test_python_addition_fixture(tmp_path_factory):
    artifact = _built(tmp_path_factory, corpus_dir("f02") / "original")

    @settings(max_examples=20, deadline=None)
    @given(st.integers(-1000, 1000), st.integers(-1000, 1000))
    def check(a, b):
        assert invoke(artifact, {"a": a, "b": b}).output["result"] == a + b

    check()


_cache = {}


def _built(factory, src):
    if src not in _cache:
        result = build(load_package_dir(src), factory.mktemp("b"))
        assert result.ok, result.stderr
        _cache[src] = result.artifact
    return _cache[src]


@needs_go
class TestGo:
    def test_addition(self, tmp_path):
        result = build(go_package(GO_ADD), tmp_path)
        assert result.ok, result.stderr
        rec = invoke(result.artifact, {"a": 2, "b": 3})
        assert rec.exit_ok
        assert rec.output == {"result": 5}

    def test_type_error_reports_compiler_output(self, tmp_path):
        broken = GO_ADD.replace("a + b", 'a + "b"')
        result = build(go_package(broken), tmp_path)
        assert not result.ok
        assert "main.go" in result.stderr
        assert result.artifact is None

    def test_build_is_deterministic(self, tmp_path):
        assert build(go_package(GO_ADD), tmp_path / "1").ok == build(go_package(GO_ADD), tmp_path / "2").ok
        bad = GO_ADD.replace("return", "retrun")
        assert build(go_package(bad), tmp_path / "3").ok == build(go_package(bad), tmp_path / "4").ok is False

    def test_warm_worker(self, tmp_path):
        artifact = build(go_package(GO_ADD), tmp_path).artifact
        with WarmWorker(artifact) as w:
            assert [w.call({"a": i, "b": 1}, i)["result"] for i in range(3)] == [1, 2, 3]

    def test_reference_addition_fixture(self, tmp_path_factory):
        d = corpus_dir("f02")
        summary = run_suite(_built(tmp_path_factory, d / "reference"), parse_test_suite(d / "tests"))
        assert summary.validation
