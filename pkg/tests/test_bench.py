import collections
import csv
import io
import os
import textwrap
from types import SimpleNamespace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refaas import bench
from refaas.bench import BenchmarkConfig, BenchmarkReport, Repetition, run_benchmark, savings_report
from refaas.energy import ProcessProbe, SyntheticProbe, VirtualClock
from refaas.errors import ArtifactCrash
from refaas.runner import build

from conftest import python_package

ECHO = "def handler(event):\n    return event\n"

CRASH_AT_7 = textwrap.dedent(
    """\
    calls = 0

    def handler(event):
        global calls
        calls += 1
        if calls == 8:
            raise RuntimeError("eighth call")
        return {"n": calls}
    """
)


@pytest.fixture(scope="module")
def echo(tmp_path_factory):
    return build(python_package(ECHO), tmp_path_factory.mktemp("echo")).artifact


def test_config_validation():
    assert BenchmarkConfig() == BenchmarkConfig(1000, 5, 50, "process", None)
    for bad in ({"invocations": 0}, {"repetitions": 0}, {"warmup_invocations": -1}):
        with pytest.raises(ValueError):
            BenchmarkConfig(**bad)


def test_constant_power_gives_exact_joules(echo):
    clock = VirtualClock()
    probe = SyntheticProbe.constant_power(10, clock=clock)
    cfg = BenchmarkConfig(invocations=1000, repetitions=5, warmup_invocations=10)
    report = run_benchmark(echo, [{"a": 1}, {"b": 2}], cfg, probe, on_invocation=lambda i: clock.advance(0.1))
    assert report.repetitions == 5
    for rep in report.per_repetition:
        assert rep.joules_total == pytest.approx(1000)
        assert rep.joules_per_invocation == rep.joules_total / 1000
        assert rep.wall_time == pytest.approx(100)
        assert rep.peak_memory > 0
    assert report.mean_joules_per_invocation == pytest.approx(1.0)
    assert report.std_joules_per_invocation == pytest.approx(0, abs=1e-9)
    assert set(report.aggregate) == set(bench.METRICS)


def test_crash_reports_invocation_index(tmp_path):
    artifact = build(python_package(CRASH_AT_7), tmp_path).artifact
    cfg = BenchmarkConfig(invocations=20, repetitions=1, warmup_invocations=0)
    with pytest.raises(ArtifactCrash) as err:
        run_benchmark(artifact, [{}], cfg, SyntheticProbe.constant_power(1))
    assert err.value.index == 7


def test_empty_events_rejected(echo):
    with pytest.raises(ValueError):
        run_benchmark(echo, [], BenchmarkConfig(1, 1, 0), SyntheticProbe.constant_power(1))


def test_process_probe_follows_worker(echo):
    cfg = BenchmarkConfig(invocations=200, repetitions=2, warmup_invocations=5)
    report = run_benchmark(echo, [{"x": "y" * 100}], cfg, ProcessProbe(15))
    for rep in report.per_repetition:
        assert rep.joules_total == pytest.approx(rep.cpu_seconds * 15, rel=0.05, abs=1e-3)
        assert rep.joules_total > 0


class _FakeWorker:
    seen: list = []

    def __init__(self, artifact, limits):
        self.pid = os.getpid()
        self.returncode = 0
        self.usage = SimpleNamespace(ru_utime=0.0, ru_stime=0.0, ru_maxrss=1)

    def call(self, event, index):
        _FakeWorker.seen.append(event)
        return event

    def close(self, timeout=10.0):
        pass


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 300), st.integers(1, 12), st.integers(0, 20))
def test_round_robin_balance(n, k, warmup):
    _FakeWorker.seen = []
    orig = bench.WarmWorker
    bench.WarmWorker = _FakeWorker
    try:
        events = [{"i": i} for i in range(k)]
        probe = SyntheticProbe.constant_power(1, clock=VirtualClock())
        run_benchmark(None, events, BenchmarkConfig(n, 1, warmup), probe)
    finally:
        bench.WarmWorker = orig
    measured = _FakeWorker.seen[warmup:]
    assert len(measured) == n
    counts = collections.Counter(e["i"] for e in measured)
    assert all(counts[i] in (n // k, -(-n // k)) for i in range(k))


def _report(*jpi):
    reps = [Repetition(j * 10, j, 0.0, 0, 1.0) for j in jpi]
    return BenchmarkReport.from_repetitions(reps, 10, 0, "synthetic")


def test_savings_examples():
    row = savings_report(_report(10.0), _report(3.0))
    assert row.saving_per_invocation == pytest.approx(7)
    assert row.reduction_percent == pytest.approx(70)
    same = savings_report(_report(4.0, 5.0), _report(4.0, 5.0))
    assert same.saving_per_invocation == 0 and same.reduction_percent == 0
    assert savings_report(_report(2.0), _report(6.0)).saving_per_invocation < 0


@settings(max_examples=300)
@given(
    st.lists(st.floats(0.001, 1000), min_size=1, max_size=5),
    st.lists(st.floats(0.001, 1000), min_size=1, max_size=5),
)
def test_savings_antisymmetry(a, b):
    ab = savings_report(_report(*a), _report(*b))
    ba = savings_report(_report(*b), _report(*a))
    assert ab.saving_per_invocation == -ba.saving_per_invocation
    assert ab.saving_std == ba.saving_std


def test_report_json_and_csv_roundtrip():
    report = _report(1.0, 2.0, 3.0)
    again = BenchmarkReport.from_json(report.to_json())
    assert again == report
    assert report.aggregate["joules_per_invocation"] == {"mean": 2.0, "std": 1.0}
    rows = list(csv.DictReader(io.StringIO(report.to_csv("orig"))))
    assert [r["label"] for r in rows] == ["orig"] * 3
    assert float(rows[2]["joules_total"]) == 30.0
