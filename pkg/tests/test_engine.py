import json

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from refaas.energy import ScriptedSensor, SyntheticProbe, VirtualClock
from refaas.errors import ExecutorMissing
from refaas.model import TestCase, TestSuite, parse_package, serialize_package
from refaas.pipeline import (
    JobState,
    Services,
    StageKind,
    TranslationJob,
    Verdict,
    load_preset,
    pipeline_from_dict,
    run_pipeline,
)

from conftest import corpus_spec, fixed_benchmarker, needs_go, replay_services

KINDS = [k.value for k in StageKind]


def _fake(script):
    """Executors that pass or fail per ``script(stage, attempt)`` and always leave a candidate."""

    def make(kind):
        def execute(stage, ctx):
            ctx.candidate_package = ctx.spec.source_package
            return ctx.outcome(script(stage.name, ctx.attempt), f"{kind} stub")

        return execute

    return {k: make(k) for k in KINDS}


def _run(script, pipeline=None, spec=None, **kw):
    job = TranslationJob.new(spec or corpus_spec("f01"))
    return run_pipeline(job, Services(executors=_fake(script), **kw), pipeline or load_preset("cot"))


def _check_trace(job, pipeline):
    limits = {s.name: s.max_attempts for s in pipeline.stages}
    limits.update({"precheck": 1, "regression-gate": 1})
    seen = {}
    for o in job.trace:
        assert o.attempt == seen.get(o.stage, 0) + 1
        assert o.attempt <= limits[o.stage]
        seen[o.stage] = o.attempt


def test_all_pass_translates():
    job = _run(lambda s, a: True)
    assert job.verdict is Verdict.TRANSLATED and job.state is JobState.SUCCEEDED
    assert [o.stage for o in job.trace] == ["precheck", "document", "translate", "build", "test", "regression-gate"]


def test_build_recovers_once():
    job = _run(lambda s, a: not (s == "build" and a == 1))
    assert [(o.stage, o.attempt, o.result) for o in job.trace if o.stage in ("build", "fix-build")] == [
        ("build", 1, "fail"), ("fix-build", 1, "pass"), ("build", 2, "pass"),
    ]
    assert job.verdict is Verdict.TRANSLATED


def test_build_never_passes_stops_after_three():
    job = _run(lambda s, a: s != "build")
    assert job.attempts("build") == [1, 2, 3]
    assert job.attempts("fix-build") == [1, 2]
    assert job.verdict is Verdict.ORIGINAL_KEPT and job.state is JobState.FAILED
    assert job.output_package == job.spec.source_package


def test_align_loop_resumes_at_build():
    job = _run(lambda s, a: not (s == "test" and a == 1))
    assert [o.stage for o in job.trace][4:] == ["test", "align", "build", "test", "regression-gate"]


def test_always_failing_stays_in_budget():
    pipeline = load_preset("cot")
    pipeline_no_precheck = pipeline_from_dict({
        "name": "np", "global_attempt_budget": 20, "gates": {"precheck": False},
        "defaults": {"max_attempts": 3},
        "stages": [
            {"name": "translate", "kind": "llm", "prompt_template": "translate"},
            {"name": "build", "kind": "build", "on_fail": {"recover": "fix"}},
            {"name": "fix", "kind": "llm", "prompt_template": "fix-build", "recovery": True},
        ],
    })
    for p in (pipeline, pipeline_no_precheck):
        job = _run(lambda s, a: False, p)
        assert len(job.trace) <= p.global_attempt_budget
        assert job.verdict is Verdict.ORIGINAL_KEPT


def test_precheck_failure_skips_llm():
    job = _run(lambda s, a: s != "precheck")
    assert [o.stage for o in job.trace] == ["precheck"]
    assert job.reason.startswith("precheck failed")
    assert job.state is JobState.FAILED


def test_regression_failure_keeps_original_but_succeeds():
    job = _run(lambda s, a: s != "regression-gate")
    assert job.verdict is Verdict.ORIGINAL_KEPT
    assert job.state is JobState.SUCCEEDED
    assert job.output_package == job.spec.source_package


def test_executor_exception_becomes_failure():
    def boom(stage, ctx):
        raise RuntimeError("kaput")

    executors = _fake(lambda s, a: True)
    executors["build"] = boom
    job = run_pipeline(TranslationJob.new(corpus_spec("f01")), Services(executors=executors), load_preset("single-shot"))
    build = [o for o in job.trace if o.stage == "build"]
    assert build[0].detail == "RuntimeError: kaput"
    assert job.verdict is Verdict.ORIGINAL_KEPT


def test_missing_executor():
    executors = _fake(lambda s, a: True)
    del executors["benchmark"]
    with pytest.raises(ExecutorMissing) as err:
        run_pipeline(TranslationJob.new(corpus_spec("f01")), Services(executors=executors))
    assert err.value.kind == "benchmark"


def test_job_must_be_queued():
    job = _run(lambda s, a: True)
    with pytest.raises(ValueError):
        run_pipeline(job, Services(executors=_fake(lambda s, a: True)))


def test_model_override_reaches_llm_stages():
    seen = set()
    executors = _fake(lambda s, a: True)

    def llm(stage, ctx):
        seen.add(stage.model)
        ctx.candidate_package = ctx.spec.source_package
        return ctx.outcome(True)

    executors["llm"] = llm
    run_pipeline(TranslationJob.new(corpus_spec("f01", model="gpt-4o")), Services(executors=executors))
    assert seen == {"gpt-4o"}


def test_conversion_metrics_from_probes_and_sensors():
    clock = VirtualClock()
    probe = SyntheticProbe.constant_power(3600, clock=clock)  # 1 Wh per second
    sensor = ScriptedSensor(lambda t: 40 + 10 * (t > 0), clock=clock)

    def script(stage, attempt):
        clock.advance(1)
        return True

    job = _run(script, probes={"service-host": probe}, sensors=[sensor])
    steps = len(job.trace)
    assert job.metrics.energy == pytest.approx(steps)
    assert job.metrics.energy_by_probe == {"service-host": pytest.approx(steps)}
    # 40 °C at t=0, 50 °C from t=1 on; trapezoid gives 5 + 10·(steps-1) °C·s
    assert job.metrics.temperature_load == pytest.approx((5 + 10 * (steps - 1)) / 3600)


def test_workdir_removed_unless_kept(tmp_path):
    from pathlib import Path

    job = _run(lambda s, a: True, workdir_root=tmp_path)
    assert not Path(job.workdir).exists()
    job = _run(lambda s, a: True, workdir_root=tmp_path, keep_workdir=True)
    assert Path(job.workdir).is_dir()


# --- properties -----------------------------------------------------------


@st.composite
def pipelines(draw):
    n = draw(st.integers(1, 6))
    names = [f"s{i}" for i in range(n)]
    stages = []
    for i, name in enumerate(names):
        kind = draw(st.sampled_from(KINDS))
        stage = {"name": name, "kind": kind, "max_attempts": draw(st.integers(1, 4))}
        if kind == "llm":
            stage["prompt_template"] = "translate"
        others = [m for m in names if m != name]
        action = draw(st.sampled_from(["abort", "accept-original", "recover"] if others else ["abort", "accept-original"]))
        stage["on_fail"] = {"recover": draw(st.sampled_from(others))} if action == "recover" else action
        if i > 0 and draw(st.booleans()):
            stage["recovery"] = True
            if draw(st.booleans()):
                stage["resume"] = draw(st.sampled_from(names))
        stages.append(stage)
    gates = {"precheck": draw(st.booleans()), "regression": draw(st.booleans())}
    bound = sum(s["max_attempts"] for s in stages) + gates["precheck"] + gates["regression"]
    return pipeline_from_dict({
        "name": "random", "global_attempt_budget": bound + draw(st.integers(0, 3)), "gates": gates, "stages": stages,
    })


@settings(max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(pipelines(), st.data())
def test_termination_and_trace_properties(pipeline, data):
    outcomes = data.draw(st.lists(st.booleans(), min_size=0, max_size=40))
    calls = iter(outcomes)
    job = _run(lambda s, a: next(calls, False), pipeline)
    assert job.terminal
    assert len(job.trace) <= pipeline.global_attempt_budget
    _check_trace(job, pipeline)
    # output totality
    assert parse_package(serialize_package(job.output_package)) == job.output_package
    if job.verdict is Verdict.TRANSLATED:
        last = {o.stage: o for o in job.trace}
        for stage in pipeline.stages:
            if stage.kind.value in ("build", "test") and not stage.recovery:
                assert last[stage.name].passed
        if pipeline.regression.enabled:
            assert job.trace[-1].stage == "regression-gate" and job.trace[-1].passed


# --- real toolchain with replayed LLM -------------------------------------


def _stages(job):
    return [(o.stage, o.attempt, o.result) for o in job.trace]


@needs_go
class TestReplayed:
    def test_fix_loop(self):
        job = run_pipeline(TranslationJob.new(corpus_spec("f05")), replay_services("fix_loop"))
        assert job.verdict is Verdict.TRANSLATED, job.reason
        builds = [(a, r) for s, a, r in _stages(job) if s == "build"]
        assert builds == [(1, "fail"), (2, "pass")]
        assert job.output_package.language == "go"
        assert job.function_metrics.validation and job.function_metrics.buildable
        assert job.function_metrics.tests_passed == 4
        assert job.amortization.saving_per_invocation == pytest.approx(4.0)
        assert job.metrics.tokens > 0
        document = job.trace[1]
        assert document.stage == "document" and "documented_source" in document.artifacts
        fix = next(o for o in job.trace if o.stage == "fix-build")
        translate = next(o for o in job.trace if o.stage == "translate")
        assert fix.artifacts["candidate_source"] != translate.artifacts["candidate_source"]

    def test_never_compiles(self):
        job = run_pipeline(TranslationJob.new(corpus_spec("f02")), replay_services("never_compiles"))
        assert job.verdict is Verdict.ORIGINAL_KEPT
        assert job.attempts("build") == [1, 2, 3]
        assert job.output_package == job.spec.source_package
        assert not job.function_metrics.buildable

    def test_align_loop(self):
        job = run_pipeline(TranslationJob.new(corpus_spec("f01")), replay_services("align_loop"))
        assert job.verdict is Verdict.TRANSLATED, job.reason
        assert [s for s, _, _ in _stages(job)][3:] == ["build", "test", "align", "build", "test", "regression-gate"]
        assert job.trace[4].result == "fail"

    def test_always_fail_extraction(self):
        job = run_pipeline(TranslationJob.new(corpus_spec("f02")), replay_services("always_fail"))
        assert job.verdict is Verdict.ORIGINAL_KEPT
        failing = [o for o in job.trace if o.stage == "translate"]
        assert len(failing) == 3 and all("ExtractionFailed" in o.detail for o in failing)
        assert all(o.llm_exchange is not None for o in failing)

    def test_precheck_catches_wrong_suite(self):
        spec = corpus_spec("f02")
        bad = TestSuite(tuple(TestCase(c.name, c.input_event, {"result": -1}) for c in spec.suite.cases))
        from dataclasses import replace

        job = run_pipeline(TranslationJob.new(replace(spec, suite=bad)), replay_services("fix_loop"))
        assert [o.stage for o in job.trace] == ["precheck"]
        assert job.verdict is Verdict.ORIGINAL_KEPT

    def test_regression_gate_rejects_costlier_translation(self):
        services = replay_services("fix_loop", benchmarker=fixed_benchmarker(2.0, 6.0))
        job = run_pipeline(TranslationJob.new(corpus_spec("f02")), services)
        assert job.verdict is Verdict.ORIGINAL_KEPT and job.state is JobState.SUCCEEDED
        assert job.function_metrics.validation  # tests passed; only the gate said no
        assert not job.amortization.amortizable
        assert json.loads(job.trace[-1].artifacts["benchmark_translated"])["aggregate"]
