from refaas.pipeline.engine import JobContext, Services, run_pipeline
from refaas.pipeline.executors import (
    Benchmarker,
    build_executor,
    default_executors,
    llm_executor,
    precheck_executor,
    probe_benchmarker,
    regression_executor,
    test_executor,
)
from refaas.pipeline.job import JobState, StageOutcome, TranslationJob, Verdict
from refaas.pipeline.spec import (
    FailAction,
    OnFail,
    PipelineSpec,
    RegressionGateSpec,
    StageKind,
    StageSpec,
    load_pipeline_spec,
    load_preset,
    load_presets,
    pipeline_from_dict,
)

__all__ = [
    "Benchmarker",
    "FailAction",
    "JobContext",
    "JobState",
    "OnFail",
    "PipelineSpec",
    "RegressionGateSpec",
    "Services",
    "StageKind",
    "StageOutcome",
    "StageSpec",
    "TranslationJob",
    "Verdict",
    "build_executor",
    "default_executors",
    "llm_executor",
    "load_pipeline_spec",
    "load_preset",
    "load_presets",
    "pipeline_from_dict",
    "precheck_executor",
    "probe_benchmarker",
    "regression_executor",
    "run_pipeline",
    "test_executor",
]
