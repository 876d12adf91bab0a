"""Build packages, invoke functions, judge their JSON output."""

from refaas.runner.build import Artifact, BuildResult, build
from refaas.runner.compare import DEFAULT_TOLERANCE, ComparisonVerdict, Mismatch, compare_json
from refaas.runner.invoke import InvocationRecord, Limits, WarmWorker, invoke
from refaas.runner.suite import CaseResult, ValidationSummary, run_suite

__all__ = [
    "DEFAULT_TOLERANCE",
    "Artifact",
    "BuildResult",
    "CaseResult",
    "ComparisonVerdict",
    "InvocationRecord",
    "Limits",
    "Mismatch",
    "ValidationSummary",
    "WarmWorker",
    "build",
    "compare_json",
    "invoke",
    "run_suite",
]
