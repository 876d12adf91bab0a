from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from refaas.model import TestSuite
from refaas.runner.build import Artifact
from refaas.runner.compare import DEFAULT_TOLERANCE, ComparisonVerdict, Mismatch, compare_json
from refaas.runner.invoke import InvocationRecord, Limits, invoke


@dataclass(frozen=True)
class CaseResult:
    name: str
    verdict: ComparisonVerdict
    record: InvocationRecord

    @property
    def equal(self) -> bool:
        return self.verdict.equal


@dataclass(frozen=True)
class ValidationSummary:
    per_case: tuple[CaseResult, ...]

    @property
    def tests_total(self) -> int:
        return len(self.per_case)

    @property
    def tests_passed(self) -> int:
        return sum(1 for c in self.per_case if c.equal)

    @property
    def validation(self) -> bool:
        return self.tests_passed == self.tests_total

    def failure_report(self, limit: int = 10) -> str:
        """Human-readable digest of failing cases, fed back to the align prompt."""
        lines = []
        for case in self.per_case:
            if case.equal:
                continue
            lines.append(f"test {case.name}: input {_dump(case.record.input_event)}")
            if case.record.exit_ok:
                lines.append(f"  actual output: {_dump(case.record.output)}")
            for m in case.verdict.mismatches[:limit]:
                lines.append(f"  {m.path or '/'} [{m.kind}] {m.detail}")
            if case.record.stderr.strip():
                lines.append("  stderr: " + case.record.stderr.strip()[-500:])
        return "\n".join(lines)

    def to_json(self) -> dict[str, Any]:
        return {
            "validation": self.validation,
            "tests_passed": self.tests_passed,
            "tests_total": self.tests_total,
            "per_case": [{"name": c.name, **c.verdict.to_json()} for c in self.per_case],
        }


def _dump(v: Any) -> str:
    text = json.dumps(v)
    return text if len(text) <= 400 else text[:397] + "..."


def run_suite(
    artifact: Artifact,
    suite: TestSuite,
    tolerance: float = DEFAULT_TOLERANCE,
    limits: Limits = Limits(),
) -> ValidationSummary:
    """Invoke every case once, sequentially, each in a fresh process."""
    results = []
    for case in suite.cases:
        record = invoke(artifact, case.input_event, limits)
        if record.exit_ok:
            verdict = compare_json(case.expected_output, record.output, case.match_overrides, tolerance)
        else:
            detail = record.error or "invocation failed"
            if record.stderr.strip():
                detail += ": " + record.stderr.strip().splitlines()[-1][:200]
            verdict = ComparisonVerdict((Mismatch("", "invocation", detail),))
        results.append(CaseResult(case.name, verdict, record))
    return ValidationSummary(tuple(results))
