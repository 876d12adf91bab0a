"""Exception hierarchy shared by every refaas subsystem."""

from __future__ import annotations


class RefaasError(Exception):
    """Base class for all refaas errors."""


# --- packages and test suites -------------------------------------------


class PackageError(RefaasError):
    pass


class MalformedArchive(PackageError):
    pass


class MissingManifest(PackageError):
    pass


class PathTraversal(PackageError):
    def __init__(self, path: str):
        super().__init__(f"path escapes package root: {path!r}")
        self.path = path


class UnknownLanguage(PackageError):
    def __init__(self, name: str):
        super().__init__(f"unknown language: {name!r}")
        self.name = name


class EmptyPackage(PackageError):
    pass


class InvalidPackage(PackageError):
    pass


class SuiteError(RefaasError):
    pass


class MalformedTestFile(SuiteError):
    def __init__(self, name: str, reason: str):
        super().__init__(f"{name}: {reason}")
        self.name = name
        self.reason = reason


class EmptySuite(SuiteError):
    pass


# --- pipeline -------------------------------------------------------------


class SchemaError(RefaasError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class UnboundedRecovery(SchemaError):
    pass


class ExecutorMissing(RefaasError):
    def __init__(self, kind: str):
        super().__init__(f"no executor registered for stage kind {kind!r}")
        self.kind = kind


# --- llm gateway ----------------------------------------------------------


class LlmError(RefaasError):
    pass


class BackendUnavailable(LlmError):
    pass


class TranscriptExhausted(LlmError):
    pass


class LlmTimeout(LlmError):
    pass


class ExtractionFailed(LlmError):
    pass


class MissingBinding(LlmError):
    def __init__(self, name: str):
        super().__init__(f"template placeholder {{{name}}} has no binding")
        self.name = name


# --- build / test runner --------------------------------------------------


class AdapterMissing(RefaasError):
    pass


class BuildTimeout(RefaasError):
    pass


class InvalidPattern(RefaasError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"invalid pattern at {path!r}: {reason}")
        self.path = path


# --- energy / benchmarking ------------------------------------------------


class ProbeUnavailable(RefaasError):
    pass


class CounterWrapUndeclared(RefaasError):
    pass


class InvalidWindow(RefaasError):
    pass


class InsufficientSamples(RefaasError):
    pass


class ArtifactCrash(RefaasError):
    def __init__(self, index: int, detail: str = ""):
        super().__init__(f"artifact crashed at invocation {index}" + (f": {detail}" if detail else ""))
        self.index = index
        self.detail = detail


# --- service --------------------------------------------------------------


class JobNotFound(RefaasError):
    pass


class JobNotTerminal(RefaasError):
    pass


class QueueFull(RefaasError):
    pass
