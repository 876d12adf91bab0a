"""Deployment packages, black-box test suites and job requests.

A deployment package travels as a zip archive with ``refaas.manifest.json``
at its root. A test suite is a set of ``<name>.json`` files, each holding one
``{"input": ..., "expected": ..., "match": [...]}`` object.
"""

from __future__ import annotations

import io
import json
import posixpath
import re
import zipfile
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from types import MappingProxyType
from typing import Any

from refaas import languages, pointer
from refaas.errors import (
    EmptyPackage,
    EmptySuite,
    InvalidPackage,
    MalformedArchive,
    MalformedTestFile,
    MissingManifest,
    PathTraversal,
    SuiteError,
)
from refaas.languages import LanguageId

MANIFEST_NAME = "refaas.manifest.json"

# Fixed timestamp keeps archives byte-identical across serializations.
_ZIP_EPOCH = (1980, 1, 1, 0, 0, 0)
_MAX_ARCHIVE_ENTRIES = 10_000


def normalize_path(raw: str) -> str:
    """Return the canonical relative form of an archive path.

    Raises PathTraversal for absolute paths, ``..`` components, drive
    letters, backslashes and NUL bytes.
    """
    if not raw or "\x00" in raw or "\\" in raw:
        raise PathTraversal(raw)
    if raw.startswith("/") or re.match(r"^[A-Za-z]:", raw):
        raise PathTraversal(raw)
    parts = [p for p in raw.split("/") if p not in ("", ".")]
    if not parts or any(p == ".." for p in parts):
        raise PathTraversal(raw)
    return "/".join(parts)


@dataclass(frozen=True)
class Manifest:
    language: LanguageId
    entrypoint: str
    build_config: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "build_config", MappingProxyType(dict(self.build_config)))

    def to_json(self) -> dict[str, Any]:
        return {
            "language": self.language,
            "entrypoint": self.entrypoint,
            "build_config": dict(self.build_config),
        }

    @classmethod
    def from_json(cls, doc: Any) -> Manifest:
        if not isinstance(doc, dict):
            raise InvalidPackage("manifest must be a JSON object")
        lang = doc.get("language")
        entry = doc.get("entrypoint")
        if not isinstance(lang, str) or not isinstance(entry, str):
            raise InvalidPackage("manifest needs string fields 'language' and 'entrypoint'")
        build_config = doc.get("build_config", {})
        if not isinstance(build_config, dict):
            raise InvalidPackage("manifest 'build_config' must be an object")
        return cls(languages.language_id(lang), normalize_path(entry), build_config)


@dataclass(frozen=True)
class DeploymentPackage:
    files: Mapping[str, bytes]
    manifest: Manifest

    def __post_init__(self) -> None:
        if not self.files:
            raise EmptyPackage("package has no files")
        clean: dict[str, bytes] = {}
        for path, content in self.files.items():
            norm = normalize_path(path)
            if norm != path:
                raise InvalidPackage(f"path not normalized: {path!r}")
            if norm == MANIFEST_NAME:
                raise InvalidPackage(f"{MANIFEST_NAME} is reserved")
            clean[norm] = bytes(content)
        if self.manifest.entrypoint not in clean:
            raise InvalidPackage(f"entrypoint {self.manifest.entrypoint!r} not in package")
        object.__setattr__(self, "files", MappingProxyType(clean))

    @property
    def language(self) -> LanguageId:
        return self.manifest.language

    @property
    def entrypoint_source(self) -> str:
        return self.files[self.manifest.entrypoint].decode("utf-8")

    def source_text(self) -> str:
        """All source files of the package language, entrypoint first."""
        ext = languages.get_adapter(self.language).extension
        names = [self.manifest.entrypoint] + sorted(
            p for p in self.files if p != self.manifest.entrypoint and p.endswith(ext)
        )
        if len(names) == 1:
            return self.entrypoint_source
        chunks = []
        for name in names:
            chunks.append(f"# file: {name}\n{self.files[name].decode('utf-8', 'replace')}")
        return "\n".join(chunks)


def serialize_package(pkg: DeploymentPackage) -> bytes:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        entries = [(MANIFEST_NAME, json.dumps(pkg.manifest.to_json(), sort_keys=True, indent=2).encode())]
        entries += sorted(pkg.files.items())
        for name, data in entries:
            info = zipfile.ZipInfo(name, date_time=_ZIP_EPOCH)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, data)
    return buf.getvalue()


def parse_package(archive: bytes) -> DeploymentPackage:
    try:
        zf = zipfile.ZipFile(io.BytesIO(archive))
    except (zipfile.BadZipFile, ValueError) as exc:
        raise MalformedArchive(str(exc)) from exc
    with zf:
        infos = zf.infolist()
        if len(infos) > _MAX_ARCHIVE_ENTRIES:
            raise MalformedArchive("too many entries")
        # Validate every name before reading any content.
        names = []
        for info in infos:
            raw = info.filename
            if raw.endswith("/"):
                normalize_path(raw.rstrip("/") or "/")
                continue
            names.append((normalize_path(raw), info))
        files: dict[str, bytes] = {}
        manifest_bytes = None
        for name, info in names:
            try:
                data = zf.read(info)
            except (zipfile.BadZipFile, ValueError, NotImplementedError, OSError) as exc:
                raise MalformedArchive(f"{name}: {exc}") from exc
            if name == MANIFEST_NAME:
                manifest_bytes = data
            elif name in files:
                raise MalformedArchive(f"duplicate entry {name!r}")
            else:
                files[name] = data
    if manifest_bytes is None:
        raise MissingManifest(f"archive has no {MANIFEST_NAME}")
    try:
        doc = json.loads(manifest_bytes)
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedArchive(f"manifest is not JSON: {exc}") from exc
    return DeploymentPackage(files, Manifest.from_json(doc))


def load_package_dir(root: str | Path) -> DeploymentPackage:
    """Build a package from a directory holding ``refaas.manifest.json``."""
    root = Path(root)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.is_file():
        raise MissingManifest(f"{root} has no {MANIFEST_NAME}")
    files = {}
    for path in sorted(root.rglob("*")):
        if path.is_file() and path != manifest_path and "__pycache__" not in path.parts:
            files[path.relative_to(root).as_posix()] = path.read_bytes()
    return DeploymentPackage(files, Manifest.from_json(json.loads(manifest_path.read_text("utf-8"))))


def read_package(path: str | Path) -> DeploymentPackage:
    path = Path(path)
    if path.is_dir():
        return load_package_dir(path)
    return parse_package(path.read_bytes())


# --- test suites ----------------------------------------------------------


class MatchMode(str, Enum):
    EXACT = "exact"
    PRESENT = "present"
    PATTERN = "pattern"


@dataclass(frozen=True)
class MatchOverride:
    path: str
    mode: MatchMode
    pattern: str | None = None

    def __post_init__(self) -> None:
        if not pointer.is_valid(self.path):
            raise ValueError(f"invalid JSON pointer {self.path!r}")
        if self.mode is MatchMode.PATTERN and self.pattern is None:
            raise ValueError("pattern override needs a pattern")

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"path": self.path, "mode": self.mode.value}
        if self.pattern is not None:
            doc["pattern"] = self.pattern
        return doc


def _freeze(value: Any) -> Any:
    # Round-tripping through json both validates and deep-copies.
    return json.loads(json.dumps(value, allow_nan=False))


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class

    name: str
    input_event: Any
    expected_output: Any
    match_overrides: tuple[MatchOverride, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_event", _freeze(self.input_event))
        object.__setattr__(self, "expected_output", _freeze(self.expected_output))
        object.__setattr__(self, "match_overrides", tuple(self.match_overrides))

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"input": self.input_event, "expected": self.expected_output}
        if self.match_overrides:
            doc["match"] = [m.to_json() for m in self.match_overrides]
        return doc


@dataclass(frozen=True)
class TestSuite:
    __test__ = False

    cases: tuple[TestCase, ...]

    def __post_init__(self) -> None:
        cases = tuple(self.cases)
        if not cases:
            raise EmptySuite("suite has no cases")
        seen = set()
        for case in cases:
            if case.name in seen:
                raise SuiteError(f"duplicate case name {case.name!r}")
            seen.add(case.name)
        object.__setattr__(self, "cases", cases)

    def __len__(self) -> int:
        return len(self.cases)

    @property
    def events(self) -> list[Any]:
        return [c.input_event for c in self.cases]


def _parse_match(name: str, raw: Any) -> tuple[MatchOverride, ...]:
    if raw is None:
        return ()
    if isinstance(raw, dict):
        # Shorthand: {"/path": "present", "/other": {"pattern": "..."}}
        items = []
        for path, spec in raw.items():
            if isinstance(spec, str):
                items.append({"path": path, "mode": spec})
            elif isinstance(spec, dict):
                items.append({"path": path, **spec})
            else:
                raise MalformedTestFile(name, f"bad match entry for {path!r}")
        raw = items
    if not isinstance(raw, list):
        raise MalformedTestFile(name, "'match' must be a list")
    out = []
    for entry in raw:
        if not isinstance(entry, dict):
            raise MalformedTestFile(name, "match entries must be objects")
        try:
            mode = MatchMode(entry.get("mode", "pattern" if "pattern" in entry else None))
            out.append(MatchOverride(entry.get("path"), mode, entry.get("pattern")))
        except (ValueError, TypeError) as exc:
            raise MalformedTestFile(name, f"bad match entry: {exc}") from exc
    return tuple(out)


def parse_test_case(name: str, data: bytes | str) -> TestCase:
    try:
        doc = json.loads(data)
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedTestFile(name, f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedTestFile(name, "test file must hold a JSON object")
    missing = [k for k in ("input", "expected") if k not in doc]
    if missing:
        raise MalformedTestFile(name, f"missing field(s): {', '.join(missing)}")
    try:
        return TestCase(name, doc["input"], doc["expected"], _parse_match(name, doc.get("match")))
    except ValueError as exc:
        raise MalformedTestFile(name, str(exc)) from exc


def _case_name(filename: str) -> str:
    base = posixpath.basename(filename)
    return base[: -len(".json")] if base.endswith(".json") else base


def parse_test_suite(files: Mapping[str, bytes | str] | Iterable[tuple[str, bytes | str]] | str | Path) -> TestSuite:
    """Build a suite with one case per JSON file, ordered by file name.

    ``files`` is a directory path or a mapping of file name to content.
    """
    if isinstance(files, (str, Path)):
        root = Path(files)
        if not root.is_dir():
            raise SuiteError(f"{root} is not a directory")
        items = [(p.name, p.read_bytes()) for p in root.iterdir() if p.is_file() and p.suffix == ".json"]
    elif isinstance(files, Mapping):
        items = list(files.items())
    else:
        items = list(files)
    items.sort(key=lambda kv: kv[0])
    if not items:
        raise EmptySuite("no test files")
    return TestSuite(tuple(parse_test_case(_case_name(n), d) for n, d in items))


def parse_test_archive(archive: bytes) -> TestSuite:
    """Parse a zip of test files (``tests/<name>.json`` or ``<name>.json``)."""
    try:
        zf = zipfile.ZipFile(io.BytesIO(archive))
    except (zipfile.BadZipFile, ValueError) as exc:
        raise MalformedArchive(str(exc)) from exc
    files = {}
    with zf:
        for info in zf.infolist():
            # every entry name is checked, even ones the suite ignores
            name = normalize_path(info.filename)
            if info.filename.endswith("/") or not name.endswith(".json"):
                continue
            files[posixpath.basename(name)] = zf.read(info)
    return parse_test_suite(files)


def serialize_test_suite(suite: TestSuite) -> bytes:
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for case in suite.cases:
            info = zipfile.ZipInfo(f"tests/{case.name}.json", date_time=_ZIP_EPOCH)
            info.compress_type = zipfile.ZIP_DEFLATED
            zf.writestr(info, json.dumps(case.to_json(), indent=2, sort_keys=True))
    return buf.getvalue()


# --- jobs -----------------------------------------------------------------


@dataclass(frozen=True)
class JobSpec:
    source_package: DeploymentPackage
    target_language: LanguageId
    suite: TestSuite
    pipeline: str = "cot"
    benchmark_invocations: int = 1000
    benchmark_repetitions: int = 5
    model: str | None = None

    def __post_init__(self) -> None:
        languages.language_id(self.target_language)
        if self.target_language == self.source_package.language:
            raise ValueError("target language must differ from the source language")
        if self.benchmark_invocations < 1 or self.benchmark_repetitions < 1:
            raise ValueError("benchmark invocations and repetitions must be positive")
