"""Content-addressed artifact store with a JSON index.

Layout under ``root``::

    blobs/<sha256>   archive bytes, named by digest
    index.json       job_id -> record (digests, options, latest summary)

Every write goes to a temporary file in the same directory and is then
renamed over the target, so readers never see partial files.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

from refaas.errors import JobNotFound, RefaasError


class ArtifactKind(str, Enum):
    ORIGINAL = "original"
    TRANSLATED = "translated"


@dataclass(frozen=True)
class ArtifactStoreRecord:
    job_id: str
    kind: ArtifactKind
    archive: bytes
    content_digest: str

    def __post_init__(self) -> None:
        if digest(self.archive) != self.content_digest:
            raise ValueError("content digest does not match archive")


class StoreCorrupt(RefaasError):
    pass


def digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


class ArtifactStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.blobs = self.root / "blobs"
        self.blobs.mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / "index.json"
        self._lock = threading.RLock()
        self._index: dict[str, dict[str, Any]] = {}
        if self.index_path.exists():
            try:
                self._index = json.loads(self.index_path.read_text("utf-8"))
            except ValueError as exc:
                raise StoreCorrupt(f"{self.index_path}: {exc}") from exc

    # --- blobs ------------------------------------------------------------

    def put_blob(self, data: bytes) -> str:
        d = digest(data)
        path = self.blobs / d
        if not path.exists():
            _atomic_write(path, data)
        return d

    def get_blob(self, d: str) -> bytes:
        data = (self.blobs / d).read_bytes()
        if digest(data) != d:
            raise StoreCorrupt(f"blob {d} fails its digest check")
        return data

    # --- index ------------------------------------------------------------

    def _flush(self) -> None:
        _atomic_write(self.index_path, json.dumps(self._index, indent=1, sort_keys=True).encode())

    def create_job(self, job_id: str, original: bytes, tests: bytes, options: dict[str, Any]) -> None:
        with self._lock:
            if job_id in self._index:
                raise ValueError(f"job {job_id} already stored")
            self._index[job_id] = {
                "original": self.put_blob(original),
                "tests": self.put_blob(tests),
                "translated": None,
                "options": options,
                "summary": {"job_id": job_id, "state": "queued", "trace": []},
            }
            self._flush()

    def record(self, job_id: str) -> dict[str, Any]:
        with self._lock:
            try:
                return json.loads(json.dumps(self._index[job_id]))
            except KeyError:
                raise JobNotFound(job_id) from None

    def has(self, job_id: str) -> bool:
        with self._lock:
            return job_id in self._index

    def job_ids(self) -> list[str]:
        with self._lock:
            return list(self._index)

    def update(self, job_id: str, **fields: Any) -> None:
        with self._lock:
            if job_id not in self._index:
                raise JobNotFound(job_id)
            self._index[job_id].update(fields)
            self._flush()

    def delete(self, job_id: str) -> None:
        """Drop a job's index entry (used when a submission is rejected). Blobs stay."""
        with self._lock:
            if self._index.pop(job_id, None) is not None:
                self._flush()

    def put_translated(self, job_id: str, archive: bytes) -> str:
        with self._lock:
            rec = self._index.get(job_id)
            if rec is None:
                raise JobNotFound(job_id)
            if rec["translated"] is not None:
                raise ValueError(f"job {job_id} already has a translated artifact")
            rec["translated"] = self.put_blob(archive)
            self._flush()
            return rec["translated"]

    def artifact(self, job_id: str, kind: ArtifactKind) -> ArtifactStoreRecord:
        rec = self.record(job_id)
        d = rec[kind.value]
        if d is None:
            raise JobNotFound(f"{job_id} has no {kind.value} artifact")
        return ArtifactStoreRecord(job_id, kind, self.get_blob(d), d)

    def recover(self, reason: str = "service restarted before the job finished") -> list[str]:
        """Mark jobs left queued or running by a previous process as failed."""
        changed = []
        with self._lock:
            for job_id, rec in self._index.items():
                summary = rec.get("summary") or {}
                if summary.get("state") in ("queued", "running"):
                    summary.update(state="failed", verdict="original-kept", reason=reason)
                    rec["summary"] = summary
                    changed.append(job_id)
            if changed:
                self._flush()
        return changed
