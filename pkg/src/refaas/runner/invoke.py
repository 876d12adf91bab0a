"""Spawning built functions under the stdin/stdout event contract."""

from __future__ import annotations

import json
import logging
import os
import resource
import selectors
import signal
import subprocess
import tempfile
import time
from dataclasses import dataclass
from typing import Any

from refaas.errors import ArtifactCrash
from refaas.runner.build import Artifact

log = logging.getLogger(__name__)

_STDERR_KEEP = 8192


@dataclass(frozen=True)
class Limits:
    timeout: float = 30.0
    memory_bytes: int | None = None
    cpu: int | None = None  # pin to this logical CPU


@dataclass(frozen=True)
class InvocationRecord:
    input_event: Any
    output: Any
    exit_ok: bool
    wall_time: float
    cold_start: float
    peak_memory: int
    cpu_time: float
    error: str | None = None  # Timeout | NonZeroExit | OutputNotJson | SpawnFailed
    stderr: str = ""

    def __post_init__(self) -> None:
        if self.exit_ok and self.error is not None:
            raise ValueError("exit_ok record cannot carry an error")

    def to_json(self) -> dict[str, Any]:
        return {
            "input_event": self.input_event,
            "output": self.output,
            "exit_ok": self.exit_ok,
            "wall_time": self.wall_time,
            "cold_start": self.cold_start,
            "peak_memory": self.peak_memory,
            "cpu_time": self.cpu_time,
            "error": self.error,
        }


def _preexec(limits: Limits):
    def setup() -> None:
        if limits.memory_bytes:
            resource.setrlimit(resource.RLIMIT_AS, (limits.memory_bytes, limits.memory_bytes))
        if limits.cpu is not None and hasattr(os, "sched_setaffinity"):
            try:
                os.sched_setaffinity(0, {limits.cpu})
            except OSError:
                pass  # parent logs the downgrade

    return setup


def _spawn(artifact: Artifact, args: tuple[str, ...], limits: Limits, stderr: Any) -> subprocess.Popen:
    if limits.cpu is not None and not hasattr(os, "sched_setaffinity"):
        log.warning("CPU pinning unsupported on this platform; running unpinned")
    env = dict(os.environ)
    env.update(artifact.env)
    return subprocess.Popen(
        list(artifact.command) + list(args),
        cwd=artifact.root,
        env=env,
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=stderr,
        preexec_fn=_preexec(limits),
        start_new_session=True,
    )


def _reap(proc: subprocess.Popen, deadline: float | None) -> tuple[int | None, Any]:
    """Wait for the child with wait4 so its rusage is available."""
    while True:
        pid, status, usage = os.wait4(proc.pid, os.WNOHANG)
        if pid:
            code = os.waitstatus_to_exitcode(status)
            proc.returncode = code
            return code, usage
        if deadline is not None and time.monotonic() > deadline:
            return None, None
        time.sleep(0.0005)


def _kill(proc: subprocess.Popen) -> Any:
    try:
        os.killpg(proc.pid, signal.SIGKILL)
    except ProcessLookupError:
        pass
    _, usage = _reap(proc, None)
    return usage


def invoke(artifact: Artifact, event: Any, limits: Limits = Limits()) -> InvocationRecord:
    """Run one event through a fresh process.

    Failures (timeout, non-zero exit, non-JSON output) are folded into the
    record; nothing is raised past this function.
    """
    payload = json.dumps(event).encode()
    started = time.monotonic()
    deadline = started + limits.timeout
    try:
        proc = _spawn(artifact, (), limits, subprocess.PIPE)
    except OSError as exc:
        return InvocationRecord(event, None, False, 0.0, 0.0, 0, 0.0, "SpawnFailed", str(exc))

    sel = selectors.DefaultSelector()
    os.set_blocking(proc.stdin.fileno(), False)
    sel.register(proc.stdin, selectors.EVENT_WRITE)
    sel.register(proc.stdout, selectors.EVENT_READ)
    sel.register(proc.stderr, selectors.EVENT_READ)
    out, err = bytearray(), bytearray()
    first_byte: float | None = None
    offset = 0
    timed_out = False
    while sel.get_map():
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            timed_out = True
            break
        for key, _ in sel.select(remaining):
            f = key.fileobj
            if f is proc.stdin:
                try:
                    offset += os.write(f.fileno(), payload[offset:])
                except BrokenPipeError:
                    offset = len(payload)
                if offset >= len(payload):
                    sel.unregister(f)
                    f.close()
                continue
            chunk = os.read(f.fileno(), 65536)
            if not chunk:
                sel.unregister(f)
                continue
            if f is proc.stdout:
                if first_byte is None:
                    first_byte = time.monotonic()
                out += chunk
            else:
                err += chunk
    sel.close()

    usage = None
    code = None
    if not timed_out:
        code, usage = _reap(proc, deadline)
        timed_out = code is None
    if timed_out:
        usage = _kill(proc)
    for f in (proc.stdin, proc.stdout, proc.stderr):
        if f and not f.closed:
            f.close()
    wall = time.monotonic() - started
    cpu = (usage.ru_utime + usage.ru_stime) if usage else 0.0
    peak = usage.ru_maxrss * 1024 if usage else 0
    cold = (first_byte - started) if first_byte is not None else wall
    stderr = err[-_STDERR_KEEP:].decode("utf-8", "replace")

    def failed(kind: str) -> InvocationRecord:
        return InvocationRecord(event, None, False, wall, cold, peak, cpu, kind, stderr)

    if timed_out:
        return failed("Timeout")
    if code != 0:
        return failed("NonZeroExit")
    try:
        output = json.loads(out)
    except (ValueError, UnicodeDecodeError):
        return failed("OutputNotJson")
    return InvocationRecord(event, output, True, wall, cold, peak, cpu, None, stderr)


class WarmWorker:
    """A long-lived function process answering one event per line.

    Used by the benchmark harness to drive a function closed-loop, the way a
    warm container would be driven.
    """

    def __init__(self, artifact: Artifact, limits: Limits = Limits()):
        if not artifact.loop_args:
            raise ValueError(f"{artifact.language} artifact has no line-serving mode")
        self.limits = limits
        self._stderr = tempfile.TemporaryFile()
        self.proc = _spawn(artifact, artifact.loop_args, limits, self._stderr)
        self._buf = bytearray()
        self._sel = selectors.DefaultSelector()
        self._sel.register(self.proc.stdout, selectors.EVENT_READ)
        self.usage = None
        self.returncode: int | None = None

    @property
    def pid(self) -> int:
        return self.proc.pid

    def stderr_tail(self) -> str:
        self._stderr.seek(0)
        return self._stderr.read()[-_STDERR_KEEP:].decode("utf-8", "replace")

    def call(self, event: Any, index: int) -> Any:
        try:
            self.proc.stdin.write(json.dumps(event, separators=(",", ":")).encode() + b"\n")
            self.proc.stdin.flush()
        except BrokenPipeError as exc:
            raise ArtifactCrash(index, "process exited") from exc
        deadline = time.monotonic() + self.limits.timeout
        fd = self.proc.stdout.fileno()
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0 or not self._sel.select(remaining):
                raise ArtifactCrash(index, "timeout")
            chunk = os.read(fd, 65536)
            if not chunk:
                raise ArtifactCrash(index, "process exited: " + self.stderr_tail()[-300:])
            self._buf += chunk
        line, _, rest = self._buf.partition(b"\n")
        self._buf = bytearray(rest)
        try:
            return json.loads(line)
        except ValueError as exc:
            raise ArtifactCrash(index, "output is not JSON") from exc

    def close(self, timeout: float = 10.0) -> None:
        if self.proc.returncode is not None and self.usage is not None:
            return
        try:
            self.proc.stdin.close()
        except BrokenPipeError:
            pass
        code, usage = _reap(self.proc, time.monotonic() + timeout)
        if code is None:
            usage = _kill(self.proc)
        self.returncode = self.proc.returncode
        self.usage = usage
        self._sel.close()
        self.proc.stdout.close()
        self._stderr.close()

    def __enter__(self) -> WarmWorker:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()
