from __future__ import annotations

import os
import shutil
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from refaas import languages
from refaas.errors import AdapterMissing, BuildTimeout
from refaas.model import DeploymentPackage


@dataclass(frozen=True)
class Artifact:
    """A built function ready to be spawned."""

    language: str
    root: Path
    command: tuple[str, ...]
    loop_args: tuple[str, ...] = ()
    env: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class BuildResult:
    ok: bool
    artifact: Artifact | None
    stderr: str
    duration: float

    def __post_init__(self) -> None:
        if self.ok and self.artifact is None:
            raise ValueError("successful build must carry an artifact")
        if not self.ok and not self.stderr:
            raise ValueError("failed build must carry diagnostics")


def _fill(template: str, values: dict[str, str]) -> str:
    for key, val in values.items():
        template = template.replace("{" + key + "}", val)
    return template


def build(pkg: DeploymentPackage, workdir: str | Path) -> BuildResult:
    """Build ``pkg`` inside ``workdir`` (which must be empty or absent).

    Compile failures come back as ``ok=False`` with the toolchain output
    verbatim; only a missing toolchain or a timeout raise.
    """
    adapter = languages.get_adapter(pkg.language)
    workdir = Path(workdir).resolve()
    workdir.mkdir(parents=True, exist_ok=True)
    if any(workdir.iterdir()):
        raise ValueError(f"build sandbox {workdir} is not empty")
    src = workdir / "src"
    out = workdir / "artifact"
    src.mkdir()
    out.mkdir()

    for rel, content in pkg.files.items():
        dest = src / rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_bytes(content)
    for rel, content in adapter.scaffold.items():
        if rel not in pkg.files:
            (src / rel).write_text(content, encoding="utf-8")
    (src / adapter.shim_name).write_text(adapter.shim_source, encoding="utf-8")

    values = {
        "python": sys.executable,
        "src": str(src),
        "artifact": str(out),
        "entrypoint": pkg.manifest.entrypoint,
    }
    env = dict(os.environ)
    env.update(adapter.build_env)
    started = time.monotonic()
    for step in adapter.build_steps:
        if step.when_exists and not (src / step.when_exists).exists():
            continue
        cmd = [_fill(c, values) for c in step.command]
        remaining = adapter.build_timeout - (time.monotonic() - started)
        if remaining <= 0:
            raise BuildTimeout(f"{adapter.name} build exceeded {adapter.build_timeout:.0f}s")
        try:
            proc = subprocess.run(
                cmd, cwd=src, env=env, capture_output=True, timeout=remaining, stdin=subprocess.DEVNULL
            )
        except FileNotFoundError as exc:
            raise AdapterMissing(f"toolchain for {adapter.name} not found: {cmd[0]}") from exc
        except subprocess.TimeoutExpired as exc:
            raise BuildTimeout(f"{adapter.name} build exceeded {adapter.build_timeout:.0f}s") from exc
        if proc.returncode != 0:
            diag = (proc.stderr.decode("utf-8", "replace") + proc.stdout.decode("utf-8", "replace")).strip()
            return BuildResult(
                ok=False,
                artifact=None,
                stderr=diag or f"{cmd[0]} exited with status {proc.returncode}",
                duration=time.monotonic() - started,
            )

    if adapter.artifact_mode == "copy-source":
        shutil.copytree(src, out, dirs_exist_ok=True, ignore=shutil.ignore_patterns("__pycache__"))
    run_env = {k: _fill(v, values) for k, v in adapter.run_env.items()}
    run_env["REFAAS_ENTRYPOINT"] = pkg.manifest.entrypoint
    artifact = Artifact(
        language=adapter.name,
        root=out,
        command=tuple(_fill(c, values) for c in adapter.run_command),
        loop_args=adapter.loop_args,
        env=run_env,
    )
    return BuildResult(ok=True, artifact=artifact, stderr="", duration=time.monotonic() - started)
