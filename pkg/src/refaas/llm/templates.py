from __future__ import annotations

import re
from collections.abc import Mapping
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from refaas.errors import MissingBinding, SchemaError

_TOKEN_RE = re.compile(r"\{\{|\}\}|\{([A-Za-z_][A-Za-z0-9_]*)\}")


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str
    produces: str = "code"  # "code" or "text"

    @property
    def placeholders(self) -> frozenset[str]:
        return frozenset(m.group(1) for m in _TOKEN_RE.finditer(self.body) if m.group(1))


def render(template: PromptTemplate, bindings: Mapping[str, object]) -> str:
    """Substitute ``{name}`` placeholders in one pass.

    Bound values are inserted verbatim, so braces inside them are never
    re-expanded. ``{{`` and ``}}`` render as literal braces.
    """
    missing = sorted(template.placeholders - set(bindings))
    if missing:
        raise MissingBinding(missing[0])

    def sub(m: re.Match[str]) -> str:
        tok = m.group(0)
        if tok == "{{":
            return "{"
        if tok == "}}":
            return "}"
        return str(bindings[m.group(1)])

    return _TOKEN_RE.sub(sub, template.body)


def load_templates(source: str | Path | None = None) -> dict[str, PromptTemplate]:
    """Load templates from a YAML file; defaults to the bundled set."""
    if source is None:
        text = (resources.files("refaas.llm") / "templates.yaml").read_text(encoding="utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    doc = yaml.safe_load(text) or {}
    out = {}
    for tid, entry in doc.items():
        if not isinstance(entry, dict) or "body" not in entry:
            raise SchemaError(f"templates.{tid}", "needs a body")
        produces = entry.get("produces", "code")
        if produces not in ("code", "text"):
            raise SchemaError(f"templates.{tid}.produces", f"unknown value {produces!r}")
        out[tid] = PromptTemplate(str(tid), str(entry["body"]), produces)
    return out
