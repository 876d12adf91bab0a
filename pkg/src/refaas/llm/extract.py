"""Pull source code out of free-form model responses."""

from __future__ import annotations

import re

from refaas import languages
from refaas.errors import ExtractionFailed

_FENCE_RE = re.compile(r"^ {0,3}(`{3,}|~{3,})\s*([^`\s]*)[^`]*$")
_THINK_RE = re.compile(r"<think>.*?(</think>|$)", re.DOTALL)


def _fenced_blocks(text: str) -> list[tuple[str, str]]:
    blocks = []
    lines = text.split("\n")
    i = 0
    while i < len(lines):
        m = _FENCE_RE.match(lines[i])
        if not m:
            i += 1
            continue
        fence, info = m.group(1), m.group(2).lower()
        body = []
        i += 1
        while i < len(lines):
            stripped = lines[i].strip()
            if stripped.startswith(fence[0] * len(fence)) and set(stripped) == {fence[0]}:
                break
            body.append(lines[i])
            i += 1
        # An unterminated fence runs to the end of the text (truncated answers).
        blocks.append((info, "\n".join(body)))
        i += 1
    return blocks


def looks_like_code(text: str, target: str) -> bool:
    """First non-blank, non-comment line matches the language's anchor."""
    adapter = languages.get_adapter(target)
    for line in text.split("\n"):
        s = line.strip()
        if not s or any(s.startswith(p) for p in adapter.comment_prefixes):
            continue
        return bool(adapter.code_anchor.match(s))
    return False


def extract_code(response_text: str, target: str) -> str:
    """Return the code the model meant as its answer.

    Picks the last fenced block tagged with the target language (or untagged)
    whose content looks like code. Without any fence, the whole text is
    returned unchanged when it looks like code.
    """
    adapter = languages.get_adapter(target)
    text = _THINK_RE.sub("", response_text)
    blocks = _fenced_blocks(text)
    if blocks:
        candidates = [body for info, body in blocks if info in adapter.fence_tags or info == ""]
        for body in reversed(candidates):
            if looks_like_code(body, target):
                return body
        raise ExtractionFailed(
            f"no usable ```{adapter.fence_tags[0]} block among {len(blocks)} fenced block(s)"
        )
    if looks_like_code(text, target):
        return text
    raise ExtractionFailed("response contains no code block and does not look like code")
