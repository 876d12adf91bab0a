"""Minimal JSON Pointer helpers (RFC 6901 syntax only; no resolution)."""

from __future__ import annotations

import re

_POINTER_RE = re.compile(r"^(/([^~/]|~[01])*)*$")


def is_valid(pointer: str) -> bool:
    return isinstance(pointer, str) and bool(_POINTER_RE.match(pointer))


def escape(token: str | int) -> str:
    return str(token).replace("~", "~0").replace("/", "~1")


def child(pointer: str, token: str | int) -> str:
    return f"{pointer}/{escape(token)}"
