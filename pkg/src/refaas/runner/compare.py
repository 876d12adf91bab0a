"""Semantic JSON comparison.

Objects compare key-order-insensitively, arrays positionally. Numbers are
equal within a relative tolerance (absolute when the expected value is 0);
strings, booleans and null compare exactly. Per-path overrides relax or
tighten the rule for one subtree.
"""

from __future__ import annotations

import re
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Any

from refaas import pointer
from refaas.errors import InvalidPattern
from refaas.model import MatchMode, MatchOverride

DEFAULT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Mismatch:
    path: str
    kind: str  # missing | extra | type | value | pattern
    detail: str

    def to_json(self) -> dict[str, str]:
        return {"path": self.path, "kind": self.kind, "detail": self.detail}


@dataclass(frozen=True)
class ComparisonVerdict:
    mismatches: tuple[Mismatch, ...] = field(default_factory=tuple)

    @property
    def equal(self) -> bool:
        return not self.mismatches

    def to_json(self) -> dict[str, Any]:
        return {"equal": self.equal, "mismatches": [m.to_json() for m in self.mismatches]}


def json_type(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, (int, float)):
        return "number"
    if isinstance(v, str):
        return "string"
    if isinstance(v, list):
        return "array"
    if isinstance(v, dict):
        return "object"
    raise TypeError(f"not a JSON value: {type(v).__name__}")


def numbers_close(expected: float, actual: float, tolerance: float) -> bool:
    if expected == actual:
        return True
    if expected == 0:
        return abs(actual) <= tolerance
    return abs(actual - expected) <= tolerance * abs(expected)


def _strict_equal(a: Any, b: Any) -> bool:
    ta, tb = json_type(a), json_type(b)
    if ta != tb:
        return False
    if ta == "object":
        return a.keys() == b.keys() and all(_strict_equal(a[k], b[k]) for k in a)
    if ta == "array":
        return len(a) == len(b) and all(_strict_equal(x, y) for x, y in zip(a, b))
    return a == b


def _short(v: Any) -> str:
    text = repr(v)
    return text if len(text) <= 80 else text[:77] + "..."


def compare_json(
    expected: Any,
    actual: Any,
    overrides: Iterable[MatchOverride] = (),
    tolerance: float = DEFAULT_TOLERANCE,
) -> ComparisonVerdict:
    if tolerance < 0:
        raise ValueError("tolerance must be non-negative")
    rules: dict[str, tuple[MatchOverride, re.Pattern[str] | None]] = {}
    for ov in overrides:
        compiled = None
        if ov.mode is MatchMode.PATTERN:
            try:
                compiled = re.compile(ov.pattern or "")
            except re.error as exc:
                raise InvalidPattern(ov.path, str(exc)) from exc
        rules[ov.path] = (ov, compiled)

    out: list[Mismatch] = []

    def walk(e: Any, a: Any, path: str) -> None:
        rule = rules.get(path)
        if rule is not None:
            ov, rx = rule
            if ov.mode is MatchMode.PRESENT:
                return
            if ov.mode is MatchMode.PATTERN:
                if not isinstance(a, str) or not rx.fullmatch(a):
                    out.append(Mismatch(path, "pattern", f"{_short(a)} does not match /{ov.pattern}/"))
                return
            if not _strict_equal(e, a):
                out.append(Mismatch(path, "value", f"expected exactly {_short(e)}, got {_short(a)}"))
            return

        te, ta = json_type(e), json_type(a)
        if te != ta:
            out.append(Mismatch(path, "type", f"expected {te}, got {ta}"))
            return
        if te == "object":
            for key in sorted(set(e) | set(a)):
                sub = pointer.child(path, key)
                if key not in a:
                    out.append(Mismatch(sub, "missing", f"expected {_short(e[key])}"))
                elif key not in e:
                    r = rules.get(sub)
                    if r is None or r[0].mode is not MatchMode.PRESENT:
                        out.append(Mismatch(sub, "extra", f"unexpected {_short(a[key])}"))
                else:
                    walk(e[key], a[key], sub)
        elif te == "array":
            for i in range(max(len(e), len(a))):
                sub = pointer.child(path, i)
                if i >= len(a):
                    out.append(Mismatch(sub, "missing", f"expected {_short(e[i])}"))
                elif i >= len(e):
                    out.append(Mismatch(sub, "extra", f"unexpected {_short(a[i])}"))
                else:
                    walk(e[i], a[i], sub)
        elif te == "number":
            if not numbers_close(e, a, tolerance):
                out.append(Mismatch(path, "value", f"expected {e!r}, got {a!r}"))
        elif e != a:
            out.append(Mismatch(path, "value", f"expected {_short(e)}, got {_short(a)}"))

    walk(expected, actual, "")
    return ComparisonVerdict(tuple(out))
