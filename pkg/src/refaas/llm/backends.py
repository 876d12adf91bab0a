"""Completion backends: a deterministic replay backend and an HTTP client."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol

import httpx

from refaas.errors import BackendUnavailable, LlmTimeout, TranscriptExhausted


@dataclass(frozen=True)
class LlmRequest:
    model: str
    prompt: str
    temperature: float = 0.1
    max_output_tokens: int = 4096
    # Routing hints for the replay backend; live backends ignore them.
    template_id: str | None = None
    attempt: int | None = None

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class LlmExchange:
    request: LlmRequest
    response_text: str
    prompt_tokens: int
    completion_tokens: int
    wall_time: float
    backend: str

    @property
    def total_tokens(self) -> int:
        return self.prompt_tokens + self.completion_tokens

    def to_json(self) -> dict[str, Any]:
        return {
            "model": self.request.model,
            "template_id": self.request.template_id,
            "attempt": self.request.attempt,
            "temperature": self.request.temperature,
            "prompt": self.request.prompt,
            "response_text": self.response_text,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "wall_time": self.wall_time,
            "backend": self.backend,
        }


class Backend(Protocol):
    id: str

    def complete(self, req: LlmRequest) -> LlmExchange: ...


def whitespace_tokens(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class ReplayEntry:
    template_id: str
    attempt: int | None  # None matches any attempt
    response_text: str
    prompt_contains: str | None = None


class ReplayBackend:
    """Answers from a scripted transcript keyed by (template id, attempt).

    An entry may narrow its match with ``prompt_contains`` so one transcript
    can script several functions. The first matching entry wins; an entry
    with ``attempt: null`` matches every attempt.
    """

    def __init__(self, entries: list[ReplayEntry], id: str = "replay"):
        self.id = id
        self.entries = list(entries)

    @classmethod
    def from_json(cls, doc: Any, id: str = "replay") -> ReplayBackend:
        if not isinstance(doc, list):
            raise ValueError("replay transcript must be a JSON list")
        entries = []
        for i, raw in enumerate(doc):
            try:
                entries.append(
                    ReplayEntry(
                        template_id=str(raw["template_id"]),
                        attempt=None if raw.get("attempt") is None else int(raw["attempt"]),
                        response_text=str(raw["response_text"]),
                        prompt_contains=raw.get("prompt_contains"),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"transcript entry {i} malformed: {exc}") from exc
        return cls(entries, id=id)

    @classmethod
    def from_file(cls, path: str | Path, id: str | None = None) -> ReplayBackend:
        path = Path(path)
        name = path.name.removesuffix(".json").removesuffix(".replay")
        return cls.from_json(json.loads(path.read_text("utf-8")), id=id or f"replay/{name}")

    def complete(self, req: LlmRequest) -> LlmExchange:
        for entry in self.entries:
            if entry.template_id != req.template_id:
                continue
            if entry.attempt is not None and entry.attempt != req.attempt:
                continue
            if entry.prompt_contains is not None and entry.prompt_contains not in req.prompt:
                continue
            return LlmExchange(
                request=req,
                response_text=entry.response_text,
                prompt_tokens=whitespace_tokens(req.prompt),
                completion_tokens=whitespace_tokens(entry.response_text),
                wall_time=0.0,
                backend=self.id,
            )
        raise TranscriptExhausted(
            f"{self.id}: no scripted response for template {req.template_id!r} attempt {req.attempt}"
        )


class HttpBackend:
    """JSON completion endpoint client.

    Profiles:
      ``openai``  POST {base_url}/chat/completions, OpenAI-compatible chat schema
      ``ollama``  POST {base_url}/api/generate with ``stream: false``
    """

    def __init__(
        self,
        base_url: str,
        profile: str = "openai",
        api_key: str | None = None,
        timeout: float = 600.0,
        id: str | None = None,
        transport: httpx.BaseTransport | None = None,
    ):
        if profile not in ("openai", "ollama"):
            raise ValueError(f"unknown backend profile {profile!r}")
        self.base_url = base_url.rstrip("/")
        self.profile = profile
        self.id = id or f"{profile}@{self.base_url}"
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    def _request_body(self, req: LlmRequest) -> tuple[str, dict[str, Any]]:
        if self.profile == "openai":
            return f"{self.base_url}/chat/completions", {
                "model": req.model,
                "messages": [{"role": "user", "content": req.prompt}],
                "temperature": req.temperature,
                "max_tokens": req.max_output_tokens,
                "stream": False,
            }
        return f"{self.base_url}/api/generate", {
            "model": req.model,
            "prompt": req.prompt,
            "stream": False,
            "options": {"temperature": req.temperature, "num_predict": req.max_output_tokens},
        }

    def _parse(self, req: LlmRequest, doc: dict[str, Any]) -> tuple[str, int, int]:
        if self.profile == "openai":
            text = doc["choices"][0]["message"]["content"] or ""
            usage = doc.get("usage") or {}
            pt = usage.get("prompt_tokens")
            ct = usage.get("completion_tokens")
        else:
            text = doc.get("response", "")
            pt = doc.get("prompt_eval_count")
            ct = doc.get("eval_count")
        # Servers that omit usage fall back to whitespace counting.
        pt = whitespace_tokens(req.prompt) if pt is None else int(pt)
        ct = whitespace_tokens(text) if ct is None else int(ct)
        return text, pt, ct

    def complete(self, req: LlmRequest) -> LlmExchange:
        url, body = self._request_body(req)
        started = time.monotonic()
        try:
            resp = self._client.post(url, json=body)
        except httpx.TimeoutException as exc:
            raise LlmTimeout(f"{self.id}: {exc}") from exc
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"{self.id}: {exc}") from exc
        if resp.status_code >= 400:
            raise BackendUnavailable(f"{self.id}: HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            text, pt, ct = self._parse(req, resp.json())
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"{self.id}: unexpected response shape: {exc}") from exc
        return LlmExchange(req, text, max(pt, 0), max(ct, 0), time.monotonic() - started, self.id)

    def close(self) -> None:
        self._client.close()
