from __future__ import annotations

import fnmatch
import threading
from dataclasses import dataclass

from refaas.errors import BackendUnavailable
from refaas.llm.backends import Backend, LlmExchange, LlmRequest


@dataclass
class _Route:
    pattern: str
    backend: Backend
    permits: threading.BoundedSemaphore


class LlmGateway:
    """Routes requests to backends by model id.

    Routes are glob patterns checked in registration order. Each backend has
    a permit count bounding its concurrent requests.
    """

    def __init__(self) -> None:
        self._routes: list[_Route] = []
        self._permits: dict[str, threading.BoundedSemaphore] = {}

    def add_backend(self, backend: Backend, models: list[str] | str, permits: int = 1) -> None:
        if isinstance(models, str):
            models = [models]
        sem = self._permits.setdefault(backend.id, threading.BoundedSemaphore(max(1, permits)))
        for pattern in models:
            self._routes.append(_Route(pattern, backend, sem))

    def resolve(self, model: str) -> _Route:
        for route in self._routes:
            if fnmatch.fnmatchcase(model, route.pattern):
                return route
        raise BackendUnavailable(f"no backend configured for model {model!r}")

    def complete(self, req: LlmRequest) -> LlmExchange:
        route = self.resolve(req.model)
        with route.permits:
            return route.backend.complete(req)
