"""HTTP facade over RefaasService."""

from __future__ import annotations

import json
import secrets
from typing import Any

from fastapi import Depends, FastAPI, File, Form, Header, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse, PlainTextResponse, Response

from refaas import __version__
from refaas.errors import JobNotFound, JobNotTerminal, QueueFull, RefaasError
from refaas.service.core import RefaasService

TOKEN_HEADER = "X-Refaas-Token"


def _error(status: int, exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": type(exc).__name__, "detail": str(exc)})


def create_app(service: RefaasService) -> FastAPI:
    app = FastAPI(title="refaas", version=__version__)
    app.state.service = service

    def check_token(x_refaas_token: str | None = Header(default=None)) -> None:
        expected = service.config.token
        if expected and not (x_refaas_token and secrets.compare_digest(x_refaas_token, expected)):
            raise HTTPException(status_code=401, detail="missing or wrong shared token")

    @app.exception_handler(JobNotFound)
    async def not_found(_: Request, exc: JobNotFound) -> JSONResponse:
        return _error(404, exc)

    @app.exception_handler(JobNotTerminal)
    async def not_terminal(_: Request, exc: JobNotTerminal) -> JSONResponse:
        return _error(409, exc)

    @app.exception_handler(QueueFull)
    async def queue_full(_: Request, exc: QueueFull) -> JSONResponse:
        return _error(429, exc)

    @app.exception_handler(RefaasError)
    async def bad_input(_: Request, exc: RefaasError) -> JSONResponse:
        return _error(400, exc)

    @app.get("/healthz")
    def healthz() -> dict[str, Any]:
        return {"status": "ok", "queued": len(service.queue), "busy_workers": service.pool.busy}

    @app.post("/v1/jobs", status_code=202, dependencies=[Depends(check_token)])
    async def submit(
        package: UploadFile = File(...),
        tests: UploadFile = File(...),
        options: str = Form("{}"),
    ) -> dict[str, str]:
        try:
            opts = json.loads(options or "{}")
        except ValueError as exc:
            return _error(400, exc)  # type: ignore[return-value]
        if not isinstance(opts, dict):
            return _error(400, ValueError("options must be a JSON object"))  # type: ignore[return-value]
        job_id = service.submit(await package.read(), await tests.read(), opts)
        return {"job_id": job_id}

    @app.get("/v1/jobs/{job_id}", dependencies=[Depends(check_token)])
    def status(job_id: str) -> dict[str, Any]:
        return service.status(job_id)

    @app.get("/v1/jobs/{job_id}/artifact", dependencies=[Depends(check_token)])
    def artifact(job_id: str) -> Response:
        data, kind = service.artifact(job_id)
        return Response(
            content=data,
            media_type="application/zip",
            headers={
                "Content-Disposition": f'attachment; filename="{job_id}-{kind}.zip"',
                "X-Refaas-Artifact-Kind": kind,
            },
        )

    @app.get("/v1/metrics", response_class=PlainTextResponse, dependencies=[Depends(check_token)])
    def metrics() -> str:
        return service.metrics_text()

    @app.post("/v1/platform/fission/build-hook", dependencies=[Depends(check_token)])
    async def build_hook(request: Request) -> JSONResponse:
        try:
            event = await request.json()
        except ValueError as exc:
            return _error(400, exc)
        if not isinstance(event, dict):
            return _error(400, ValueError("build event must be a JSON object"))
        result = service.platform_hook(event)
        return JSONResponse(status_code=202 if result["job_id"] else 200, content=result)

    return app
