"""FastAPI front end over the construction and verification handlers.

Run with ``uvicorn handleforge.service.app:app``.  Usage errors (wrong
parameter regime, malformed documents) map to HTTP 400; a construction whose
certification fails is still a successful computation and returns 200 with
``passed: false``.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from ..errors import HandleForgeError, UsageError
from . import handlers
from .schemas import (
    ConstructInnerRequest,
    ConstructOuterRequest,
    ConstructQuadraticRequest,
    ConstructResponse,
    ExportRequest,
    VerifyRequest,
    VerifyResponse,
)

app = FastAPI(title="handleforge",
              description="Strongly pseudoconvex handlebody construction "
                          "and certification service")


@app.exception_handler(UsageError)
async def usage_error_handler(request: Request, exc: UsageError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(HandleForgeError)
async def library_error_handler(request: Request, exc: HandleForgeError):
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/construct/outer", response_model=ConstructResponse)
def construct_outer(req: ConstructOuterRequest) -> ConstructResponse:
    return handlers.construct_outer(req)


@app.post("/construct/inner", response_model=ConstructResponse)
def construct_inner(req: ConstructInnerRequest) -> ConstructResponse:
    return handlers.construct_inner(req)


@app.post("/construct/quadratic", response_model=ConstructResponse)
def construct_quadratic(req: ConstructQuadraticRequest) -> ConstructResponse:
    return handlers.construct_quadratic(req)


@app.post("/verify", response_model=VerifyResponse)
def verify(req: VerifyRequest) -> VerifyResponse:
    return handlers.verify(req)


@app.post("/export", response_class=PlainTextResponse)
def export(req: ExportRequest) -> str:
    return handlers.export_csv(req)
