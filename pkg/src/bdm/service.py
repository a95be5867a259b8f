"""HTTP service wrapping the experiment runner.

``POST /run`` takes an ``ExperimentConfig`` and answers with a ``Report``
(200), or an ``ErrorReport`` with status 422 (``ConfigError``) or 500
(``NumericalFailure``).
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import SCHEMA_VERSION, __version__
from .errors import ConfigError, NumericalFailure
from .experiments import run
from .schemas import EXPERIMENTS, ErrorReport, ExperimentConfig, Report

app = FastAPI(title="bdm", version=__version__)


def _error(status: int, kind: str, message: str, check=None) -> JSONResponse:
    body = ErrorReport(error=kind, message=message, check=check)
    return JSONResponse(status_code=status, content=body.model_dump(mode="json"))


@app.exception_handler(RequestValidationError)
async def _validation(_: Request, exc: RequestValidationError):
    msgs = "; ".join(f"{'.'.join(map(str, e['loc']))}: {e['msg']}" for e in exc.errors())
    return _error(422, "ConfigError", msgs)


@app.exception_handler(ConfigError)
async def _config(_: Request, exc: ConfigError):
    return _error(422, "ConfigError", str(exc))


@app.exception_handler(NumericalFailure)
async def _numerical(_: Request, exc: NumericalFailure):
    return _error(500, "NumericalFailure", str(exc), exc.check)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__, "schema_version": SCHEMA_VERSION}


@app.get("/experiments")
def experiments() -> list[str]:
    return list(EXPERIMENTS)


@app.post("/run", response_model=Report)
def run_experiment(cfg: ExperimentConfig) -> Report:
    return run(cfg)
