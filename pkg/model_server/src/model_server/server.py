"""HTTP service for question-to-query translation.

Wire contract: ``POST /translate`` takes ``{"question": str,
"num_beams": int}`` and returns ``{"logical_form": str, "beams":
[str]}`` with exactly ``num_beams`` entries; ``GET /healthz`` reports
readiness.  Malformed request bodies get HTTP 400.
"""

import errno
import socket
import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field


class ModelLoadError(RuntimeError):
    pass


class PortInUse(RuntimeError):
    pass


class TranslateRequest(BaseModel):
    question: str = Field(min_length=1)
    num_beams: int = Field(default=1, ge=1, le=20)


class TranslateResponse(BaseModel):
    logical_form: str
    beams: list[str]


def create_app(model) -> FastAPI:
    """Wrap a loaded TranslationModel in the HTTP contract."""
    app = FastAPI(title="question-to-query translation")
    lock = threading.Lock()  # model inference is serialized

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"error": "malformed request body",
                                     "detail": exc.errors()})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/translate", response_model=TranslateResponse)
    def translate(request: TranslateRequest) -> TranslateResponse:
        with lock:
            beams = model.translate(request.question, request.num_beams)
        return TranslateResponse(logical_form=beams[0], beams=beams)

    return app


def serve(model_dir, host: str = "127.0.0.1", port: int = 8764) -> None:
    """Load artifacts and run the service until interrupted."""
    import uvicorn

    from .training import TranslationModel

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError as exc:
        if exc.errno == errno.EADDRINUSE:
            raise PortInUse(f"{host}:{port} is already bound") from None
        raise
    finally:
        probe.close()

    app = create_app(TranslationModel.load(model_dir))
    uvicorn.run(app, host=host, port=port, log_level="warning")
