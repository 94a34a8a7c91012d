"""HTTP front end exposing the simulator to non-Python clients."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import api
from .errors import LoopsimError, NotFound


def create_app() -> FastAPI:
    app = FastAPI(title="loopsim", version="0.1.0")

    @app.exception_handler(LoopsimError)
    async def loopsim_error(request: Request, exc: LoopsimError) -> JSONResponse:
        status = 404 if isinstance(exc, NotFound) else 400
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok"}

    @app.post("/synth", response_model=api.SynthResponse)
    def synth(req: api.SynthRequest) -> api.SynthResponse:
        return api.synth(req)

    @app.post("/simulate", response_model=api.SimulateResponse)
    def simulate(req: api.SimulateRequest) -> api.SimulateResponse:
        return api.simulate(req)

    @app.post("/compare", response_model=api.CompareResponse)
    def compare(req: api.CompareRequest) -> api.CompareResponse:
        return api.compare(req)

    return app


app = create_app()
