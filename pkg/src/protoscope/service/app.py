"""HTTP front end: submit scenarios, run the corpus, list algorithms.

The service is stateless; each request parses, generates, and evaluates
from scratch, so concurrent requests are independent.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from .. import __version__
from ..adversaries import UnknownAlgorithmError, default_registry
from ..corpus import UnknownCorpusError
from ..scenario import ScenarioError, parse_scenario
from ..systems import BoundExceededError, ProtocolError
from ..workbench import corpus_list, corpus_scenario, run_scenario
from .schemas import CheckRequest, ReportModel, RunOptions


def create_app() -> FastAPI:
    app = FastAPI(
        title="protoscope",
        version=__version__,
        description=(
            "Bounded symbolic analysis of message-passing security protocols "
            "under pluggable adversary knowledge algorithms."
        ),
    )

    @app.exception_handler(ScenarioError)
    async def scenario_error(request, exc: ScenarioError):
        return JSONResponse(
            status_code=400,
            content={
                "detail": "scenario has errors",
                "diagnostics": [
                    {"line": d.line, "message": d.message} for d in exc.diagnostics
                ],
            },
        )

    @app.exception_handler(UnknownAlgorithmError)
    async def unknown_algorithm(request, exc: UnknownAlgorithmError):
        return JSONResponse(status_code=400, content={"detail": exc.args[0], "diagnostics": []})

    @app.exception_handler(ProtocolError)
    async def protocol_error(request, exc: ProtocolError):
        return JSONResponse(status_code=400, content={"detail": str(exc), "diagnostics": []})

    @app.exception_handler(BoundExceededError)
    async def bound_exceeded(request, exc: BoundExceededError):
        return JSONResponse(status_code=422, content={"detail": str(exc), "diagnostics": []})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/algorithms")
    def algorithms() -> dict:
        return {"algorithms": default_registry().names()}

    @app.get("/corpus")
    def corpus() -> dict:
        return {"scenarios": corpus_list()}

    @app.post("/corpus/{name}/run", response_model=ReportModel, response_model_by_alias=True)
    def run_corpus(name: str, options: RunOptions | None = None):
        options = options or RunOptions()
        try:
            scenario = corpus_scenario(name)
        except UnknownCorpusError as exc:
            raise HTTPException(status_code=404, detail=exc.args[0]) from None
        report = run_scenario(
            scenario,
            mode=options.mode,
            algorithm=options.algorithm,
            debug_lowe=options.debug_lowe,
        )
        return report.to_json_dict()

    @app.post("/check", response_model=ReportModel, response_model_by_alias=True)
    def check(request: CheckRequest):
        scenario = parse_scenario(request.scenario_text)
        report = run_scenario(
            scenario,
            mode=request.mode,
            algorithm=request.algorithm,
            debug_lowe=request.debug_lowe,
        )
        return report.to_json_dict()

    return app


app = create_app()
