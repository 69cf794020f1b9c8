"""FastAPI service exposing the audit pipeline.

Endpoints accept file content inline and return both structured documents
and canonical renderings, so any client that can speak JSON can drive the
toolkit without sharing a filesystem with it.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..audit import AuditConfig, compare_reports, render_json, render_markdown, run_audit
from ..dataset import dataset_from_doc, dataset_to_doc
from ..errors import FairrankError, InputError
from ..genderize import GenderInferenceClient
from ..ingest import ingest_project
from .schemas import (
    AuditRequest,
    AuditResponse,
    CompareRequest,
    CompareResponse,
    HealthResponse,
    IngestRequest,
    IngestResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="fairrank", version=__version__)

    @app.exception_handler(InputError)
    async def _input_error(_, exc: InputError):
        raise HTTPException(status_code=422, detail=str(exc))

    @app.exception_handler(FairrankError)
    async def _tool_error(_, exc: FairrankError):
        raise HTTPException(status_code=500, detail=str(exc))

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/ingest", response_model=IngestResponse)
    def ingest(request: IngestRequest) -> IngestResponse:
        client = GenderInferenceClient.from_env() if request.infer_genders else None
        try:
            dataset, log = ingest_project(
                name=request.project_name,
                reviewers_source=request.reviewers,
                reviews_source=request.reviews,
                reviewers_format=request.reviewers_format,
                max_unknown=request.max_unknown,
                min_protected=request.min_protected,
                inference_client=client,
            )
        finally:
            if client is not None:
                client.close()
        doc = dataset_to_doc(dataset, filter_log=log)
        return IngestResponse(dataset=doc, rendered=json.dumps(doc, sort_keys=True, indent=2) + "\n")

    @app.post("/audit", response_model=AuditResponse)
    def audit(request: AuditRequest) -> AuditResponse:
        dataset = dataset_from_doc(request.dataset)
        config = AuditConfig(
            k_set=tuple(request.config.k_set),
            protected_group=request.config.protected_group,
            strategies=tuple(request.config.strategies),
            recommender=request.config.recommender,
            train_fraction=request.config.train_fraction,
            ndkl_mode=request.config.ndkl_mode,
        )
        report = run_audit(dataset, config, external_scores=request.external_scores)
        rendered = render_json(report) if request.format == "json" else render_markdown(report)
        return AuditResponse(report=report, rendered=rendered)

    @app.post("/compare", response_model=CompareResponse)
    def compare(request: CompareRequest) -> CompareResponse:
        measures = tuple(request.measures) if request.measures else None
        summary = compare_reports(
            request.baseline, request.treatment,
            alternative=request.alternative, measures=measures,
        )
        return CompareResponse(**summary)

    return app


app = create_app()
