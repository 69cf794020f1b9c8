"""Pydantic request/response models for the audit service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..dataset import DEFAULT_MAX_UNKNOWN_RATE, DEFAULT_MIN_GROUP_SIZE


class IngestRequest(BaseModel):
    project_name: str = Field(..., min_length=1)
    reviewers: str = Field(..., description="Reviewers file content")
    reviewers_format: Literal["csv", "json"] = "csv"
    reviews: str = Field(..., description="Reviews CSV content")
    max_unknown: float = Field(DEFAULT_MAX_UNKNOWN_RATE, ge=0.0, le=1.0)
    min_protected: int = Field(DEFAULT_MIN_GROUP_SIZE, ge=1)
    infer_genders: bool = Field(
        False, description="Resolve unknown genders through the configured inference API"
    )


class IngestResponse(BaseModel):
    dataset: dict
    rendered: str


class AuditConfigModel(BaseModel):
    k_set: list[int] = [4, 6, 10]
    protected_group: Literal["female", "male"] = "female"
    strategies: list[str] = ["none", "detgreedy", "detrelaxed", "igrr"]
    recommender: Literal["revfinder", "external"] = "revfinder"
    train_fraction: float = Field(0.8, gt=0.0, lt=1.0)
    ndkl_mode: Literal["topk", "standard"] = "topk"


class AuditRequest(BaseModel):
    dataset: dict = Field(..., description="Dataset document produced by /ingest")
    config: AuditConfigModel = AuditConfigModel()
    external_scores: Optional[str] = Field(
        None, description="record_id,reviewer_id,score CSV for the external recommender"
    )
    format: Literal["json", "markdown"] = "json"


class AuditResponse(BaseModel):
    report: dict
    rendered: str


class CompareRequest(BaseModel):
    baseline: dict
    treatment: dict
    alternative: Literal["two_sided", "greater", "less"] = "two_sided"
    measures: Optional[list[str]] = None


class CompareResponse(BaseModel):
    statistic: float
    p_value: float
    n: int
    pairs_total: int
    exact: bool
    alternative: str
    alpha: float
    significant: bool


class HealthResponse(BaseModel):
    status: str
    version: str
