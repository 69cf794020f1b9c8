"""Ingestion pipeline: parse, annotate, filter, and serialize one project."""

from __future__ import annotations

from dataclasses import replace

from . import dataset as ds
from .errors import ProjectRejectedError
from .genderize import GenderInferenceClient, infer_gender


def ingest_project(
    name: str,
    reviewers_source: bytes | str,
    reviews_source: bytes | str,
    reviewers_format: str = "csv",
    max_unknown: float = ds.DEFAULT_MAX_UNKNOWN_RATE,
    min_protected: int = ds.DEFAULT_MIN_GROUP_SIZE,
    inference_client: GenderInferenceClient | None = None,
) -> tuple[ds.ProjectDataset, list[ds.FilterEvent]]:
    """Run the full ingestion pipeline for one project.

    Parses the roster and records, optionally resolves unknown genders
    through the inference client, then applies the acceptance filter.
    Raises ProjectRejectedError when the project does not survive it.
    """
    roster = ds.parse_reviewers(reviewers_source, format=reviewers_format)
    records = ds.parse_reviews(reviews_source)

    log: list[ds.FilterEvent] = []
    if inference_client is not None:
        roster = _resolve_unknowns(roster, inference_client, log)

    project = ds.build_project(name, roster, records)
    kept = ds.filter_projects([project], max_unknown=max_unknown, min_protected=min_protected, log=log)
    if not kept:
        reason = log[-1].reason if log and log[-1].kind == "project" else "acceptance filter"
        raise ProjectRejectedError(f"project rejected: {reason}")
    return kept[0], log


def _resolve_unknowns(
    roster: list[ds.Reviewer],
    client: GenderInferenceClient,
    log: list[ds.FilterEvent],
) -> list[ds.Reviewer]:
    resolved: list[ds.Reviewer] = []
    for reviewer in roster:
        if reviewer.gender is not ds.Gender.UNKNOWN or ds.is_nickname(reviewer.display_name):
            resolved.append(reviewer)
            continue
        first_name = reviewer.display_name.split()[0]
        result = infer_gender(first_name, client)
        if result is None:
            resolved.append(reviewer)
            continue
        resolved.append(replace(reviewer, gender=result.gender, gender_source=ds.GenderSource.INFERRED_API))
        log.append(ds.FilterEvent(
            "reviewer", reviewer.id,
            f"gender inferred as {result.gender.value} (p={result.probability:.2f})",
        ))
    return resolved
