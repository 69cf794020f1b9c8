"""Reviewer rosters, review records, and the project acceptance filter.

Ingested projects go through the same pipeline end to end: reviewers are
annotated with a binary gender attribute, projects with too many unknown
identities are discarded, and the surviving records are split
chronologically for training/testing a recommender.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import InputError, ProjectRejectedError

DEFAULT_MAX_UNKNOWN_RATE = 0.10
DEFAULT_MIN_GROUP_SIZE = 2

REVIEWERS_CSV_HEADER = ["id", "name", "gender", "gender_source"]
REVIEWS_CSV_HEADER = ["review_id", "timestamp", "file_paths", "subject", "actual_reviewers"]

# Name characters that do not mark a nickname, besides letters and whitespace.
NAME_PUNCTUATION = "-'."


class Gender(str, Enum):
    MALE = "male"
    FEMALE = "female"
    UNKNOWN = "unknown"


class GenderSource(str, Enum):
    DATASET = "dataset"
    MANUAL = "manual"
    INFERRED_API = "inferred_api"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class Reviewer:
    """One roster entry: identity plus the sensitive attribute."""

    id: str
    display_name: str = ""
    gender: Gender = Gender.UNKNOWN
    gender_source: GenderSource = GenderSource.UNRESOLVED

    def __post_init__(self) -> None:
        if not self.id:
            raise InputError("reviewer id must be non-empty")
        if self.gender_source is GenderSource.INFERRED_API and self.gender is Gender.UNKNOWN:
            raise InputError(f"reviewer {self.id}: inferred_api source requires a known gender")


@dataclass(frozen=True)
class ReviewRecord:
    """One code-review request with its ground-truth reviewers."""

    review_id: str
    timestamp: int
    file_paths: tuple[str, ...]
    subject: str = ""
    actual_reviewers: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if not self.review_id:
            raise InputError("review_id must be non-empty")
        if not self.file_paths:
            raise InputError(f"record {self.review_id}: file_paths must be non-empty")
        if not self.actual_reviewers:
            raise InputError(f"record {self.review_id}: actual_reviewers must be non-empty")


@dataclass(frozen=True)
class ProjectDataset:
    """A project's roster and chronologically sorted review records.

    ``unknown_name_rate`` is the rate measured at ingest time, before any
    unknown-gender reviewers are stripped; the acceptance filter reads this
    recorded value rather than recomputing it, which keeps filtering
    idempotent.
    """

    name: str
    roster: tuple[Reviewer, ...]
    records: tuple[ReviewRecord, ...]
    unknown_name_rate: float = 0.0

    def __post_init__(self) -> None:
        ids = [r.id for r in self.roster]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise InputError(f"duplicate reviewer id {dupes[0]}")
        keys = [(rec.timestamp, rec.review_id) for rec in self.records]
        if keys != sorted(keys):
            raise InputError(f"project {self.name}: records must be sorted by (timestamp, review_id)")
        if not 0.0 <= self.unknown_name_rate <= 1.0:
            raise InputError(f"project {self.name}: unknown_name_rate outside [0, 1]")

    def reviewer_by_id(self) -> dict[str, Reviewer]:
        return {r.id: r for r in self.roster}

    def group_counts(self) -> dict[Gender, int]:
        counts = {Gender.FEMALE: 0, Gender.MALE: 0, Gender.UNKNOWN: 0}
        for r in self.roster:
            counts[r.gender] += 1
        return counts


@dataclass(frozen=True)
class SplitDataset:
    train: tuple[ReviewRecord, ...]
    test: tuple[ReviewRecord, ...]


@dataclass(frozen=True)
class GroupDistribution:
    """Desired per-group proportions over a roster (both groups present)."""

    proportions: dict[str, float]

    def __post_init__(self) -> None:
        if set(self.proportions) != {Gender.FEMALE.value, Gender.MALE.value}:
            raise InputError("distribution must cover exactly the female and male groups")
        total = sum(self.proportions.values())
        if abs(total - 1.0) > 1e-12:
            raise InputError(f"proportions must sum to 1, got {total!r}")
        for group, p in self.proportions.items():
            if not 0.0 < p < 1.0:
                raise InputError(f"proportion for {group} must lie in (0, 1), got {p!r}")

    def __getitem__(self, group: str) -> float:
        return self.proportions[group]

    def groups(self) -> list[str]:
        return sorted(self.proportions)


def is_nickname(name: str, allowed_punctuation: str = NAME_PUNCTUATION) -> bool:
    """Heuristic: a name containing digits, symbols, or signs is a nickname.

    Letters (any alphabet), whitespace, and ``allowed_punctuation`` are the
    only characters accepted in a real name. Empty or blank names count as
    nicknames, since there is nothing to infer a gender from.
    """
    if not name or name.isspace():
        return True
    for ch in name:
        if ch.isalpha() or ch.isspace() or ch in allowed_punctuation:
            continue
        return True
    return False


def compute_unknown_rate(roster: list[Reviewer] | tuple[Reviewer, ...]) -> float:
    """Fraction of the roster whose name or gender is effectively unknown.

    Counts reviewers with a blank name, a nickname, or an unknown gender;
    any one of the three makes the reviewer unusable for group analysis.
    """
    if not roster:
        raise InputError("cannot compute unknown rate of an empty roster")
    unknown = sum(
        1
        for r in roster
        if is_nickname(r.display_name) or r.gender is Gender.UNKNOWN
    )
    return unknown / len(roster)


@dataclass(frozen=True)
class FilterEvent:
    """One dropped or modified entity, with the reason."""

    kind: str  # "project" | "reviewer" | "record"
    entity_id: str
    reason: str


def filter_projects(
    projects: list[ProjectDataset],
    max_unknown: float = DEFAULT_MAX_UNKNOWN_RATE,
    min_protected: int = DEFAULT_MIN_GROUP_SIZE,
    log: list[FilterEvent] | None = None,
) -> list[ProjectDataset]:
    """Apply the project acceptance filter.

    Keeps projects whose recorded unknown rate is at most ``max_unknown``
    and that have at least ``min_protected`` reviewers in each gender
    group. Within kept projects, unknown-gender reviewers are stripped
    from the roster and from the records' ground truth; records left
    without any resolvable reviewer are dropped.

    Idempotent: a second pass over the output strips nothing further.
    """
    if not 0.0 <= max_unknown <= 1.0:
        raise InputError("max_unknown must lie in [0, 1]")
    if min_protected < 1:
        raise InputError("min_protected must be at least 1")

    kept: list[ProjectDataset] = []
    for project in projects:
        if project.unknown_name_rate > max_unknown:
            if log is not None:
                log.append(FilterEvent(
                    "project", project.name,
                    f"unknown rate {project.unknown_name_rate:.2f} > {max_unknown:.2f}",
                ))
            continue
        counts = project.group_counts()
        if counts[Gender.FEMALE] < min_protected or counts[Gender.MALE] < min_protected:
            if log is not None:
                log.append(FilterEvent(
                    "project", project.name,
                    f"fewer than {min_protected} reviewers in a gender group "
                    f"(female={counts[Gender.FEMALE]}, male={counts[Gender.MALE]})",
                ))
            continue
        kept.append(_strip_unknown(project, log))
    return kept


def _strip_unknown(project: ProjectDataset, log: list[FilterEvent] | None) -> ProjectDataset:
    known = tuple(r for r in project.roster if r.gender is not Gender.UNKNOWN)
    if len(known) == len(project.roster):
        return project
    known_ids = {r.id for r in known}
    if log is not None:
        for r in project.roster:
            if r.id not in known_ids:
                log.append(FilterEvent("reviewer", r.id, "gender unknown"))
    records: list[ReviewRecord] = []
    for rec in project.records:
        resolvable = rec.actual_reviewers & known_ids
        if not resolvable:
            if log is not None:
                log.append(FilterEvent("record", rec.review_id, "all reviewers have unknown gender"))
            continue
        if resolvable != rec.actual_reviewers:
            rec = replace(rec, actual_reviewers=frozenset(resolvable))
        records.append(rec)
    return replace(project, roster=known, records=tuple(records))


def chronological_split(dataset: ProjectDataset, train_fraction: float = 0.8) -> SplitDataset:
    """Split sorted records into a leading train part and a trailing test part.

    The train size is round-half-up of ``train_fraction * N``.
    """
    if not 0.0 < train_fraction < 1.0:
        raise InputError("train_fraction must lie strictly between 0 and 1")
    n = len(dataset.records)
    if n < 2:
        raise InputError(f"project {dataset.name}: need at least 2 records to split, got {n}")
    n_train = int(train_fraction * n + 0.5)
    return SplitDataset(train=dataset.records[:n_train], test=dataset.records[n_train:])


def desired_distribution(roster: list[Reviewer] | tuple[Reviewer, ...]) -> GroupDistribution:
    """Per-group roster proportions: each group count over the known total."""
    females = sum(1 for r in roster if r.gender is Gender.FEMALE)
    males = sum(1 for r in roster if r.gender is Gender.MALE)
    unknowns = len(roster) - females - males
    if unknowns:
        raise InputError(f"roster still contains {unknowns} unknown-gender reviewers")
    if females == 0 or males == 0:
        raise InputError("both gender groups must be present to define a target distribution")
    total = females + males
    return GroupDistribution({Gender.FEMALE.value: females / total, Gender.MALE.value: males / total})


def parse_reviewers(source: bytes | str, format: str = "csv") -> list[Reviewer]:
    """Parse a reviewers file (CSV or JSON) into a roster.

    CSV columns: ``id,name,gender,gender_source``. A blank gender maps to
    unknown/unresolved. JSON carries a list of objects with the same field
    names.
    """
    text = source.decode("utf-8") if isinstance(source, bytes) else source
    if format == "csv":
        rows = _reviewer_rows_from_csv(text)
    elif format == "json":
        rows = _reviewer_rows_from_json(text)
    else:
        raise InputError(f"unsupported reviewers format {format!r}")

    roster: list[Reviewer] = []
    seen: set[str] = set()
    for row_no, row in rows:
        reviewer = _reviewer_from_row(row_no, row)
        if reviewer.id in seen:
            raise InputError(f"duplicate reviewer id {reviewer.id}")
        seen.add(reviewer.id)
        roster.append(reviewer)
    return roster


def _reviewer_rows_from_csv(text: str):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("reviewers file is empty") from None
    if [h.strip() for h in header] != REVIEWERS_CSV_HEADER:
        raise InputError(
            f"reviewers header must be {','.join(REVIEWERS_CSV_HEADER)!r}, got {','.join(header)!r}"
        )
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(REVIEWERS_CSV_HEADER):
            raise InputError(f"reviewers row {row_no}: expected {len(REVIEWERS_CSV_HEADER)} fields, got {len(row)}")
        yield row_no, dict(zip(REVIEWERS_CSV_HEADER, row))


def _reviewer_rows_from_json(text: str):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"reviewers JSON is malformed: {exc}") from exc
    if not isinstance(data, list):
        raise InputError("reviewers JSON must be a list of objects")
    for idx, entry in enumerate(data, start=1):
        if not isinstance(entry, dict):
            raise InputError(f"reviewers entry {idx}: expected an object")
        yield idx, {k: str(entry.get(k, "") or "") for k in REVIEWERS_CSV_HEADER}


def _reviewer_from_row(row_no: int, row: dict[str, str]) -> Reviewer:
    rid = row["id"].strip()
    if not rid:
        raise InputError(f"reviewers row {row_no}: blank id")
    gender_raw = row["gender"].strip().lower()
    source_raw = row["gender_source"].strip().lower()
    if not gender_raw:
        gender = Gender.UNKNOWN
        source = GenderSource.UNRESOLVED
    else:
        try:
            gender = Gender(gender_raw)
        except ValueError:
            raise InputError(f"reviewers row {row_no}: unknown gender {gender_raw!r}") from None
        if source_raw:
            try:
                source = GenderSource(source_raw)
            except ValueError:
                raise InputError(f"reviewers row {row_no}: unknown gender_source {source_raw!r}") from None
        else:
            source = GenderSource.UNRESOLVED if gender is Gender.UNKNOWN else GenderSource.DATASET
    return Reviewer(id=rid, display_name=row["name"].strip(), gender=gender, gender_source=source)


def parse_reviews(source: bytes | str) -> list[ReviewRecord]:
    """Parse a reviews CSV into records (unsorted; sorting happens at ingest).

    Columns: ``review_id,timestamp,file_paths,subject,actual_reviewers``
    with ``;``-separated lists and integer epoch-second timestamps.
    """
    text = source.decode("utf-8") if isinstance(source, bytes) else source
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("reviews file is empty") from None
    if [h.strip() for h in header] != REVIEWS_CSV_HEADER:
        raise InputError(
            f"reviews header must be {','.join(REVIEWS_CSV_HEADER)!r}, got {','.join(header)!r}"
        )
    records: list[ReviewRecord] = []
    seen: set[str] = set()
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(REVIEWS_CSV_HEADER):
            raise InputError(f"reviews row {row_no}: expected {len(REVIEWS_CSV_HEADER)} fields, got {len(row)}")
        rid = row[0].strip()
        if not rid:
            raise InputError(f"reviews row {row_no}: blank review_id")
        if rid in seen:
            raise InputError(f"duplicate review_id {rid}")
        seen.add(rid)
        try:
            ts = int(row[1].strip())
        except ValueError:
            raise InputError(f"reviews row {row_no}: timestamp {row[1]!r} is not an integer") from None
        paths = tuple(p.strip() for p in row[2].split(";") if p.strip())
        reviewers = frozenset(r.strip() for r in row[4].split(";") if r.strip())
        try:
            records.append(ReviewRecord(
                review_id=rid, timestamp=ts, file_paths=paths,
                subject=row[3].strip(), actual_reviewers=reviewers,
            ))
        except InputError as exc:
            raise InputError(f"reviews row {row_no}: {exc}") from None
    return records


def sort_records(records: list[ReviewRecord]) -> tuple[ReviewRecord, ...]:
    """Chronological order; timestamp ties broken by review_id."""
    return tuple(sorted(records, key=lambda r: (r.timestamp, r.review_id)))


def build_project(name: str, roster: list[Reviewer], records: list[ReviewRecord]) -> ProjectDataset:
    """Assemble a ProjectDataset, validating reviewer references."""
    if not roster:
        raise ProjectRejectedError(f"project rejected: {name} has an empty roster")
    ids = {r.id for r in roster}
    for rec in records:
        missing = sorted(rec.actual_reviewers - ids)
        if missing:
            raise InputError(
                f"record {rec.review_id}: reviewer id(s) {', '.join(missing)} not in the roster"
            )
    return ProjectDataset(
        name=name,
        roster=tuple(roster),
        records=sort_records(records),
        unknown_name_rate=compute_unknown_rate(roster),
    )


def dataset_to_doc(dataset: ProjectDataset, filter_log: list[FilterEvent] | None = None) -> dict:
    """Serialize to the canonical dataset document (JSON-ready dict)."""
    doc = {
        "schema": "fairrank.dataset@1",
        "name": dataset.name,
        "unknown_name_rate": dataset.unknown_name_rate,
        "roster": [
            {
                "id": r.id,
                "name": r.display_name,
                "gender": r.gender.value,
                "gender_source": r.gender_source.value,
            }
            for r in sorted(dataset.roster, key=lambda r: r.id)
        ],
        "records": [
            {
                "review_id": rec.review_id,
                "timestamp": rec.timestamp,
                "file_paths": list(rec.file_paths),
                "subject": rec.subject,
                "actual_reviewers": sorted(rec.actual_reviewers),
            }
            for rec in dataset.records
        ],
    }
    if filter_log is not None:
        doc["filter_log"] = [
            {"kind": e.kind, "id": e.entity_id, "reason": e.reason} for e in filter_log
        ]
    return doc


def dataset_from_doc(doc: dict) -> ProjectDataset:
    """Load a dataset document produced by :func:`dataset_to_doc`."""
    try:
        roster = [
            Reviewer(
                id=r["id"],
                display_name=r.get("name", ""),
                gender=Gender(r["gender"]),
                gender_source=GenderSource(r.get("gender_source", "unresolved")),
            )
            for r in doc["roster"]
        ]
        records = [
            ReviewRecord(
                review_id=rec["review_id"],
                timestamp=int(rec["timestamp"]),
                file_paths=tuple(rec["file_paths"]),
                subject=rec.get("subject", ""),
                actual_reviewers=frozenset(rec["actual_reviewers"]),
            )
            for rec in doc["records"]
        ]
        return ProjectDataset(
            name=doc["name"],
            roster=tuple(roster),
            records=sort_records(records),
            unknown_name_rate=float(doc.get("unknown_name_rate", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed dataset document: {exc}") from exc
