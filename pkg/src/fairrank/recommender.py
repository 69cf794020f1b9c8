"""File-location-similarity reviewer ranking and external score ingestion.

The built-in recommender scores candidates by comparing the file paths of a
new review request against past requests: four classic string-comparison
variants over slash-separated path components, normalized per pair by the
longer path, then merged across variants with a Borda count. Reviewers of
similar past requests accumulate the similarity as their score.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .dataset import ReviewRecord, Reviewer
from .errors import InputError

SIMILARITY_KINDS = ("prefix", "suffix", "substring", "subsequence")

EXTERNAL_SCORES_HEADER = ["record_id", "reviewer_id", "score"]


@dataclass(frozen=True)
class ScoredCandidate:
    reviewer_id: str
    score: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise InputError(f"candidate {self.reviewer_id}: score must be finite")
        if self.score < 0:
            raise InputError(f"candidate {self.reviewer_id}: score must be non-negative")


@dataclass(frozen=True)
class RankedList:
    """Candidates for one record. Recommenders emit descending-score order
    (ties by reviewer id); re-rankers may emit a constrained order instead."""

    record_id: str
    candidates: tuple[ScoredCandidate, ...]

    def __post_init__(self) -> None:
        ids = [c.reviewer_id for c in self.candidates]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise InputError(f"ranked list {self.record_id}: duplicate candidate {dupes[0]}")

    @classmethod
    def from_scores(cls, record_id: str, scores: dict[str, float]) -> "RankedList":
        """Build a list in canonical order: score descending, id ascending."""
        ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls(record_id, tuple(ScoredCandidate(rid, s) for rid, s in ordered))

    def top(self, k: int) -> tuple[ScoredCandidate, ...]:
        return self.candidates[: max(k, 0)]

    def ids(self) -> list[str]:
        return [c.reviewer_id for c in self.candidates]


def _components(path: str) -> list[str]:
    parts = [p for p in path.split("/") if p]
    if not parts:
        raise InputError(f"path {path!r} has no components")
    return parts


def path_similarity(p1: str, p2: str, kind: str = "subsequence") -> int:
    """Common-component count between two paths, per comparison kind.

    Kinds: longest common prefix, suffix, substring (contiguous run), or
    subsequence (order-preserving, gaps allowed), all over ``/``-separated
    components.
    """
    a, b = _components(p1), _components(p2)
    if kind == "prefix":
        n = 0
        for x, y in zip(a, b):
            if x != y:
                break
            n += 1
        return n
    if kind == "suffix":
        n = 0
        for x, y in zip(reversed(a), reversed(b)):
            if x != y:
                break
            n += 1
        return n
    if kind == "substring":
        best = 0
        run = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
        for i in range(1, len(a) + 1):
            for j in range(1, len(b) + 1):
                if a[i - 1] == b[j - 1]:
                    run[i][j] = run[i - 1][j - 1] + 1
                    best = max(best, run[i][j])
        return best
    if kind == "subsequence":
        table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
        for i in range(1, len(a) + 1):
            for j in range(1, len(b) + 1):
                if a[i - 1] == b[j - 1]:
                    table[i][j] = table[i - 1][j - 1] + 1
                else:
                    table[i][j] = max(table[i - 1][j], table[i][j - 1])
        return table[len(a)][len(b)]
    raise InputError(f"unknown similarity kind {kind!r}")


def _pair_score(p1: str, p2: str, kind: str) -> float:
    # Normalize by the longer path so identical paths score exactly 1.
    return path_similarity(p1, p2, kind) / max(len(_components(p1)), len(_components(p2)))


def score_record(
    target: ReviewRecord,
    history: list[ReviewRecord] | tuple[ReviewRecord, ...],
    roster: list[Reviewer] | tuple[Reviewer, ...],
    kind: str = "subsequence",
) -> RankedList:
    """Rank every roster reviewer for one review request.

    Each past request contributes its mean normalized file-pair similarity
    to each of its actual reviewers; reviewers never seen in similar
    requests keep a score of zero so the candidate universe stays the
    whole roster.
    """
    if not history:
        raise InputError(f"record {target.review_id}: history must be non-empty")
    for past in history:
        if (past.timestamp, past.review_id) >= (target.timestamp, target.review_id):
            raise InputError(
                f"record {target.review_id}: history record {past.review_id} does not precede it"
            )
    scores = {r.id: 0.0 for r in roster}
    for past in history:
        total = 0.0
        for f_new in target.file_paths:
            for f_old in past.file_paths:
                total += _pair_score(f_new, f_old, kind)
        similarity = total / (len(target.file_paths) * len(past.file_paths))
        if similarity == 0.0:
            continue
        for rid in sorted(past.actual_reviewers):
            if rid in scores:
                scores[rid] += similarity
    return RankedList.from_scores(target.review_id, scores)


def combine_rankings(per_kind: list[RankedList]) -> RankedList:
    """Borda-count aggregation of rankings over the same candidate set."""
    if not per_kind:
        raise InputError("need at least one ranking to combine")
    base_ids = set(per_kind[0].ids())
    for other in per_kind[1:]:
        if set(other.ids()) != base_ids:
            raise InputError("rankings cover different reviewer sets")
    points = {rid: 0.0 for rid in sorted(base_ids)}
    for ranking in per_kind:
        size = len(ranking.candidates)
        for idx, cand in enumerate(ranking.candidates):
            points[cand.reviewer_id] += size - idx
    return RankedList.from_scores(per_kind[0].record_id, points)


def load_external_scores(source: bytes | str) -> list[RankedList]:
    """Load recommender output from a ``record_id,reviewer_id,score`` CSV.

    Rows may arrive in any order; lists come out in canonical ranked order
    grouped by record, records sorted by id.
    """
    text = source.decode("utf-8") if isinstance(source, bytes) else source
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InputError("scores file is empty") from None
    if [h.strip() for h in header] != EXTERNAL_SCORES_HEADER:
        raise InputError(
            f"scores header must be {','.join(EXTERNAL_SCORES_HEADER)!r}, got {','.join(header)!r}"
        )
    by_record: dict[str, dict[str, float]] = {}
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 3:
            raise InputError(f"scores row {row_no}: expected 3 fields, got {len(row)}")
        record_id, reviewer_id = row[0].strip(), row[1].strip()
        if not record_id or not reviewer_id:
            raise InputError(f"scores row {row_no}: blank record_id or reviewer_id")
        try:
            score = float(row[2])
        except ValueError:
            raise InputError(f"scores row {row_no}: score {row[2]!r} is not numeric") from None
        group = by_record.setdefault(record_id, {})
        if reviewer_id in group:
            raise InputError(f"scores row {row_no}: duplicate ({record_id}, {reviewer_id})")
        group[reviewer_id] = score
    return [RankedList.from_scores(rid, scores) for rid, scores in sorted(by_record.items())]
