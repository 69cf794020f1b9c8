"""Group-fairness and recommendation-accuracy measures over ranked lists.

Fairness side: top-K skew (log ratio of observed to desired group
proportion), statistical parity difference adapted to top-K lists, the
roster-imbalance threshold it is judged against, and a discount-weighted
cumulative KL divergence over list prefixes. Accuracy side: top-K hit rate
and mean reciprocal rank limited to the top-K.

All functions are pure; per-record values are averaged by the caller via
:func:`aggregate`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dataset import Gender, GroupDistribution, Reviewer
from .errors import InputError
from .recommender import RankedList, ScoredCandidate

# A zero group proportion in a top-K slice is replaced by this before the
# log ratio, keeping reports finite; affected values carry a flag.
SKEW_ZERO_CLAMP = 1e-6

DEFAULT_K_SET = (4, 6, 10)

NDKL_MODE_TOPK = "topk"      # discounted KL terms only at the configured K values
NDKL_MODE_STANDARD = "standard"  # terms at every prefix length


def group_map(roster: list[Reviewer] | tuple[Reviewer, ...]) -> dict[str, str]:
    """Reviewer id -> group label, for metric membership lookups."""
    return {r.id: r.gender.value for r in roster}


@dataclass(frozen=True)
class TopKSlice:
    """The leading ``min(k, len)`` candidates of a ranked list."""

    k: int
    members: tuple[ScoredCandidate, ...]
    truncated: bool = False


def top_k_slice(ranked: RankedList, k: int) -> TopKSlice:
    if k < 1:
        raise InputError(f"k must be positive, got {k}")
    truncated = k > len(ranked.candidates)
    return TopKSlice(k=k, members=ranked.candidates[:k], truncated=truncated)


@dataclass(frozen=True)
class SkewValue:
    value: float
    clamped: bool = False
    truncated: bool = False


@dataclass(frozen=True)
class NdklValue:
    value: float
    truncated: bool = False


def skew_at_k(
    ranked: RankedList,
    k: int,
    group: str,
    desired: GroupDistribution,
    groups: dict[str, str],
) -> SkewValue:
    """Log ratio between a group's top-K proportion and its desired share.

    Negative values mean the group is under-represented in the top-K. A
    zero observed proportion is clamped to keep the value finite, and the
    result is flagged. Lists shorter than ``k`` are evaluated whole, with
    the truncation flagged.
    """
    if desired[group] <= 0:
        raise InputError(f"desired proportion for {group} must be positive")
    s = top_k_slice(ranked, k)
    if not s.members:
        raise InputError(f"ranked list {ranked.record_id} is empty")
    count = sum(1 for c in s.members if groups.get(c.reviewer_id) == group)
    proportion = count / len(s.members)
    clamped = proportion == 0.0
    if clamped:
        proportion = SKEW_ZERO_CLAMP
    return SkewValue(value=math.log(proportion / desired[group]), clamped=clamped, truncated=s.truncated)


def spd_threshold(roster: list[Reviewer] | tuple[Reviewer, ...]) -> float:
    """Expected parity threshold: absolute gap between the group ratios.

    Computed as |F - M| / (F + M), the single-division form of the ratio
    difference, so a top-K gap that equals the roster gap exactly also
    compares equal in floating point.
    """
    females = sum(1 for r in roster if r.gender is Gender.FEMALE)
    males = sum(1 for r in roster if r.gender is Gender.MALE)
    if females == 0 or males == 0:
        raise InputError("both gender groups must be present to compute the parity threshold")
    return abs(females - males) / (females + males)


def spd_at_k(ranked: RankedList, k: int, groups: dict[str, str]) -> float:
    """Statistical parity difference of a top-K slice.

    Absolute difference between the two groups' shares of the top-K
    positions. Zero when the slice is evenly split; 1.0 when one group
    holds every position.
    """
    s = top_k_slice(ranked, k)
    if not s.members:
        raise InputError(f"ranked list {ranked.record_id} is empty")
    females = sum(1 for c in s.members if groups.get(c.reviewer_id) == Gender.FEMALE.value)
    males = sum(1 for c in s.members if groups.get(c.reviewer_id) == Gender.MALE.value)
    return abs(females - males) / len(s.members)


def is_unfair_spd(value: float, threshold: float) -> bool:
    """A parity difference is unfair only strictly above the threshold."""
    return value > threshold


def _kl_divergence(observed: dict[str, float], desired: GroupDistribution) -> float:
    # 0 * ln(0/q) contributes nothing by convention.
    total = 0.0
    for grp in desired.groups():
        p = observed.get(grp, 0.0)
        if p > 0.0:
            total += p * math.log(p / desired[grp])
    return total


def ndkl(
    ranked: RankedList,
    desired: GroupDistribution,
    ks: tuple[int, ...] = DEFAULT_K_SET,
    groups: dict[str, str] | None = None,
    mode: str = NDKL_MODE_TOPK,
) -> NdklValue:
    """Discount-weighted cumulative KL divergence of prefix distributions.

    Each evaluated prefix length i contributes KL(prefix distribution ||
    desired) / log2(i+1); the sum is normalized by the total discount mass
    of the whole list. ``topk`` mode evaluates only the configured K
    values (prefixes truncate to the list length when it is shorter,
    flagged); ``standard`` mode evaluates every prefix.
    """
    if groups is None:
        raise InputError("ndkl requires a reviewer-to-group mapping")
    n = len(ranked.candidates)
    if n == 0:
        raise InputError(f"ranked list {ranked.record_id} is empty")
    if mode == NDKL_MODE_TOPK:
        truncated = any(k > n for k in ks)
        prefix_lengths = sorted({min(k, n) for k in ks})
    elif mode == NDKL_MODE_STANDARD:
        truncated = False
        prefix_lengths = list(range(1, n + 1))
    else:
        raise InputError(f"unknown ndkl mode {mode!r}")

    z = sum(1.0 / math.log2(i + 1) for i in range(1, n + 1))
    total = 0.0
    counts: dict[str, int] = {g: 0 for g in desired.groups()}
    position = 0
    for length in prefix_lengths:
        while position < length:
            grp = groups.get(ranked.candidates[position].reviewer_id)
            if grp in counts:
                counts[grp] += 1
            position += 1
        observed = {g: counts[g] / length for g in counts}
        total += _kl_divergence(observed, desired) / math.log2(length + 1)
    return NdklValue(value=max(0.0, total / z), truncated=truncated)


def topk_accuracy(
    lists: list[RankedList],
    truths: dict[str, frozenset[str] | set[str]],
    k: int,
) -> float:
    """Fraction of records with at least one true reviewer in the top-K."""
    if not lists:
        raise InputError("topk_accuracy needs at least one ranked list")
    hits = 0
    for ranked in lists:
        truth = _truth_for(ranked, truths)
        if any(c.reviewer_id in truth for c in ranked.top(k)):
            hits += 1
    return hits / len(lists)


def mrr_at_k(
    lists: list[RankedList],
    truths: dict[str, frozenset[str] | set[str]],
    k: int,
) -> float:
    """Mean reciprocal rank of the first true reviewer within the top-K.

    Records whose first true reviewer falls outside the top-K contribute
    zero.
    """
    if not lists:
        raise InputError("mrr_at_k needs at least one ranked list")
    total = 0.0
    for ranked in lists:
        truth = _truth_for(ranked, truths)
        for idx, cand in enumerate(ranked.top(k)):
            if cand.reviewer_id in truth:
                total += 1.0 / (idx + 1)
                break
    return total / len(lists)


def _truth_for(ranked: RankedList, truths: dict) -> frozenset[str] | set[str]:
    try:
        return truths[ranked.record_id]
    except KeyError:
        raise InputError(f"no ground truth for record {ranked.record_id}") from None


def aggregate(per_record_values: list[float]) -> float:
    """Arithmetic mean of per-record measure values."""
    if not per_record_values:
        raise InputError("cannot aggregate an empty value list")
    return sum(per_record_values) / len(per_record_values)


@dataclass
class MeasureTable:
    """Per-strategy measure cells for one project, at full precision.

    ``cells`` maps (strategy, k, measure) to the per-record average;
    ``ndkl`` holds the K-independent divergence per strategy; ``flags``
    maps (strategy, k, flag-name) to the markers reports render
    (unfair/clamped/truncated/infeasible); ``substitutions`` counts swap
    attempts per (strategy, k).
    """

    spd_threshold: float
    cells: dict[tuple[str, int, str], float] = field(default_factory=dict)
    ndkl: dict[str, float] = field(default_factory=dict)
    ndkl_truncated: dict[str, bool] = field(default_factory=dict)
    flags: dict[tuple[str, int, str], bool] = field(default_factory=dict)
    substitutions: dict[tuple[str, int], int] = field(default_factory=dict)

    def require_complete(
        self,
        strategies: tuple[str, ...] | list[str],
        k_set: tuple[int, ...],
        measures: tuple[str, ...] | list[str],
    ) -> None:
        missing = [
            (s, k, m)
            for s in strategies
            for k in k_set
            for m in measures
            if (s, k, m) not in self.cells
        ]
        missing += [("ndkl", s) for s in strategies if s not in self.ndkl]
        if missing:
            raise InputError(f"measure table incomplete: missing {missing[:3]}")
