"""Post-processing re-rankers that trade ranking order for group fairness.

Two quota-based selectors enforce per-prefix floor/ceiling constraints on
group counts (greedy, and a relaxed variant that prefers the group whose
ceiling is furthest from binding). The third re-ranker targets the parity
threshold directly: it repeatedly swaps the lowest-scored member of the
over-represented group out of the top-K for the best candidate of the
under-represented group waiting outside, stopping at fairness, stalled
progress, or an empty candidate pool.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .dataset import GroupDistribution
from .errors import InputError
from .metrics import is_unfair_spd
from .recommender import RankedList, ScoredCandidate

STRATEGY_NONE = "none"
STRATEGY_DETGREEDY = "detgreedy"
STRATEGY_DETRELAXED = "detrelaxed"
STRATEGY_IGRR = "igrr"
STRATEGIES = (STRATEGY_NONE, STRATEGY_DETGREEDY, STRATEGY_DETRELAXED, STRATEGY_IGRR)

# Guard against float fuzz when p*k is an exact integer; group ratios are
# rationals with denominators far above this resolution.
_QUOTA_EPS = 1e-9


class StopReason(str, Enum):
    FAIR_REACHED = "fair_reached"
    METRIC_STALLED = "metric_stalled"
    EXHAUSTED = "exhausted"
    CONSTRAINTS_SATISFIED = "constraints_satisfied"


@dataclass(frozen=True)
class ConstraintState:
    """Quota bookkeeping while filling position ``k`` of a top list."""

    k: int
    counts: dict[str, int]
    desired: GroupDistribution

    def minimum(self, group: str) -> int:
        return math.floor(self.desired[group] * self.k + _QUOTA_EPS)

    def maximum(self, group: str) -> int:
        return math.ceil(self.desired[group] * self.k - _QUOTA_EPS)

    def below_minimum(self, group: str) -> bool:
        return self.counts[group] < self.minimum(group)

    def below_maximum(self, group: str) -> bool:
        return self.counts[group] < self.maximum(group)


@dataclass(frozen=True)
class MitigationOutcome:
    """Result of one re-ranking pass.

    ``reranked`` holds the constrained top-K order followed by the
    untouched remainder of the input list. ``substitutions`` counts swap
    attempts (a final reverted swap included). ``infeasible`` marks runs
    where some prefix quota could not be met from the available pool.
    """

    reranked: RankedList
    substitutions: int = 0
    stopped_reason: StopReason = StopReason.CONSTRAINTS_SATISFIED
    infeasible: bool = False


def _ordered(ranked: RankedList) -> list[ScoredCandidate]:
    return sorted(ranked.candidates, key=lambda c: (-c.score, c.reviewer_id))


def _head_key(c: ScoredCandidate) -> tuple[float, str]:
    return (-c.score, c.reviewer_id)


def _with_remainder(ranked: RankedList, selected: list[ScoredCandidate]) -> RankedList:
    chosen = {c.reviewer_id for c in selected}
    remainder = [c for c in ranked.candidates if c.reviewer_id not in chosen]
    return RankedList(ranked.record_id, tuple(selected + remainder))


def _quota_rerank(
    ranked: RankedList,
    desired: GroupDistribution,
    k_max: int,
    groups: dict[str, str],
    relaxed: bool,
) -> MitigationOutcome:
    if k_max < 1:
        raise InputError(f"k_max must be positive, got {k_max}")
    for cand in ranked.candidates:
        if groups.get(cand.reviewer_id) not in desired.proportions:
            raise InputError(f"candidate {cand.reviewer_id} has no group assignment")

    pools: dict[str, list[ScoredCandidate]] = {g: [] for g in desired.groups()}
    for cand in _ordered(ranked):
        pools[groups[cand.reviewer_id]].append(cand)

    counts = {g: 0 for g in desired.groups()}
    selected: list[ScoredCandidate] = []
    infeasible = False
    k_eff = min(k_max, len(ranked.candidates))

    for position in range(1, k_eff + 1):
        state = ConstraintState(k=position, counts=counts, desired=desired)
        needy = [g for g in desired.groups() if state.below_minimum(g)]
        if any(not pools[g] for g in needy):
            infeasible = True
            needy = [g for g in needy if pools[g]]
        if needy:
            eligible = needy
        else:
            eligible = [g for g in desired.groups() if pools[g] and state.below_maximum(g)]
            if not eligible:
                # Every available group is at its ceiling; fill anyway.
                infeasible = True
                eligible = [g for g in desired.groups() if pools[g]]
            elif relaxed:
                eligible = _relaxed_tie_class(state, eligible)
        choice_group = min(eligible, key=lambda g: _head_key(pools[g][0]))
        chosen = pools[choice_group].pop(0)
        counts[choice_group] += 1
        selected.append(chosen)

    return MitigationOutcome(
        reranked=_with_remainder(ranked, selected),
        substitutions=0,
        stopped_reason=StopReason.CONSTRAINTS_SATISFIED,
        infeasible=infeasible,
    )


def _relaxed_tie_class(state: ConstraintState, eligible: list[str]) -> list[str]:
    def term(group: str) -> int:
        p = state.desired[group]
        return math.ceil(state.maximum(group) / p - _QUOTA_EPS)

    best = min(term(g) for g in eligible)
    return [g for g in eligible if term(g) == best]


def detgreedy(
    ranked: RankedList,
    desired: GroupDistribution,
    k_max: int,
    groups: dict[str, str],
) -> MitigationOutcome:
    """Fill the top list greedily under floor/ceiling group quotas.

    At each position, groups that have fallen below their floor for the
    prefix are served first (best-scored candidate among them); otherwise
    the best-scored candidate from any group still under its ceiling is
    taken. Quota-impossible prefixes are filled from whatever remains and
    flagged, never silently violated.
    """
    return _quota_rerank(ranked, desired, k_max, groups, relaxed=False)


def detrelaxed(
    ranked: RankedList,
    desired: GroupDistribution,
    k_max: int,
    groups: dict[str, str],
) -> MitigationOutcome:
    """Quota re-ranking that relaxes the choice among non-needy groups.

    When no floor is binding, candidates come from the group(s) whose
    ceiling-to-proportion ratio is smallest, which spreads selections
    closer to the target distribution than pure score order.
    """
    return _quota_rerank(ranked, desired, k_max, groups, relaxed=True)


def _parity_gap(counts: dict[str, int], size: int) -> float:
    values = list(counts.values())
    return abs(values[0] - values[1]) / size


def igrr(
    ranked: RankedList,
    spd_threshold: float,
    k: int,
    groups: dict[str, str],
) -> MitigationOutcome:
    """Greedy parity-targeted substitution on the top-K.

    While the top-K parity difference exceeds the threshold: swap the
    lowest-scored top-K member of the over-represented group for the
    best-scored candidate of the under-represented group outside the
    top-K. A swap that fails to strictly shrink the distance above the
    threshold is reverted and the loop stops; so does running out of
    outside candidates.
    """
    if k < 1:
        raise InputError(f"k must be positive, got {k}")
    if k > len(ranked.candidates):
        raise InputError(f"k={k} exceeds list length {len(ranked.candidates)}")
    group_names = sorted(set(groups.values()))
    if len(group_names) != 2:
        raise InputError("parity substitution requires exactly two groups")
    for cand in ranked.candidates:
        if cand.reviewer_id not in groups:
            raise InputError(f"candidate {cand.reviewer_id} has no group assignment")

    ordered = _ordered(ranked)
    top = ordered[:k]
    pools = {g: [c for c in ordered[k:] if groups[c.reviewer_id] == g] for g in group_names}

    substitutions = 0
    reason = StopReason.FAIR_REACHED
    while True:
        counts = {g: 0 for g in group_names}
        for cand in top:
            counts[groups[cand.reviewer_id]] += 1
        gap = _parity_gap(counts, len(top))
        if not is_unfair_spd(gap, spd_threshold):
            reason = StopReason.FAIR_REACHED
            break
        disadvantaged = min(group_names, key=lambda g: counts[g])
        advantaged = max(group_names, key=lambda g: counts[g])
        pool = pools[disadvantaged]
        removable = [c for c in top if groups[c.reviewer_id] == advantaged]
        if not pool or not removable:
            reason = StopReason.EXHAUSTED
            break
        gap_before = max(0.0, gap - spd_threshold)
        incoming = pool[0]
        outgoing = min(removable, key=lambda c: (c.score, c.reviewer_id))
        candidate_top = [incoming if c.reviewer_id == outgoing.reviewer_id else c for c in top]
        new_counts = dict(counts)
        new_counts[advantaged] -= 1
        new_counts[disadvantaged] += 1
        gap_after = max(0.0, _parity_gap(new_counts, len(top)) - spd_threshold)
        substitutions += 1
        if gap_after >= gap_before:
            reason = StopReason.METRIC_STALLED
            break
        top = candidate_top
        pool.pop(0)

    final_top = sorted(top, key=_head_key)
    return MitigationOutcome(
        reranked=_with_remainder(ranked, final_top),
        substitutions=substitutions,
        stopped_reason=reason,
        infeasible=False,
    )
