"""Paired Wilcoxon signed-rank test with an exact small-sample distribution.

Zero differences are dropped, absolute differences are ranked with average
ranks for ties, and the positive-rank sum is tested against either the
exact permutation distribution (small samples, computed by convolution
over the 2^n equally likely sign assignments) or a tie-corrected normal
approximation (large samples).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InputError

ALTERNATIVES = ("two_sided", "greater", "less")

# Exact distribution up to this many non-zero pairs; normal approximation above.
EXACT_LIMIT = 25

# Minimum usable sample: below this the test has no resolution worth reporting.
MIN_NONZERO_PAIRS = 6


@dataclass(frozen=True)
class PairedSample:
    """Paired (baseline, treatment) observations."""

    pairs: tuple[tuple[float, float], ...]

    def differences(self) -> list[float]:
        return [treatment - baseline for baseline, treatment in self.pairs]


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n: int
    exact: bool


def _average_ranks(values: list[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for idx in order[i : j + 1]:
            ranks[idx] = avg
        i = j + 1
    return ranks


def _exact_sign_distribution(double_ranks: list[int]) -> list[int]:
    """Counts of each doubled positive-rank sum over all sign assignments."""
    total = sum(double_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in double_ranks:
        for w in range(total, r - 1, -1):
            counts[w] += counts[w - r]
    return counts


def _exact_p(ranks: list[float], w_plus: float, alternative: str) -> float:
    double_ranks = [round(2 * r) for r in ranks]
    counts = _exact_sign_distribution(double_ranks)
    denom = 2 ** len(ranks)
    obs = round(2 * w_plus)
    ge = sum(counts[obs:])
    le = sum(counts[: obs + 1])
    if alternative == "greater":
        return ge / denom
    if alternative == "less":
        return le / denom
    return min(1.0, 2 * min(ge, le) / denom)


def _normal_p(ranks: list[float], w_plus: float, alternative: str) -> float:
    n = len(ranks)
    mean = n * (n + 1) / 4
    tie_term = 0.0
    seen: dict[float, int] = {}
    for r in ranks:
        seen[r] = seen.get(r, 0) + 1
    for count in seen.values():
        tie_term += count**3 - count
    variance = (n * (n + 1) * (2 * n + 1) - tie_term / 2) / 24
    sd = math.sqrt(variance)
    z = (w_plus - mean) / sd

    def phi(x: float) -> float:
        return 0.5 * math.erfc(-x / math.sqrt(2))

    if alternative == "greater":
        return 1 - phi(z)
    if alternative == "less":
        return phi(z)
    return min(1.0, 2 * min(phi(z), 1 - phi(z)))


def wilcoxon_signed_rank(sample: PairedSample, alternative: str = "two_sided") -> WilcoxonResult:
    """Test whether treatment values systematically exceed (or trail) baseline.

    ``greater`` asks whether treatment > baseline. The reported statistic
    is the smaller signed-rank sum for the two-sided test and the
    positive-rank sum otherwise, matching the usual table convention.
    """
    if alternative not in ALTERNATIVES:
        raise InputError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")
    diffs = [d for d in sample.differences() if d != 0.0]
    if not sample.pairs:
        raise InputError("sample contains no pairs")
    if not diffs:
        raise InputError("degenerate sample: all differences are zero")
    if len(diffs) < MIN_NONZERO_PAIRS:
        raise InputError(
            f"need at least {MIN_NONZERO_PAIRS} non-zero differences for a p-value, got {len(diffs)}"
        )

    ranks = _average_ranks([abs(d) for d in diffs])
    w_plus = sum(r for d, r in zip(diffs, ranks) if d > 0)
    w_minus = sum(r for d, r in zip(diffs, ranks) if d < 0)
    n = len(diffs)

    exact = n <= EXACT_LIMIT
    if exact:
        p = _exact_p(ranks, w_plus, alternative)
    else:
        p = _normal_p(ranks, w_plus, alternative)
    statistic = min(w_plus, w_minus) if alternative == "two_sided" else w_plus
    return WilcoxonResult(statistic=statistic, p_value=float(p), n=n, exact=exact)
