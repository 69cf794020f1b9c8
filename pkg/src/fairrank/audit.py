"""End-to-end audit: split, recommend, mitigate, measure, and report.

The pipeline is fully deterministic (no RNG anywhere): identical inputs
produce byte-identical reports. Numeric cells are rounded to two decimals
only at this layer; every decision inside the pipeline uses full
precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from . import __version__
from .dataset import (
    Gender,
    GroupDistribution,
    ProjectDataset,
    chronological_split,
    desired_distribution,
)
from .errors import InputError
from .metrics import (
    DEFAULT_K_SET,
    MeasureTable,
    NDKL_MODE_STANDARD,
    NDKL_MODE_TOPK,
    aggregate,
    group_map,
    mrr_at_k,
    ndkl,
    skew_at_k,
    spd_at_k,
    spd_threshold,
    topk_accuracy,
)
from .mitigation import (
    STRATEGIES,
    STRATEGY_DETGREEDY,
    STRATEGY_DETRELAXED,
    STRATEGY_IGRR,
    STRATEGY_NONE,
    MitigationOutcome,
    StopReason,
    detgreedy,
    detrelaxed,
    igrr,
)
from .recommender import (
    SIMILARITY_KINDS,
    RankedList,
    combine_rankings,
    load_external_scores,
    score_record,
)
from .stats import PairedSample, wilcoxon_signed_rank

REPORT_SCHEMA = "fairrank.report@1"

RECOMMENDER_REVFINDER = "revfinder"
RECOMMENDER_EXTERNAL = "external"
RECOMMENDERS = (RECOMMENDER_REVFINDER, RECOMMENDER_EXTERNAL)

MEASURES = ("top_k_accuracy", "mrr_at_k", "spd_at_k", "skew_at_k")

SIGNIFICANCE_ALPHA = 0.05


@dataclass(frozen=True)
class AuditConfig:
    """Deterministic audit configuration; defaults follow the study setup."""

    k_set: tuple[int, ...] = DEFAULT_K_SET
    protected_group: str = Gender.FEMALE.value
    strategies: tuple[str, ...] = STRATEGIES
    recommender: str = RECOMMENDER_REVFINDER
    train_fraction: float = 0.8
    similarity_kinds: tuple[str, ...] = SIMILARITY_KINDS
    ndkl_mode: str = NDKL_MODE_TOPK

    def __post_init__(self) -> None:
        if not self.k_set:
            raise InputError("k_set must be non-empty")
        if list(self.k_set) != sorted(set(self.k_set)) or any(k < 1 for k in self.k_set):
            raise InputError(f"k_set must be strictly increasing positive integers, got {self.k_set}")
        if self.protected_group not in (Gender.FEMALE.value, Gender.MALE.value):
            raise InputError(f"protected_group must be female or male, got {self.protected_group!r}")
        unknown = [s for s in self.strategies if s not in STRATEGIES]
        if unknown or not self.strategies:
            raise InputError(f"strategies must be drawn from {STRATEGIES}, got {self.strategies}")
        if self.recommender not in RECOMMENDERS:
            raise InputError(f"recommender must be one of {RECOMMENDERS}, got {self.recommender!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise InputError("train_fraction must lie strictly between 0 and 1")
        if not self.similarity_kinds or any(k not in SIMILARITY_KINDS for k in self.similarity_kinds):
            raise InputError(f"similarity kinds must be drawn from {SIMILARITY_KINDS}")
        if self.ndkl_mode not in (NDKL_MODE_TOPK, NDKL_MODE_STANDARD):
            raise InputError(f"unknown ndkl mode {self.ndkl_mode!r}")


def _cell(value: float) -> float:
    rounded = round(value, 2)
    return 0.0 if rounded == 0 else rounded


def truncate2(value: float) -> float:
    # Thresholds render truncated, not rounded: a roster gap of 0.8285
    # reports as 0.82. The epsilon absorbs binary representation fuzz.
    return math.floor(value * 100 + 1e-9) / 100


def recommend(
    dataset: ProjectDataset,
    config: AuditConfig,
    external_scores: bytes | str | None = None,
) -> tuple[list[RankedList], dict[str, frozenset[str]]]:
    """Produce one ranked list per test record, plus the ground truth map."""
    split = chronological_split(dataset, config.train_fraction)
    if not split.test:
        raise InputError(f"project {dataset.name}: chronological split produced no test records")
    if config.recommender == RECOMMENDER_REVFINDER:
        lists = [
            combine_rankings([
                score_record(record, split.train, dataset.roster, kind)
                for kind in config.similarity_kinds
            ])
            for record in split.test
        ]
    else:
        if external_scores is None:
            raise InputError("external recommender selected but no score file supplied")
        by_record = {rl.record_id: rl for rl in load_external_scores(external_scores)}
        missing = [r.review_id for r in split.test if r.review_id not in by_record]
        if missing:
            raise InputError(f"score file lacks test records: {', '.join(missing)}")
        roster_ids = {r.id for r in dataset.roster}
        lists = []
        for record in split.test:
            ranked = by_record[record.review_id]
            strangers = sorted(set(ranked.ids()) - roster_ids)
            if strangers:
                raise InputError(
                    f"record {record.review_id}: scored reviewer(s) {', '.join(strangers)} not in the roster"
                )
            lists.append(ranked)
    truths = {r.review_id: r.actual_reviewers for r in split.test}
    return lists, truths


def _apply_strategy(
    strategy: str,
    ranked: RankedList,
    k: int,
    desired: GroupDistribution,
    epsilon: float,
    groups: dict[str, str],
) -> MitigationOutcome:
    k_eff = min(k, len(ranked.candidates))
    if strategy == STRATEGY_NONE:
        return MitigationOutcome(reranked=ranked, stopped_reason=StopReason.CONSTRAINTS_SATISFIED)
    if strategy == STRATEGY_DETGREEDY:
        return detgreedy(ranked, desired, k_eff, groups)
    if strategy == STRATEGY_DETRELAXED:
        return detrelaxed(ranked, desired, k_eff, groups)
    if strategy == STRATEGY_IGRR:
        return igrr(ranked, epsilon, k_eff, groups)
    raise InputError(f"unknown strategy {strategy!r}")


def measure_strategies(
    dataset: ProjectDataset,
    config: AuditConfig,
    external_scores: bytes | str | None = None,
) -> MeasureTable:
    """Score, re-rank, and measure every configured strategy at every K."""
    desired = desired_distribution(dataset.roster)
    groups = group_map(dataset.roster)
    epsilon = spd_threshold(dataset.roster)
    lists, truths = recommend(dataset, config, external_scores)

    table = MeasureTable(spd_threshold=epsilon)
    for strategy in config.strategies:
        outcomes_at_max: list[MitigationOutcome] = []
        for k in config.k_set:
            outcomes = [_apply_strategy(strategy, rl, k, desired, epsilon, groups) for rl in lists]
            if k == config.k_set[-1]:
                outcomes_at_max = outcomes
            reranked = [o.reranked for o in outcomes]
            skews = [skew_at_k(rl, k, config.protected_group, desired, groups) for rl in reranked]
            spd_value = aggregate([spd_at_k(rl, k, groups) for rl in reranked])
            skew_value = aggregate([s.value for s in skews])
            table.cells[(strategy, k, "top_k_accuracy")] = topk_accuracy(reranked, truths, k)
            table.cells[(strategy, k, "mrr_at_k")] = mrr_at_k(reranked, truths, k)
            table.cells[(strategy, k, "spd_at_k")] = spd_value
            table.cells[(strategy, k, "skew_at_k")] = skew_value
            table.flags[(strategy, k, "unfair_spd")] = spd_value > epsilon
            table.flags[(strategy, k, "unfair_skew")] = skew_value < 0
            table.flags[(strategy, k, "skew_clamped")] = any(s.clamped for s in skews)
            table.flags[(strategy, k, "truncated")] = any(s.truncated for s in skews)
            table.flags[(strategy, k, "infeasible")] = any(o.infeasible for o in outcomes)
            table.substitutions[(strategy, k)] = sum(o.substitutions for o in outcomes)
        ndkl_values = [
            ndkl(o.reranked, desired, ks=config.k_set, groups=groups, mode=config.ndkl_mode)
            for o in outcomes_at_max
        ]
        table.ndkl[strategy] = aggregate([v.value for v in ndkl_values])
        table.ndkl_truncated[strategy] = any(v.truncated for v in ndkl_values)
    table.require_complete(config.strategies, config.k_set, MEASURES)
    return table


def run_audit(
    dataset: ProjectDataset,
    config: AuditConfig,
    external_scores: bytes | str | None = None,
) -> dict:
    """Audit one project and return the structured report document."""
    desired = desired_distribution(dataset.roster)
    counts = dataset.group_counts()
    split = chronological_split(dataset, config.train_fraction)
    table = measure_strategies(dataset, config, external_scores)

    strategy_docs: dict[str, dict] = {}
    for strategy in config.strategies:
        by_k: dict[str, dict] = {}
        for k in config.k_set:
            by_k[str(k)] = {
                measure: _cell(table.cells[(strategy, k, measure)]) for measure in MEASURES
            }
            by_k[str(k)].update({
                flag: table.flags[(strategy, k, flag)]
                for flag in ("unfair_spd", "unfair_skew", "skew_clamped", "truncated", "infeasible")
            })
            by_k[str(k)]["substitutions"] = table.substitutions[(strategy, k)]
        strategy_docs[strategy] = {
            "ndkl": _cell(table.ndkl[strategy]),
            "ndkl_truncated": table.ndkl_truncated[strategy],
            "by_k": by_k,
        }

    return {
        "schema": REPORT_SCHEMA,
        "tool_version": __version__,
        "config": {
            "k_set": list(config.k_set),
            "protected_group": config.protected_group,
            "strategies": list(config.strategies),
            "recommender": config.recommender,
            "train_fraction": config.train_fraction,
            "similarity_kinds": list(config.similarity_kinds),
            "ndkl_mode": config.ndkl_mode,
        },
        "projects": {
            dataset.name: {
                "summary": {
                    "reviewers": len(dataset.roster),
                    "female": counts[Gender.FEMALE],
                    "male": counts[Gender.MALE],
                    "records": len(dataset.records),
                    "train_records": len(split.train),
                    "test_records": len(split.test),
                    "unknown_name_rate": round(dataset.unknown_name_rate, 4),
                    "spd_threshold": truncate2(table.spd_threshold),
                    "desired_female": round(desired[Gender.FEMALE.value], 4),
                    "desired_male": round(desired[Gender.MALE.value], 4),
                },
                "strategies": strategy_docs,
            }
        },
    }


def render_json(report: dict) -> str:
    """Canonical JSON rendering: sorted keys, stable layout, one trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


_MEASURE_LABELS = {
    "top_k_accuracy": "TopK-ACC",
    "mrr_at_k": "MRR@K",
    "spd_at_k": "SPD@K",
    "skew_at_k": "Skew@K",
}


def render_markdown(report: dict) -> str:
    """Human-readable rendering with the same numeric cells as the JSON."""
    lines: list[str] = ["# Fairness audit report", ""]
    cfg = report["config"]
    lines.append(
        f"Tool version {report['tool_version']} | recommender: {cfg['recommender']} | "
        f"protected group: {cfg['protected_group']} | K set: {', '.join(str(k) for k in cfg['k_set'])}"
    )
    for name in sorted(report["projects"]):
        project = report["projects"][name]
        summary = project["summary"]
        lines += [
            "",
            f"## {name}",
            "",
            f"{summary['reviewers']} reviewers ({summary['female']} female / {summary['male']} male), "
            f"{summary['records']} records ({summary['train_records']} train / {summary['test_records']} test), "
            f"unknown-name rate {summary['unknown_name_rate']}, "
            f"SPD threshold {summary['spd_threshold']:.2f}",
            "",
        ]
        strategies = [s for s in cfg["strategies"] if s in project["strategies"]]
        lines.append("| Top-K | Measure | " + " | ".join(strategies) + " |")
        lines.append("|---|---|" + "---|" * len(strategies))
        for k in cfg["k_set"]:
            for measure in MEASURES:
                row = [str(k), _MEASURE_LABELS[measure]]
                for strategy in strategies:
                    cell = project["strategies"][strategy]["by_k"][str(k)]
                    marks = ""
                    if measure == "spd_at_k" and cell["unfair_spd"]:
                        marks += " (unfair)"
                    if measure == "skew_at_k" and cell["unfair_skew"]:
                        marks += " (unfair)"
                    if measure == "skew_at_k" and cell["skew_clamped"]:
                        marks += " (clamped)"
                    row.append(f"{cell[measure]:.2f}{marks}")
                lines.append("| " + " | ".join(row) + " |")
        row = ["-", "NDKL"]
        for strategy in strategies:
            row.append(f"{project['strategies'][strategy]['ndkl']:.2f}")
        lines.append("| " + " | ".join(row) + " |")
        notes = []
        for strategy in strategies:
            flagged = [
                k for k in cfg["k_set"]
                if project["strategies"][strategy]["by_k"][str(k)]["infeasible"]
            ]
            if flagged:
                notes.append(f"{strategy}: quota infeasible at K {', '.join(str(k) for k in flagged)}")
        if notes:
            lines += ["", "Constraint notes: " + "; ".join(notes)]
    lines.append("")
    return "\n".join(lines)


def collect_cells(report: dict, measures: tuple[str, ...] | None = None) -> dict[tuple, float]:
    """Flatten a report into (project, strategy, K, measure) -> value."""
    wanted = set(measures) if measures else None
    cells: dict[tuple, float] = {}
    for project, project_doc in report["projects"].items():
        for strategy, strategy_doc in project_doc["strategies"].items():
            if wanted is None or "ndkl" in wanted:
                cells[(project, strategy, "-", "ndkl")] = strategy_doc["ndkl"]
            for k, k_doc in strategy_doc["by_k"].items():
                for measure in MEASURES:
                    if wanted is None or measure in wanted:
                        cells[(project, strategy, k, measure)] = k_doc[measure]
    return cells


def compare_reports(
    baseline: dict,
    treatment: dict,
    alternative: str = "two_sided",
    measures: tuple[str, ...] | None = None,
) -> dict:
    """Paired significance test between two audit reports' measure cells."""
    base_cells = collect_cells(baseline, measures)
    treat_cells = collect_cells(treatment, measures)
    if set(base_cells) != set(treat_cells):
        missing = sorted(set(base_cells) ^ set(treat_cells))
        shown = ", ".join("/".join(key) for key in missing[:5])
        raise InputError(f"reports do not share measure cells (first differences: {shown})")
    if not base_cells:
        raise InputError("reports contain no comparable cells")
    keys = sorted(base_cells)
    sample = PairedSample(tuple((base_cells[k], treat_cells[k]) for k in keys))
    result = wilcoxon_signed_rank(sample, alternative)
    return {
        "statistic": result.statistic,
        "p_value": result.p_value,
        "n": result.n,
        "pairs_total": len(keys),
        "exact": result.exact,
        "alternative": alternative,
        "alpha": SIGNIFICANCE_ALPHA,
        "significant": result.p_value < SIGNIFICANCE_ALPHA,
    }
