"""Shared fixtures: rosters, ranked lists, and synthetic project builders."""

from __future__ import annotations

import pytest

from fairrank.dataset import (
    Gender,
    GenderSource,
    ProjectDataset,
    ReviewRecord,
    Reviewer,
    build_project,
)
from fairrank.recommender import RankedList

# Unknown-identity rates (%) for the 34-project candidate pool fixture.
# Exactly seven fall at or below the 10% ceiling.
CANDIDATE_UNKNOWN_RATES = {
    "nodejs": 2.7,
    "openstack": 36.1,
    "bssw": 5.2,
    "unlegacy": 68.7,
    "oranse": 60.8,
    "opendaylight": 19.0,
    "pixel": 55.8,
    "joyent": 0.0,
    "eclipse": 37.0,
    "openbmc": 64.9,
    "android": 63.0,
    "nixcommunity": 7.1,
    "software factory": 16.3,
    "FDio": 13.3,
    "chromium": 62.1,
    "h5bp": 12.5,
    "onap": 21.1,
    "getsentry": 4.1,
    "libreoffice": 64.0,
    "fullstorydev": 13.7,
    "shopify": 2.8,
    "facebook": 14.2,
    "qt": 60.5,
    "freeCodeCamp": 0.0,
    "tensorflow": 14.9,
    "renovatebot": 16.6,
    "gerrit": 51.6,
    "opencord": 53.4,
    "mano": 68.5,
    "twbs": 23.0,
    "go": 34.4,
    "EbookFoundation": 25.0,
    "lineageOS": 32.8,
    "cloudera": 13.0,
}

BELOW_CEILING = {"nodejs", "bssw", "joyent", "nixcommunity", "getsentry", "shopify", "freeCodeCamp"}

# (female, male) roster counts for the four projects that also satisfy the
# two-per-group minimum; the other three low-unknown projects get a single
# protected-group reviewer so the minimum excludes them.
STUDIED_ROSTERS = {"nodejs": (5, 28), "bssw": (9, 9), "getsentry": (6, 64), "shopify": (17, 148)}
SINGLE_PROTECTED = {"joyent", "nixcommunity", "freeCodeCamp"}


def _letters(i: int) -> str:
    # Digit-free surname suffix so generated names never look like nicknames.
    return "".join(chr(ord("a") + int(d)) for d in str(i)).capitalize()


def make_roster(females: int, males: int, unknowns: int = 0) -> list[Reviewer]:
    roster = [
        Reviewer(f"f{i:02d}", f"Fiona Ex{_letters(i)}", Gender.FEMALE, GenderSource.MANUAL)
        for i in range(females)
    ]
    roster += [
        Reviewer(f"m{i:02d}", f"Mark Ex{_letters(i)}", Gender.MALE, GenderSource.MANUAL)
        for i in range(males)
    ]
    roster += [
        Reviewer(f"u{i:02d}", f"user{i}", Gender.UNKNOWN, GenderSource.UNRESOLVED)
        for i in range(unknowns)
    ]
    return roster


def make_records(roster: list[Reviewer], count: int = 2) -> list[ReviewRecord]:
    return [
        ReviewRecord(
            review_id=f"r{i:03d}",
            timestamp=1000 + i,
            file_paths=(f"src/mod{i}/file.py",),
            subject=f"change {i}",
            actual_reviewers=frozenset({roster[i % len(roster)].id}),
        )
        for i in range(count)
    ]


def make_project(
    name: str,
    females: int,
    males: int,
    unknowns: int = 0,
    unknown_rate: float | None = None,
    records: list[ReviewRecord] | None = None,
) -> ProjectDataset:
    roster = make_roster(females, males, unknowns)
    if records is None:
        records = make_records(roster)
    project = build_project(name, roster, records)
    if unknown_rate is not None:
        project = ProjectDataset(
            name=project.name,
            roster=project.roster,
            records=project.records,
            unknown_name_rate=unknown_rate,
        )
    return project


def candidate_pool() -> list[ProjectDataset]:
    """The 34-project filtering fixture."""
    projects = []
    for name, rate in CANDIDATE_UNKNOWN_RATES.items():
        if name in STUDIED_ROSTERS:
            females, males = STUDIED_ROSTERS[name]
        elif name in SINGLE_PROTECTED:
            females, males = 1, 5
        else:
            females, males = 3, 3
        projects.append(make_project(name, females, males, unknown_rate=rate / 100.0))
    return projects


def ranked(scores: dict[str, float], record_id: str = "rec") -> RankedList:
    return RankedList.from_scores(record_id, scores)


def group_of(reviewer_id: str) -> str:
    return "female" if reviewer_id.startswith("f") else "male"


def groups_for(*ids: str) -> dict[str, str]:
    return {rid: group_of(rid) for rid in ids}


def _home_paths(owner: str, n: int) -> tuple[str, ...]:
    return (f"app/{owner}/mod{n % 3}.py", f"app/{owner}/helper.py")


def synthetic_balanced_project(name: str = "balanced") -> ProjectDataset:
    """Evenly gendered roster (9/9); every reviewer owns a path cluster.

    50 records split 40/10; each test record's true reviewer is the one
    whose cluster it touches, so the built-in recommender ranks the truth
    first and mitigation quality is attributable to re-ranking alone.
    """
    roster = make_roster(9, 9)
    owners = [r.id for r in roster]
    records = []
    for i in range(40):
        owner = owners[i % len(owners)]
        records.append(ReviewRecord(
            review_id=f"t{i:03d}",
            timestamp=1000 + i,
            file_paths=_home_paths(owner, i),
            subject=f"train {i}",
            actual_reviewers=frozenset({owner}),
        ))
    for i in range(10):
        owner = owners[i]
        records.append(ReviewRecord(
            review_id=f"v{i:03d}",
            timestamp=5000 + i,
            file_paths=_home_paths(owner, i),
            subject=f"test {i}",
            actual_reviewers=frozenset({owner}),
        ))
    return build_project(name, roster, records)


def synthetic_skewed_project(name: str = "skewed") -> ProjectDataset:
    """1:8 gender split (4/32) with male-only review history.

    All training activity belongs to male reviewers, so every ranked list
    is male-dominated, reproducing the popularity pattern that quota
    re-rankers handle poorly on skewed rosters.
    """
    roster = make_roster(4, 32)
    males = [r.id for r in roster if r.gender is Gender.MALE]
    records = []
    for i, owner in enumerate(males):
        records.append(ReviewRecord(
            review_id=f"t{i:03d}",
            timestamp=1000 + i,
            file_paths=_home_paths(owner, i),
            subject=f"train {i}",
            actual_reviewers=frozenset({owner}),
        ))
    for i in range(8):
        owner = males[i]
        records.append(ReviewRecord(
            review_id=f"v{i:03d}",
            timestamp=5000 + i,
            file_paths=_home_paths(owner, i),
            subject=f"test {i}",
            actual_reviewers=frozenset({owner}),
        ))
    return build_project(name, roster, records)


@pytest.fixture
def balanced_project() -> ProjectDataset:
    return synthetic_balanced_project()


@pytest.fixture
def skewed_project() -> ProjectDataset:
    return synthetic_skewed_project()
