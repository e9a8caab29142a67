"""Per-respondent connectedness and coordination scores.

Every score is oriented so that larger means more connected or better
coordinated: frequency codes become ``6 - code`` and preparedness becomes
``5 - code``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .graph import EgoNetwork, Graph
from .survey import SurveyRecord, build_ego_network, build_organization_network

__all__ = [
    "ConnectednessProfile",
    "CoordinationProfile",
    "Profile",
    "CONNECTEDNESS",
    "COORDINATION",
    "MEASURE_NAMES",
    "degree_centrality",
    "ego_betweenness",
    "tie_strength",
    "readiness",
    "accessibility",
    "quality",
    "compute_profiles",
    "write_profiles_csv",
    "read_profiles_csv",
]

CONNECTEDNESS = ("degree", "ego_betweenness", "tie_strength")
COORDINATION = ("readiness", "quality", "accessibility")
MEASURE_NAMES = {
    "degree": "Degree",
    "ego_betweenness": "EgoBetweenness",
    "tie_strength": "Tie Strength",
    "readiness": "Readiness",
    "quality": "Quality",
    "accessibility": "Accessibility",
}


def degree_centrality(e: EgoNetwork) -> int:
    return len(e.graph.neighbors(e.ego))


def ego_betweenness(e: EgoNetwork) -> float:
    """Freeman betweenness of the ego inside its own ego network.

    Every alter is adjacent to the ego, so two alters are either tied or two
    steps apart.  A non-adjacent pair's geodesics are its common neighbors,
    one of which is the ego, so the pair contributes 1 / (common neighbors).
    """
    g = e.graph
    alters = sorted(g.neighbors(e.ego))
    nbrs = {a: g.neighbors(a) for a in alters}
    parts = []
    for a, b in combinations(alters, 2):
        if b in nbrs[a]:
            continue
        parts.append(1.0 / len(nbrs[a] & nbrs[b]))
    return math.fsum(parts)


def tie_strength(record: SurveyRecord) -> float | None:
    """Mean of ``6 - code`` over answered frequency-of-contact items (0 = never, 5 = weekly)."""
    answered = [6 - c for c in record.frequency_codes.values() if c is not None]
    if not answered:
        return None
    return math.fsum(answered) / len(answered)


def readiness(record: SurveyRecord) -> int | None:
    if record.preparedness_code is None:
        return None
    return 5 - record.preparedness_code


def accessibility(record: SurveyRecord) -> int:
    """Number of information sources used at all (any code above "never used")."""
    return sum(1 for c in record.usefulness_codes.values() if c is not None and c >= 2)


def quality(record: SurveyRecord) -> float | None:
    """Mean usefulness code over the sources actually used; None when none were."""
    used = [c for c in record.usefulness_codes.values() if c is not None and c >= 2]
    if not used:
        return None
    return math.fsum(used) / len(used)


@dataclass(frozen=True)
class ConnectednessProfile:
    degree: int
    ego_betweenness: float
    tie_strength: float | None


@dataclass(frozen=True)
class CoordinationProfile:
    readiness: int | None
    quality: float | None
    accessibility: int


@dataclass(frozen=True)
class Profile:
    """One profiles-CSV row: the six scores of one respondent."""

    resp_id: str
    agency_group: str
    degree: int
    ego_betweenness: float
    tie_strength: float | None
    readiness: int | None
    quality: float | None
    accessibility: int

    @property
    def connectedness(self) -> ConnectednessProfile:
        return ConnectednessProfile(self.degree, self.ego_betweenness, self.tie_strength)

    @property
    def coordination(self) -> CoordinationProfile:
        return CoordinationProfile(self.readiness, self.quality, self.accessibility)

    def value(self, measure: str):
        return getattr(self, measure)


def profile(record: SurveyRecord, ego: EgoNetwork) -> Profile:
    return Profile(
        resp_id=record.resp_id,
        agency_group=record.agency_group,
        degree=degree_centrality(ego),
        ego_betweenness=ego_betweenness(ego),
        tie_strength=tie_strength(record),
        readiness=readiness(record),
        quality=quality(record),
        accessibility=accessibility(record),
    )


def compute_profiles(records: Sequence[SurveyRecord], mode: str = "aggregate",
                     aggregate: Graph | None = None, group_labels=None) -> list[Profile]:
    """Profiles for every record, in input order.

    In ``aggregate`` mode the combined organization network of ``records`` is
    used for alter-alter ties unless another one is passed in.
    """
    if mode == "aggregate" and aggregate is None and records:
        aggregate = build_organization_network(records, "combined", group_labels)
    return [profile(r, build_ego_network(r, aggregate, mode)) for r in records]


_PROFILE_FIELDS = [f.name for f in fields(Profile)]


def write_profiles_csv(profiles: Iterable[Profile], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_PROFILE_FIELDS)
        for p in profiles:
            writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in astuple(p)])


def read_profiles_csv(path: str | Path) -> list[Profile]:
    def opt(cast):
        return lambda s: None if s == "" else cast(s)

    casts = {
        "resp_id": str, "agency_group": str, "degree": int, "ego_betweenness": float,
        "tie_strength": opt(float), "readiness": opt(int), "quality": opt(float),
        "accessibility": int,
    }
    with open(path, encoding="utf-8", newline="") as fh:
        return [Profile(**{k: casts[k](row[k]) for k in _PROFILE_FIELDS}) for row in csv.DictReader(fh)]
