"""Survey codebooks, respondent records, and the networks built from them.

A codebook maps survey columns onto canonical organization labels (the
"which agencies do you coordinate with" and "joint training exercises"
checklists) and names the ordinal items used for tie strength, information
usefulness and preparedness.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import InputError, SurveyFormatError
from .graph import EgoNetwork, Graph, NodeId, org_node, respondent_node

log = logging.getLogger(__name__)

__all__ = [
    "GROUPS",
    "GROUP_LABELS",
    "FREQUENCY_CODES",
    "USEFULNESS_CODES",
    "PREPAREDNESS_CODES",
    "Codebook",
    "SurveyRecord",
    "load_codebook",
    "default_codebook",
    "parse_survey_csv",
    "write_survey_csv",
    "group_counts",
    "build_ego_network",
    "build_organization_network",
    "build_respondent_network",
]

GROUPS = ("SLE", "SES", "LLE")
GROUP_LABELS = {
    "SLE": "State Law Enforcement",
    "SES": "State Emergency Services",
    "LLE": "Local Law Enforcement",
}
FREQUENCY_CODES = range(1, 7)  # 1 = once a week or more ... 6 = never
USEFULNESS_CODES = range(1, 5)  # 1 = never used ... 4 = very useful
PREPAREDNESS_CODES = range(1, 5)  # 1 = very well prepared ... 4 = not well prepared
_TIERS = (1, 2, 3)


@dataclass(frozen=True)
class Codebook:
    relational_vars: dict  # column -> (label, tier or None)
    frequency_vars: tuple
    usefulness_vars: tuple
    preparedness_var: str
    group_var: str = "AGENCY"
    id_var: str = "RESPID"
    groups: dict = field(default_factory=lambda: {g: (GROUP_LABELS[g], 2) for g in GROUPS})
    group_codes: dict = field(default_factory=dict)  # raw cell value -> group code
    free_text_vars: tuple = ()

    def __post_init__(self):
        if set(self.groups) != set(GROUPS):
            raise InputError(f"codebook groups must be exactly {GROUPS}, got {sorted(self.groups)}")
        for raw, code in self.group_codes.items():
            if code not in GROUPS:
                raise InputError(f"group code {raw!r} maps to unknown group {code!r}")
        tiers: dict[str, int | None] = {}
        for source, label, tier in self._label_entries():
            if not label:
                raise InputError(f"{source}: canonical label must be nonempty")
            if tier is not None and tier not in _TIERS:
                raise InputError(f"{source}: tier must be 1, 2, 3 or null, got {tier!r}")
            if label in tiers and tiers[label] != tier and None not in (tiers[label], tier):
                raise InputError(f"conflicting tiers for {label!r}: {tiers[label]} vs {tier}")
            if tiers.get(label) is None:
                tiers[label] = tier
        object.__setattr__(self, "_tiers", tiers)
        columns = self.columns()
        dupes = [c for c, n in Counter(columns).items() if n > 1]
        if dupes:
            raise InputError(f"codebook references columns more than once: {dupes}")

    def _label_entries(self):
        for code, (label, tier) in self.groups.items():
            yield f"group {code}", label, tier
        for col, (label, tier) in self.relational_vars.items():
            yield f"column {col}", label, tier

    def columns(self) -> list[str]:
        """Every column the codebook requires in a survey file, in file order."""
        return [self.id_var, self.group_var, *self.relational_vars, *self.frequency_vars,
                *self.usefulness_vars, self.preparedness_var]

    @property
    def labels(self) -> list[str]:
        """Sorted canonical organization labels, group organizations included."""
        return sorted(self._tiers)

    @property
    def tiers(self) -> dict:
        """Canonical label -> known tier (None when unlabeled)."""
        return dict(self._tiers)

    def group_label(self, code: str) -> str:
        return self.groups[code][0]

    @property
    def group_labels(self) -> dict:
        return {g: self.groups[g][0] for g in GROUPS}

    def column_for(self, label: str) -> str | None:
        """First relational column mapping to ``label``, used when writing files."""
        for col, (lab, _) in self.relational_vars.items():
            if lab == label:
                return col
        return None

    def to_dict(self) -> dict:
        return {
            "id_var": self.id_var,
            "group_var": self.group_var,
            "groups": {g: {"label": self.groups[g][0], "tier": self.groups[g][1]} for g in GROUPS},
            "group_codes": dict(self.group_codes),
            "relational_vars": {c: {"label": lab, "tier": t} for c, (lab, t) in self.relational_vars.items()},
            "free_text_vars": list(self.free_text_vars),
            "frequency_vars": list(self.frequency_vars),
            "usefulness_vars": list(self.usefulness_vars),
            "preparedness_var": self.preparedness_var,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Codebook":
        try:
            return cls(
                relational_vars={c: (v["label"], v.get("tier")) for c, v in data["relational_vars"].items()},
                frequency_vars=tuple(data["frequency_vars"]),
                usefulness_vars=tuple(data["usefulness_vars"]),
                preparedness_var=data["preparedness_var"],
                group_var=data.get("group_var", "AGENCY"),
                id_var=data.get("id_var", "RESPID"),
                groups={g: (v["label"], v.get("tier")) for g, v in
                        data.get("groups", {g: {"label": GROUP_LABELS[g], "tier": 2} for g in GROUPS}).items()},
                group_codes={str(k): v for k, v in data.get("group_codes", {}).items()},
                free_text_vars=tuple(data.get("free_text_vars", ())),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise InputError(f"malformed codebook: {exc!r}") from exc

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_codebook(path: str | Path) -> Codebook:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read codebook {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"codebook {path} is not valid JSON: {exc}") from exc
    return Codebook.from_dict(data)


def default_codebook() -> Codebook:
    """Codebook for the 1992 state and local preparedness survey question layout."""
    text = resources.files("drn").joinpath("data/default_codebook.json").read_text(encoding="utf-8")
    return Codebook.from_dict(json.loads(text))


@dataclass(frozen=True)
class SurveyRecord:
    resp_id: str
    agency_group: str
    selections: frozenset = frozenset()
    frequency_codes: dict = field(default_factory=dict)
    usefulness_codes: dict = field(default_factory=dict)
    preparedness_code: int | None = None

    def __post_init__(self):
        if not self.resp_id:
            raise ValueError("resp_id must be nonempty")
        if self.agency_group not in GROUPS:
            raise ValueError(f"agency group must be one of {GROUPS}, got {self.agency_group!r}")
        object.__setattr__(self, "selections", frozenset(self.selections))
        for name, codes, domain in (("frequency", self.frequency_codes, FREQUENCY_CODES),
                                    ("usefulness", self.usefulness_codes, USEFULNESS_CODES)):
            for col, code in codes.items():
                if code is not None and code not in domain:
                    raise ValueError(f"{name} code {code!r} for {col} outside {domain.start}..{domain.stop - 1}")
        if self.preparedness_code is not None and self.preparedness_code not in PREPAREDNESS_CODES:
            raise ValueError(f"preparedness code {self.preparedness_code!r} outside 1..4")


def _parse_code(raw: str) -> int | None:
    """Empty cell -> None; integral numbers (``"2"`` or ``"2.0"``) -> int; else ValueError."""
    text = raw.strip()
    if not text:
        return None
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not value.is_integer():
            raise
        return int(value)


def parse_survey_csv(path: str | Path, codebook: Codebook) -> list[SurveyRecord]:
    """Read one respondent per row of a UTF-8 CSV file.

    Relational columns coded 1 become selections of their canonical label (a
    label reachable from several columns is selected once); 0 or empty means
    not selected.  Empty ordinal cells are missing.  Free-text "other" answers
    are dropped with a warning.

    Raises
    ------
    SurveyFormatError
        On a missing codebook column, an out-of-domain code, or a duplicate
        respondent id.  The message names the file, row and column.
    """
    path = Path(path)
    try:
        fh = open(path, encoding="utf-8-sig", newline="")
    except OSError as exc:
        raise InputError(f"cannot read survey file {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if not header:
            raise SurveyFormatError("survey file is empty", path=str(path))
        header = [h.strip() for h in header]
        reader.fieldnames = header
        missing = [c for c in codebook.columns() if c not in header]
        if missing:
            raise SurveyFormatError(f"codebook columns missing from header: {missing}", path=str(path))

        records = []
        seen: set[str] = set()
        for row_no, row in enumerate(reader, start=1):
            records.append(_parse_row(row, row_no, codebook, seen, str(path)))
    return records


def _parse_row(row: Mapping[str, str], row_no: int, cb: Codebook, seen: set, path: str) -> SurveyRecord:
    def fail(msg, col):
        raise SurveyFormatError(msg, row=row_no, column=col, value=row.get(col), path=path)

    def cell(col):
        value = row.get(col)
        return "" if value is None else value.strip()

    resp_id = cell(cb.id_var)
    if not resp_id:
        fail("respondent id is empty", cb.id_var)
    if resp_id in seen:
        fail("duplicate respondent id", cb.id_var)
    seen.add(resp_id)

    raw_group = cell(cb.group_var)
    group = cb.group_codes.get(raw_group, raw_group)
    if group not in GROUPS:
        fail(f"agency group must be one of {GROUPS}", cb.group_var)

    selections = set()
    for col, (label, _) in cb.relational_vars.items():
        try:
            code = _parse_code(cell(col))
        except ValueError:
            fail("relational cell is not 0/1", col)
        if code not in (None, 0, 1):
            fail("relational cell is not 0/1", col)
        if code == 1:
            selections.add(label)

    for col in cb.free_text_vars:
        if cell(col):
            log.warning("%s row %d: dropping free-text answer in %s (%r)", path, row_no, col, cell(col))

    def codes(columns, domain, what):
        out = {}
        for col in columns:
            try:
                code = _parse_code(cell(col))
            except ValueError:
                fail(f"{what} code is not an integer", col)
            if code is not None and code not in domain:
                fail(f"{what} code outside {domain.start}..{domain.stop - 1}", col)
            out[col] = code
        return out

    frequency = codes(cb.frequency_vars, FREQUENCY_CODES, "frequency")
    usefulness = codes(cb.usefulness_vars, USEFULNESS_CODES, "usefulness")
    prepared = codes([cb.preparedness_var], PREPAREDNESS_CODES, "preparedness")[cb.preparedness_var]
    return SurveyRecord(resp_id, group, frozenset(selections), frequency, usefulness, prepared)


def write_survey_csv(records: Iterable[SurveyRecord], codebook: Codebook, path: str | Path) -> None:
    """Serialize records in the codebook's column layout (inverse of :func:`parse_survey_csv`)."""
    rel_cols = list(codebook.relational_vars)
    first_col = {}
    for col, (label, _) in codebook.relational_vars.items():
        first_col.setdefault(label, col)
    code_for_group = {g: g for g in GROUPS}

    def fmt(v):
        return "" if v is None else str(v)

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(codebook.columns())
        for rec in records:
            chosen = set()
            for label in sorted(rec.selections):
                if label not in first_col:
                    raise InputError(f"no codebook column for selected organization {label!r} ({rec.resp_id})")
                chosen.add(first_col[label])
            writer.writerow([
                rec.resp_id,
                code_for_group[rec.agency_group],
                *("1" if c in chosen else "0" for c in rel_cols),
                *(fmt(rec.frequency_codes.get(c)) for c in codebook.frequency_vars),
                *(fmt(rec.usefulness_codes.get(c)) for c in codebook.usefulness_vars),
                fmt(rec.preparedness_code),
            ])


def group_counts(records: Iterable[SurveyRecord]) -> dict:
    counts = Counter(r.agency_group for r in records)
    return {g: counts.get(g, 0) for g in GROUPS}


def build_ego_network(record: SurveyRecord, aggregate: Graph | None = None,
                      mode: str = "aggregate") -> EgoNetwork:
    """Ego network of one respondent.

    ``star`` mode links the respondent to each selected organization only.
    ``aggregate`` mode also copies ties between selected organizations from
    the ``aggregate`` organization network, since fixed-list answers cannot
    reveal alter-alter ties directly.
    """
    if mode not in ("star", "aggregate"):
        raise ValueError(f"mode must be 'star' or 'aggregate', got {mode!r}")
    if mode == "aggregate" and aggregate is None:
        raise ValueError("aggregate mode needs the organization network")
    ego = respondent_node(record.resp_id)
    alters = [org_node(label) for label in sorted(record.selections)]
    g = Graph(nodes=[ego])
    for a in alters:
        g.add_edge(ego, a)
    if mode == "aggregate":
        for i, a in enumerate(alters):
            for b in alters[i + 1:]:
                if aggregate.has_edge(a, b):
                    g.add_edge(a, b, aggregate.weight(a, b))
    return EgoNetwork(ego, g)


def build_organization_network(records: Sequence[SurveyRecord], scope: str = "combined",
                               group_labels: Mapping[str, str] | None = None) -> Graph:
    """Collapse respondents into their agency-group organization.

    Nodes are the group organizations present in ``scope`` plus every selected
    organization.  A group organization is tied to each organization any of
    its respondents selected; the weight counts those respondents.  ``scope``
    is ``"combined"`` or one group code.
    """
    labels = dict(GROUP_LABELS if group_labels is None else group_labels)
    if scope != "combined" and scope not in GROUPS:
        raise ValueError(f"scope must be 'combined' or one of {GROUPS}, got {scope!r}")
    chosen = [r for r in records if scope == "combined" or r.agency_group == scope]
    if not chosen:
        raise ValueError(f"no records in scope {scope!r}")
    counts: Counter = Counter()
    g = Graph()
    for rec in chosen:
        own = org_node(labels[rec.agency_group])
        g.add_node(own)
        for label in rec.selections:
            alter = org_node(label)
            g.add_node(alter)
            if alter != own:
                counts[frozenset((own, alter))] += 1
    for pair in sorted(counts, key=sorted):
        u, v = sorted(pair)
        g.add_edge(u, v, counts[pair])
    return g


def build_respondent_network(records: Sequence[SurveyRecord]) -> Graph:
    """Combined micro-level network: respondents tied to the organizations they selected."""
    g = Graph()
    for rec in sorted(records, key=lambda r: r.resp_id):
        ego = respondent_node(rec.resp_id)
        g.add_node(ego)
        for label in sorted(rec.selections):
            g.add_edge(ego, org_node(label))
    return g
